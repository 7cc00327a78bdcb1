"""Spectral-sum evaluation of matrix functions: univariate/multivariate
correctness against direct polynomial evaluation, and the term budget."""

import random
from fractions import Fraction

import pytest

from gmoical import (BudgetExceededError, Matrix, decompose,
                     effective_budget, eval_multivariate, eval_univariate,
                     frobenius_norm, gen_fixture, mat_mul,
                     multivariate_polynomial, polynomial, slot_options)
from conftest import draw_fixture, horner


class TestUnivariate:
    def test_exact_polynomial_exact_equality(self):
        rng = random.Random(0)
        for _ in range(10):
            _, dec = draw_fixture(rng, rng.randint(2, 5), max_block=3,
                                  exact=True)
            coeffs = [Fraction(rng.randint(-3, 3), rng.randint(1, 4))
                      for _ in range(rng.randint(1, 6))]
            f = polynomial(coeffs)
            assert eval_univariate(f, dec) == horner(coeffs, dec.reconstruct())

    def test_float_polynomial(self):
        rng = random.Random(1)
        for _ in range(10):
            m, dec = draw_fixture(rng, 4, max_block=2, exact=False,
                                  distinct=True)
            coeffs = [rng.uniform(-1, 1) for _ in range(5)]
            got = eval_univariate(polynomial(coeffs), dec)
            want = horner(coeffs, m)
            denom = max(frobenius_norm(want), 1.0)
            assert frobenius_norm(got - want) / denom <= 1e-10

    def test_identity_function(self):
        _, dec = gen_fixture([(Fraction(2), [2]), (Fraction(-1), [1])],
                             seed=3, exact=True)
        f = polynomial([Fraction(0), Fraction(1)])
        assert eval_univariate(f, dec) == dec.reconstruct()

    def test_nilpotent_truncation(self):
        # on a single 2x2 Jordan block, f(X) = f(l) P + f'(l) N
        _, dec = gen_fixture([(Fraction(3), [2])], seed=5, exact=True)
        f = polynomial([Fraction(0)] * 4 + [Fraction(1)])      # z^4
        b = dec.blocks[0]
        want = b.projector.scale(Fraction(81)) + b.nilpotent.scale(
            Fraction(108))
        assert eval_univariate(f, dec) == want


class TestMultivariate:
    def test_product_symbol_gives_matrix_product(self):
        rng = random.Random(2)
        f = multivariate_polynomial(2, [(1, (1, 1))])
        for _ in range(6):
            m1, d1 = draw_fixture(rng, 3, max_block=2, exact=False,
                                  distinct=True)
            m2, d2 = draw_fixture(rng, 3, max_block=2, exact=False,
                                  distinct=True)
            got = eval_multivariate(f, [d1, d2])
            assert frobenius_norm(got - mat_mul(m1, m2)) <= 1e-9

    def test_sum_symbol(self):
        rng = random.Random(3)
        f = multivariate_polynomial(2, [(1, (1, 0)), (1, (0, 1))])
        m1, d1 = draw_fixture(rng, 3, max_block=2, exact=True)
        m2, d2 = draw_fixture(rng, 3, max_block=2, exact=True)
        assert eval_multivariate(f, [d1, d2]) == m1 + m2

    def test_separable_vs_direct(self):
        # f(z1, z2) = z1^2 z2 equals X1^2 X2
        rng = random.Random(4)
        f = multivariate_polynomial(2, [(1, (2, 1))])
        m1, d1 = draw_fixture(rng, 3, max_block=2, exact=True)
        m2, d2 = draw_fixture(rng, 3, max_block=2, exact=True)
        want = mat_mul(mat_mul(m1, m1), m2)
        assert eval_multivariate(f, [d1, d2]) == want


class TestSlotOptions:
    def test_modes(self):
        _, dec = gen_fixture([(Fraction(1), [2]), (Fraction(2), [1])],
                             seed=1, exact=True)
        full = slot_options(dec, "full")
        proj = slot_options(dec, "P")
        nil = slot_options(dec, "N")
        assert len(proj) == 2           # one projector per block
        assert len(nil) == 1            # only the size-2 block has N^1
        assert len(full) == 3
        assert all(o.order == 0 for o in proj)
        assert all(o.order >= 1 for o in nil)


class TestBudget:
    def test_budget_exceeded(self):
        _, dec = gen_fixture([(Fraction(1), [1]), (Fraction(2), [1]),
                              (Fraction(3), [1])], seed=0, exact=True)
        f = polynomial([Fraction(1), Fraction(1)])
        with pytest.raises(BudgetExceededError):
            eval_univariate(f, dec, budget=2)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("GMOI_BUDGET", "123")
        assert effective_budget(None) == 123
        assert effective_budget(7) == 7
