"""Shared helpers for the test suite."""

import random
from fractions import Fraction

from gmoical import (Matrix, gen_fixture, mat_mul, multivariate_polynomial,
                     random_matrix, random_structure)


def horner(coeffs, m):
    """Independent polynomial-of-a-matrix oracle."""
    ident = Matrix.identity(m.dim, m.exact)
    acc = Matrix.zeros(m.dim, m.exact)
    for c in reversed(list(coeffs)):
        acc = mat_mul(acc, m) + ident.scale(c)
    return acc


def ones_beta(r):
    """The constant-1 symbol of arity r."""
    return multivariate_polynomial(r, [(1, (0,) * r)])


def unit_beta(r, j):
    """The symbol beta(z_1..z_r) = z_j (1-based j)."""
    e = [0] * r
    e[j - 1] = 1
    return multivariate_polynomial(r, [(1, tuple(e))])


def draw_fixture(rng, dim, max_block=2, exact=False, distinct=False):
    """A random prescribed-structure fixture plus its decomposition."""
    structure = random_structure(rng, dim, max_block=max_block, exact=exact,
                                 distinct=distinct)
    return gen_fixture(structure, seed=rng.randrange(2 ** 30), exact=exact)


def hermitian_dec(rng, dim):
    """A random real-symmetric parameter with its decomposition: the
    projector family is orthogonal, where the norm-bound fold is valid."""
    import numpy as np
    from gmoical import decompose
    a = np.array([[rng.uniform(-1, 1) for _ in range(dim)]
                  for _ in range(dim)])
    h = (a + a.T) / 2
    m = Matrix([[complex(h[i, j]) for j in range(dim)] for i in range(dim)],
               exact=False)
    return m, decompose(m, tol=1e-8)


def single_eig_jordan_dec(rng, dim, exact=False):
    """A parameter with one eigenvalue and random Jordan block sizes: the
    norm-bound projector fold is exact regardless of conditioning."""
    lam = rng.randint(-2, 2)
    sizes = []
    left = dim
    while left:
        s = rng.randint(1, min(2, left))
        sizes.append(s)
        left -= s
    from fractions import Fraction as F
    structure = [(F(lam) if exact else float(lam), sizes)]
    return gen_fixture(structure, seed=rng.randrange(2 ** 30), exact=exact)


def bound_domain_dec(rng, dim):
    """A parameter drawn from the norm-bound theorem's validity domain."""
    if rng.random() < 0.5:
        return hermitian_dec(rng, dim)
    return single_eig_jordan_dec(rng, dim)


def rational_matrix(rng, dim, span=3):
    """A dense exact matrix with small rational entries."""
    return random_matrix(rng, dim, exact=True, span=span)


def float_matrix(rng, dim, span=2):
    return random_matrix(rng, dim, exact=False, span=span)
