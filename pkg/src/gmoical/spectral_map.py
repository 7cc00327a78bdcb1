"""Spectral-sum core: every evaluator in this package is a sum over
per-slot choices from Jordan decompositions.

Each slot independently picks a spectral block and either the projector P
(derivative order 0) or a nilpotent power N**q (order q, 1 <= q < chain
length); the term's coefficient is the symbol's mixed partial at the chosen
eigenvalues divided by prod q_j!. Restricting a slot's choices to P only or
N only realizes every mode-restricted variant used downstream.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

from .numerics import Matrix, mat_mul

DEFAULT_BUDGET = 10_000_000


class BudgetExceededError(RuntimeError):
    def __init__(self, needed, budget):
        super().__init__(
            f"term budget exceeded: {needed} terms > budget {budget}")
        self.needed = needed
        self.budget = budget


def effective_budget(budget=None):
    if budget is not None:
        return budget
    env = os.environ.get("GMOI_BUDGET")
    if env:
        return int(env)
    return DEFAULT_BUDGET


@dataclass(frozen=True)
class SlotChoice:
    eigenvalue: object
    factor: Matrix
    order: int
    block: object       # SpectralBlock


def slot_options(dec, mode="full"):
    """Choices for one slot of a spectral sum: (eigenvalue, factor, order)
    per block, where factor is P (order 0) or N**q (1 <= q < m).

    mode: "full" (both), "P" (projectors only), "N" (nilpotent powers only).
    """
    if mode not in ("full", "P", "N"):
        raise ValueError(f"unknown slot mode {mode!r}")
    opts = []
    for b in dec.blocks:
        if mode in ("full", "P"):
            opts.append(SlotChoice(b.eigenvalue, b.projector, 0, b))
        if mode in ("full", "N"):
            npow = b.nilpotent
            for q in range(1, b.order):
                opts.append(SlotChoice(b.eigenvalue, npow, q, b))
                if q + 1 < b.order:
                    npow = mat_mul(npow, b.nilpotent)
    return opts


def count_terms(option_lists):
    c = 1
    for opts in option_lists:
        c *= len(opts)
    return c


def eval_slot_sum(symbol, option_lists, interleave=None, dim=None,
                  exact=False, budget=None):
    """Sum over all per-slot choice combinations of
    coeff * F_1 A_1 F_2 A_2 ... A_{r-1} F_r where F_j is the chosen factor,
    the A_j are the ``interleave`` matrices (absent when None), and
    coeff = symbol.partial(orders, eigenvalues) / prod(orders!).

    Summation order is the lexicographic product of the option lists, which
    are themselves in canonical block order: deterministic.
    """
    budget = effective_budget(budget)
    needed = count_terms(option_lists)
    if needed > budget:
        raise BudgetExceededError(needed, budget)
    r = len(option_lists)
    if interleave is None:
        interleave = [None] * (r - 1)
    if len(interleave) != r - 1:
        raise ValueError("need one interleaved argument between slots")
    if dim is None:
        dim = option_lists[0][0].factor.dim
    out = Matrix.zeros(dim, exact)
    lams = [None] * r
    orders = [0] * r
    # depth-first over slots, sharing prefix products across the subtree
    def walk(j, prefix):
        nonlocal out
        for choice in option_lists[j]:
            lams[j] = choice.eigenvalue
            orders[j] = choice.order
            if prefix is None:
                pre = choice.factor
            else:
                pre = prefix
                if interleave[j - 1] is not None:
                    pre = mat_mul(pre, interleave[j - 1])
                pre = mat_mul(pre, choice.factor)
            if j == r - 1:
                coeff = symbol.partial(orders, lams)
                if not coeff:
                    continue
                denom = 1
                for q in orders:
                    denom *= math.factorial(q)
                if denom != 1:
                    coeff = coeff / denom
                out = out + pre.scale(coeff)
            else:
                walk(j + 1, pre)
    walk(0, None)
    return out


def enumerate_selections(r, kappa):
    """All kappa-element index selections from {1, ..., r}, lexicographic."""
    return list(itertools.combinations(range(1, r + 1), kappa))


def eval_univariate(f, dec, budget=None):
    """f(X) from the Jordan decomposition of X."""
    if f.arity != 1:
        raise ValueError("eval_univariate needs a univariate function")
    return eval_slot_sum(f, [slot_options(dec)], dim=dec.dim,
                         exact=dec.exact, budget=budget)


def eval_multivariate(f, decs, budget=None):
    """The multivariate matrix function f(X_1, ..., X_r): spectral sum
    with adjacent factors multiplied directly."""
    if f.arity != len(decs):
        raise ValueError("arity does not match number of matrices")
    return eval_slot_sum(f, [slot_options(d) for d in decs],
                         dim=decs[0].dim, exact=decs[0].exact, budget=budget)


def moi_as_spectral_map(beta, param_decs, arg_decs, budget=None):
    """Evaluate a multiple operator integral as the multivariate matrix
    function of the product symbol beta(z_1, z_3, ...) z_2 z_4 ...; the
    integrated arguments occupy the linear even slots."""
    from .functions import product_symbol
    f = product_symbol(beta, len(arg_decs))
    decs = []
    for j, p in enumerate(param_decs):
        decs.append(p)
        if j < len(arg_decs):
            decs.append(arg_decs[j])
    return eval_multivariate(f, decs, budget=budget)
