"""Deterministic random fixtures: matrices with prescribed Jordan
structure X = V J V^-1 built from small-integer similarity transforms, so
exact-mode inverses stay rational.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .jordan import from_structure
from .numerics import Matrix, QC


class FixtureError(ValueError):
    pass

MAX_CONDITION = 1e6


def _condition(v):
    import numpy as np
    return float(np.linalg.cond(v.to_numpy()))


def _random_transform(rng, dim, exact):
    """Identity plus small integer noise: invertible with high probability
    and well conditioned."""
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            e = (1 if i == j else 0) + rng.randint(-2, 2)
            row.append(QC(Fraction(e)) if exact else complex(e))
        rows.append(row)
    return Matrix(rows, exact=exact)


def gen_fixture(structure, seed=0, exact=False, max_tries=50):
    """(matrix, decomposition) for the given structure, a list of
    (eigenvalue, [chain lengths]) pairs. The transform is re-drawn while
    singular or with condition estimate above 1e6."""
    rng = random.Random(seed)
    dim = sum(m for _, lengths in structure for m in lengths)
    last_err = None
    for _ in range(max_tries):
        v = _random_transform(rng, dim, exact)
        try:
            if _condition(v) > MAX_CONDITION:
                continue
            dec = from_structure(structure, v, exact=exact)
        except Exception as e:
            last_err = e
            continue
        return dec.reconstruct(), dec
    raise FixtureError(
        f"could not draw a well-conditioned transform: {last_err}")


def random_structure(rng, dim, max_block=2, eig_pool=None, exact=False,
                     distinct=False):
    """A random block-size partition of ``dim`` with eigenvalues from a
    small pool (all distinct when ``distinct``)."""
    if eig_pool is None:
        eig_pool = [-2, -1, 0, 1, 2, 3]
    sizes = []
    left = dim
    while left:
        s = rng.randint(1, min(max_block, left))
        sizes.append(s)
        left -= s
    if distinct:
        eigs = rng.sample(eig_pool, len(sizes))
    else:
        eigs = [rng.choice(eig_pool) for _ in sizes]
    grouped = {}
    for lam, m in zip(eigs, sizes):
        grouped.setdefault(lam, []).append(m)
    return [(Fraction(lam) if exact else complex(lam), lengths)
            for lam, lengths in sorted(grouped.items())]


def random_fixture(rng, dim, max_block=2, exact=False, distinct=False,
                   eig_pool=None):
    structure = random_structure(rng, dim, max_block=max_block,
                                 eig_pool=eig_pool, exact=exact,
                                 distinct=distinct)
    return gen_fixture(structure, seed=rng.randrange(2 ** 30), exact=exact)


def random_matrix(rng, dim, exact=False, span=2, complex_entries=False):
    """A dense random argument matrix with small entries."""
    rows = []
    for _ in range(dim):
        row = []
        for _ in range(dim):
            re = rng.randint(-span, span)
            im = rng.randint(-span, span) if complex_entries else 0
            if exact:
                row.append(QC(Fraction(re), Fraction(im)))
            else:
                row.append(complex(re, im) + (rng.random() - 0.5) * 0.5)
        rows.append(row)
    return Matrix(rows, exact=exact)
