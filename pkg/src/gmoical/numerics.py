"""Scalar and matrix arithmetic in two modes: float (Python complex) and
exact rational complex (Fraction pairs).

Matrices are small (dim <= 16) dense pure-Python objects so that the same
code path serves both modes; conversion to/from numpy happens only at the
boundary (see :mod:`gmoical.jordan`).
"""

from __future__ import annotations

import math
from fractions import Fraction


class NumericsError(ValueError):
    pass


class DimensionMismatchError(NumericsError):
    pass


class SingularMatrixError(NumericsError):
    """Raised when a matrix inverse does not exist (exact mode) or the
    elimination meets a negligible pivot (float mode).

    The ``condition`` attribute carries a rough conditioning indicator:
    max |entry| / |smallest pivot seen|, or ``math.inf``.
    """

    def __init__(self, msg, condition=math.inf):
        super().__init__(msg)
        self.condition = condition


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


class QC:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _as_fraction(re)
        self.im = _as_fraction(im)

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, QC):
            return other
        if isinstance(other, (int, Fraction)):
            return QC(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QC(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QC(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QC(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QC(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by exact zero")
        return QC((self.re * o.re + self.im * o.im) / d,
                  (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return QC(1) / self ** (-k)
        out = QC(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- comparisons / conversions ------------------------------------
    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __abs__(self):
        return math.sqrt(float(self.re * self.re + self.im * self.im))

    def modulus_sq(self):
        return self.re * self.re + self.im * self.im

    def conjugate(self):
        return QC(self.re, -self.im)

    def to_complex(self):
        return complex(self.re, self.im)

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __repr__(self):
        return f"QC({self.re}, {self.im})"


def scalar(value, exact=False):
    """Coerce ``value`` (number, complex, QC, or "p/q" string) into the
    scalar type of the requested mode."""
    if exact:
        if isinstance(value, QC):
            return value
        if isinstance(value, complex):
            return QC(Fraction(value.real), Fraction(value.imag))
        return QC(value)
    if isinstance(value, QC):
        return value.to_complex()
    if isinstance(value, str):
        return complex(Fraction(value))
    return complex(value)


def _mod_sq(x):
    """Squared modulus, exact when x is a QC."""
    if isinstance(x, QC):
        return x.modulus_sq()
    return x.real * x.real + x.imag * x.imag


def parse_entry(entry, exact):
    """Parse a JSON matrix entry ``[re, im]`` where each part is a number
    or a "p/q" string."""
    if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
        raise NumericsError(f"matrix entry must be a [re, im] pair, got {entry!r}")
    re, im = entry
    if exact:
        return QC(_as_fraction(re), _as_fraction(im))
    re = float(Fraction(re)) if isinstance(re, str) else float(re)
    im = float(Fraction(im)) if isinstance(im, str) else float(im)
    return complex(re, im)


def _emit_part(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


class Matrix:
    """Immutable dense square matrix over complex floats or exact rational
    complex scalars (uniform per matrix)."""

    __slots__ = ("dim", "rows", "exact")

    def __init__(self, rows, exact=None):
        rows = tuple(tuple(r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionMismatchError("matrix must be square")
        if exact is None:
            exact = bool(rows) and isinstance(rows[0][0], QC)
        if exact:
            rows = tuple(tuple(e if isinstance(e, QC) else QC(e) for e in r)
                         for r in rows)
        else:
            rows = tuple(tuple(complex(e) for e in r) for r in rows)
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, *a):
        raise AttributeError("Matrix is immutable")

    # -- constructors --------------------------------------------------
    @classmethod
    def identity(cls, n, exact=False):
        one = QC(1) if exact else 1 + 0j
        zero = QC(0) if exact else 0j
        return cls([[one if i == j else zero for j in range(n)]
                    for i in range(n)], exact=exact)

    @classmethod
    def zeros(cls, n, exact=False):
        zero = QC(0) if exact else 0j
        return cls([[zero] * n for _ in range(n)], exact=exact)

    @classmethod
    def diagonal(cls, values, exact=False):
        vals = [scalar(v, exact) for v in values]
        zero = QC(0) if exact else 0j
        n = len(vals)
        return cls([[vals[i] if i == j else zero for j in range(n)]
                    for i in range(n)], exact=exact)

    @classmethod
    def from_json(cls, obj, exact=False):
        if not isinstance(obj, dict) or "entries" not in obj:
            raise NumericsError("matrix JSON must have 'dim' and 'entries'")
        entries = obj["entries"]
        dim = obj.get("dim", len(entries))
        if (len(entries) == dim * dim and dim > 1
                and all(len(e) == 2 and not isinstance(e[0], (list, tuple))
                        for e in entries)):
            # flat row-major list of [re, im] pairs
            entries = [entries[i * dim:(i + 1) * dim] for i in range(dim)]
        if len(entries) != dim or any(len(r) != dim for r in entries):
            raise DimensionMismatchError(
                f"declared dim {dim} does not match entries shape")
        return cls([[parse_entry(e, exact) for e in row] for row in entries],
                   exact=exact)

    def to_json(self):
        entries = []
        for row in self.rows:
            out = []
            for e in row:
                if self.exact:
                    out.append([_emit_part(e.re), _emit_part(e.im)])
                else:
                    out.append([e.real, e.imag])
            entries.append(out)
        return {"dim": self.dim, "entries": entries}

    @classmethod
    def from_numpy(cls, arr):
        return cls([[complex(arr[i, j]) for j in range(arr.shape[1])]
                    for i in range(arr.shape[0])], exact=False)

    def to_numpy(self):
        import numpy as np
        return np.array([[complex(e) if not self.exact else e.to_complex()
                          for e in row] for row in self.rows], dtype=complex)

    # -- arithmetic ----------------------------------------------------
    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionMismatchError(
                f"dimension mismatch: {self.dim} vs {other.dim}")
        if self.exact != other.exact:
            raise NumericsError("cannot mix exact and float matrices")

    def __add__(self, other):
        self._check(other)
        return Matrix([[a + b for a, b in zip(r1, r2)]
                       for r1, r2 in zip(self.rows, other.rows)],
                      exact=self.exact)

    def __sub__(self, other):
        self._check(other)
        return Matrix([[a - b for a, b in zip(r1, r2)]
                       for r1, r2 in zip(self.rows, other.rows)],
                      exact=self.exact)

    def __neg__(self):
        return Matrix([[-a for a in r] for r in self.rows], exact=self.exact)

    def scale(self, s):
        s = scalar(s, self.exact)
        return Matrix([[s * a for a in r] for r in self.rows],
                      exact=self.exact)

    def __matmul__(self, other):
        return mat_mul(self, other)

    def power(self, k):
        if k < 0:
            return inverse(self.power(-k))
        out = Matrix.identity(self.dim, self.exact)
        base = self
        while k:
            if k & 1:
                out = mat_mul(out, base)
            base = mat_mul(base, base)
            k >>= 1
        return out

    def conj_transpose(self):
        if self.exact:
            return Matrix([[self.rows[j][i].conjugate()
                            for j in range(self.dim)]
                           for i in range(self.dim)], exact=True)
        return Matrix([[self.rows[j][i].conjugate() for j in range(self.dim)]
                       for i in range(self.dim)], exact=False)

    # -- predicates / norms -------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.exact == other.exact and self.dim == other.dim
                and self.rows == other.rows)

    def __hash__(self):
        return hash((self.exact, self.rows))

    def is_zero(self):
        return all(not _mod_sq(e) for r in self.rows for e in r)

    def frobenius_sq(self):
        """Sum of squared entry moduli; exact Fraction in exact mode."""
        tot = Fraction(0) if self.exact else 0.0
        for r in self.rows:
            for e in r:
                tot += _mod_sq(e)
        return tot

    def max_abs(self):
        return max((abs(e if not self.exact else e.to_complex())
                    for r in self.rows for e in r), default=0.0)

    def diff_norm(self, other):
        return frobenius_norm(self - other)

    def to_float(self):
        if not self.exact:
            return self
        return Matrix([[e.to_complex() for e in r] for r in self.rows],
                      exact=False)


def mat_mul(a, b):
    a._check(b)
    n = a.dim
    br = b.rows
    out = []
    for i in range(n):
        ar = a.rows[i]
        row = []
        for j in range(n):
            s = ar[0] * br[0][j]
            for k in range(1, n):
                s = s + ar[k] * br[k][j]
            row.append(s)
        out.append(row)
    return Matrix(out, exact=a.exact)


def mat_chain(factors):
    """Product of a nonempty sequence of matrices, left to right."""
    it = iter(factors)
    out = next(it)
    for m in it:
        out = mat_mul(out, m)
    return out


def frobenius_norm(a):
    return math.sqrt(float(a.frobenius_sq()))


def inverse(a):
    """Gauss-Jordan inverse. Exact mode pivots on any nonzero entry;
    float mode uses partial pivoting and raises SingularMatrixError with a
    condition indicator when the pivot is negligible."""
    n = a.dim
    aug = [list(ra) + list(rb)
           for ra, rb in zip(a.rows, Matrix.identity(n, a.exact).rows)]
    scale_ref = a.max_abs() or 1.0
    min_pivot = math.inf
    for col in range(n):
        piv_row = max(range(col, n), key=lambda r: _mod_sq(aug[r][col]))
        piv = aug[piv_row][col]
        piv_abs = math.sqrt(float(_mod_sq(piv)))
        if a.exact:
            if not _mod_sq(piv):
                raise SingularMatrixError("matrix is singular (exact)")
        else:
            if piv_abs <= 1e-13 * scale_ref:
                cond = scale_ref / piv_abs if piv_abs else math.inf
                raise SingularMatrixError(
                    f"matrix is numerically singular (pivot {piv_abs:.3e})",
                    condition=cond)
        min_pivot = min(min_pivot, piv_abs)
        aug[col], aug[piv_row] = aug[piv_row], aug[col]
        inv_piv = (QC(1) if a.exact else 1.0) / piv if a.exact else 1.0 / piv
        aug[col] = [e * inv_piv for e in aug[col]]
        for r in range(n):
            if r == col:
                continue
            f = aug[r][col]
            if not _mod_sq(f):
                continue
            aug[r] = [e - f * p for e, p in zip(aug[r], aug[col])]
    return Matrix([row[n:] for row in aug], exact=a.exact)
