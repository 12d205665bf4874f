"""Polynomial and rational transfer-function matrix algebra.

Every admittance handled by the package is a matrix of rational functions of
the Laplace variable ``s``.  This module provides the three value types used
throughout:

* :class:`Polynomial` -- real or complex coefficients, ascending degree;
* :class:`RationalFunction` -- ``num / den`` with *no* implicit cancellation;
* :class:`TFMatrix` -- a rectangular grid of rational functions.

It also provides the numerically careful determinant machinery used for
stability assessment.  Expanding ``det(Y(s))`` over a common denominator and
then cancelling pole/zero pairs is fragile when many poles cluster (e.g. the
swing modes of several generators all sit near 10 rad/s).  :func:`det_roots`
therefore works with the *reduced* numerator directly: the pole order of the
determinant at every candidate pole is measured with a winding number, the
numerator ``det(Y)·D_min`` is interpolated with an FFT on a circle, and its
companion-matrix roots are polished by Newton iterations on ``det(Y)`` itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

#: Relative tolerance below which a leading coefficient produced by
#: cancellation (``a + b``) is treated as an exact zero.
CANCEL_RTOL = 1e-13
#: Pole/zero cancellation tolerance used by ``simplify``: roots closer than
#: ``CANCEL_TOL * (1 + |root|)`` are considered common.
CANCEL_TOL = 1e-7
#: Hard cap on polynomial degree; exceeding it is an error, not a slowdown.
DEGREE_CAP = 200


class DegreeCapError(ValueError):
    """Raised when a polynomial would exceed :data:`DEGREE_CAP`."""


class PoleHitError(ZeroDivisionError):
    """Raised when a transfer function is evaluated at one of its poles."""


def _as_coeff_array(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs))
    if c.ndim != 1:
        raise ValueError("polynomial coefficients must be one-dimensional")
    if c.size == 0:
        c = np.zeros(1)
    if np.iscomplexobj(c):
        c = c.astype(complex)
        if not np.any(c.imag):
            c = c.real.copy()
    else:
        c = c.astype(float)
    return c


class Polynomial:
    """Polynomial in ``s`` with ascending coefficients ``c0 + c1 s + ...``.

    Instances are immutable.  Exactly-zero leading coefficients are trimmed
    on construction; arithmetic additionally zeroes a leading coefficient
    that is the result of cancellation (relative to the operands, threshold
    :data:`CANCEL_RTOL`), so that ``p - p`` has degree 0 rather than a
    spurious tiny leading term.

    Parameters
    ----------
    coeffs : array_like
        Coefficients in ascending powers of ``s``.  Complex values are kept
        complex only if some imaginary part is nonzero.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = _as_coeff_array(coeffs)
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        if c.size - 1 > DEGREE_CAP:
            raise DegreeCapError(
                f"polynomial degree {c.size - 1} exceeds cap {DEGREE_CAP}")
        c.setflags(write=False)
        self._c = c

    # -- construction helpers -------------------------------------------
    @classmethod
    def from_roots(cls, roots: Iterable[complex], lead: complex = 1.0) -> "Polynomial":
        """Monic-times-``lead`` polynomial with the given roots."""
        r = np.asarray(list(roots), dtype=complex)
        c = np.array([1.0 + 0j])
        for x in r:
            c = np.convolve(c, [-x, 1.0])
        c = c * lead
        # Conjugate-symmetric root sets with a real lead give real polynomials.
        if np.isrealobj(lead) or np.imag(lead) == 0:
            if _is_conj_closed(r):
                c = c.real
        return cls(c)

    @classmethod
    def constant(cls, value: complex) -> "Polynomial":
        return cls([value])

    @classmethod
    def s(cls) -> "Polynomial":
        """The monomial ``s``."""
        return cls([0.0, 1.0])

    # -- basic properties -----------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        """Read-only ascending coefficient array."""
        return self._c

    @property
    def degree(self) -> int:
        return self._c.size - 1

    @property
    def lead(self) -> complex:
        return self._c[-1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self._c)

    def is_zero(self) -> bool:
        return self._c.size == 1 and self._c[0] == 0

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, self._c)

    def __repr__(self) -> str:
        return f"Polynomial({self._c.tolist()!r})"

    # -- arithmetic -------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if np.isscalar(other):
            return Polynomial([other])
        return NotImplemented

    def _addsub(self, other: "Polynomial", sign: float) -> "Polynomial":
        a, b = self._c, other._c
        n = max(a.size, b.size)
        dtype = complex if (np.iscomplexobj(a) or np.iscomplexobj(b)) else float
        aa = np.zeros(n, dtype); aa[: a.size] = a
        bb = np.zeros(n, dtype); bb[: b.size] = b
        c = aa + sign * bb
        scale = np.abs(aa) + np.abs(bb)
        # zero out leading coefficients that are pure cancellation residue
        k = n - 1
        while k > 0 and abs(c[k]) <= CANCEL_RTOL * scale[k]:
            c[k] = 0
            k -= 1
        return Polynomial(c)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._addsub(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._addsub(other, -1.0)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other._addsub(self, -1.0)

    def __neg__(self):
        return Polynomial(-self._c)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial([1.0])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self._c.size == other._c.size and bool(np.all(self._c == other._c))

    def __hash__(self) -> int:
        return hash(self._c.tobytes())

    def almost_equal(self, other: "Polynomial", rtol: float = 1e-12) -> bool:
        """Coefficient-wise comparison relative to the largest coefficient."""
        if self.degree != other.degree:
            return False
        scale = max(np.max(np.abs(self._c)), np.max(np.abs(other._c)), 1e-300)
        return bool(np.all(np.abs(self._c - other._c) <= rtol * scale))

    # -- calculus & transformations --------------------------------------
    def deriv(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(self._c[1:] * np.arange(1, self._c.size))

    def conj(self) -> "Polynomial":
        """Polynomial with conjugated coefficients (``conj(p(conj(s)))``)."""
        return Polynomial(np.conj(self._c))

    def shift(self, a: complex) -> "Polynomial":
        """Return ``q(s) = p(s + a)`` (Horner/Taylor shift)."""
        if a == 0:
            return self
        lin = Polynomial([a, 1.0])
        out = Polynomial([self._c[-1]])
        for c in self._c[-2::-1]:
            out = out * lin + c
        return out

    def real_part(self) -> "Polynomial":
        return Polynomial(np.real(self._c))

    def imag_part(self) -> "Polynomial":
        return Polynomial(np.imag(self._c))

    def roots(self) -> np.ndarray:
        return poly_roots(self)


def _is_conj_closed(r: np.ndarray, tol: float = 1e-12) -> bool:
    left = list(r)
    for x in r:
        if x not in left:
            continue
        left.remove(x)
        if abs(x.imag) <= tol * (1 + abs(x)):
            continue
        if not left:
            return False
        k = int(np.argmin(np.abs(np.asarray(left) - np.conj(x))))
        if abs(left[k] - np.conj(x)) > tol * (1 + abs(x)):
            return False
        left.pop(k)
    return True


def poly_roots(p: Polynomial) -> np.ndarray:
    """Roots of ``p`` with multiplicity, via a balanced companion matrix.

    Zero roots are split off exactly.  The remaining polynomial is rescaled
    ``s = g z`` with ``g = |c0 / cn|^(1/n)`` so that its end coefficients
    have equal magnitude, and the eigenvalues of the (LAPACK-balanced)
    companion matrix are returned in the original scale.

    The residual satisfies ``|p(r)| <= 1e-8 * sum_k |c_k| |r|^k`` for the
    well-conditioned polynomials met in this package; the test-suite checks
    this bound.

    Raises
    ------
    ValueError
        If ``p`` is constant ("constant polynomial has no roots").
    """
    if p.degree < 1:
        raise ValueError("constant polynomial has no roots")
    c = np.asarray(p.coeffs)
    nz = int(np.flatnonzero(c)[0])
    zeros = np.zeros(nz, dtype=complex)
    c = c[nz:]
    n = c.size - 1
    if n == 0:
        return zeros
    g = (abs(c[0]) / abs(c[-1])) ** (1.0 / n)
    if not np.isfinite(g) or g == 0:
        g = 1.0
    cz = c * g ** np.arange(n + 1)
    cz = cz / cz[-1]
    comp = np.zeros((n, n), dtype=cz.dtype)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -cz[:-1]
    r = np.linalg.eigvals(comp) * g
    return np.concatenate([zeros, r.astype(complex)])


def poly_residual(p: Polynomial, r: complex) -> float:
    """Scaled residual ``|p(r)| / sum_k |c_k||r|^k`` used in root checks."""
    c = np.asarray(p.coeffs)
    den = np.sum(np.abs(c) * np.abs(r) ** np.arange(c.size))
    return float(abs(p(r)) / den) if den else 0.0


def match_roots(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Max distance of an optimal one-to-one matching between two root sets.

    Uses the Hungarian assignment so that repeated or nearby roots are not
    double-counted.  Returns ``inf`` if the sets have different sizes.
    """
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return float(np.max(cost[i, j]))


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


class RationalFunction:
    """Scalar rational function ``num(s) / den(s)``.

    No pole/zero cancellation is ever performed implicitly; use
    :meth:`simplify` with an explicit tolerance.  When two operands share an
    identical denominator, sums keep that denominator instead of squaring it.

    Parameters
    ----------
    num, den : Polynomial or array_like
        Numerator and denominator (ascending coefficients if array-like).
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = Polynomial([1.0]) if den is None else (
            den if isinstance(den, Polynomial) else Polynomial(den))
        if den.is_zero():
            raise ZeroDivisionError("denominator is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, key, value):
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def constant(cls, value: complex) -> "RationalFunction":
        return cls(Polynomial([value]), Polynomial([1.0]))

    @classmethod
    def zero(cls) -> "RationalFunction":
        return cls.constant(0.0)

    def __repr__(self) -> str:
        return f"RationalFunction(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"

    def is_zero(self) -> bool:
        return self.num.is_zero()

    @property
    def is_complex(self) -> bool:
        return self.num.is_complex or self.den.is_complex

    @property
    def relative_degree(self) -> int:
        """``deg(den) - deg(num)``; positive for strictly proper functions."""
        return self.den.degree - self.num.degree

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=complex)
        if s_arr.ndim == 0 and abs(s_arr) > 1.0:
            z = 1.0 / complex(s_arr)
            v = np.polynomial.polynomial.polyval(z, self.num.coeffs[::-1]) / \
                np.polynomial.polynomial.polyval(z, self.den.coeffs[::-1])
            return v * complex(s_arr) ** (self.num.degree - self.den.degree)
        d = self.den(s)
        return self.num(s) / d

    def evaluate(self, s: complex) -> complex:
        """Evaluate at ``s`` raising :class:`PoleHitError` at a pole."""
        d = self.den(s)
        scale = np.sum(np.abs(self.den.coeffs) * abs(s) ** np.arange(self.den.degree + 1))
        if abs(d) <= 1e-14 * scale:
            raise PoleHitError(f"pole hit at s={s!r}")
        return self.num(s) / d

    # arithmetic
    @staticmethod
    def _coerce(other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(other)
        if np.isscalar(other):
            return RationalFunction.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den,
                                self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return RationalFunction.zero()
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def deriv(self) -> "RationalFunction":
        return RationalFunction(self.num.deriv() * self.den - self.num * self.den.deriv(),
                                self.den * self.den)

    def conj(self) -> "RationalFunction":
        """Conjugate the coefficients: returns ``conj(F(conj(s)))``."""
        return RationalFunction(self.num.conj(), self.den.conj())

    def shift(self, a: complex) -> "RationalFunction":
        """Return ``F(s + a)``."""
        return RationalFunction(self.num.shift(a), self.den.shift(a))

    def poles(self) -> np.ndarray:
        return poly_roots(self.den) if self.den.degree else np.zeros(0, complex)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num) if self.num.degree else np.zeros(0, complex)

    def simplify(self, tol: float = CANCEL_TOL, return_cancelled: bool = False):
        """Cancel numerator/denominator roots closer than ``tol*(1+|r|)``.

        Parameters
        ----------
        tol : float
            Relative matching tolerance.
        return_cancelled : bool
            If true, also return the list of cancelled roots (denominator
            values) so that callers can audit what was removed.

        Returns
        -------
        RationalFunction or (RationalFunction, list of complex)
        """
        if self.num.is_zero() or self.num.degree == 0 or self.den.degree == 0:
            return (self, []) if return_cancelled else self
        z = list(self.zeros())
        p = list(self.poles())
        cancelled = []
        for x in list(p):
            if not z:
                break
            k = int(np.argmin(np.abs(np.asarray(z) - x)))
            if abs(z[k] - x) <= tol * (1 + abs(x)):
                cancelled.append(complex(x))
                z.pop(k)
                p.remove(x)
        if not cancelled:
            out = self
        else:
            out = RationalFunction(Polynomial.from_roots(z, self.num.lead),
                                   Polynomial.from_roots(p, self.den.lead))
            if not self.is_complex:
                out = RationalFunction(out.num.real_part(), out.den.real_part())
        return (out, cancelled) if return_cancelled else out


# ---------------------------------------------------------------------------
# Transfer-function matrices
# ---------------------------------------------------------------------------


def _as_rf(x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x)
    return RationalFunction.constant(complex(x) if np.iscomplexobj(x) else float(x))


class TFMatrix:
    """Rectangular matrix of :class:`RationalFunction` entries.

    Parameters
    ----------
    entries : sequence of sequences
        Rows of entries; each entry may be a RationalFunction, Polynomial
        or scalar.
    """

    __slots__ = ("_e", "rows", "cols")

    def __init__(self, entries):
        rows = [[_as_rf(x) for x in row] for row in entries]
        if not rows or not rows[0]:
            raise ValueError("TFMatrix must have at least one row and column")
        ncol = len(rows[0])
        if any(len(r) != ncol for r in rows):
            raise ValueError("TFMatrix rows must have equal length")
        object.__setattr__(self, "_e", tuple(tuple(r) for r in rows))
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", ncol)

    def __setattr__(self, key, value):
        raise AttributeError("TFMatrix is immutable")

    # construction
    @classmethod
    def from_constant(cls, m) -> "TFMatrix":
        m = np.atleast_2d(np.asarray(m))
        return cls([[x for x in row] for row in m])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "TFMatrix":
        return cls([[0.0] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, n: int) -> "TFMatrix":
        return cls.from_constant(np.eye(n))

    @classmethod
    def block_diag(cls, blocks: Sequence["TFMatrix"]) -> "TFMatrix":
        n = sum(b.rows for b in blocks)
        m = sum(b.cols for b in blocks)
        out = [[RationalFunction.zero()] * m for _ in range(n)]
        r0 = c0 = 0
        for b in blocks:
            for i in range(b.rows):
                for j in range(b.cols):
                    out[r0 + i][c0 + j] = b[i, j]
            r0 += b.rows
            c0 += b.cols
        return cls(out)

    # access
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def entries(self) -> tuple:
        return self._e

    def __getitem__(self, idx):
        i, j = idx
        if isinstance(i, slice) or isinstance(j, slice):
            ri = range(self.rows)[i] if isinstance(i, slice) else [i]
            cj = range(self.cols)[j] if isinstance(j, slice) else [j]
            return TFMatrix([[self._e[a][b] for b in cj] for a in ri])
        return self._e[i][j]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "TFMatrix":
        return TFMatrix([[self._e[a][b] for b in cols] for a in rows])

    def with_block(self, r0: int, c0: int, block: "TFMatrix") -> "TFMatrix":
        """Return a copy with ``block`` *added* at offset (r0, c0)."""
        e = [list(r) for r in self._e]
        for i in range(block.rows):
            for j in range(block.cols):
                e[r0 + i][c0 + j] = e[r0 + i][c0 + j] + block[i, j]
        return TFMatrix(e)

    def __repr__(self) -> str:
        return f"TFMatrix({self.rows}x{self.cols})"

    @property
    def is_complex(self) -> bool:
        return any(x.is_complex for row in self._e for x in row)

    # algebra
    def __add__(self, other):
        return tf_add(self, other)

    def __sub__(self, other):
        return tf_add(self, other.scale(-1.0))

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, k) -> "TFMatrix":
        k = _as_rf(k)
        return TFMatrix([[x * k for x in row] for row in self._e])

    def __matmul__(self, other: "TFMatrix") -> "TFMatrix":
        if not isinstance(other, TFMatrix):
            other = TFMatrix.from_constant(other)
        if self.cols != other.rows:
            raise ValueError(f"dimension mismatch {self.shape} @ {other.shape}")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = RationalFunction.zero()
                for k in range(self.cols):
                    acc = acc + self._e[i][k] * other._e[k][j]
                row.append(acc)
            out.append(row)
        return TFMatrix(out)

    def __rmatmul__(self, other) -> "TFMatrix":
        return TFMatrix.from_constant(other) @ self

    def transpose(self) -> "TFMatrix":
        return TFMatrix([[self._e[i][j] for i in range(self.rows)] for j in range(self.cols)])

    @property
    def T(self) -> "TFMatrix":
        return self.transpose()

    def map(self, fn: Callable[[RationalFunction], RationalFunction]) -> "TFMatrix":
        return TFMatrix([[fn(x) for x in row] for row in self._e])

    def deriv(self) -> "TFMatrix":
        return self.map(lambda x: x.deriv())

    # evaluation
    def __call__(self, s):
        return tf_eval(self, s)

    def evaluate_many(self, s) -> np.ndarray:
        """Evaluate at an array of points; returns shape ``(len(s), rows, cols)``.

        No pole-hit checking is done (use :func:`tf_eval` for that).
        """
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.empty((s.size, self.rows, self.cols), dtype=complex)
        big = np.abs(s) > 1.0
        zinv = np.where(big, 1.0 / np.where(big, s, 1.0), 0.0)
        cache: dict = {}

        def ev(p: Polynomial):
            # p(s) for |s| <= 1, s^-deg p(s) (reversed polynomial in 1/s) otherwise
            key = id(p)
            if key not in cache:
                v = np.empty(s.size, dtype=complex)
                v[~big] = p(s[~big])
                v[big] = np.polynomial.polynomial.polyval(zinv[big], p.coeffs[::-1])
                cache[key] = v
            return cache[key]

        for i, row in enumerate(self._e):
            for j, x in enumerate(row):
                if x.is_zero():
                    out[:, i, j] = 0
                    continue
                v = ev(x.num) / ev(x.den)
                rel = x.num.degree - x.den.degree
                if rel and big.any():
                    v[big] = v[big] * s[big] ** rel
                out[:, i, j] = v
        return out

    def distinct_denominators(self) -> list[Polynomial]:
        dens: list[Polynomial] = []
        for row in self._e:
            for x in row:
                if x.is_zero() or x.den.degree == 0:
                    continue
                if not any(x.den.almost_equal(d, 1e-14) for d in dens):
                    dens.append(x.den)
        return dens

    def candidate_poles(self) -> np.ndarray:
        """Roots of every distinct entry denominator (possible poles)."""
        dens = self.distinct_denominators()
        if not dens:
            return np.zeros(0, complex)
        return np.concatenate([poly_roots(d) for d in dens])

    def max_excess(self) -> int:
        """Upper bound on the growth exponent of ``det`` as ``|s| -> inf``.

        Sum over rows of ``max_j (deg num_ij - deg den_ij)``.
        """
        if self.rows != self.cols:
            raise ValueError("excess bound is defined for square matrices")
        tot = 0
        for i, row in enumerate(self._e):
            ex = [x.num.degree - x.den.degree for x in row if not x.is_zero()]
            if not ex:
                raise np.linalg.LinAlgError(f"row {i} is identically zero; determinant vanishes")
            tot += max(ex)
        return tot


def tf_add(a: TFMatrix, b: TFMatrix) -> TFMatrix:
    """Entrywise rational addition.

    When two corresponding entries share an identical denominator the
    denominator is kept; otherwise the product of denominators is used, so
    the degree of the sum's denominator is at most ``deg(den_a)+deg(den_b)``.

    Raises
    ------
    ValueError
        On dimension mismatch.
    """
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return TFMatrix([[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a.entries, b.entries)])


def tf_eval(m: TFMatrix, s: complex) -> np.ndarray:
    """Evaluate ``m`` at the complex point ``s``.

    Raises
    ------
    PoleHitError
        If a denominator vanishes at ``s``; the message names the entry.
    """
    out = np.empty((m.rows, m.cols), dtype=complex)
    for i, row in enumerate(m.entries):
        for j, x in enumerate(row):
            try:
                out[i, j] = x.evaluate(s)
            except PoleHitError:
                raise PoleHitError(f"entry ({i},{j}) has a pole at s={s!r}") from None
    return out


def _poly_det(P: list[list[Polynomial]]) -> Polynomial:
    """Exact (division-free) Laplace expansion with memoised minors."""
    n = len(P)
    memo: dict = {}

    def rec(r: int, cols: tuple) -> Polynomial:
        if r == n:
            return Polynomial([1.0])
        key = (r, cols)
        if key in memo:
            return memo[key]
        acc = Polynomial([0.0])
        for k, j in enumerate(cols):
            if P[r][j].is_zero():
                continue
            sub = rec(r + 1, cols[:k] + cols[k + 1:])
            term = P[r][j] * sub
            acc = acc + term if k % 2 == 0 else acc - term
        memo[key] = acc
        return acc

    return rec(0, tuple(range(n)))


def _interp_poly(f: Callable[[np.ndarray], np.ndarray], deg: int, rho: float,
                 phase: float = 0.1234567) -> tuple[np.ndarray, float]:
    """Interpolate a polynomial of degree <= ``deg`` from samples on a circle.

    Returns the ascending coefficients and the aliasing (tail) ratio: the
    largest scaled coefficient beyond ``deg`` relative to the largest one
    within.  A ratio near round-off confirms the degree bound.
    """
    m = deg + 1
    n = max(16, 1 << int(np.ceil(np.log2(2 * m))))
    w = np.exp(1j * (2 * np.pi * np.arange(n) / n + phase))
    vals = f(rho * w)
    c = np.fft.fft(vals) / n  # c_k = coeff_k * (rho e^{i phase})^k
    head = np.abs(c[:m])
    tail = float(np.max(np.abs(c[m:])) / max(np.max(head), 1e-300))
    k = np.arange(m)
    coeffs = c[:m] / (rho * np.exp(1j * phase)) ** k
    return coeffs, tail


def tf_det(m: TFMatrix) -> RationalFunction:
    """Determinant of a square TFMatrix as an *unsimplified* rational function.

    Each row is multiplied by the product of its distinct entry
    denominators, turning ``m`` into a polynomial matrix ``P`` with
    ``det(m) = det(P) / prod(row denominators)``.  For dimension <= 6 the
    polynomial determinant is formed exactly by division-free Laplace
    expansion; larger matrices use FFT interpolation of ``det(P(s))`` on a
    circle.  No common factors are cancelled -- see :func:`det_roots` for
    the numerically robust reduced numerator.

    Raises
    ------
    ValueError
        If ``m`` is not square.
    """
    if m.rows != m.cols:
        raise ValueError(f"determinant of non-square {m.shape} matrix")
    n = m.rows
    P: list[list[Polynomial]] = []
    row_dens: list[Polynomial] = []
    for row in m.entries:
        dens: list[Polynomial] = []
        for x in row:
            if x.is_zero() or x.den.degree == 0 and x.den.coeffs[0] == 1:
                continue
            if not any(x.den == d for d in dens):
                dens.append(x.den)
        lcd = Polynomial([1.0])
        for d in dens:
            lcd = lcd * d
        prow = []
        for x in row:
            if x.is_zero():
                prow.append(Polynomial([0.0]))
                continue
            fac = x.num
            for d in dens:
                if d != x.den:
                    fac = fac * d
            prow.append(fac)
        P.append(prow)
        row_dens.append(lcd)
    den = Polynomial([1.0])
    for d in row_dens:
        den = den * d
    if n <= 6:
        num = _poly_det(P)
    else:
        bound = sum(max(p.degree for p in row) for row in P)
        if bound > DEGREE_CAP:
            raise DegreeCapError(f"determinant degree bound {bound} exceeds cap {DEGREE_CAP}")
        roots = np.concatenate([poly_roots(d) for d in row_dens if d.degree] or [np.ones(1)])
        mags = np.abs(roots[np.abs(roots) > 0])
        rho = float(np.exp(np.mean(np.log(mags)))) if mags.size else 1.0

        def f(s):
            out = np.empty(s.size, dtype=complex)
            for k, z in enumerate(s):
                M = np.array([[p(z) for p in row] for row in P], dtype=complex)
                out[k] = np.linalg.det(M)
            return out

        c, _ = _interp_poly(f, bound, rho)
        if not m.is_complex:
            c = c.real
        num = Polynomial(_trim_rel(c, 1e-13))
    return RationalFunction(num, den)


def _trim_rel(c: np.ndarray, rtol: float, rho: float = 1.0) -> np.ndarray:
    """Trim leading coefficients that are negligible in the ``rho``-scaled basis."""
    sc = np.abs(c) * rho ** np.arange(c.size)
    mx = np.max(sc) if sc.size else 0.0
    k = c.size
    while k > 1 and sc[k - 1] <= rtol * mx:
        k -= 1
    return c[:k]


# ---------------------------------------------------------------------------
# Robust reduced determinant and its roots
# ---------------------------------------------------------------------------


@dataclass
class PoleCluster:
    """A group of candidate poles and the measured pole order of ``det``."""

    center: complex
    members: list
    nominal: int
    order: int


@dataclass
class DetRoots:
    """Result of :func:`det_roots`.

    Attributes
    ----------
    roots : ndarray
        Zeros of ``det(Y(s))`` (rad/s), i.e. roots of the reduced numerator.
    num : Polynomial
        Reduced numerator ``N(s) = det(Y(s)) * D_min(s)``.
    den : Polynomial
        ``D_min(s)``, the product of the poles that survive in ``det(Y)``.
    clusters : list of PoleCluster
        Candidate poles with nominal and measured pole orders.
    tail : float
        Aliasing ratio of the numerator interpolation.
    """

    roots: np.ndarray
    num: Polynomial
    den: Polynomial
    clusters: list = field(default_factory=list)
    tail: float = 0.0

    @property
    def cancelled(self) -> list:
        """``(pole, count)`` pairs that cancelled against determinant zeros."""
        return [(c.center, c.nominal - c.order) for c in self.clusters if c.nominal > c.order]

    def as_rational(self) -> RationalFunction:
        return RationalFunction(self.num, self.den)


def _cluster(points: np.ndarray, tol: float) -> list[list[complex]]:
    pts = sorted((complex(p) for p in points), key=lambda z: (z.real, z.imag))
    groups: list[list[complex]] = []
    for p in pts:
        for g in groups:
            c = np.mean(g)
            if abs(p - c) <= tol * (1 + abs(c)) * max(1, len(g)):
                g.append(p)
                break
        else:
            groups.append([p])
    return groups


def _winding(f: Callable[[np.ndarray], np.ndarray], center: complex, radius: float) -> float:
    """Winding number of ``f`` around 0 along a circle, with refinement."""
    n = 64
    while True:
        th = 2 * np.pi * np.arange(n + 1) / n
        v = f(center + radius * np.exp(1j * th))
        ph = np.unwrap(np.angle(v))
        if np.max(np.abs(np.diff(ph))) < 0.5 or n >= 4096:
            return float((ph[-1] - ph[0]) / (2 * np.pi))
        n *= 4


def _det_stack(M: np.ndarray) -> np.ndarray:
    sign, logabs = np.linalg.slogdet(M)
    return sign * np.exp(logabs)


def rational_from_samples(f: Callable[[np.ndarray], np.ndarray],
                          candidates: np.ndarray,
                          excess: int,
                          nominal: Callable[[complex], int] | None = None,
                          tol: float = CANCEL_TOL,
                          real: bool = False,
                          rho: float | None = None):
    """Reconstruct a scalar rational function from point evaluations.

    The function ``f`` must be rational with poles contained in
    ``candidates`` and must grow at most like ``|s|^excess`` at infinity.

    The pole order at each candidate cluster is measured as minus the
    winding number of ``f`` on a small circle; the numerator
    ``N = f * D_min`` is then recovered by FFT interpolation with an
    adaptive degree bound (doubled until the aliasing tail is at round-off).

    Returns
    -------
    num : ndarray
        Ascending numerator coefficients.
    dmin : Polynomial
        Denominator built from the surviving poles.
    clusters : list of PoleCluster
    tail : float
        Aliasing ratio of the accepted interpolation.
    """
    cand = np.asarray(candidates, dtype=complex)
    groups = _cluster(cand, tol)
    centers = np.array([np.mean(g) for g in groups], dtype=complex)
    clusters: list[PoleCluster] = []
    poles: list[complex] = []
    for k, g in enumerate(groups):
        c = centers[k]
        spread = max((abs(x - c) for x in g), default=0.0)
        r = max(1e-6 * (1 + abs(c)), 20 * spread)
        others = np.delete(centers, k)
        if others.size:
            r = min(r, 0.3 * float(np.min(np.abs(others - c))))
        w = _winding(f, c, r)
        order = max(0, int(round(-w)))
        nom = nominal(c) if nominal is not None else len(g)
        clusters.append(PoleCluster(center=complex(c), members=list(g), nominal=nom, order=order))
        if order == len(g):
            poles.extend(g)
        else:
            poles.extend([c] * order)
    dmin = Polynomial.from_roots(poles)
    if real:
        dmin = Polynomial(np.real(dmin.coeffs)) if np.iscomplexobj(dmin.coeffs) else dmin
    if rho is None:
        mags = np.abs(cand[np.abs(cand) > 1e-9])
        rho = float(np.exp(np.mean(np.log(mags)))) if mags.size else 1.0
        rho = min(max(rho, 1e-3), 1e4)
    # keep the sampling circle away from poles
    if cand.size:
        for _ in range(20):
            if np.min(np.abs(np.abs(cand) - rho)) > 1e-3 * rho:
                break
            rho *= 1.0137

    def g(s):
        return f(s) * dmin(s)

    deg = max(dmin.degree + excess, 0)
    while True:
        c, tail = _interp_poly(g, deg, rho)
        if tail < 1e-7 or deg > DEGREE_CAP:
            break
        deg = 2 * deg + 1
    if deg > DEGREE_CAP:
        raise DegreeCapError("rational reconstruction exceeded the degree cap")
    if real:
        c = c.real
    c = _trim_rel(c, max(1e-12, 100 * tail), rho)
    return c, dmin, clusters, tail


def _newton_polish(evalm: Callable[[complex], np.ndarray], r: complex,
                   maxit: int = 12) -> tuple[complex, bool]:
    """Newton on ``det(M(s))`` with Jacobi's formula ``d/ds log det = tr(M^-1 M')``."""
    x = complex(r)
    for _ in range(maxit):
        h = 1e-6 * (1 + abs(x))
        try:
            M = evalm(x)
            dM = (evalm(x + h) - evalm(x - h)) / (2 * h)
            t = np.trace(np.linalg.solve(M, dM))
        except (np.linalg.LinAlgError, PoleHitError, ZeroDivisionError):
            return x, False
        if not np.isfinite(t) or t == 0:
            return x, False
        step = 1.0 / t
        x = x - step
        if abs(step) <= 1e-15 * (1 + abs(x)):
            return x, True
    return x, abs(step) <= 1e-9 * (1 + abs(x))


def polish_roots(evalm: Callable[[complex], np.ndarray], roots: np.ndarray) -> np.ndarray:
    """Newton-polish determinant zeros; reject steps that jump to another root."""
    roots = np.asarray(roots, dtype=complex)
    out = roots.copy()
    for k, r in enumerate(roots):
        others = np.delete(roots, k)
        sep = float(np.min(np.abs(others - r))) if others.size else np.inf
        x, ok = _newton_polish(evalm, r)
        if ok and abs(x - r) < 0.25 * sep:
            out[k] = x
    return out


def det_roots(m: TFMatrix, tol: float = CANCEL_TOL, polish: bool = True,
              rho: float | None = None) -> DetRoots:
    """Zeros of ``det(m(s))`` after cancellation of common pole/zero factors.

    This is the numerically robust counterpart of
    ``tf_det(m).simplify(tol)``: rather than expanding the full common
    denominator, only the poles that *survive* in ``det(m)`` are kept.

    Parameters
    ----------
    m : TFMatrix
        Square transfer matrix.
    tol : float
        Clustering tolerance for candidate poles (relative).
    polish : bool
        Newton-polish the companion roots on ``det(m)``.
    rho : float, optional
        Interpolation radius; chosen from the pole magnitudes by default.

    Raises
    ------
    ValueError
        If ``m`` is not square or the reduced numerator is constant.
    """
    if m.rows != m.cols:
        raise ValueError(f"determinant of non-square {m.shape} matrix")
    cand = m.candidate_poles()
    excess = m.max_excess()

    def f(s):
        return _det_stack(m.evaluate_many(s))

    # nominal pole multiplicity: rows that carry the pole in some entry
    row_cands = []
    for row in m.entries:
        rc = []
        seen: list[Polynomial] = []
        for x in row:
            if x.is_zero() or x.den.degree == 0:
                continue
            if not any(x.den.almost_equal(d, 1e-14) for d in seen):
                seen.append(x.den)
                rc.extend(poly_roots(x.den))
        row_cands.append(np.asarray(rc, dtype=complex))

    def nominal(c: complex) -> int:
        return int(sum(np.sum(np.abs(rc - c) <= 1e-6 * (1 + abs(c))) for rc in row_cands if rc.size))

    c, dmin, clusters, tail = rational_from_samples(
        f, cand, excess, nominal=nominal, tol=tol, real=not m.is_complex, rho=rho)
    num = Polynomial(c)
    if num.degree < 1:
        return DetRoots(np.zeros(0, complex), num, dmin, clusters, tail)
    r = poly_roots(num)
    if polish:
        r = polish_roots(lambda s: m.evaluate_many(np.array([s]))[0], r)
    if not m.is_complex:
        r = _symmetrize(r)
    return DetRoots(np.sort_complex(r), num, dmin, clusters, tail)


def _symmetrize(r: np.ndarray) -> np.ndarray:
    """Make a root set of a real polynomial exactly conjugate-symmetric."""
    r = np.asarray(r, dtype=complex).copy()
    used = np.zeros(r.size, bool)
    for i in range(r.size):
        if used[i]:
            continue
        used[i] = True
        if abs(r[i].imag) <= 1e-9 * (1 + abs(r[i])):
            r[i] = r[i].real
            continue
        d = np.abs(r - np.conj(r[i]))
        d[used] = np.inf
        j = int(np.argmin(d))
        if np.isfinite(d[j]) and d[j] <= 1e-6 * (1 + abs(r[i])):
            avg = 0.5 * (r[i] + np.conj(r[j]))
            r[i], r[j] = avg, np.conj(avg)
            used[j] = True
    return r


def matrix_det_roots(evalm: Callable[[np.ndarray], np.ndarray], candidates: np.ndarray,
                     excess: int, real: bool = True, polish: bool = True,
                     tol: float = CANCEL_TOL) -> DetRoots:
    """:func:`det_roots` for a matrix given only by point evaluation.

    ``evalm`` maps an array of ``K`` points to a ``(K, n, n)`` stack.
    Candidate poles must contain every pole of every entry.
    """
    def f(s):
        return _det_stack(evalm(np.atleast_1d(s)))

    c, dmin, clusters, tail = rational_from_samples(f, candidates, excess, tol=tol, real=real)
    num = Polynomial(c)
    if num.degree < 1:
        return DetRoots(np.zeros(0, complex), num, dmin, clusters, tail)
    r = poly_roots(num)
    if polish:
        r = polish_roots(lambda s: evalm(np.array([s]))[0], r)
    if real:
        r = _symmetrize(r)
    return DetRoots(np.sort_complex(r), num, dmin, clusters, tail)


def tf_from_samples(evalm: Callable[[np.ndarray], np.ndarray], shape: tuple[int, int],
                    candidates: np.ndarray, excess: int = 0, real: bool = True,
                    tol: float = CANCEL_TOL) -> TFMatrix:
    """Reconstruct a TFMatrix entrywise from point evaluations.

    Each entry is recovered by :func:`rational_from_samples`; used for
    symbolic Schur complements (Thevenin aggregation) where forming the
    fraction algebra explicitly would square denominators repeatedly.
    """
    rows = []
    for i in range(shape[0]):
        row = []
        for j in range(shape[1]):
            def f(s, i=i, j=j):
                return evalm(np.atleast_1d(s))[:, i, j]

            probe = f(np.array([0.37 + 1.91j, -2.3 + 0.7j, 5.1 - 3.3j]))
            if np.all(probe == 0):
                row.append(RationalFunction.zero())
                continue
            c, dmin, _, _ = rational_from_samples(f, candidates, excess, tol=tol, real=real)
            row.append(RationalFunction(Polynomial(c), dmin))
        rows.append(row)
    return TFMatrix(rows)


__all__ = [
    "CANCEL_TOL", "DEGREE_CAP", "DegreeCapError", "PoleHitError",
    "Polynomial", "RationalFunction", "TFMatrix", "DetRoots", "PoleCluster",
    "poly_roots", "poly_residual", "match_roots", "tf_add", "tf_eval", "tf_det",
    "det_roots", "matrix_det_roots", "rational_from_samples", "tf_from_samples",
    "polish_roots",
]
