"""Stability assessment on assembled admittances.

* :func:`eigs_from_admittance` -- system eigenvalues as the zeros of
  ``det(Y(s))`` (after removing poles cancelled inside the determinant).
* :func:`nyquist_loci` -- generalized Nyquist test on an open-loop gain
  ``L(s)`` (e.g. ``Y_conv Z_g``) by the winding of ``det(I + L)`` along the
  standard Nyquist contour, with indentation around imaginary-axis poles.
* :func:`rma_sweep` -- resonance mode analysis: modal impedances are the
  reciprocals of the eigenvalues of ``Y(jω)``, tracked across frequency by
  eigenvector continuity.
* :func:`sigma_sweep` -- singular values of ``Y(jω)``.
* :func:`mode_trace` -- root sets over a parameter sweep with mode pairing.
* :func:`closed_loop_step` -- step response of a static-frame closed loop
  in the alpha-beta or dq frame.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .frames import OMEGA0, static_to_alphabeta, static_to_dq
from .poly_tf import Polynomial, RationalFunction, TFMatrix, det_roots
from .statespace import StateSpace, step_response

log = logging.getLogger(__name__)

#: Real-part threshold (rad/s) separating instability from root-finder noise.
TOL_RHP = 1e-6
#: Default sweep: 400 log-spaced points over 0.1-100 Hz.
DEFAULT_GRID = (0.1, 100.0, 400)

STANDARD_ASSUMPTIONS = (
    "entry denominators (component and network poles) are stable or audited separately",
    "no unstable pole/zero cancellation between component admittances",
)


# ---------------------------------------------------------------------------
# Eigen reports
# ---------------------------------------------------------------------------


def _order_roots(roots: np.ndarray) -> np.ndarray:
    """Deterministic ordering: descending real part, then imaginary part."""
    roots = np.asarray(roots, dtype=complex)
    key = np.lexsort((np.round(roots.imag, 9), -np.round(roots.real, 9)))
    return roots[key]


@dataclass
class EigenReport:
    """Roots of the determinant numerator with derived mode data.

    Attributes
    ----------
    roots : ndarray
        Eigenvalues (rad/s), ordered by descending real part.
    freq_hz : ndarray
        ``|Im| / 2π``.
    damping : ndarray
        Damping ratio ``-Re / |λ|`` (1 for a root at the origin).
    verdict : str
        ``"unstable"`` iff some real part exceeds ``tol_rhp``.
    cancelled : list
        ``(pole, order)`` pairs of candidate poles absent from ``det``.
    assumptions : tuple of str
    """

    roots: np.ndarray
    freq_hz: np.ndarray
    damping: np.ndarray
    verdict: str
    tol_rhp: float = TOL_RHP
    cancelled: list = field(default_factory=list)
    assumptions: tuple = STANDARD_ASSUMPTIONS

    @classmethod
    def from_roots(cls, roots, tol_rhp: float = TOL_RHP, cancelled=None,
                   assumptions=STANDARD_ASSUMPTIONS) -> "EigenReport":
        r = _order_roots(roots)
        mag = np.abs(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            zeta = np.where(mag > 0, -r.real / np.where(mag > 0, mag, 1.0), 1.0)
        verdict = "unstable" if np.any(r.real > tol_rhp) else "stable"
        return cls(r, np.abs(r.imag) / (2 * np.pi), zeta, verdict, tol_rhp,
                   list(cancelled or []), tuple(assumptions))

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"

    def dominant(self, fmin: float = 0.0, fmax: float = np.inf) -> complex:
        """Root with the largest real part among oscillatory roots in a band."""
        sel = (self.freq_hz >= fmin) & (self.freq_hz <= fmax)
        if not np.any(sel):
            raise ValueError(f"no roots between {fmin} and {fmax} Hz")
        r = self.roots[sel]
        return complex(r[np.argmax(r.real)])

    def rows(self) -> list[list[str]]:
        return [[repr(float(z.real)), repr(float(z.imag)), repr(float(f)), repr(float(d))]
                for z, f, d in zip(self.roots, self.freq_hz, self.damping)]

    def to_csv(self, path: str | Path) -> None:
        """Write ``re,im,freq_hz,damping_ratio`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re", "im", "freq_hz", "damping_ratio"])
            w.writerows(self.rows())


def eigs_from_admittance(Y: TFMatrix, tol_rhp: float = TOL_RHP) -> EigenReport:
    """System eigenvalues as the zeros of ``det(Y(s))``.

    Candidate poles that the determinant does not carry (cancelled
    factors) are listed in the report so that hidden RHP cancellations can
    be audited.

    Raises
    ------
    ValueError
        If the determinant numerator has degree zero.
    """
    dr = det_roots(Y)
    if dr.num.degree < 1:
        raise ValueError("degree-0 determinant numerator: no system modes")
    return EigenReport.from_roots(dr.roots, tol_rhp, cancelled=dr.cancelled)


# ---------------------------------------------------------------------------
# Frequency grids and sweeps
# ---------------------------------------------------------------------------


def frequency_grid(fmin: float = DEFAULT_GRID[0], fmax: float = DEFAULT_GRID[1],
                   n: int = DEFAULT_GRID[2], densify: Callable[[np.ndarray], np.ndarray] | None = None,
                   factor: int = 4, band: float = 0.1) -> np.ndarray:
    """Log-spaced grid (Hz), optionally densified around minima of a metric.

    ``densify`` maps a frequency array to a positive metric (e.g.
    ``|det Y(j2πf)|``); within ``±band`` (relative) of each local minimum
    the grid spacing is reduced ``factor`` times.
    """
    if not (0 < fmin < fmax) or n < 2:
        raise ValueError("need 0 < fmin < fmax and n >= 2")
    f = np.geomspace(fmin, fmax, int(n))
    if densify is None:
        return f
    m = np.asarray(densify(f), dtype=float)
    idx = [k for k in range(1, len(f) - 1) if m[k] <= m[k - 1] and m[k] <= m[k + 1]]
    extra = []
    step = np.log(fmax / fmin) / (n - 1) / factor
    for k in idx:
        lo, hi = max(fmin, f[k] * (1 - band)), min(fmax, f[k] * (1 + band))
        extra.append(np.exp(np.arange(np.log(lo), np.log(hi), step)))
    if extra:
        f = np.concatenate([f] + extra)
    f = np.unique(f)
    keep = np.r_[True, np.diff(np.log(f)) > 1e-12]
    return f[keep]


def det_metric(Y: TFMatrix) -> Callable[[np.ndarray], np.ndarray]:
    """``|det Y(j2πf)|`` for grid densification."""
    def m(f):
        with np.errstate(all="ignore"):
            v = np.abs(np.linalg.det(Y.evaluate_many(2j * np.pi * np.asarray(f))))
        return np.where(np.isfinite(v), v, np.inf)
    return m


def _evaluate(Y, f: np.ndarray) -> np.ndarray:
    """Stack ``(K, n, n)`` of ``Y(j2πf)``; ``Y`` may be a TFMatrix, a callable
    of one complex point, or a precomputed stack."""
    s = 2j * np.pi * np.asarray(f, dtype=float)
    if isinstance(Y, TFMatrix):
        return Y.evaluate_many(s)
    if callable(Y):
        return np.array([np.atleast_2d(Y(z)) for z in s])
    M = np.asarray(Y)
    if M.ndim != 3 or M.shape[0] != len(f):
        raise ValueError("precomputed matrices must have shape (len(grid), n, n)")
    return M


@dataclass
class SweepResult:
    """Frequency-gridded payload.

    Attributes
    ----------
    freq_hz : ndarray, shape (K,)
        Strictly increasing grid.
    values : ndarray, shape (K, m)
        Payload columns (complex or real).
    kind : str
        ``modal_impedance``, ``singular_values`` or ``eigen_loci``.
    flags : list
        Indices of grid points skipped or flagged.
    peaks : list of tuple
        ``(freq_hz, magnitude, trace)`` for local maxima (RMA/sigma).
    """

    freq_hz: np.ndarray
    values: np.ndarray
    kind: str
    flags: list = field(default_factory=list)
    peaks: list = field(default_factory=list)

    def __post_init__(self):
        self.freq_hz = np.asarray(self.freq_hz, dtype=float)
        if self.freq_hz.size > 1 and not np.all(np.diff(self.freq_hz) > 0):
            raise ValueError("frequency grid must be strictly increasing")
        if self.values.shape[0] != self.freq_hz.size:
            raise ValueError("payload length does not match grid")

    def columns(self) -> list[str]:
        m = self.values.shape[1]
        if np.iscomplexobj(self.values):
            cols = []
            for k in range(m):
                cols += [f"re{k}", f"im{k}", f"abs{k}"]
            return cols
        return [f"v{k}" for k in range(m)]

    def to_csv(self, path: str | Path) -> None:
        """Write ``freq_hz,<payload columns>``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["freq_hz", *self.columns()])
            for f, row in zip(self.freq_hz, self.values):
                out = [repr(float(f))]
                for v in row:
                    if np.iscomplexobj(self.values):
                        out += [repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v)))]
                    else:
                        out.append(repr(float(v)))
                w.writerow(out)

    def peaks_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["freq_hz", "magnitude", "trace"])
            for f, mag, k in self.peaks:
                w.writerow([repr(float(f)), repr(float(mag)), str(k)])


def _local_maxima(f: np.ndarray, mag: np.ndarray) -> list[tuple[float, float]]:
    out = []
    for k in range(1, len(f) - 1):
        if np.isfinite(mag[k]) and mag[k] > mag[k - 1] and mag[k] >= mag[k + 1]:
            out.append((float(f[k]), float(mag[k])))
    return out


def rma_sweep(Y, grid: np.ndarray | None = None) -> SweepResult:
    """Modal impedances ``1/eig(Y(jω))`` over a frequency grid.

    At the first point the modes are sorted by descending magnitude; at
    later points each mode is matched to the previous one with the largest
    eigenvector inner product.  Points where the eigenvector matrix is
    (numerically) defective are skipped (NaN) and flagged.
    """
    if grid is None:
        grid = frequency_grid(densify=det_metric(Y) if isinstance(Y, TFMatrix) else None)
    grid = np.asarray(grid, dtype=float)
    M = _evaluate(Y, grid)
    K, n, _ = M.shape
    vals = np.full((K, n), np.nan + 0j)
    flags = []
    prev_vec = None
    for k in range(K):
        try:
            lam, V = np.linalg.eig(M[k])
        except np.linalg.LinAlgError:
            flags.append(k)
            continue
        if not np.all(np.isfinite(lam)) or np.linalg.cond(V) > 1e12:
            flags.append(k)
            continue
        V = V / np.linalg.norm(V, axis=0)
        with np.errstate(divide="ignore"):
            z = 1.0 / lam
        if prev_vec is None:
            order = np.argsort(-np.abs(z), kind="stable")
        else:
            sim = np.abs(prev_vec.conj().T @ V)          # rows: previous traces
            r, c = linear_sum_assignment(-sim)
            order = c[np.argsort(r)]
        vals[k] = z[order]
        prev_vec = V[:, order]
    peaks = []
    for j in range(n):
        peaks += [(f, m, j) for f, m in _local_maxima(grid, np.abs(vals[:, j]))]
    peaks.sort(key=lambda p: -p[1])
    return SweepResult(grid, vals, "modal_impedance", flags, peaks)


def sigma_sweep(Y, grid: np.ndarray | None = None) -> SweepResult:
    """Singular values of ``Y(jω)`` (descending; last column is the minimum)."""
    if grid is None:
        grid = frequency_grid(densify=det_metric(Y) if isinstance(Y, TFMatrix) else None)
    grid = np.asarray(grid, dtype=float)
    M = _evaluate(Y, grid)
    sv = np.linalg.svd(M, compute_uv=False)
    smin = sv[:, -1]
    dips = [(f, m, sv.shape[1] - 1) for f, m in _local_maxima(grid, -smin)]
    peaks = [(f, -m, j) for f, m, j in dips]
    peaks.sort(key=lambda p: p[1])
    return SweepResult(grid, sv, "singular_values", [], peaks)


def magnitude_peaks(Y, grid: np.ndarray, entry: tuple[int, int] | None = None) -> list[tuple[float, float]]:
    """Local maxima of ``|Y_ij(j2πf)|`` (or of the largest singular value)."""
    M = _evaluate(Y, np.asarray(grid, dtype=float))
    mag = np.abs(M[:, entry[0], entry[1]]) if entry is not None else \
        np.linalg.svd(M, compute_uv=False)[:, 0]
    return _local_maxima(np.asarray(grid), mag)


# ---------------------------------------------------------------------------
# Generalized Nyquist
# ---------------------------------------------------------------------------


@dataclass
class NyquistResult:
    """Eigen-loci of ``L(jω)`` and the encirclement count of ``(-1, 0)``.

    ``encirclements`` counts clockwise encirclements along the Nyquist
    contour (up the imaginary axis, closed through the right half plane),
    which equals ``Z - P``: closed-loop RHP zeros minus open-loop RHP poles.
    """

    loci: SweepResult
    encirclements: int
    open_loop_rhp_poles: int
    indented: list
    assumptions: tuple
    marginal: bool = False

    @property
    def closed_loop_rhp(self) -> int:
        return self.encirclements + self.open_loop_rhp_poles

    @property
    def verdict(self) -> str:
        """``stable``/``unstable``; ``marginal`` when ``det(I + L)`` vanishes on
        the contour (a closed-loop pole on the imaginary axis), where the
        encirclement count is not meaningful."""
        if self.marginal:
            return "marginal"
        return "unstable" if self.closed_loop_rhp > 0 else "stable"


class ImaginaryAxisPoleError(ValueError):
    """The open-loop gain has a pole on the contour and indentation is off."""


def _contour(axis_poles: np.ndarray, wmax: float, eps: float, n_axis: int, n_arc: int,
             focus: np.ndarray | None = None) -> np.ndarray:
    """Nyquist contour points: up the jω axis from ``-j wmax`` to ``+j wmax``
    with right-hand semicircular indentations of radius ``eps`` around
    ``axis_poles`` (imaginary parts), then the closing right-half arc.

    ``focus`` lists lightly damped poles near the axis; the axis is sampled
    geometrically around each of their frequencies (offsets from 1e-3 to 1e3
    times the distance to the axis), so that a pole/zero pair straddling the
    axis cannot hide a full phase turn between two samples.
    """
    ws = np.sort(np.unique(np.round(np.asarray(axis_poles, float), 12)))
    # symmetric log-ish sampling of the axis
    pos = np.geomspace(max(wmax * 1e-7, 1e-6), wmax, n_axis // 2)
    w = np.concatenate([-pos[::-1], [0.0], pos])
    if focus is not None and len(focus):
        off = np.geomspace(1e-3, 1e3, 121)
        extra = [p.imag + sgn * abs(p.real) * off for p in np.asarray(focus, complex)
                 for sgn in (-1.0, 1.0)]
        extra = np.concatenate(extra + [np.asarray(focus, complex).imag])
        w = np.unique(np.concatenate([w, extra[np.abs(extra) < wmax]]))
    for wp in ws:
        w = w[np.abs(w - wp) > eps]
    pts = list(1j * w)
    for wp in ws:
        th = np.linspace(-np.pi / 2, np.pi / 2, 65)
        pts += list(1j * wp + eps * np.exp(1j * th))
    pts = np.array(pts)
    pts = pts[np.argsort(pts.imag, kind="stable")]
    arc = wmax * np.exp(1j * np.linspace(np.pi / 2, -np.pi / 2, n_arc))
    return np.concatenate([pts, arc[1:]])


def _winding_along(f: Callable[[np.ndarray], np.ndarray], pts: np.ndarray,
                   max_depth: int = 18) -> float:
    """Total phase change of ``f`` along a polyline (divided by 2π), with
    adaptive bisection wherever consecutive phases differ by > π/8 or the
    magnitudes by more than a factor of two."""
    vals = f(pts)
    total = 0.0
    stack = []
    for k in range(len(pts) - 1):
        stack.append((pts[k], pts[k + 1], vals[k], vals[k + 1], 0))
        while stack:
            a, b, fa, fb, d = stack.pop()
            ratio = fb / fa
            dphi = np.angle(ratio)
            if (abs(dphi) < np.pi / 8 and 0.5 < abs(ratio) < 2.0) or d >= max_depth:
                total += dphi
                continue
            m = 0.5 * (a + b)
            fm = f(np.array([m]))[0]
            stack.append((m, b, fm, fb, d + 1))
            stack.append((a, m, fa, fm, d + 1))
    return total / (2 * np.pi)


def nyquist_loci(L, grid: np.ndarray | None = None, open_loop_rhp_poles: int | None = None,
                 indent: bool = True, eps: float | None = None,
                 wmax: float | None = None, poles: np.ndarray | None = None,
                 size: int | None = None) -> NyquistResult:
    """Generalized Nyquist test for the loop gain ``L(s)``.

    Parameters
    ----------
    L : TFMatrix or callable
        Open-loop gain (e.g. ``Y_conv Z_g``); scalar complex-coefficient
        gains are passed as 1x1 TFMatrix.  A callable maps an array of
        ``s`` values to a stack of ``size x size`` matrices; ``poles`` is then
        required.
    grid : ndarray, optional
        Frequencies (Hz, may be negative) at which the eigen-loci are
        reported; default ±(0.1-100 Hz) log grid.
    open_loop_rhp_poles : int, optional
        ``P``; counted from ``poles`` (or the entry poles of ``L``) when
        omitted.
    indent : bool
        Indent the contour around imaginary-axis poles.  When ``False`` such
        a pole raises :class:`ImaginaryAxisPoleError`.
    poles : ndarray, optional
        Open-loop poles of ``L``.  Required for a callable gain; for a
        TFMatrix they default to the entry poles.
    size : int, optional
        Dimension of a callable gain (default 2).

    Notes
    -----
    The encirclement count is the winding of ``det(I + L)`` around the
    origin, which equals the summed encirclements of ``(-1, 0)`` by the
    eigen-loci.  It is computed on the closed contour with adaptive
    refinement; ``det`` is evaluated through the factors, not through the
    eigenvalue sort, so loci swaps cannot corrupt the count.
    """
    if isinstance(L, TFMatrix):
        n = L.shape[0]
        evaluate = L.evaluate_many
        if poles is None:
            poles = L.candidate_poles()
        zeros_hint = np.concatenate([np.abs(x.num.roots()) for row in L.entries for x in row
                                     if not x.is_zero() and x.num.degree > 0] or [np.zeros(0)])
    elif callable(L):
        if poles is None:
            raise TypeError("a callable loop gain requires its open-loop poles")
        n = int(size or 2)
        evaluate = L
        zeros_hint = np.zeros(0)
    else:
        raise TypeError("nyquist_loci expects a TFMatrix or callable loop gain")
    poles = np.asarray(poles, dtype=complex).ravel()
    scale = np.abs(poles).max() if poles.size else 1.0
    if zeros_hint.size:
        scale = max(scale, zeros_hint.max())
    scale = max(scale, 1.0)
    wmax = wmax or 1e4 * scale
    on_axis = poles[np.abs(poles.real) <= 1e-9 * (1 + np.abs(poles))]
    if on_axis.size and not indent:
        raise ImaginaryAxisPoleError(
            f"open-loop pole(s) on the imaginary axis at {np.round(on_axis, 6).tolist()}; "
            "enable indentation or exclude them from the grid")
    P = int(np.sum(poles.real > 1e-9 * (1 + np.abs(poles)))) if open_loop_rhp_poles is None \
        else int(open_loop_rhp_poles)
    if eps is None:
        eps = 1e-6 * scale
    I = np.eye(n)

    def f(s):
        return np.linalg.det(I[None] + evaluate(s))

    # lightly damped poles (damping ratio < 5 %) get local axis refinement
    light = poles[(np.abs(poles.real) > 1e-9 * (1 + np.abs(poles)))
                  & (np.abs(poles.real) < 0.05 * np.abs(poles))]
    pts = _contour(on_axis.imag, wmax, eps, 2000, 400, focus=light)
    wind = _winding_along(f, pts)
    # the contour is clockwise around the RHP: clockwise encirclements = -ccw winding
    N = int(round(-wind))
    mags = np.abs(f(pts))
    marginal = bool(np.min(mags) < 1e-9 * np.median(mags) or abs(-wind - N) > 0.05)
    if marginal:
        log.warning("det(I + L) vanishes on the contour (winding %.4f): closed-loop "
                    "pole on the imaginary axis, verdict is marginal", -wind)
    if grid is None:
        g = np.geomspace(DEFAULT_GRID[0], DEFAULT_GRID[1], DEFAULT_GRID[2])
        grid = np.concatenate([-g[::-1], g])
    grid = np.asarray(grid, dtype=float)
    M = evaluate(2j * np.pi * grid)
    loci = np.linalg.eigvals(M)
    loci = np.sort_complex(loci)
    sweep = SweepResult(grid, loci, "eigen_loci")
    assumptions = ("open-loop RHP poles counted from the supplied pole set" if open_loop_rhp_poles is None
                   else "open-loop RHP poles supplied by caller",)
    return NyquistResult(sweep, N, P, [complex(p) for p in on_axis], assumptions, marginal)


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------


@dataclass
class TraceResult:
    """Root sets over a parameter sweep.

    ``paths[i][k]`` is the root of report ``k`` paired with root ``i`` of
    the first report (NaN once a root disappears); ``ambiguous`` lists
    ``(step, root)`` pairs where two candidates were within the pairing
    radius.
    """

    params: list
    reports: list
    paths: np.ndarray
    ambiguous: list

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param", "mode", "re", "im", "freq_hz", "damping_ratio"])
            for k, p in enumerate(self.params):
                for i in range(self.paths.shape[0]):
                    z = self.paths[i, k]
                    if not np.isfinite(z):
                        continue
                    mag = abs(z)
                    zeta = -z.real / mag if mag > 0 else 1.0
                    w.writerow([repr(float(p)), str(i), repr(float(z.real)), repr(float(z.imag)),
                                repr(float(abs(z.imag) / (2 * np.pi))), repr(float(zeta))])


def mode_trace(build: Callable[[float], TFMatrix], params: Sequence[float],
               radius: float | None = None, tol_rhp: float = TOL_RHP) -> TraceResult:
    """Eigen reports over a monotone parameter list with nearest-neighbour pairing.

    Parameters
    ----------
    build : callable
        ``param -> total admittance``.
    params : sequence of float
        Monotone parameter values.
    radius : float, optional
        Pairing radius (rad/s); two candidates closer than this to a
        tracked root flag the step as ambiguous.  Defaults to 1e-3 of the
        largest root magnitude.
    """
    params = list(params)
    if not params:
        raise ValueError("empty parameter list")
    d = np.diff(params)
    if len(params) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("parameter list must be strictly monotone")
    reports = [eigs_from_admittance(build(p), tol_rhp) for p in params]
    n0 = len(reports[0].roots)
    paths = np.full((n0, len(params)), np.nan + 0j)
    paths[:, 0] = reports[0].roots
    ambiguous = []
    for k in range(1, len(params)):
        prev = paths[:, k - 1]
        cur = reports[k].roots
        alive = np.nonzero(np.isfinite(prev))[0]
        if not alive.size or not cur.size:
            continue
        cost = np.abs(prev[alive][:, None] - cur[None, :])
        r, c = linear_sum_assignment(cost)
        rad = radius if radius is not None else 1e-3 * max(1.0, np.abs(cur).max())
        for i, j in zip(r, c):
            paths[alive[i], k] = cur[j]
            close = np.sort(cost[i])
            if close.size > 1 and close[1] - close[0] < rad and close[1] < rad + close[0]:
                ambiguous.append((k, complex(prev[alive[i]])))
    return TraceResult(params, reports, paths, ambiguous)


# ---------------------------------------------------------------------------
# Time-domain support
# ---------------------------------------------------------------------------


def tf_to_ss(G: TFMatrix) -> StateSpace:
    """Realization of a proper real TFMatrix (column-wise controllable form).

    Each input column is realized with the product of its distinct entry
    denominators as the common denominator; the result is not necessarily
    minimal but is exact.
    """
    if G.is_complex:
        raise ValueError("realization needs real coefficients")
    p, m = G.shape
    blocks = []
    for j in range(m):
        col = [G[i, j] for i in range(p)]
        dens: list[Polynomial] = []
        for x in col:
            if x.is_zero() or x.den.degree == 0:
                continue
            if not any(x.den.almost_equal(d, 1e-14) for d in dens):
                dens.append(x.den)
        den = Polynomial([1.0])
        for d in dens:
            den = den * d
        a = np.real(den.coeffs) / np.real(den.lead)
        n = den.degree
        nums = []
        for x in col:
            if x.is_zero():
                nums.append(Polynomial([0.0]))
                continue
            if x.num.degree > x.den.degree:
                raise ValueError("improper transfer function cannot be realized")
            mult = Polynomial([1.0 / x.den.lead])
            if x.den.degree > 0:
                k = next(i for i, d in enumerate(dens) if x.den.almost_equal(d, 1e-14))
                mult = Polynomial([dens[k].lead / x.den.lead])
                for i, d in enumerate(dens):
                    if i != k:
                        mult = mult * d
            else:
                mult = den * Polynomial([1.0 / x.den.lead])
            nums.append(x.num * mult)
        A = np.zeros((n, n))
        if n:
            A[:-1, 1:] = np.eye(n - 1)
            A[-1, :] = -a[:n]
        B = np.zeros((n, 1))
        if n:
            B[-1, 0] = 1.0
        C = np.zeros((p, n))
        D = np.zeros((p, 1))
        for i, num in enumerate(nums):
            c = np.zeros(n + 1)
            nc = np.real(num.coeffs) / np.real(den.lead)
            c[: len(nc)] = nc[: n + 1]
            D[i, 0] = c[n]
            C[i] = c[:n] - c[n] * a[:n]
        blocks.append((A, B, C, D))
    nt = sum(b[0].shape[0] for b in blocks)
    A = np.zeros((nt, nt)); B = np.zeros((nt, m)); C = np.zeros((p, nt)); D = np.zeros((p, m))
    o = 0
    for j, (a_, b_, c_, d_) in enumerate(blocks):
        k = a_.shape[0]
        A[o:o + k, o:o + k] = a_
        B[o:o + k, j] = b_[:, 0]
        C[:, o:o + k] = c_
        D[:, j] = d_[:, 0]
        o += k
    return StateSpace(A, B, C, D)


def closed_loop_step(F: RationalFunction, frame: str = "alphabeta", axis: int = 0,
                     t_end: float = 1.0, fs: float = 10000.0, magnitude: float = 1.0,
                     omega0: float = OMEGA0) -> tuple[np.ndarray, np.ndarray]:
    """Step response of a static-frame closed loop seen in ``frame``.

    ``F`` is lifted to a real 2x2 model (alpha-beta, or dq after the shift
    ``s -> s + j omega0``), realized and simulated for a step of
    ``magnitude`` on input ``axis``.

    Returns
    -------
    t : ndarray
    y : ndarray, shape (N+1, 2)

    Raises
    ------
    ValueError
        If ``F`` is improper or ``frame`` unknown.
    """
    if F.num.degree > F.den.degree:
        raise ValueError("closed-loop transfer function must be proper")
    if frame == "alphabeta":
        G = static_to_alphabeta(F)
    elif frame == "dq":
        G = static_to_dq(F, omega0)
    else:
        raise ValueError(f"frame must be 'alphabeta' or 'dq', got {frame!r}")
    ss = tf_to_ss(G)
    return step_response(ss, axis, magnitude, t_end, fs)


def ringing_frequency(t: np.ndarray, y: np.ndarray, skip: float = 0.0) -> float:
    """Dominant ringing frequency (Hz) by zero-crossing counting.

    Crossings of the sample-to-sample increment are counted (this removes
    the step offset); ``skip`` seconds at the start are ignored.
    """
    t = np.asarray(t); y = np.asarray(y, dtype=float)
    sel = t >= t[0] + skip
    dy = np.diff(y[sel])
    tt = t[sel][1:]
    sgn = np.signbit(dy)
    idx = np.nonzero(sgn[1:] != sgn[:-1])[0]
    if idx.size < 3:
        return 0.0
    # linear interpolation of crossing times
    tc = tt[idx] + (tt[idx + 1] - tt[idx]) * dy[idx] / (dy[idx] - dy[idx + 1])
    return float((idx.size - 1) / (2.0 * (tc[-1] - tc[0])))


__all__ = [
    "TOL_RHP", "EigenReport", "SweepResult", "NyquistResult", "TraceResult",
    "ImaginaryAxisPoleError", "eigs_from_admittance", "frequency_grid", "det_metric",
    "rma_sweep", "sigma_sweep", "magnitude_peaks", "nyquist_loci", "mode_trace",
    "tf_to_ss", "closed_loop_step", "ringing_frequency",
]
