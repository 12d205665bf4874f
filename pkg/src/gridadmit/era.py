"""Multi-event Eigensystem Realization Algorithm (ERA).

Black-box identification of a dq admittance from two step experiments,
one per voltage axis.  Step records are differenced into impulse-equivalent
Markov parameters, ``h_0 = y_0 / p`` and ``h_k = (y_k - y_{k-1}) / p``, so
that the realized model is the plant itself (no integrator pole from the
step).  All events share one Hankel column space: their Hankel matrices
are concatenated column-wise, which yields a single ``A`` and ``C`` and one
``B``/``D`` column per event.

With ``H1[i, j] = h_{1+i+j}`` (block entries of ``K`` output rows),
``H2[i, j] = h_{2+i+j}`` and the truncated SVD ``H1 ≈ U' S' V'^T``::

    A = S'^{-1/2} U'^T H2 V' S'^{-1/2}
    C = first K rows of U' S'^{1/2}
    B_i = first column of event i's block of S'^{1/2} V'^T
    D_i = h_0 of event i
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .poly_tf import Polynomial, RationalFunction, TFMatrix
from .statespace import StateSpace, read_timeseries_csv, ss_to_admittance, write_timeseries_csv

log = logging.getLogger(__name__)

#: Default order-selection threshold on ``σ_{n+1} / σ_1``.
ORDER_SELECT_TOL = 1e-8
#: Rank guard: ``σ_n / σ_1`` below this raises unless ``force=True``.
RANK_TOL = 1e-12
#: Poles with ``|s|`` below this (rad/s) are treated as step-induced.
ORIGIN_POLE_TOL = 1e-3


class ERAError(ValueError):
    """Identification cannot proceed with the requested settings."""


@dataclass
class EventRecord:
    """One step experiment.

    Attributes
    ----------
    channel : int
        Index of the perturbed input (0 = d/x axis, 1 = q/y axis).
    p : float
        Step size (pu).
    Ts : float
        Sample period (s).
    y : ndarray, shape (K, N+1)
        Output channels.  For raw records the first ``pre`` samples
        precede the step, which is applied at sample ``pre``.
    pre : int
        Number of pre-event samples in ``y``.
    offsets, scales : ndarray, shape (K,)
        Steady-state offsets removed and scale factors applied (set by
        :func:`preprocess`).
    names : list of str
        Channel ids.
    markov : ndarray, optional
        Processed impulse-equivalent sequence ``(K, N+1)``.
    flags : list of str
        Diagnostics (e.g. zero-variance channels).
    """

    channel: int
    p: float
    Ts: float
    y: np.ndarray
    pre: int = 0
    offsets: np.ndarray | None = None
    scales: np.ndarray | None = None
    names: list = field(default_factory=list)
    markov: np.ndarray | None = None
    differenced: bool = True
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if not self.Ts > 0:
            raise ERAError("sample period Ts must be positive")
        if self.p == 0:
            raise ERAError("perturbation size p must be non-zero")
        if not 0 <= self.pre < self.y.shape[1]:
            raise ERAError("pre-event window must leave post-event samples")
        if not self.names:
            self.names = [f"y{k}" for k in range(self.y.shape[0])]
        if len(self.names) != self.y.shape[0]:
            raise ERAError("channel names do not match the number of outputs")

    @property
    def n_outputs(self) -> int:
        return self.y.shape[0]

    @property
    def n_samples(self) -> int:
        """Post-event sample count ``N + 1``."""
        return self.y.shape[1] - self.pre


def preprocess(raw: EventRecord, scales: Sequence[float] | None = None,
               difference: bool = True) -> EventRecord:
    """Remove steady-state offsets, scale, and convert to Markov parameters.

    Parameters
    ----------
    raw : EventRecord
        Record with at least one pre-event sample (``pre >= 1``).
    scales : sequence of float, optional
        Per-channel multipliers (default 1).
    difference : bool
        First-difference the step data into impulse-equivalent samples
        (default).  Without it the step samples divided by ``p`` are used
        and the origin pole is removed later by :func:`admittance_from_steps`.

    Returns
    -------
    EventRecord
        Post-event samples only, ``pre = 0``, with ``markov`` filled in.
    """
    if raw.pre < 1:
        raise ERAError("at least one pre-event sample is needed to estimate the steady state")
    K = raw.n_outputs
    sc = np.ones(K) if scales is None else np.asarray(scales, dtype=float)
    if sc.shape != (K,):
        raise ERAError(f"expected {K} scale factors, got {sc.size}")
    offsets = raw.y[:, : raw.pre].mean(axis=1)
    y = (raw.y[:, raw.pre:] - offsets[:, None]) * sc[:, None]
    flags = list(raw.flags)
    for k in range(K):
        if np.ptp(raw.y[k]) == 0.0:
            msg = f"channel {raw.names[k]!r} has zero variance"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            flags.append(msg)
    if difference:
        h = np.diff(y, axis=1, prepend=0.0) / raw.p
    else:
        h = y / raw.p
    return replace(raw, y=y, pre=0, offsets=offsets, scales=sc, markov=h,
                   differenced=difference, flags=flags)


# ---------------------------------------------------------------------------
# Hankel matrices
# ---------------------------------------------------------------------------


@dataclass
class HankelPair:
    """Block-Hankel pair ``H1``/``H2`` (events concatenated column-wise).

    Construction verifies that ``H2`` is the one-step shift of ``H1``.
    """

    H1: np.ndarray
    H2: np.ndarray
    K: int
    L: int
    n_events: int

    def __post_init__(self):
        if self.H1.shape != self.H2.shape:
            raise ValueError("H1 and H2 must have equal shapes")
        K = self.K
        # block row i+1 of H1 equals block row i of H2
        if not np.array_equal(self.H1[K:], self.H2[:-K]):
            raise ValueError("H2 is not the one-step shift of H1")

    @property
    def block_rows(self) -> int:
        return self.H1.shape[0] // self.K


def _hankel(h: np.ndarray, start: int, rows: int, L: int) -> np.ndarray:
    K = h.shape[0]
    H = np.empty((K * rows, L))
    for i in range(rows):
        H[K * i: K * (i + 1)] = h[:, start + i: start + i + L]
    return H


def hankel_pair(markov: Sequence[np.ndarray], L: int | None = None) -> HankelPair:
    """Build the Hankel pair from per-event Markov sequences ``(K, N+1)``.

    With ``N`` samples after ``h_0`` and ``L`` columns per event, each
    matrix has ``N - L`` block rows (the shifted matrix must stay inside
    the record).  ``L`` defaults to ``floor(N/2)``.
    """
    seqs = [np.atleast_2d(np.asarray(h, dtype=float)) for h in markov]
    if not seqs:
        raise ERAError("at least one event is required")
    K, N1 = seqs[0].shape
    if any(h.shape != (K, N1) for h in seqs):
        raise ERAError("all events must have the same channels and length")
    N = N1 - 1
    L = N // 2 if L is None else int(L)
    rows = N - L
    if L < 1 or rows < 1:
        raise ERAError(f"record of {N1} samples too short for L={L}")
    H1 = np.hstack([_hankel(h, 1, rows, L) for h in seqs])
    H2 = np.hstack([_hankel(h, 2, rows, L) for h in seqs])
    return HankelPair(H1, H2, K, L, len(seqs))


# ---------------------------------------------------------------------------
# Realization
# ---------------------------------------------------------------------------


@dataclass
class ERAResult:
    """Discrete realization with shared ``A``/``C``.

    Attributes
    ----------
    ssd : StateSpace
        Discrete model; input ``i`` corresponds to event ``i``.
    sigma : ndarray
        Singular values of ``H1`` (order diagnostics).
    order, L : int
    events : list of EventRecord
    """

    ssd: StateSpace
    sigma: np.ndarray
    order: int
    L: int
    events: list

    @property
    def Ts(self) -> float:
        return float(self.ssd.dt)

    def continuous(self) -> StateSpace:
        return discrete_to_continuous(self.ssd)

    def reconstruct_markov(self) -> list[np.ndarray]:
        """Model Markov sequences ``[D_i, C B_i, C A B_i, ...]`` per event."""
        n1 = self.events[0].markov.shape[1]
        A, B, C, D = self.ssd.A, self.ssd.B, self.ssd.C, self.ssd.D
        out = []
        for i in range(B.shape[1]):
            h = np.empty((C.shape[0], n1))
            h[:, 0] = D[:, i]
            x = B[:, i].copy()
            for k in range(1, n1):
                h[:, k] = C @ x
                x = A @ x
            out.append(h)
        return out

    def markov_error(self) -> float:
        """Relative Frobenius error of the reconstructed Markov sequences."""
        rec = self.reconstruct_markov()
        num = sum(np.linalg.norm(r - e.markov) ** 2 for r, e in zip(rec, self.events))
        den = sum(np.linalg.norm(e.markov) ** 2 for e in self.events)
        return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))

    def reconstruct_steps(self) -> list[np.ndarray]:
        """Processed step records implied by the model (undo differencing)."""
        out = []
        for r, e in zip(self.reconstruct_markov(), self.events):
            y = r * e.p
            out.append(np.cumsum(y, axis=1) if e.differenced else y)
        return out

    def fit_report(self) -> dict:
        steps = self.reconstruct_steps()
        errs = []
        for ys, e in zip(steps, self.events):
            nrm = np.linalg.norm(e.y)
            errs.append(float(np.linalg.norm(ys - e.y) / nrm) if nrm > 0 else 0.0)
        return {
            "order": self.order,
            "L": self.L,
            "Ts": self.Ts,
            "singular_values": [float(s) for s in self.sigma],
            "markov_rel_error": self.markov_error(),
            "step_rel_error": errs,
            "match_percent": [100.0 * (1.0 - e) for e in errs],
        }


def select_order(sigma: np.ndarray, tol: float = ORDER_SELECT_TOL) -> int:
    """Smallest ``n`` with ``σ_{n+1} / σ_1 < tol``."""
    sigma = np.asarray(sigma)
    if sigma.size == 0 or sigma[0] == 0:
        return 0
    ratio = sigma / sigma[0]
    below = np.nonzero(ratio < tol)[0]
    return int(below[0]) if below.size else int(sigma.size)


def era_realize(events: Sequence[EventRecord], order: int | None = None,
                L: int | None = None, force: bool = False,
                select_tol: float = ORDER_SELECT_TOL) -> ERAResult:
    """Multi-event ERA realization with shared ``A`` and ``C``.

    Parameters
    ----------
    events : sequence of EventRecord
        Processed records (see :func:`preprocess`).
    order : int, optional
        Model order; selected by :func:`select_order` when omitted.
    L : int, optional
        Hankel columns per event (default ``floor(N/2)``).
    force : bool
        Accept an order beyond the numerical rank (``σ_n/σ_1 < 1e-12``)
        with a warning instead of an error.  The spurious states then carry
        negligible residues; the dominant eigenvalues are unaffected.

    Raises
    ------
    ERAError
        On inconsistent events, too-short records, or an order beyond the
        numerical rank.
    """
    events = list(events)
    if not events:
        raise ERAError("at least one event is required")
    for e in events:
        if e.markov is None:
            raise ERAError("events must be preprocessed before realization")
    Ts = events[0].Ts
    if any(abs(e.Ts - Ts) > 1e-12 * Ts for e in events):
        raise ERAError("events have mismatched sample periods")
    hp = hankel_pair([e.markov for e in events], L)
    U, s, Vt = np.linalg.svd(hp.H1, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        K = events[0].n_outputs
        D = np.column_stack([e.markov[:, 0] for e in events])
        ssd = StateSpace(np.zeros((0, 0)), np.zeros((0, len(events))), np.zeros((K, 0)), D, dt=Ts)
        return ERAResult(ssd, s, 0, hp.L, events)
    n = select_order(s, select_tol) if order is None else int(order)
    if n < 1:
        raise ERAError("order must be at least 1")
    if n > min(hp.block_rows, hp.L):
        raise ERAError(f"order {n} needs N-L >= n and L >= n (have {hp.block_rows}, {hp.L})")
    if s[n - 1] / s[0] < RANK_TOL:
        msg = (f"order {n} exceeds the numerical rank (sigma_n/sigma_1 = "
               f"{s[n - 1] / s[0]:.2e}); try order {select_order(s, select_tol)}")
        if not force:
            raise ERAError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    Un, sn, Vn = U[:, :n], s[:n], Vt[:n].T
    rs = np.sqrt(sn)
    A = (Un.T @ hp.H2 @ Vn) / rs[:, None] / rs[None, :]
    Cm = (Un * rs)[: hp.K]
    ctrb = rs[:, None] * Vn.T                      # S^{1/2} V^T, n x (E*L)
    B = np.column_stack([ctrb[:, i * hp.L] for i in range(len(events))])
    D = np.column_stack([e.markov[:, 0] for e in events])
    ssd = StateSpace(A, B, Cm, D, dt=Ts)
    return ERAResult(ssd, s, n, hp.L, events)


def discrete_to_continuous(ssd: StateSpace) -> StateSpace:
    """Inverse ZOH via the eigenbasis: ``λ_c = ln(λ_d)/Ts``,
    ``B_c = A_c (A_d - I)^{-1} B_d``.

    Eigenvalues on the negative real axis have no unique continuous
    counterpart; they trigger a warning (principal logarithm used).
    """
    if not ssd.is_discrete:
        raise ValueError("model is already continuous")
    Ts = ssd.dt
    n = ssd.n_states
    if n == 0:
        return StateSpace(ssd.A, ssd.B, ssd.C, ssd.D)
    lam, V = np.linalg.eig(ssd.A)
    if np.any((np.abs(lam.imag) < 1e-12) & (lam.real < 0)):
        warnings.warn("discrete eigenvalue on the negative real axis: continuous "
                      "mapping is ambiguous (aliasing)", RuntimeWarning, stacklevel=2)
    if np.any(lam == 0):
        raise ERAError("discrete eigenvalue at the origin has no continuous counterpart")
    lc = np.log(lam.astype(complex)) / Ts
    Ac = (V @ np.diag(lc) @ np.linalg.inv(V)).real
    Bc = np.linalg.solve((ssd.A - np.eye(n)).T, Ac.T).T @ ssd.B
    return StateSpace(Ac, Bc, ssd.C, ssd.D)


def _cancel_origin(F: RationalFunction, tol: float = ORIGIN_POLE_TOL) -> RationalFunction:
    """Multiply by ``s`` and drop the step-induced pole near the origin."""
    poles = F.poles()
    near = poles[np.abs(poles) < tol]
    if near.size == 0:
        return F * RationalFunction(Polynomial([0.0, 1.0]))
    keep = np.delete(poles, int(np.argmin(np.abs(poles))))
    log.info("cancelled near-origin pole %.3e from step realization", abs(near).min())
    den = Polynomial.from_roots(keep, F.den.lead)
    if not F.is_complex:
        den = Polynomial(np.real(den.coeffs))
    return RationalFunction(F.num, den)


def admittance_from_steps(events: Sequence[EventRecord], order: int | None = None,
                          L: int | None = None, force: bool = False) -> tuple[TFMatrix, ERAResult]:
    """Identify the 2x2 dq admittance from two step experiments.

    Event ``i`` perturbs voltage axis ``channel_i``; the outputs are the
    injected currents.  With differenced data the realized model ``G``
    maps voltage to current directly and ``Y = -G``; otherwise the step
    model is multiplied by ``s`` and its origin pole removed.

    Returns
    -------
    Y : TFMatrix
        Injection-positive 2x2 admittance.
    result : ERAResult
    """
    events = list(events)
    if len(events) != 2:
        raise ERAError("two events required for 2×2 identification")
    if sorted(e.channel for e in events) != [0, 1]:
        raise ERAError("events must perturb input channels 0 and 1 once each")
    if events[0].p != events[1].p or abs(events[0].Ts - events[1].Ts) > 1e-12 * events[0].Ts:
        raise ERAError("events have mismatched Ts or p")
    if any(e.n_outputs != 2 for e in events):
        raise ERAError("2x2 identification needs two output channels")
    events.sort(key=lambda e: e.channel)
    res = era_realize(events, order, L, force)
    if res.order == 0:
        return TFMatrix.from_constant(-res.ssd.D), res
    ssc = discrete_to_continuous(res.ssd)
    G = ss_to_admittance(ssc).scale(-1.0)          # C (sI-A)^{-1} B + D
    if not all(e.differenced for e in events):
        G = G.map(_cancel_origin)
    return G.scale(-1.0), res


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def save_event(csv_path: str | Path, record: EventRecord, meta_path: str | Path | None = None) -> Path:
    """Write a raw record as ``t,<channels>`` CSV plus a JSON sidecar."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    t = (np.arange(record.y.shape[1]) - record.pre) * record.Ts
    write_timeseries_csv(csv_path, t, record.y.T, record.names)
    meta = {"channel": record.channel, "p": record.p, "Ts": record.Ts,
            "pre": record.pre, "names": list(record.names),
            "scales": None if record.scales is None else [float(x) for x in record.scales]}
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta_path


def load_event(csv_path: str | Path, meta_path: str | Path | None = None) -> tuple[EventRecord, list | None]:
    """Read a record written by :func:`save_event`.

    Returns the raw record and the scale factors from the sidecar (or
    ``None``), ready for :func:`preprocess`.
    """
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
    meta = json.loads(meta_path.read_text())
    unknown = set(meta) - {"channel", "p", "Ts", "pre", "names", "scales"}
    if unknown:
        raise ERAError(f"{meta_path}: unknown metadata keys {sorted(unknown)}")
    t, y, names = read_timeseries_csv(csv_path)
    Ts = float(meta.get("Ts", t[1] - t[0]))
    rec = EventRecord(channel=int(meta["channel"]), p=float(meta["p"]), Ts=Ts, y=y.T,
                      pre=int(meta.get("pre", 0)), names=meta.get("names", names))
    return rec, meta.get("scales")


__all__ = [
    "EventRecord", "HankelPair", "ERAResult", "ERAError", "preprocess", "hankel_pair",
    "select_order", "era_realize", "discrete_to_continuous", "admittance_from_steps",
    "save_event", "load_event",
]
