"""Network assembly: power flow, Kron reduction, dq expansion, aggregation.

The small-signal nodal equation of the network seen from its source buses
is ``(Y_g + Y_red) v = 0``, with ``Y_g`` the block-diagonal matrix of
source admittances and ``Y_red`` the dq expansion of the Kron-reduced
passive network.  System eigenvalues are the zeros of ``det(Y(s))``.

Buses flagged ``slack`` without a source are *infinite buses*: they fix the
reference in the power flow and are grounded (zero voltage perturbation)
in the small-signal model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .frames import OMEGA0, AdmittanceBlock, static_to_dq
from .poly_tf import (Polynomial, RationalFunction, TFMatrix, det_roots,
                      tf_from_samples)

log = logging.getLogger(__name__)

#: Power-flow iteration limit and mismatch tolerance (pu).
PF_MAX_ITER = 50
PF_TOL = 1e-10
#: Operating-point agreement demanded by :func:`assemble_total` (pu, rad).
OP_GUARD_TOL = 1e-4


class PowerFlowError(RuntimeError):
    """Newton power flow did not converge."""


class FrameMismatchError(ValueError):
    """A source block is not expressed in the system frame."""


class OperatingPointMismatchError(ValueError):
    """A source block was calibrated at a condition the power flow rejects."""


class SingularBlockError(np.linalg.LinAlgError):
    """Kron reduction hit a singular eliminated block."""


# ---------------------------------------------------------------------------
# Case description
# ---------------------------------------------------------------------------


@dataclass
class Bus:
    """Network bus.

    Attributes
    ----------
    id : hashable
    V : float
        Voltage magnitude set-point (slack and source buses).
    angle : float
        Voltage angle (rad) of a slack bus.
    slack : bool
        Reference bus.  Without a source it is an infinite bus.
    """

    id: Any
    V: float = 1.0
    angle: float = 0.0
    slack: bool = False


@dataclass
class Branch:
    """Series branch with optional line charging and series compensation.

    ``B`` is the total charging susceptance (split equally between the
    ends); ``comp`` is the series-capacitor fraction, ``Xc = comp * X``.
    """

    from_bus: Any
    to_bus: Any
    R: float
    X: float
    B: float = 0.0
    comp: float = 0.0

    def series_impedance(self) -> complex:
        return complex(self.R, self.X * (1.0 - self.comp))


@dataclass
class Load:
    """Load consuming ``P + jQ`` at the solved voltage; constant impedance
    (``conj(S)/|V|^2``) for small-signal analysis."""

    bus: Any
    P: float
    Q: float = 0.0


@dataclass
class Source:
    """Source component attached to a bus.

    Attributes
    ----------
    id : str
    bus : hashable
    kind : str
        ``generator``, ``torsional-generator``, ``dfig``, ``vsc-reference``
        or ``measured-admittance-file``.
    P, V : float
        Dispatch (system base) for PV buses; ignored on the slack bus.
    params : dict
        Component parameters (kind-specific).
    mva : float, optional
        Machine base (defaults to the system base).
    """

    id: str
    bus: Any
    kind: str = "generator"
    P: float = 0.0
    V: float = 1.0
    params: dict = field(default_factory=dict)
    mva: float | None = None


@dataclass
class NetworkCase:
    """Everything needed to solve and assemble a network."""

    buses: list
    branches: list
    loads: list = field(default_factory=list)
    sources: list = field(default_factory=list)
    omega0: float = OMEGA0
    base_mva: float = 100.0

    def bus_index(self) -> dict:
        return {b.id: k for k, b in enumerate(self.buses)}

    def validate(self) -> None:
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bus ids")
        idx = self.bus_index()
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in idx:
                    raise ValueError(f"branch references unknown bus {end!r}")
        for ld in self.loads:
            if ld.bus not in idx:
                raise ValueError(f"load references unknown bus {ld.bus!r}")
        seen = {}
        for src in self.sources:
            if src.bus not in idx:
                raise ValueError(f"source {src.id!r} references unknown bus {src.bus!r}")
            if src.bus in seen:
                raise ValueError(f"bus {src.bus!r} hosts more than one source "
                                 f"({seen[src.bus]!r}, {src.id!r})")
            seen[src.bus] = src.id
        if sum(b.slack for b in self.buses) != 1:
            raise ValueError("exactly one slack bus is required")
        # connectivity
        adj = {k: set() for k in range(len(self.buses))}
        for br in self.branches:
            a, b = idx[br.from_bus], idx[br.to_bus]
            adj[a].add(b); adj[b].add(a)
        stack, seen_b = [0], {0}
        while stack:
            k = stack.pop()
            for j in adj[k] - seen_b:
                seen_b.add(j); stack.append(j)
        if len(seen_b) != len(self.buses):
            raise ValueError("network graph is not connected")

    def source_buses(self) -> list:
        return [s.bus for s in self.sources]

    def infinite_buses(self) -> list:
        src = set(self.source_buses())
        return [b.id for b in self.buses if b.slack and b.id not in src]


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------


def build_ybus(case: NetworkCase, include_loads: bool = False,
               V: np.ndarray | None = None) -> np.ndarray:
    """Complex bus admittance matrix at nominal frequency.

    Series compensation reduces the branch reactance to ``X (1 - comp)``.
    With ``include_loads`` the loads are folded in as constant admittances
    ``conj(S)/|V|^2`` at voltages ``V`` (unity if not given).
    """
    idx = case.bus_index()
    n = len(case.buses)
    Y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        a, b = idx[br.from_bus], idx[br.to_bus]
        y = 1.0 / br.series_impedance()
        ysh = 0.5j * br.B
        Y[a, a] += y + ysh
        Y[b, b] += y + ysh
        Y[a, b] -= y
        Y[b, a] -= y
    if include_loads:
        for ld in case.loads:
            k = idx[ld.bus]
            vm = 1.0 if V is None else abs(V[k])
            Y[k, k] += np.conj(complex(ld.P, ld.Q)) / vm**2
    return Y


@dataclass
class PowerFlowResult:
    """Solved steady state.

    Attributes
    ----------
    V : ndarray
        Complex bus voltages in case bus order.
    S : ndarray
        Net complex injections (sources minus loads) per bus.
    source_S : dict
        Complex power delivered by each source (by source id).
    iterations : int
    residual : float
    """

    V: np.ndarray
    S: np.ndarray
    source_S: dict
    bus_ids: list
    iterations: int
    residual: float

    def voltage(self, bus) -> complex:
        return complex(self.V[self.bus_ids.index(bus)])


def power_flow(case: NetworkCase, tol: float = PF_TOL,
               max_iter: int = PF_MAX_ITER) -> PowerFlowResult:
    """Newton-Raphson (polar) power flow from a flat start.

    Source buses are PV (``P``, ``V`` from the source), the slack bus holds
    ``V∠angle``; all other buses are PQ with their loads.

    Raises
    ------
    PowerFlowError
        If the mismatch exceeds ``tol`` after ``max_iter`` iterations.
    """
    case.validate()
    idx = case.bus_index()
    n = len(case.buses)
    Y = build_ybus(case)
    Psp = np.zeros(n)
    Qsp = np.zeros(n)
    for ld in case.loads:
        Psp[idx[ld.bus]] -= ld.P
        Qsp[idx[ld.bus]] -= ld.Q
    Vm = np.ones(n)
    Va = np.zeros(n)
    kind = ["pq"] * n
    for b in case.buses:
        k = idx[b.id]
        if b.slack:
            kind[k] = "slack"
            Vm[k] = b.V
            Va[k] = b.angle
    for src in case.sources:
        k = idx[src.bus]
        if kind[k] != "slack":
            kind[k] = "pv"
            Psp[k] += src.P
        Vm[k] = src.V if kind[k] == "pv" else Vm[k]
    pv = [k for k in range(n) if kind[k] == "pv"]
    pq = [k for k in range(n) if kind[k] == "pq"]
    pvpq = pv + pq
    Va[pvpq] = Va[[k for k in range(n) if kind[k] == "slack"][0]]

    def mismatch(V):
        S = V * np.conj(Y @ V)
        return np.r_[Psp[pvpq] - S.real[pvpq], Qsp[pq] - S.imag[pq]], S

    V = Vm * np.exp(1j * Va)
    F, S = mismatch(V)
    it = 0
    while np.max(np.abs(F), initial=0.0) > tol:
        if it >= max_iter:
            raise PowerFlowError(
                f"power flow diverged after {max_iter} iterations "
                f"(max mismatch {np.max(np.abs(F)):.3e} pu)")
        I = Y @ V
        dS_dVa = 1j * np.diag(V) @ np.conj(np.diag(I) - Y @ np.diag(V))
        dS_dVm = np.diag(V) @ np.conj(Y @ np.diag(V / np.abs(V))) + \
            np.conj(np.diag(I)) @ np.diag(V / np.abs(V))
        J = np.block([
            [dS_dVa.real[np.ix_(pvpq, pvpq)], dS_dVm.real[np.ix_(pvpq, pq)]],
            [dS_dVa.imag[np.ix_(pq, pvpq)], dS_dVm.imag[np.ix_(pq, pq)]],
        ])
        try:
            dx = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(f"singular power-flow Jacobian: {exc}") from None
        Va[pvpq] += dx[: len(pvpq)]
        Vm[pq] += dx[len(pvpq):]
        V = Vm * np.exp(1j * Va)
        F, S = mismatch(V)
        it += 1
        if not np.all(np.isfinite(F)):
            raise PowerFlowError("power flow diverged (non-finite mismatch)")
    S = V * np.conj(Y @ V)
    source_S = {}
    for src in case.sources:
        k = idx[src.bus]
        load = sum(complex(ld.P, ld.Q) for ld in case.loads if ld.bus == src.bus)
        source_S[src.id] = complex(S[k] + load)
    return PowerFlowResult(V=V, S=S, source_S=source_S, bus_ids=[b.id for b in case.buses],
                           iterations=it, residual=float(np.max(np.abs(F), initial=0.0)))


def internal_voltage(V: complex, S: complex, Xg: float) -> tuple[float, float]:
    """``(E, δ)`` from ``E∠δ = V + j Xg I``, ``I = conj(S / V)``."""
    Ein = V + 1j * Xg * np.conj(S / V)
    return float(abs(Ein)), float(np.angle(Ein))


# ---------------------------------------------------------------------------
# Reduction and dq expansion
# ---------------------------------------------------------------------------


def kron_reduce(Y: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Schur complement ``Y_kk - Y_ke Y_ee^{-1} Y_ek`` onto the ``keep`` buses.

    The eliminated block is factorised once (single block elimination).

    Raises
    ------
    SingularBlockError
        If the eliminated block is singular.
    """
    Y = np.asarray(Y)
    n = Y.shape[0]
    keep = list(keep)
    elim = [k for k in range(n) if k not in keep]
    if not elim:
        return Y[np.ix_(keep, keep)].copy()
    Yee = Y[np.ix_(elim, elim)]
    if np.linalg.cond(Yee) > 1e14:
        raise SingularBlockError("singular eliminated block in Kron reduction")
    try:
        X = np.linalg.solve(Yee, Y[np.ix_(elim, keep)])
    except np.linalg.LinAlgError:
        raise SingularBlockError("singular eliminated block in Kron reduction") from None
    return Y[np.ix_(keep, keep)] - Y[np.ix_(keep, elim)] @ X


def expand_dq_array(Yc: np.ndarray) -> np.ndarray:
    """Replace each complex entry ``y`` by ``[[Re y, -Im y], [Im y, Re y]]``."""
    Yc = np.atleast_2d(np.asarray(Yc, dtype=complex))
    n, m = Yc.shape
    out = np.zeros((2 * n, 2 * m))
    out[0::2, 0::2] = Yc.real
    out[0::2, 1::2] = -Yc.imag
    out[1::2, 0::2] = Yc.imag
    out[1::2, 1::2] = Yc.real
    return out


def expand_dq(Yc: np.ndarray) -> TFMatrix:
    """dq expansion of a complex matrix as a constant real TFMatrix."""
    return TFMatrix.from_constant(expand_dq_array(Yc))


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


@dataclass
class AssembledSystem:
    """Output of :func:`assemble_total`.

    Attributes
    ----------
    Y : TFMatrix
        Total admittance; rows/cols ordered ``[x, y]`` per bus in
        ``bus_order``.
    bus_order : list
    Y_red : ndarray or None
        Kron-reduced complex network matrix (quasi-static mode).
    pf : PowerFlowResult
    blocks : list of AdmittanceBlock
    mode : str
    Y_net : TFMatrix or None
        Network part alone (no source blocks), same ordering as ``Y``.
    """

    Y: TFMatrix
    bus_order: list
    Y_red: np.ndarray | None
    pf: PowerFlowResult
    blocks: list
    mode: str = "quasistatic"
    Y_net: TFMatrix | None = None

    def block_index(self, bus) -> int:
        return self.bus_order.index(bus)

    def without_source(self, k: int) -> TFMatrix:
        """Total admittance with the ``k``-th source block left out.

        Built by adding the remaining blocks to the network part, so no
        cancellation of the removed block's poles is needed.
        """
        if self.Y_net is None:
            return self.Y.with_block(2 * k, 2 * k, self.blocks[k].Y.scale(-1.0))
        Y = self.Y_net
        for j, blk in enumerate(self.blocks):
            if j != k:
                Y = Y.with_block(2 * j, 2 * j, blk.Y)
        return Y


def check_operating_point(block: AdmittanceBlock, pf: PowerFlowResult, source_id: str,
                          tol: float = OP_GUARD_TOL) -> None:
    """Compare a block's calibration condition with the power flow.

    Raises
    ------
    OperatingPointMismatchError
        Naming the first quantity (``P``, ``Q``, ``V``, ``theta``) that
        differs by more than ``tol``.
    """
    op = block.operating_point
    if not op:
        return
    V = pf.voltage(block.bus)
    S = pf.source_S[source_id]
    ref = {"P": S.real, "Q": S.imag, "V": abs(V), "theta": float(np.angle(V))}
    for key in ("P", "Q", "V", "theta"):
        if key not in op:
            continue
        diff = op[key] - ref[key]
        if key == "theta":
            diff = (diff + np.pi) % (2 * np.pi) - np.pi
        if abs(diff) > tol:
            raise OperatingPointMismatchError(
                f"source {source_id!r} ({block.label or 'block'}) at bus {block.bus!r} was "
                f"calibrated at {key}={op[key]:.6g} but the power flow gives "
                f"{key}={ref[key]:.6g} (|diff| {abs(diff):.3e} > {tol:g})")


def _dq_shunt(G: float, B: float, omega0: float) -> TFMatrix:
    """Dynamic dq model of a constant shunt ``G + jB`` (capacitive or inductive)."""
    out = TFMatrix.from_constant(np.eye(2) * G)
    if B > 0:
        C = B / omega0
        out = out + static_to_dq(RationalFunction(Polynomial([0.0, C])), omega0)
    elif B < 0:
        L = -1.0 / (omega0 * B)
        out = out + static_to_dq(RationalFunction(Polynomial([1.0]), Polynomial([0.0, L])), omega0)
    return out


def dynamic_branch_matrix(case: NetworkCase, pf: PowerFlowResult, keep: Sequence) -> TFMatrix:
    """Full nodal dq admittance ``Y(s)`` with R-L-C branch dynamics.

    Branches become series R-L-C blocks (capacitor from ``comp``), line
    charging becomes shunt capacitors, loads become constant conductance
    in parallel with an inductance or capacitance.  Buses not in ``keep``
    (infinite buses) are grounded.
    """
    w0 = case.omega0
    pos = {b: k for k, b in enumerate(keep)}
    n = len(keep)
    Y = TFMatrix.zeros(2 * n, 2 * n)
    for br in case.branches:
        L = br.X / w0
        C = 1.0 / (w0 * br.comp * br.X) if br.comp > 0 else None
        if C is None:
            F = RationalFunction(Polynomial([1.0]), Polynomial([br.R, L]))
        else:
            F = RationalFunction(Polynomial([0.0, C]), Polynomial([1.0, br.R * C, L * C]))
        yb = static_to_dq(F, w0)
        ends = [pos.get(br.from_bus), pos.get(br.to_bus)]
        for a in ends:
            if a is not None:
                Y = Y.with_block(2 * a, 2 * a, yb)
        if None not in ends:
            a, b = ends
            Y = Y.with_block(2 * a, 2 * b, yb.scale(-1.0))
            Y = Y.with_block(2 * b, 2 * a, yb.scale(-1.0))
        if br.B:
            sh = _dq_shunt(0.0, br.B / 2, w0)
            for a in ends:
                if a is not None:
                    Y = Y.with_block(2 * a, 2 * a, sh)
    for ld in case.loads:
        if ld.bus not in pos:
            continue
        y = np.conj(complex(ld.P, ld.Q)) / abs(pf.voltage(ld.bus)) ** 2
        a = pos[ld.bus]
        Y = Y.with_block(2 * a, 2 * a, _dq_shunt(y.real, y.imag, w0))
    return Y


def assemble_total(case: NetworkCase, blocks: Sequence[AdmittanceBlock],
                   pf: PowerFlowResult | None = None, mode: str = "quasistatic",
                   enforce_frames: bool = True, check_op: bool = True,
                   op_tol: float = OP_GUARD_TOL) -> AssembledSystem:
    """Total admittance ``Y(s) = Y_g + Y_red`` seen from the source buses.

    Parameters
    ----------
    case : NetworkCase
    blocks : sequence of AdmittanceBlock
        One per source, in ``case.sources`` order, injection-positive.
    pf : PowerFlowResult, optional
        Solved steady state (computed if omitted).
    mode : {"quasistatic", "dynamic-branches"}
        Constant Kron-reduced network, or full nodal ``Y(s)`` with R-L-C
        branch dynamics (no reduction, all non-infinite buses kept).
    enforce_frames : bool
        Reject blocks not in the system frame.  Disabling it reproduces the
        per-component-frame mis-assembly for study purposes only.
    check_op : bool
        Reject blocks calibrated at conditions differing from the power
        flow by more than ``op_tol`` in P, Q, V or θ.

    Raises
    ------
    FrameMismatchError, OperatingPointMismatchError
    """
    if len(blocks) != len(case.sources):
        raise ValueError(f"{len(blocks)} blocks for {len(case.sources)} sources")
    if mode not in ("quasistatic", "dynamic-branches"):
        raise ValueError(f"unknown assembly mode {mode!r}")
    pf = pf or power_flow(case)
    for src, blk in zip(case.sources, blocks):
        if blk.Y.shape != (2, 2):
            raise ValueError(f"source {src.id!r}: assembly needs a 2x2 dq block, got {blk.Y.shape}")
        if blk.bus is not None and blk.bus != src.bus:
            raise ValueError(f"block for source {src.id!r} is tagged with bus {blk.bus!r}")
        if not blk.injection_positive:
            raise ValueError(f"block for source {src.id!r} is not injection-positive")
        if enforce_frames and blk.frame.kind != "system":
            raise FrameMismatchError(
                f"source {src.id!r} block {blk.label!r} at bus {src.bus!r} is in a "
                f"{blk.frame.kind!r} frame (angle {blk.frame.angle:.6g} rad); "
                "rotate it to the system frame before assembly")
        if check_op:
            from dataclasses import replace
            check_operating_point(replace(blk, bus=src.bus), pf, src.id, op_tol)
    inf = set(case.infinite_buses())
    if mode == "quasistatic":
        bus_order = case.source_buses()
        Yl = build_ybus(case, include_loads=True, V=pf.V)
        live = [k for k, b in enumerate(case.buses) if b.id not in inf]
        Yl = Yl[np.ix_(live, live)]
        live_ids = [case.buses[k].id for k in live]
        keep = [live_ids.index(b) for b in bus_order]
        Yred = kron_reduce(Yl, keep)
        Y = expand_dq(Yred)
    else:
        src_b = case.source_buses()
        others = [b.id for b in case.buses if b.id not in inf and b.id not in src_b]
        bus_order = src_b + others
        Yred = None
        Y = dynamic_branch_matrix(case, pf, bus_order)
    Y_net = Y
    for k, blk in enumerate(blocks):
        Y = Y.with_block(2 * k, 2 * k, blk.Y)
    return AssembledSystem(Y=Y, bus_order=bus_order, Y_red=Yred, pf=pf, blocks=list(blocks),
                           mode=mode, Y_net=Y_net)


# ---------------------------------------------------------------------------
# Thevenin aggregation
# ---------------------------------------------------------------------------


def _block_slices(n: int, k: int, size: int = 2):
    kk = list(range(size * k, size * k + size))
    rr = [i for i in range(n) if i not in kk]
    return kk, rr


def thevenin_at(Y: np.ndarray, k: int, size: int = 2) -> np.ndarray:
    """Numeric Thevenin impedance: the ``k``-th diagonal block of ``Y^{-1}``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``Y`` is singular.
    """
    Y = np.asarray(Y)
    if np.linalg.cond(Y) > 1e15:
        raise np.linalg.LinAlgError("admittance matrix is singular at the requested point")
    kk, rr = _block_slices(Y.shape[0], k, size)
    Ykk = Y[np.ix_(kk, kk)]
    if not rr:
        return np.linalg.inv(Ykk)
    S = Ykk - Y[np.ix_(kk, rr)] @ np.linalg.solve(Y[np.ix_(rr, rr)], Y[np.ix_(rr, kk)])
    return np.linalg.inv(S)


def schur_complement(Y: TFMatrix, k: int, size: int = 2, exclude: TFMatrix | None = None) -> TFMatrix:
    """Symbolic ``Z_kk^{-1} = Y_kk - Y_kr Y_rr^{-1} Y_rk`` as a TFMatrix.

    Parameters
    ----------
    Y : TFMatrix
        Total (or network) admittance.
    k : int
        Block index.
    exclude : TFMatrix, optional
        A block subtracted from ``Y_kk`` first (e.g. the source's own
        admittance, giving the network seen by that source).

    The entries are reconstructed from point evaluations: their poles lie
    among the entry poles of ``Y`` and the zeros of ``det(Y_rr)``.
    """
    n = Y.shape[0]
    kk, rr = _block_slices(n, k, size)
    Ykk = Y.submatrix(kk, kk)
    if exclude is not None:
        Ykk = Ykk - exclude
    if not rr:
        return Ykk
    Yrr = Y.submatrix(rr, rr)
    Ykr = Y.submatrix(kk, rr)
    Yrk = Y.submatrix(rr, kk)
    cand = [Y.candidate_poles()]
    try:
        cand.append(det_roots(Yrr).roots)
    except (ValueError, np.linalg.LinAlgError):
        pass
    cand = np.concatenate(cand) if cand else np.zeros(0, complex)

    def evalm(s):
        a = Ykk.evaluate_many(s)
        b = Ykr.evaluate_many(s)
        c = Yrr.evaluate_many(s)
        d = Yrk.evaluate_many(s)
        return a - b @ np.linalg.solve(c, d)

    return tf_from_samples(evalm, (size, size), cand, excess=2, real=not Y.is_complex)


def thevenin(Y, k: int, s: complex | None = None, size: int = 2):
    """Thevenin impedance ``Z_kk`` (k-th diagonal block of ``Y^{-1}``).

    * complex/real ndarray ``Y`` -> numeric block;
    * TFMatrix with ``s`` given -> numeric block at ``s``;
    * TFMatrix without ``s`` -> symbolic 2x2 TFMatrix.
    """
    if isinstance(Y, TFMatrix):
        if s is not None:
            return thevenin_at(Y(s), k, size)
        Sk = schur_complement(Y, k, size)
        cand = [Sk.candidate_poles()]
        try:
            cand.append(det_roots(Sk).roots)
        except (ValueError, np.linalg.LinAlgError):
            pass
        cand = np.concatenate(cand)

        def evalm(z):
            return np.linalg.inv(Sk.evaluate_many(z))

        return tf_from_samples(evalm, (size, size), cand, excess=2, real=not Y.is_complex)
    return thevenin_at(np.asarray(Y), k, size)


def aggregate_at_bus(system: AssembledSystem, k: int) -> TFMatrix:
    """``Y_gk + Z_kk^{-1}`` where ``Z_kk`` is the Thevenin impedance of the
    rest of the system (network plus all other sources) seen from bus k."""
    Yg = system.blocks[k].Y
    Zinv = schur_complement(system.without_source(k), k)
    return Yg + Zinv


__all__ = [
    "Bus", "Branch", "Load", "Source", "NetworkCase", "PowerFlowResult",
    "PowerFlowError", "FrameMismatchError", "OperatingPointMismatchError",
    "SingularBlockError", "AssembledSystem", "build_ybus", "power_flow",
    "internal_voltage", "kron_reduce", "expand_dq", "expand_dq_array",
    "assemble_total", "check_operating_point", "dynamic_branch_matrix",
    "thevenin", "thevenin_at", "schur_complement", "aggregate_at_bus",
]
