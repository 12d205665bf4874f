"""Closed-form admittance builders for grid components.

All dq blocks follow the convention of :mod:`gridadmit.statespace`
(``Y = -C(sI-A)^{-1}B - D``; terminal voltages in, injected currents out).
Passive branches are returned as true admittances (inverse impedances).

Contents
--------
* classical (second-order) synchronous generator;
* multi-mass torsional generator (constant voltage behind reactance);
* series R-L and R-L-C branches in the dq frame;
* static-frame DFIG induction-generator-effect model with its
  series-compensated line;
* a reference nonlinear grid-following VSC model (for the linearization
  path), with every structural assumption documented on the builder.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .frames import OMEGA0, AdmittanceBlock, FrameTag, static_to_dq
from .poly_tf import Polynomial, RationalFunction, TFMatrix
from .statespace import NonlinearModel, StateSpace, ss_to_admittance

log = logging.getLogger(__name__)

#: Tolerance of the generator operating-point consistency check (pu current).
OP_CONSISTENCY_TOL = 1e-6


class OperatingPointError(ValueError):
    """An operating point is inconsistent with the component parameters."""


@dataclass(frozen=True)
class GeneratorParams:
    """Classical generator data (per unit on the machine base unless scaled).

    Attributes
    ----------
    H : float
        Inertia constant (s).
    D1 : float
        Damping coefficient (pu torque per pu speed).
    Xg : float
        Transient reactance (pu).
    E : float, optional
        Internal voltage magnitude; derived from the operating point if None.
    omega0 : float
        Nominal angular frequency (rad/s).
    """

    H: float
    D1: float
    Xg: float
    E: float | None = None
    omega0: float = OMEGA0

    def __post_init__(self):
        if not self.H > 0:
            raise ValueError("H must be positive")
        if not self.Xg > 0:
            raise ValueError("Xg must be positive")
        if self.E is not None and not self.E > 0:
            raise ValueError("E must be positive")


@dataclass(frozen=True)
class OperatingPoint:
    """Terminal condition of a source, expressed in a declared frame.

    Attributes
    ----------
    Vx, Vy : float
        Terminal voltage components.
    delta : float
        Rotor (internal voltage) angle in the same frame (rad).
    E : float
        Internal voltage magnitude.
    P, Q : float, optional
        Dispatch used to build the point (checked for consistency).
    """

    Vx: float
    Vy: float
    delta: float = 0.0
    E: float = 1.0
    P: float | None = None
    Q: float | None = None

    def __post_init__(self):
        if not np.hypot(self.Vx, self.Vy) > 0:
            raise ValueError("terminal voltage magnitude must be positive")

    @property
    def V(self) -> complex:
        return complex(self.Vx, self.Vy)

    @property
    def theta_v(self) -> float:
        return float(np.angle(self.V))

    @classmethod
    def from_dispatch(cls, V: complex, S: complex, Xg: float) -> "OperatingPoint":
        """Internal voltage from ``E∠δ = V + j Xg I`` with ``I = conj(S/V)``."""
        V = complex(V)
        I = np.conj(complex(S) / V)
        Ein = V + 1j * Xg * I
        return cls(V.real, V.imag, float(np.angle(Ein)), float(abs(Ein)),
                   float(np.real(S)), float(np.imag(S)))

    def rotated(self, dtheta: float) -> "OperatingPoint":
        """Same physical point seen from a frame leading by ``dtheta``."""
        V = self.V * np.exp(-1j * dtheta)
        return OperatingPoint(V.real, V.imag, self.delta - dtheta, self.E, self.P, self.Q)

    def as_dict(self) -> dict:
        d = {"V": abs(self.V), "theta": self.theta_v}
        if self.P is not None:
            d["P"] = self.P
        if self.Q is not None:
            d["Q"] = self.Q
        return d


def _system_base_op(op: OperatingPoint, base_ratio: float) -> dict:
    """Operating-point record with the dispatch converted to the system base."""
    d = op.as_dict()
    for key in ("P", "Q"):
        if key in d:
            d[key] *= base_ratio
    return d


def gen_coefficients(E: float, delta: float, Vx: float, Vy: float, Xg: float):
    """Sensitivities of electric power ``dPe = Tx dVx + Ty dVy + Td dδ``."""
    Tx = E * np.sin(delta) / Xg
    Ty = -E * np.cos(delta) / Xg
    Td = E * (Vx * np.cos(delta) + Vy * np.sin(delta)) / Xg
    return Tx, Ty, Td


def _check_op(gp: GeneratorParams, op: OperatingPoint) -> None:
    if op.P is None or op.Q is None:
        return
    I_model = (op.E * np.exp(1j * op.delta) - op.V) / (1j * gp.Xg)
    I_disp = np.conj(complex(op.P, op.Q) / op.V)
    mis = abs(I_model - I_disp)
    if mis > OP_CONSISTENCY_TOL:
        raise OperatingPointError(
            f"operating point inconsistent with Xg: current mismatch {mis:.3e} pu")


def gen_classical_ss(gp: GeneratorParams, op: OperatingPoint) -> StateSpace:
    """Second-order generator state space (states ``[dδ, dω]``)."""
    _check_op(gp, op)
    E = gp.E if gp.E is not None else op.E
    Tx, Ty, Td = gen_coefficients(E, op.delta, op.Vx, op.Vy, gp.Xg)
    H, D1, w0 = gp.H, gp.D1, gp.omega0
    A = np.array([[0.0, w0], [-Td / (2 * H), -D1 / (2 * H)]])
    B = np.array([[0.0, 0.0], [-Tx / (2 * H), -Ty / (2 * H)]])
    C = np.array([[-Ty, 0.0], [Tx, 0.0]])
    D = np.array([[0.0, -1.0 / gp.Xg], [1.0 / gp.Xg, 0.0]])
    return StateSpace(A, B, C, D)


def gen_classical_admittance(gp: GeneratorParams, op: OperatingPoint, bus=None,
                             frame: FrameTag | None = None, base_ratio: float = 1.0,
                             label: str = "") -> AdmittanceBlock:
    """2x2 dq admittance of the classical generator.

    Parameters
    ----------
    gp, op : GeneratorParams, OperatingPoint
        Parameters and operating point expressed in ``frame``.
    bus : hashable, optional
        Connection bus.
    frame : FrameTag, optional
        Frame of ``op`` (system frame by default).
    base_ratio : float
        Machine-to-system MVA base ratio applied to the admittance.

    Raises
    ------
    OperatingPointError
        If ``op`` carries a dispatch inconsistent with ``E∠δ``.
    """
    Y = ss_to_admittance(gen_classical_ss(gp, op))
    if base_ratio != 1.0:
        Y = Y.scale(base_ratio)
    return AdmittanceBlock(Y, bus=bus, frame=frame or FrameTag.system(),
                           operating_point=_system_base_op(op, base_ratio), label=label or "generator")


# ---------------------------------------------------------------------------
# Torsional generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorsionalParams:
    """Multi-mass shaft with a classical electrical interface.

    Attributes
    ----------
    H, D : sequence of float
        Per-mass inertia (s) and damping (pu).
    K : sequence of float
        Shaft stiffness between consecutive masses (pu torque / rad).
    gen : GeneratorParams
        Electrical data; ``gen.H``/``gen.D1`` are ignored in favour of the
        mass data.
    gen_index : int
        Index of the generator rotor in the mass chain.
    """

    H: Sequence[float]
    D: Sequence[float]
    K: Sequence[float]
    gen: GeneratorParams
    gen_index: int = 0

    def __post_init__(self):
        if len(self.K) != len(self.H) - 1:
            raise ValueError("len(K) must equal len(H) - 1")
        if len(self.D) != len(self.H):
            raise ValueError("len(D) must equal len(H)")
        if any(h <= 0 for h in self.H):
            raise ValueError("all inertias must be positive")
        if not 0 <= self.gen_index < len(self.H):
            raise ValueError("gen_index out of range")


def torsional_gen_ss(tp: TorsionalParams, op: OperatingPoint) -> StateSpace:
    """State space of the mass-spring chain with the electrical interface.

    States are ``[dδ_0, dω_0, dδ_1, dω_1, ...]``; the electrical power acts
    on mass ``gen_index`` exactly as in the single-mass model.
    """
    gp = tp.gen
    _check_op(gp, op)
    E = gp.E if gp.E is not None else op.E
    Tx, Ty, Td = gen_coefficients(E, op.delta, op.Vx, op.Vy, gp.Xg)
    H = np.asarray(tp.H, float)
    Dm = np.asarray(tp.D, float)
    K = np.asarray(tp.K, float)
    n = H.size
    g = tp.gen_index
    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        A[2 * i, 2 * i + 1] = gp.omega0
        A[2 * i + 1, 2 * i + 1] = -Dm[i] / (2 * H[i])
    for k in range(n - 1):
        for a, b in ((k, k + 1), (k + 1, k)):
            A[2 * a + 1, 2 * a] -= K[k] / (2 * H[a])
            A[2 * a + 1, 2 * b] += K[k] / (2 * H[a])
    A[2 * g + 1, 2 * g] -= Td / (2 * H[g])
    B = np.zeros((2 * n, 2))
    B[2 * g + 1] = [-Tx / (2 * H[g]), -Ty / (2 * H[g])]
    C = np.zeros((2, 2 * n))
    C[0, 2 * g] = -Ty
    C[1, 2 * g] = Tx
    D = np.array([[0.0, -1.0 / gp.Xg], [1.0 / gp.Xg, 0.0]])
    return StateSpace(A, B, C, D)


def torsional_gen_admittance(tp: TorsionalParams, op: OperatingPoint, bus=None,
                             frame: FrameTag | None = None, base_ratio: float = 1.0,
                             label: str = "") -> AdmittanceBlock:
    """2x2 dq admittance of a generator with torsional shaft dynamics.

    ``base_ratio`` (machine MVA / system MVA) converts the admittance from
    the machine base, on which the shaft and reactance data are given, to
    the system base used by the network.
    """
    Y = ss_to_admittance(torsional_gen_ss(tp, op))
    if base_ratio != 1.0:
        Y = Y.scale(base_ratio)
    return AdmittanceBlock(Y, bus=bus, frame=frame or FrameTag.system(),
                           operating_point=_system_base_op(op, base_ratio),
                           label=label or "torsional-generator")


# ---------------------------------------------------------------------------
# Passive branches
# ---------------------------------------------------------------------------


def rl_branch_impedance(R: float, L: float, omega0: float = OMEGA0) -> TFMatrix:
    """dq impedance ``[[R+sL, -w0 L], [w0 L, R+sL]]`` of a series R-L branch."""
    zs = Polynomial([R, L])
    return TFMatrix([[zs, -omega0 * L], [omega0 * L, zs]])


def rl_branch_admittance(R: float, L: float, omega0: float = OMEGA0, bus=None,
                         label: str = "") -> AdmittanceBlock:
    """Series R-L branch admittance in the dq frame (inverse of the impedance).

    ``Y = [[R+sL, w0 L], [-w0 L, R+sL]] / ((R+sL)^2 + (w0 L)^2)``.

    Raises
    ------
    ValueError
        If ``R < 0``, ``L < 0`` or ``R = L = 0`` (a short circuit).
    """
    if R < 0 or L < 0:
        raise ValueError("branch R and L must be non-negative")
    if R == 0 and L == 0:
        raise ValueError("short circuit (R = L = 0) has no admittance representation")
    zs = Polynomial([R, L])
    x = omega0 * L
    den = zs * zs + x * x
    Y = TFMatrix([[RationalFunction(zs, den), RationalFunction(Polynomial([x]), den)],
                  [RationalFunction(Polynomial([-x]), den), RationalFunction(zs, den)]])
    return AdmittanceBlock(Y, bus=bus, label=label or "rl-branch")


def series_rlc_static(R: float, L: float, C: float | None) -> RationalFunction:
    """Static-frame admittance ``1/(R + sL + 1/(sC))`` (no capacitor if C is None)."""
    if C is None:
        if R == 0 and L == 0:
            raise ValueError("short circuit (R = L = 0) has no admittance representation")
        return RationalFunction(Polynomial([1.0]), Polynomial([R, L]))
    if not C > 0:
        raise ValueError("capacitance must be positive")
    return RationalFunction(Polynomial([0.0, C]), Polynomial([1.0, R * C, L * C]))


def rlc_branch_admittance(R: float, X: float, Xc: float = 0.0, omega0: float = OMEGA0,
                          bus=None, label: str = "") -> AdmittanceBlock:
    """dq admittance of a series R-L(-C) branch given reactances at ``omega0``."""
    L = X / omega0
    C = 1.0 / (omega0 * Xc) if Xc > 0 else None
    Y = static_to_dq(series_rlc_static(R, L, C), omega0)
    return AdmittanceBlock(Y, bus=bus, label=label or "rlc-branch")


# ---------------------------------------------------------------------------
# DFIG (static frame)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DfigParams:
    """DFIG induction-generator-effect data.

    Attributes
    ----------
    rs, Xls, rr, Xlr : float
        Stator/rotor resistances and leakage reactances (pu).
    omega_m : float
        Rotor speed (pu of ``omega0``).
    R, XL : float
        Line resistance and reactance (pu).
    comp : float
        Series-compensation level, ``Xc = comp * XL``; must lie in (0, 1).
    omega0 : float
        Nominal angular frequency (rad/s).
    """

    rs: float
    Xls: float
    rr: float
    Xlr: float
    omega_m: float
    R: float
    XL: float
    comp: float
    omega0: float = OMEGA0

    def __post_init__(self):
        if min(self.rs, self.rr, self.R) < 0:
            raise ValueError("resistances must be non-negative")
        if min(self.Xls + self.Xlr, self.XL) <= 0:
            raise ValueError("reactances must be positive")
        if not 0 < self.comp < 1:
            raise ValueError(f"compensation level {self.comp} outside (0, 1)")


def dfig_static_admittance(dp: DfigParams) -> tuple[RationalFunction, RationalFunction]:
    """Static-frame admittances ``(Y_DFIG, Y_line)`` with complex coefficients.

    ``Y_DFIG = 1/(r_r/slip + r_s + (L_ls+L_lr) s)`` with
    ``slip = 1 - j w_m / s``, i.e.
    ``Y_DFIG = (s - j w_m) / (r_r s + (r_s + L s)(s - j w_m))``; the
    magnetizing and converter branches are open and the rotor-side
    converter impedance is neglected.  ``Y_line = C s/(L C s^2 + R C s + 1)``
    with ``L = X_L/w0`` and ``C = 1/(w0 comp X_L)``.
    """
    w0 = dp.omega0
    wm = dp.omega_m * w0
    Ls = (dp.Xls + dp.Xlr) / w0
    sm = Polynomial([-1j * wm, 1.0])  # s - j wm
    den = Polynomial([0.0, dp.rr]) + Polynomial([dp.rs, Ls]) * sm
    y_dfig = RationalFunction(sm, den)
    L = dp.XL / w0
    C = 1.0 / (w0 * dp.comp * dp.XL)
    y_line = series_rlc_static(dp.R, L, C)
    return y_dfig, y_line


# ---------------------------------------------------------------------------
# Reference VSC model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VscParams:
    """Grid-following VSC data (per unit, time constants in seconds).

    Attributes
    ----------
    RL, XL : float
        Converter filter (choke) resistance and reactance between the
        converter terminal and the PCC.
    Rg, Xg : float
        Grid-side branch between the PCC and the grid voltage source (used
        by case builders, not by the converter model itself).
    Kpi, Kii : float
        Inner current PI gains.
    Kpo, Kio : float
        Outer PI gains, shared by the dc-voltage and PCC-voltage loops.
    Kp_pll, Ki_pll : float
        Second-order PLL PI gains (output in rad/s).
    tau : float
        Dc-link capacitor time constant (s).
    omega0 : float
        Nominal angular frequency (rad/s).
    """

    RL: float = 0.003
    XL: float = 0.15
    Rg: float = 0.001
    Xg: float = 0.1
    Kpi: float = 0.3
    Kii: float = 5.0
    Kpo: float = 1.0
    Kio: float = 100.0
    Kp_pll: float = 60.0
    Ki_pll: float = 1400.0
    tau: float = 0.0272
    omega0: float = OMEGA0

    def __post_init__(self):
        gains = (self.Kpi, self.Kii, self.Kpo, self.Kio, self.Kp_pll, self.Ki_pll)
        if any(g < 0 for g in gains):
            raise ValueError("controller gains must be non-negative")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.XL > 0:
            raise ValueError("filter reactance must be positive")


VSC_STATES = ("i_x", "i_y", "xi_d", "xi_q", "x_dc", "x_ac", "theta_pll", "x_pll", "v_dc")


def vsc_reference_model(vp: VscParams, op: OperatingPoint) -> NonlinearModel:
    """Ninth-order grid-following VSC model for the linearization path.

    Structure (all quantities per unit, system dq frame rotating at w0):

    * **Filter**: ``(X_L/w0) di/dt = v_c - v - (R_L + j X_L) i`` where ``i``
      is the current injected into the PCC, ``v`` the PCC voltage (model
      input) and ``v_c`` the converter voltage.
    * **PLL**: converter frame angle ``θ`` (relative to the system frame);
      ``v_p = v e^{-jθ}``, ``dθ/dt = K_p,PLL v_pq + x_pll``,
      ``dx_pll/dt = K_i,PLL v_pq``.  The PLL aligns d with the PCC voltage.
    * **Inner current PI** in the PLL frame with PCC-voltage feedforward and
      ``j X_L`` decoupling: ``v_cp = K_pi e + ξ + v_p + j X_L i_p``,
      ``dξ/dt = K_ii e`` with ``e = i_ref - i_p``.
    * **Outer loops** (assumed pairing): the dc-voltage PI commands the
      d-axis (active) current ``i_dref = K_po (v_dc - 1) + x_dc``; the
      PCC-voltage PI commands the q-axis current
      ``i_qref = -(K_po (V_ref - v_pd) + x_ac)`` (negative q-current exports
      reactive power with this sign convention).
    * **Dc link**: ``τ v_dc dv_dc/dt = P_in - Re(v_c conj(i))`` with a
      constant dc-side power ``P_in``.

    The inputs are ``(v_x, v_y)`` and the outputs the injected current
    ``(i_x, i_y)``.  ``P_in`` and ``V_ref`` are calibrated so that ``op``
    (terminal voltage and dispatch ``P``, ``Q``) is an exact equilibrium.
    The block diagram of the original benchmark is only partially
    documented, so this is a *reference* structure; it is not a
    bit-exact reproduction of any published 9th-order model.
    """
    if op.P is None or op.Q is None:
        raise ValueError("VSC operating point needs P and Q")
    w0 = vp.omega0
    Lf = vp.XL / w0
    V0 = op.V
    I0 = np.conj(complex(op.P, op.Q) / V0)
    th0 = float(np.angle(V0))
    rot0 = np.exp(-1j * th0)
    Ip0 = I0 * rot0
    Vp0 = V0 * rot0
    Vc0 = V0 + (vp.RL + 1j * vp.XL) * I0
    Vcp0 = Vc0 * rot0
    # inner PI integrators at equilibrium (e = 0)
    xi0 = Vcp0 - Vp0 - 1j * vp.XL * Ip0
    P_in = float(np.real(Vc0 * np.conj(I0)))
    V_ref = float(Vp0.real)
    x_dc0 = Ip0.real
    x_ac0 = -Ip0.imag
    x0 = np.array([I0.real, I0.imag, xi0.real, xi0.imag, x_dc0, x_ac0, th0, 0.0, 1.0])
    u0 = np.array([V0.real, V0.imag])

    def parts(x, u):
        i = complex(x[0], x[1])
        xi = complex(x[2], x[3])
        x_dc, x_ac, th, x_pll, vdc = x[4:9]
        v = complex(u[0], u[1])
        rot = np.exp(-1j * th)
        vp_ = v * rot
        ip = i * rot
        id_ref = vp.Kpo * (vdc - 1.0) + x_dc
        iq_ref = -(vp.Kpo * (V_ref - vp_.real) + x_ac)
        e = complex(id_ref, iq_ref) - ip
        vcp = vp.Kpi * e + xi + vp_ + 1j * vp.XL * ip
        vc = vcp / rot
        return i, v, vp_, e, vc, vdc, x_pll

    def f(x, u):
        i, v, vp_, e, vc, vdc, x_pll = parts(x, u)
        di = (vc - v - (vp.RL + 1j * vp.XL) * i) / Lf
        dxi = vp.Kii * e
        dx_dc = vp.Kio * (vdc - 1.0)
        dx_ac = vp.Kio * (V_ref - vp_.real)
        dth = vp.Kp_pll * vp_.imag + x_pll
        dx_pll = vp.Ki_pll * vp_.imag
        p_out = float(np.real(vc * np.conj(i)))
        dvdc = (P_in - p_out) / (vp.tau * vdc)
        return np.array([di.real, di.imag, dxi.real, dxi.imag, dx_dc, dx_ac,
                         dth, dx_pll, dvdc])

    def g(x, u):
        return np.array([x[0], x[1]])

    return NonlinearModel(f=f, g=g, state_dim=9, input_dim=2, output_dim=2,
                          x0=x0, u0=u0, state_names=VSC_STATES,
                          input_names=("v_x", "v_y"), output_names=("i_x", "i_y"))


def vsc_admittance(vp: VscParams, op: OperatingPoint, bus=None, label: str = "") -> AdmittanceBlock:
    """Admittance of the reference VSC via numerical linearization."""
    from .statespace import linearize

    ss = linearize(vsc_reference_model(vp, op))
    Y = ss_to_admittance(ss)
    return AdmittanceBlock(Y, bus=bus, operating_point=op.as_dict(), label=label or "vsc")


__all__ = [
    "GeneratorParams", "OperatingPoint", "OperatingPointError", "TorsionalParams",
    "DfigParams", "VscParams", "gen_coefficients", "gen_classical_ss",
    "gen_classical_admittance", "torsional_gen_ss", "torsional_gen_admittance",
    "rl_branch_impedance", "rl_branch_admittance", "series_rlc_static",
    "rlc_branch_admittance", "dfig_static_admittance", "vsc_reference_model",
    "vsc_admittance", "VSC_STATES",
]

