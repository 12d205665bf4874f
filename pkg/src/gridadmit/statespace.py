"""LTI state-space models, admittance conversion, simulation and linearization.

Admittance convention
---------------------
A device model takes terminal-voltage perturbations as inputs and produces
the perturbation of the current it *injects* into its terminal.  With
``dx/dt = A x + B v`` and ``i = C x + D v`` the admittance used for network
assembly is

.. math:: Y(s) = -C (sI - A)^{-1} B - D,

i.e. the shunt admittance seen by the network, so that the nodal equation
of a bus reads ``(Y_source + Y_network) v = 0``.  The minus sign is owned by
:func:`ss_to_admittance`; nothing else in the package negates admittances.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .poly_tf import Polynomial, RationalFunction, TFMatrix, _interp_poly, _trim_rel

log = logging.getLogger(__name__)

#: Equilibrium residual accepted by :func:`linearize`.
EQUILIBRIUM_TOL = 1e-8


@dataclass(frozen=True)
class StateSpace:
    """LTI quadruple ``(A, B, C, D)``; ``dt`` is ``None`` for continuous time.

    Parameters
    ----------
    A, B, C, D : array_like
        System matrices with shapes ``(n, n)``, ``(n, m)``, ``(p, n)``,
        ``(p, m)``.  ``n = 0`` (static gain) is allowed.
    dt : float, optional
        Sample period of a discrete-time model.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float)) if np.size(self.A) else np.zeros((0, 0))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        n = A.shape[0]
        p, m = D.shape
        B = np.asarray(self.B, dtype=float).reshape(n, m)
        C = np.asarray(self.C, dtype=float).reshape(p, n)
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("discrete models need dt > 0")
        for name, arr in (("A", A), ("B", B), ("C", C), ("D", D)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.D.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.D.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.dt is not None

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n_states else np.zeros(0, complex)

    def transfer(self, s: complex) -> np.ndarray:
        """``C (sI - A)^{-1} B + D`` at a single point (``z`` if discrete)."""
        if self.n_states == 0:
            return self.D.astype(complex)
        n = self.n_states
        return self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.B) + self.D

    def admittance_at(self, s: complex) -> np.ndarray:
        """``-C (sI - A)^{-1} B - D`` at a single point."""
        return -self.transfer(s)

    def discretize(self, dt: float) -> "StateSpace":
        """Exact zero-order-hold discretization via the matrix exponential."""
        if self.is_discrete:
            raise ValueError("model is already discrete")
        n, m = self.n_states, self.n_inputs
        M = np.zeros((n + m, n + m))
        M[:n, :n] = self.A
        M[:n, n:] = self.B
        E = scipy.linalg.expm(M * dt)
        return StateSpace(E[:n, :n], E[:n, n:], self.C, self.D, dt=dt)


def ss_to_admittance(ss: StateSpace) -> TFMatrix:
    """Exact rational conversion ``Y(s) = -C(sI-A)^{-1}B - D``.

    Every entry shares the denominator ``a(s) = prod(s - eig(A))``, so the
    poles of every entry are (a subset of) the eigenvalues of ``A``.  The
    numerators ``c_i adj(sI-A) b_j`` are recovered by FFT interpolation of
    ``c_i (sI-A)^{-1} b_j · a(s)`` on a circle of radius equal to the
    geometric-mean eigenvalue magnitude, which avoids the cancellation of
    ``det(sI - A + b c) - det(sI - A)`` formulas.

    Inputs are terminal-voltage perturbations and outputs injected-current
    perturbations; see the module docstring for the sign convention.
    """
    if ss.is_discrete:
        raise ValueError("admittance conversion needs a continuous-time model")
    p, m = ss.n_outputs, ss.n_inputs
    n = ss.n_states
    if n == 0:
        return TFMatrix.from_constant(-ss.D)
    lam = np.linalg.eigvals(ss.A)
    den = Polynomial.from_roots(lam)
    if np.iscomplexobj(den.coeffs):
        den = Polynomial(den.coeffs.real)
    mags = np.abs(lam[np.abs(lam) > 1e-9])
    rho = float(np.exp(np.mean(np.log(mags)))) if mags.size else 1.0
    # avoid sampling right on top of an eigenvalue
    for _ in range(20):
        if lam.size == 0 or np.min(np.abs(np.abs(lam) - rho)) > 1e-3 * rho:
            break
        rho *= 1.0137
    I = np.eye(n)

    cache: dict = {}

    def resolvent_products(s: np.ndarray) -> np.ndarray:
        key = s.tobytes()
        if key not in cache:
            out = np.empty((s.size, p, m), dtype=complex)
            a = den(s)
            for k, z in enumerate(s):
                out[k] = (ss.C @ np.linalg.solve(z * I - ss.A, ss.B)) * a[k]
            cache[key] = out
        return cache[key]

    rows = []
    for i in range(p):
        row = []
        for j in range(m):
            if not np.any(ss.C[i]) or not np.any(ss.B[:, j]):
                num_c = np.zeros(1)
            else:
                c, _ = _interp_poly(lambda s: resolvent_products(s)[:, i, j], n - 1, rho)
                num_c = _trim_rel(c.real, 1e-13, rho)
            num = Polynomial(num_c) + den * float(ss.D[i, j])
            row.append(RationalFunction(-num, den))
        rows.append(row)
    return TFMatrix(rows)


def markov_parameters(ssd: StateSpace, count: int) -> np.ndarray:
    """Markov parameters ``D, CB, CAB, ...`` of a discrete model.

    Returns an array of shape ``(count, p, m)``.
    """
    if not ssd.is_discrete:
        raise ValueError("Markov parameters need a discrete model")
    out = np.empty((count, ssd.n_outputs, ssd.n_inputs))
    out[0] = ssd.D
    X = ssd.B.copy()
    for k in range(1, count):
        out[k] = ssd.C @ X
        X = ssd.A @ X
    return out


def step_response(ss: StateSpace, channel: int, magnitude: float, t_end: float,
                  fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero-initial-state response to a step of size ``magnitude`` on ``channel``.

    The continuous model is discretized exactly (ZOH) at ``1/fs``; the input
    steps at ``t = 0`` and the output includes the ``t = 0`` sample
    (``y_0 = D[:, channel] * magnitude``).  Unstable models are simulated
    as well -- a growing response is a legitimate result.

    Returns
    -------
    t : ndarray, shape (N+1,)
    y : ndarray, shape (N+1, n_outputs)
    """
    nsamp = int(round(t_end * fs))
    if nsamp < 10:
        raise ValueError(f"fs*t_end = {t_end * fs:g} gives fewer than 10 samples")
    if not 0 <= channel < ss.n_inputs:
        raise ValueError(f"input channel {channel} out of range 0..{ss.n_inputs - 1}")
    dt = 1.0 / fs
    ssd = ss if ss.is_discrete else ss.discretize(dt)
    t = np.arange(nsamp + 1) * dt
    y = np.empty((nsamp + 1, ss.n_outputs))
    x = np.zeros(ss.n_states)
    bu = ssd.B[:, channel] * magnitude
    du = ssd.D[:, channel] * magnitude
    for k in range(nsamp + 1):
        y[k] = ssd.C @ x + du
        x = ssd.A @ x + bu
    return t, y


def impulse_response(ss: StateSpace, channel: int, magnitude: float, t_end: float,
                     fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Discrete (ZOH-consistent) pulse response: samples ``p·[D, CB, CAB, ...]``."""
    nsamp = int(round(t_end * fs))
    if nsamp < 10:
        raise ValueError(f"fs*t_end = {t_end * fs:g} gives fewer than 10 samples")
    ssd = ss if ss.is_discrete else ss.discretize(1.0 / fs)
    h = markov_parameters(ssd, nsamp + 1)[:, :, channel] * magnitude
    return np.arange(nsamp + 1) / fs, h


# ---------------------------------------------------------------------------
# Nonlinear models and numerical linearization
# ---------------------------------------------------------------------------


class EquilibriumError(RuntimeError):
    """The supplied or solved point is not an equilibrium."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual norm {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class NonlinearModel:
    """``dx/dt = f(x, u)``, ``y = g(x, u)`` with an equilibrium seed.

    Attributes
    ----------
    f, g : callable
        Derivative and output maps taking ``(x, u)`` 1-D arrays.
    state_dim, input_dim, output_dim : int
    x0, u0 : ndarray
        Equilibrium seed (``x0``) and nominal input (``u0``).
    state_names, input_names, output_names : tuple of str
        Optional labels, used in documentation and CSV headers.
    """

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    state_dim: int
    input_dim: int
    output_dim: int
    x0: np.ndarray
    u0: np.ndarray
    state_names: tuple = field(default=())
    input_names: tuple = field(default=())
    output_names: tuple = field(default=())


def _fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], z: np.ndarray, nout: int) -> np.ndarray:
    J = np.empty((nout, z.size))
    for i in range(z.size):
        h = 1e-6 * (1 + abs(z[i]))
        zp = z.copy(); zp[i] += h
        zm = z.copy(); zm[i] -= h
        J[:, i] = (np.asarray(fun(zp)) - np.asarray(fun(zm))) / (2 * h)
    return J


def linearize(model: NonlinearModel, x_star=None, u_star=None) -> StateSpace:
    """Central finite-difference linearization at an equilibrium.

    The perturbation for component ``i`` is ``h = 1e-6 (1 + |z_i|)``.

    Raises
    ------
    EquilibriumError
        If ``||f(x*, u*)|| > 1e-8``.
    """
    x = np.asarray(model.x0 if x_star is None else x_star, dtype=float)
    u = np.asarray(model.u0 if u_star is None else u_star, dtype=float)
    res = float(np.linalg.norm(model.f(x, u)))
    if res > EQUILIBRIUM_TOL:
        raise EquilibriumError("linearization point is not an equilibrium", res)
    n, p = model.state_dim, model.output_dim
    A = _fd_jacobian(lambda z: model.f(z, u), x, n)
    B = _fd_jacobian(lambda z: model.f(x, z), u, n)
    C = _fd_jacobian(lambda z: model.g(z, u), x, p)
    D = _fd_jacobian(lambda z: model.g(x, z), u, p)
    return StateSpace(A, B, C, D)


def solve_equilibrium(model: NonlinearModel, u=None, x0=None, tol: float = 1e-12,
                      maxiter: int = 50) -> np.ndarray:
    """Damped Newton solve of ``f(x, u) = 0`` starting at ``x0``.

    The step is halved until the residual norm decreases.  Failure to
    converge raises :class:`EquilibriumError`; there is no fallback.
    """
    u = np.asarray(model.u0 if u is None else u, dtype=float)
    x = np.asarray(model.x0 if x0 is None else x0, dtype=float).copy()

    def F(z):
        return np.asarray(model.f(z, u), dtype=float)

    r = F(x)
    nr = float(np.linalg.norm(r))
    for _ in range(maxiter):
        if nr <= tol:
            return x
        J = _fd_jacobian(F, x, model.state_dim)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * dx
            rn = F(xn)
            nrn = float(np.linalg.norm(rn))
            if nrn < nr:
                break
            lam *= 0.5
        else:
            raise EquilibriumError("damped Newton stalled", nr)
        x, r, nr = xn, rn, nrn
    if nr <= max(tol, EQUILIBRIUM_TOL):
        return x
    raise EquilibriumError(f"no convergence in {maxiter} iterations", nr)


# ---------------------------------------------------------------------------
# Time-series CSV
# ---------------------------------------------------------------------------


def write_timeseries_csv(path: str | Path, t: np.ndarray, y: np.ndarray,
                         names: Sequence[str]) -> None:
    """Write ``t,<names...>`` CSV with round-trip precision."""
    y = np.atleast_2d(np.asarray(y))
    if y.shape[0] != len(t):
        y = y.T
    if y.shape[1] != len(names):
        raise ValueError("number of names does not match output columns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names])
        for k in range(len(t)):
            w.writerow([repr(float(t[k]))] + [repr(float(v)) for v in y[k]])


def read_timeseries_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Read a CSV written by :func:`write_timeseries_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ValueError(f"{path}: first header column must be 't'")
    names = rows[0][1:]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        data = np.zeros((0, len(names) + 1))
    return data[:, 0], data[:, 1:], names


__all__ = [
    "StateSpace", "NonlinearModel", "EquilibriumError", "ss_to_admittance",
    "markov_parameters", "step_response", "impulse_response", "linearize",
    "solve_equilibrium", "write_timeseries_csv", "read_timeseries_csv",
]
