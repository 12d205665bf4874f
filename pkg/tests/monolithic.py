"""Independent monolithic small-signal oracle for classical-machine cases.

Nothing here imports :mod:`gridadmit`.  The oracle reads the YAML case
directly, solves its own power flow (Newton iterations with a
finite-difference Jacobian), eliminates the whole network onto the machine
internal nodes, and linearizes the swing equations analytically:

    dδ_i/dt = ω0 Δω_i
    2 H_i dΔω_i/dt = -ΔPe_i - D_i Δω_i
    Pe_i = Σ_j E_i E_j (G_ij cos δ_ij + B_ij sin δ_ij)

Machine data given on a machine MVA base are converted to the system base
(``X/r``, ``H r``, ``D r`` with ``r = mva / base_mva``).  Loads are constant
power in the power flow and constant impedance in the dynamics.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml


def _omega0(system: dict) -> float:
    if "omega0" in system:
        return float(system["omega0"])
    return 2 * np.pi * float(system.get("f0", 60.0))


def _ybus(case: dict, index: dict) -> np.ndarray:
    n = len(index)
    Y = np.zeros((n, n), complex)
    for br in case.get("branches", []):
        a, b = index[br["from"]], index[br["to"]]
        circuits = int(br.get("circuits", 1))
        z = complex(br.get("R", 0.0), br["X"] * (1.0 - br.get("comp", 0.0)))
        y = circuits / z
        ysh = 0.5j * br.get("B", 0.0) * circuits
        Y[a, a] += y + ysh
        Y[b, b] += y + ysh
        Y[a, b] -= y
        Y[b, a] -= y
    return Y


def solve_power_flow(case: dict, tol: float = 1e-12, max_iter: int = 40):
    """Return ``(bus_ids, V)``: complex bus voltages of the solved case."""
    buses = case["buses"]
    ids = [b["id"] for b in buses]
    index = {b: k for k, b in enumerate(ids)}
    Y = _ybus(case, index)
    n = len(ids)
    Vm = np.array([float(b.get("V", 1.0)) for b in buses])
    Va = np.deg2rad([float(b.get("angle_deg", 0.0)) for b in buses])
    Psp = np.zeros(n)
    Qsp = np.zeros(n)
    pv = set()
    for src in case.get("sources", []):
        k = index[src["bus"]]
        Psp[k] += float(src.get("P", 0.0))
        Vm[k] = float(src.get("V", Vm[k]))
        pv.add(k)
    for ld in case.get("loads", []):
        k = index[ld["bus"]]
        Psp[k] -= float(ld["P"])
        Qsp[k] -= float(ld["Q"])
    slack = [k for k, b in enumerate(buses) if b.get("slack")]
    assert len(slack) == 1, "oracle expects exactly one slack bus"
    pvq = [k for k in range(n) if k not in slack]
    pq = [k for k in pvq if k not in pv]

    def unpack(x):
        va, vm = Va.copy(), Vm.copy()
        va[pvq] = x[:len(pvq)]
        vm[pq] = x[len(pvq):]
        return vm * np.exp(1j * va)

    def mismatch(x):
        V = unpack(x)
        S = V * np.conj(Y @ V)
        return np.concatenate([S.real[pvq] - Psp[pvq], S.imag[pq] - Qsp[pq]])

    x = np.concatenate([Va[pvq], Vm[pq]])
    for _ in range(max_iter):
        F = mismatch(x)
        if np.max(np.abs(F)) < tol:
            break
        J = np.empty((F.size, x.size))
        for j in range(x.size):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (mismatch(xp) - mismatch(xm)) / (2 * h)
        x = x - np.linalg.solve(J, F)
    else:
        raise RuntimeError("oracle power flow did not converge")
    return ids, unpack(x), Y


def oracle_eigenvalues(path: str | Path) -> np.ndarray:
    """Eigenvalues (rad/s) of the classical multi-machine linear model."""
    case = yaml.safe_load(Path(path).read_text())
    system = case.get("system", {})
    w0 = _omega0(system)
    base = float(system.get("base_mva", 100.0))
    ids, V, Y = solve_power_flow(case)
    index = {b: k for k, b in enumerate(ids)}
    n = len(ids)
    I = Y @ V
    S_bus = V * np.conj(I)

    # constant-impedance loads at the solved voltages
    Yl = Y.copy()
    S_load = np.zeros(n, complex)
    for ld in case.get("loads", []):
        k = index[ld["bus"]]
        S = complex(ld["P"], ld["Q"])
        S_load[k] += S
        Yl[k, k] += np.conj(S) / abs(V[k]) ** 2

    sources = case["sources"]
    m = len(sources)
    E = np.zeros(m, complex)
    H = np.zeros(m)
    D = np.zeros(m)
    yg = np.zeros(m, complex)
    gen_bus = []
    for i, src in enumerate(sources):
        k = index[src["bus"]]
        r = float(src.get("mva", base)) / base
        prm = src["params"]
        Xg = float(prm["Xg"]) / r
        H[i] = float(prm["H"]) * r
        D[i] = float(prm.get("D1", 0.0)) * r
        S = S_bus[k] + S_load[k]
        E[i] = V[k] + 1j * Xg * np.conj(S / V[k])
        yg[i] = 1.0 / (1j * Xg)
        gen_bus.append(k)

    # augmented nodal matrix [internal nodes | network buses], eliminate buses
    Ya = np.zeros((m + n, m + n), complex)
    Ya[m:, m:] = Yl
    for i, k in enumerate(gen_bus):
        Ya[i, i] += yg[i]
        Ya[m + k, m + k] += yg[i]
        Ya[i, m + k] -= yg[i]
        Ya[m + k, i] -= yg[i]
    Yint = Ya[:m, :m] - Ya[:m, m:] @ np.linalg.solve(Ya[m:, m:], Ya[m:, :m])

    G, B = Yint.real, Yint.imag
    Em, d = np.abs(E), np.angle(E)
    K = np.zeros((m, m))              # K_ij = ∂Pe_i / ∂δ_j
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            dij = d[i] - d[j]
            K[i, j] = Em[i] * Em[j] * (G[i, j] * np.sin(dij) - B[i, j] * np.cos(dij))
        K[i, i] = -np.sum(K[i])
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = w0 * np.eye(m)
    A[m:, :m] = -K / (2 * H[:, None])
    A[m:, m:] = -np.diag(D / (2 * H))
    return np.linalg.eigvals(A)
