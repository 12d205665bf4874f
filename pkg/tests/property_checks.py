"""Randomized property checks shared by the hypothesis suite and the
acceptance runner.

Each ``check_*`` function takes a ``numpy.random.Generator`` (so that the
same check can be driven by hypothesis-chosen seeds or by a plain seeded
loop) and returns the measured error, raising ``AssertionError`` on a
violated structural property.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import ortho_group

from gridadmit.era import HankelPair, hankel_pair
from gridadmit.frames import AdmittanceBlock, FrameTag, rotate_admittance
from gridadmit.network import kron_reduce
from gridadmit.poly_tf import Polynomial, RationalFunction, TFMatrix, poly_roots

KRON_TOL = 1e-10
ROOT_TOL = 1e-6
DET_TOL = 1e-9


def multiset_distance(a, b) -> float:
    """Largest relative distance under the optimal one-to-one root pairing."""
    a = np.asarray(a, complex)
    b = np.asarray(b, complex)
    assert a.size == b.size, f"root counts differ: {a.size} vs {b.size}"
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :]) / (1.0 + np.abs(a[:, None]))
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


# ---------------------------------------------------------------------------
# Hankel shift structure
# ---------------------------------------------------------------------------


def check_hankel_shift(rng: np.random.Generator) -> float:
    """Every Hankel entry is the expected Markov sample; a corrupted shift is
    rejected on construction."""
    K = int(rng.integers(1, 4))
    n_events = int(rng.integers(1, 4))
    N = int(rng.integers(6, 40))
    L = int(rng.integers(1, N))
    seqs = [rng.normal(size=(K, N + 1)) for _ in range(n_events)]
    hp = hankel_pair(seqs, L)
    rows = N - L
    assert hp.H1.shape == (K * rows, n_events * L)
    for e, h in enumerate(seqs):
        for i in range(rows):
            for j in range(L):
                col = e * L + j
                assert np.array_equal(hp.H1[K * i:K * (i + 1), col], h[:, 1 + i + j])
                assert np.array_equal(hp.H2[K * i:K * (i + 1), col], h[:, 2 + i + j])
    if rows > 1:
        bad = hp.H2.copy()
        bad[0, 0] += 1.0
        try:
            HankelPair(hp.H1, bad, K, L, n_events)
        except ValueError:
            pass
        else:  # pragma: no cover - structural failure
            raise AssertionError("corrupted H2 accepted")
    return 0.0


# ---------------------------------------------------------------------------
# Kron random-injection equivalence
# ---------------------------------------------------------------------------


def random_network(rng: np.random.Generator, n: int) -> np.ndarray:
    """Connected complex nodal matrix with lossy branches and small shunts."""
    Y = np.zeros((n, n), complex)
    order = rng.permutation(n)
    edges = [(order[k], order[rng.integers(0, k)]) for k in range(1, n)]
    for _ in range(int(rng.integers(0, n + 1))):
        a, b = rng.choice(n, 2, replace=False)
        edges.append((a, b))
    for a, b in edges:
        z = complex(rng.uniform(0.001, 0.05), rng.uniform(0.01, 0.5))
        y = 1.0 / z
        Y[a, a] += y
        Y[b, b] += y
        Y[a, b] -= y
        Y[b, a] -= y
    Y[np.diag_indices(n)] += rng.uniform(0.01, 1.0, n) + 1j * rng.uniform(-0.2, 0.2, n)
    return Y


def check_kron_equivalence(rng: np.random.Generator) -> float:
    n = int(rng.integers(2, 13))
    Y = random_network(rng, n)
    m = int(rng.integers(1, n + 1))
    keep = np.sort(rng.choice(n, m, replace=False))
    Yr = kron_reduce(Y, keep)
    I = np.zeros(n, complex)
    I[keep] = rng.normal(size=m) + 1j * rng.normal(size=m)
    V_full = np.linalg.solve(Y, I)[keep]
    V_red = np.linalg.solve(Yr, I[keep])
    err = float(np.max(np.abs(V_full - V_red)) / max(1.0, np.max(np.abs(V_full))))
    assert err <= KRON_TOL, f"Kron equivalence error {err:.3e}"
    return err


# ---------------------------------------------------------------------------
# Root multiset product rule
# ---------------------------------------------------------------------------


def random_polynomial(rng: np.random.Generator, complex_coeffs: bool) -> Polynomial:
    deg = int(rng.integers(1, 9))
    c = rng.uniform(-1, 1, deg + 1)
    if complex_coeffs:
        c = c + 1j * rng.uniform(-1, 1, deg + 1)
    c[-1] = (0.5 + 0.5 * rng.random()) * (1 if rng.random() < 0.5 else -1)
    return Polynomial(c)


def check_root_product(rng: np.random.Generator) -> float:
    cplx = bool(rng.random() < 0.5)
    p = random_polynomial(rng, cplx)
    q = random_polynomial(rng, cplx)
    err = multiset_distance(poly_roots(p * q), np.concatenate([poly_roots(p), poly_roots(q)]))
    assert err <= ROOT_TOL, f"root multiset mismatch {err:.3e}"
    return err


# ---------------------------------------------------------------------------
# Similarity det-invariance
# ---------------------------------------------------------------------------


def random_tfmatrix(rng: np.random.Generator, n: int) -> TFMatrix:
    """Diagonally dominant, admittance-like random rational matrix.

    Entries share one stable denominator, as for any admittance obtained
    from a state-space model (``det(sI - A)``).  Dominance keeps
    ``det M(s)`` away from floating-point cancellation, so that a relative
    determinant error measures the algebra rather than the conditioning of
    a nearly singular sample.
    """
    den = Polynomial.from_roots(-rng.uniform(0.5, 50, int(rng.integers(1, 5))) + 0j)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            num = Polynomial(rng.normal(size=int(rng.integers(1, den.degree + 1))))
            x = RationalFunction(num, den)
            row.append(x * 0.3 + 1.0 if i == j else x * (0.3 / n))
        rows.append(row)
    return TFMatrix(rows)


def check_similarity_det(rng: np.random.Generator) -> float:
    n = int(rng.integers(2, 5))
    M = random_tfmatrix(rng, n)
    Q = ortho_group.rvs(n, random_state=rng)
    Mq = TFMatrix.from_constant(Q.T) @ M @ TFMatrix.from_constant(Q)
    s = rng.uniform(-5, 5, 32) + 1j * rng.uniform(-200, 200, 32)
    d0 = np.linalg.det(M.evaluate_many(s))
    d1 = np.linalg.det(Mq.evaluate_many(s))
    err = float(np.max(np.abs(d1 - d0) / np.maximum(np.abs(d0), 1e-300)))
    # the 2x2 frame rotation is the same statement for dq blocks
    blk = AdmittanceBlock(random_tfmatrix(rng, 2), frame=FrameTag.local(rng.uniform(-np.pi, np.pi)))
    rot = rotate_admittance(blk, FrameTag.system())
    e0 = np.linalg.det(blk.Y.evaluate_many(s))
    e1 = np.linalg.det(rot.Y.evaluate_many(s))
    err = max(err, float(np.max(np.abs(e1 - e0) / np.maximum(np.abs(e0), 1e-300))))
    assert err <= DET_TOL, f"similarity changed det by {err:.3e}"
    return err


PROPERTY_CHECKS = {
    "hankel_shift": check_hankel_shift,
    "kron_equivalence": check_kron_equivalence,
    "root_product": check_root_product,
    "similarity_det": check_similarity_det,
}


def run_trials(check, trials: int = 100, seed: int = 0) -> tuple[int, float]:
    """Run ``check`` with ``trials`` independent seeds; return (failures, max error)."""
    failures, worst = 0, 0.0
    for k in range(trials):
        try:
            worst = max(worst, check(np.random.default_rng([seed, k])))
        except AssertionError:
            failures += 1
    return failures, worst
