"""Eigenvalue reports, Nyquist loci, modal impedance and singular values."""

import numpy as np
import pytest

from gridadmit.cli import build_system, load_case
from gridadmit.poly_tf import RationalFunction, TFMatrix
from gridadmit.stability import (EigenReport, ImaginaryAxisPoleError, closed_loop_step,
                                 eigs_from_admittance, frequency_grid, mode_trace, nyquist_loci,
                                 ringing_frequency, rma_sweep, sigma_sweep)


def _scalar(num, den):
    return TFMatrix([[RationalFunction(num, den)]])


def test_eigen_report_verdict_and_ordering():
    rep = EigenReport.from_roots([-1 + 2j, -1 - 2j, 0.5, -3])
    assert rep.verdict == "unstable" and not rep.stable
    assert rep.roots[0] == 0.5
    assert rep.freq_hz[np.argmin(np.abs(rep.roots - (-1 + 2j)))] == pytest.approx(2 / (2 * np.pi))
    assert EigenReport.from_roots([-1.0, -2 + 1j, -2 - 1j]).stable


def test_eigs_from_admittance_rejects_constant_determinant():
    with pytest.raises(ValueError):
        eigs_from_admittance(TFMatrix.identity(2))


def test_nyquist_zero_loop():
    res = nyquist_loci(TFMatrix.zeros(2, 2))
    assert res.encirclements == 0 and res.verdict == "stable"


@pytest.mark.parametrize("k", [0.2, 0.5, 0.99])
def test_nyquist_small_gain(k):
    res = nyquist_loci(_scalar([k], [1.0, 1.0]))
    assert res.encirclements == 0 and res.verdict == "stable"


def test_nyquist_counts_closed_loop_rhp_zero():
    # 1 + L = (s - 1)/(s + 1): one closed-loop RHP root, no open-loop RHP pole
    res = nyquist_loci(_scalar([-2.0], [1.0, 1.0]))
    assert res.open_loop_rhp_poles == 0
    assert res.encirclements == 1 and res.verdict == "unstable"


def test_nyquist_open_loop_unstable_but_closed_loop_stable():
    # 1 + 2/(s - 1) = (s + 1)/(s - 1)
    res = nyquist_loci(_scalar([2.0], [-1.0, 1.0]))
    assert res.open_loop_rhp_poles == 1
    assert res.encirclements == -1 and res.verdict == "stable"


def test_nyquist_callable_matches_tfmatrix():
    L = TFMatrix([[RationalFunction([3.0], [2.0, 3.0, 1.0]), 0.1],
                  [0.0, RationalFunction([-1.5], [1.0, 1.0])]])
    a = nyquist_loci(L)
    b = nyquist_loci(L.evaluate_many, poles=L.candidate_poles(), size=2)
    assert (a.encirclements, a.verdict) == (b.encirclements, b.verdict)
    with pytest.raises(TypeError):
        nyquist_loci(L.evaluate_many)


def test_nyquist_axis_pole_requires_indentation():
    L = _scalar([1.0], [0.0, 1.0, 1.0])          # 1/(s(s+1))
    with pytest.raises(ImaginaryAxisPoleError, match="indentation"):
        nyquist_loci(L, indent=False)
    res = nyquist_loci(L)
    assert res.indented and res.verdict == "stable"


def test_rma_diag_example():
    Y = TFMatrix([[RationalFunction([1.0], [1.0, 1.0]), 0.0],
                  [0.0, RationalFunction([2.0], [1.0, 1.0])]])
    res = rma_sweep(Y, np.array([0.0]))
    assert np.allclose(res.values[0], [1.0, 0.5])


def test_sigma_examples():
    grid = np.linspace(0.5, 50, 30)
    ident = sigma_sweep(TFMatrix.identity(3), grid)
    assert np.allclose(ident.values, 1.0)
    Y = _scalar([2.0, 1.0], [5.0, 1.0, 1.0])
    sc = sigma_sweep(Y, grid)
    assert np.allclose(sc.values[:, 0], np.abs(Y.evaluate_many(2j * np.pi * grid)[:, 0, 0]))


def test_rma_peak_sits_at_lightly_damped_root(cases_dir):
    case, analysis, base = load_case(cases_dir / "smib.yaml")
    Y = build_system(case, analysis, base).Y
    f_mode = eigs_from_admittance(Y).freq_hz.max()
    grid = frequency_grid(0.1, 10.0, 2000)
    res = rma_sweep(Y, grid)
    step = np.max(np.diff(grid[np.abs(grid - f_mode) < 0.5]))
    assert abs(res.peaks[0][0] - f_mode) <= step


def test_mode_trace_single_and_monotone():
    def build(k):
        return _scalar([1.0, 2.0 * k, 1.0], [1.0])

    tr = mode_trace(build, [0.3])
    assert len(tr.reports) == 1 and tr.paths.shape == (2, 1)
    tr = mode_trace(build, [0.1, 0.2, 0.3])
    assert np.all(np.isfinite(tr.paths))
    with pytest.raises(ValueError, match="monotone"):
        mode_trace(build, [0.1, 0.3, 0.2])


def test_closed_loop_step_second_order():
    wn, zeta = 2 * np.pi * 5, 0.2
    F = RationalFunction([wn ** 2], [wn ** 2, 2 * zeta * wn, 1.0])
    t, y = closed_loop_step(F, "alphabeta", axis=0, t_end=1.0, fs=5000.0)
    wd = wn * np.sqrt(1 - zeta ** 2)
    ref = 1 - np.exp(-zeta * wn * t) * (np.cos(wd * t) + zeta / np.sqrt(1 - zeta ** 2) * np.sin(wd * t))
    assert np.allclose(y[:, 0], ref, atol=1e-9)
    assert np.allclose(y[:, 1], 0.0, atol=1e-12)
    assert ringing_frequency(t, y[:, 0]) == pytest.approx(wd / (2 * np.pi), rel=0.02)


def test_closed_loop_step_rejects_improper():
    with pytest.raises(ValueError, match="proper"):
        closed_loop_step(RationalFunction([0.0, 0.0, 1.0], [1.0, 1.0]))
    with pytest.raises(ValueError):
        closed_loop_step(RationalFunction([1.0], [1.0, 1.0]), frame="abc")
