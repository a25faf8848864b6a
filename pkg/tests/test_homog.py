import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evohom.errors import HypothesisViolation, NoConvergence
from evohom.homog import (PeriodicField, assemble_n_at, cell_average, check_g_convergence,
                          coarse_probes, harmonic_mean, heat_limit_system, homogenize_nullsplit,
                          homogenize_ode, homogenize_p2, solution_map)
from evohom.linalg import max_principal_angle, range_basis
from evohom.mlaw import MaterialLaw, sample_positivity
from evohom.models.presets import count_steady_response, preset_ode_two_phase
from evohom.models.random import random_block_law, random_periodic_sequence

A_FIELD = PeriodicField.two_phase(1.0, 2.0)


def test_cell_average_examples():
    assert cell_average(A_FIELD) == pytest.approx(1.5)
    shifted = A_FIELD.shifted(1j)
    assert cell_average(shifted.inverse()) == pytest.approx((9 - 7j) / 20)
    assert cell_average(PeriodicField(np.array([2.5]))) == pytest.approx(2.5)


def test_harmonic_mean_examples():
    assert harmonic_mean(A_FIELD) == pytest.approx(4 / 3)
    assert harmonic_mean(PeriodicField(np.array([3.0]))) == pytest.approx(3.0)
    assert harmonic_mean(A_FIELD.shifted(1j)) == pytest.approx((18 + 14j) / 13, abs=1e-15)


def test_homogenize_ode_two_phase():
    ladder = [4, 8, 16]
    laws = [preset_ode_two_phase(n, 64) for n in ladder]
    mu = homogenize_ode(laws, probe=coarse_probes(64, 4), ns=ladder, order=2)
    assert np.allclose(np.diag(mu.coeffs[0]).real, 4 / 3, atol=1e-12)


def test_homogenize_ode_constant_sequence():
    rng = np.random.default_rng(0)
    law, _, _ = random_block_law(rng, (1, 1, 1, 1), order=3, eps=2.0)
    mu = homogenize_ode([law] * 4, order=3)
    assert np.allclose(mu.coeffs, law.coeffs, atol=1e-9)


def test_homogenize_ode_degenerate_roundtrip():
    law = MaterialLaw.from_list([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], eps=2.0)
    mu = homogenize_ode([law] * 3, order=4)
    assert np.allclose(mu.coeffs[:2], law.coeffs[:2], atol=1e-12)
    assert np.allclose(mu.coeffs[2:], 0, atol=1e-12)


def test_homogenize_p2_block_diagonal_constant():
    law = MaterialLaw.from_list([np.diag([1.0, 0.0, 2.0, 0.0]), np.diag([0.0, 1.0, 0.0, 3.0])],
                                eps=2.0)
    r = homogenize_p2([law] * 4, split=2, order=4)
    assert np.allclose(r.eta3, 0) and np.allclose(r.eta4, 0)
    assert np.allclose(r.eta1.coeffs[:2], law.coeffs[:2, :2, :2])
    assert np.allclose(r.N.coeffs[:2], law.coeffs[:2], atol=1e-12)


def test_homogenize_p2_periodic_sequence():
    rng = np.random.default_rng(1)
    laws, s = random_periodic_sequence(rng, (1, 1, 1, 1), 8, order=3)
    r = homogenize_p2(laws, split=s)
    assert r.N.max_coeff_diff(laws[1]) < 1e-8
    for z in (r.N.eps / 3, 1j * r.N.eps / 3):
        assert np.abs(r.N.evaluate(z) - assemble_n_at(r, z)).max() < 1e-12
    angle = max_principal_angle(range_basis(r.N.coeffs[0]), range_basis(laws[0].coeffs[0]))
    assert angle < 1e-8
    assert sample_positivity(r.N, r.certificate, num_samples=2000)


def test_homogenize_p2_no_subsequence_raises():
    rng = np.random.default_rng(1)
    laws, s = random_periodic_sequence(rng, (1, 1, 1, 1), 8, order=3)
    with pytest.raises(NoConvergence):
        homogenize_p2(laws, split=s, allow_subsequence=False)


def test_homogenize_p2_reports_condition():
    bad = MaterialLaw.constant(-np.eye(2), eps=1.0)
    with pytest.raises(HypothesisViolation) as info:
        homogenize_p2([bad] * 3, split=1)
    assert info.value.condition


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_nullsplit_zero_a_matches_ode(seed):
    rng = np.random.default_rng(seed)
    laws, _ = random_periodic_sequence(rng, (1, 1, 1, 1), 6, period=1, order=2)
    dim = laws[0].dim
    r = homogenize_nullsplit(laws, np.zeros((dim, dim)), order=4)
    mu = homogenize_ode(laws, order=4)
    z = 0.3 * r.N.eps
    assert np.allclose(r.N.evaluate(z), mu.evaluate(z), atol=1e-8)


def test_nullsplit_invertible_a():
    rng = np.random.default_rng(3)
    laws, _ = random_periodic_sequence(rng, (1, 1, 1, 1), 4, period=1, order=2)
    dim = laws[0].dim
    a = rng.standard_normal((dim, dim))
    a = a - a.T
    r = homogenize_nullsplit(laws, a, order=3)
    p2 = homogenize_p2(laws, A=a, split=dim, order=3)
    assert np.allclose(r.N.coeffs, p2.N.coeffs, atol=1e-10)


def test_result_serialization(tmp_path):
    rng = np.random.default_rng(1)
    laws, s = random_periodic_sequence(rng, (1, 1, 1, 1), 6, order=2)
    r = homogenize_p2(laws, split=s)
    r.write_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["split"] == s
    r.write_diagnostics_csv(tmp_path / "d.csv")
    rows = list(csv.reader(open(tmp_path / "d.csv")))
    assert rows[0] == ["n", "eta_index", "probe_residual"]
    assert len(rows) > 1


def test_heat_limit_two_phase():
    hls = heat_limit_system(A_FIELD, grid=1024)
    assert hls.kappa_eff == pytest.approx(4 / 3, abs=1e-6)
    assert np.all(np.diff(hls.correction_norms) < 0)


def test_heat_limit_constant_exact():
    hls = heat_limit_system(PeriodicField(np.array([2.0])), grid=128, ladder=(4, 8))
    assert np.allclose(hls.kappa_eff_ladder, 2.0, atol=1e-12)
    assert hls.kappa_eff == pytest.approx(2.0, abs=1e-12)


def test_heat_limit_one_four():
    hls = heat_limit_system(PeriodicField.two_phase(1.0, 4.0), grid=1024)
    assert hls.kappa_eff == pytest.approx(8 / 5, abs=1e-6)


def test_g_convergence_constant_sequence():
    b = np.diag([1.0, 2.0, 3.0])
    rep = check_g_convergence([solution_map(b)] * 3, b, [np.ones(3)])
    assert rep.passed
    assert rep.max_residual == 0.0


def test_g_convergence_count_example():
    grid = 512
    ladder = [8, 16, 32, 64]
    solvers = [lambda f, n=n: count_steady_response(n, grid, f) for n in ladder]
    phi = coarse_probes(grid, 8)
    naive = check_g_convergence(solvers, 1.5 + 1j, [np.ones(grid)], phi)
    assert not naive.passed
    assert naive.max_coefficient_residual == pytest.approx(np.sqrt(13) / 26, rel=1e-9)
    exact = check_g_convergence(solvers, (18 + 14j) / 13, [np.ones(grid)], phi)
    assert exact.passed
