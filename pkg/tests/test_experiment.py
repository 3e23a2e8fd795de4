import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlhvlab.errors import ConfigError, EmptyTable, GeometryError, ModelInvalid
from nlhvlab.experiment import (PAIRS, SWEEP_COLUMNS, CountTable, ExperimentConfig, analytic_values,
                                check_geometry, correlation_from_counts, evaluate_protocol,
                                pairs_for_target_error, run_protocol, simulate_counts, sweep_phi)
from nlhvlab.estimates import CorrelationEstimate
from nlhvlab.inequalities import leggett_bound, quantum_chsh_at_settings, quantum_leggett_lhs
from nlhvlab.nlhv_model import SourceModel

X, Y, Z = np.eye(3)
MEASURED = {"E11": (-0.9298, 0.0105), "E22": (-0.942, 0.0112), "E23": (-0.9902, 0.0118),
             "E21": (0.3436, 0.0088), "E12": (0.0374, 0.0091)}


def test_counts_examples():
    e = correlation_from_counts(CountTable(100, 0, 0, 100))
    assert e.value == 1.0 and e.std_error == 0.0
    assert correlation_from_counts(CountTable(50, 50, 50, 50)).value == 0.0
    with pytest.raises(EmptyTable):
        correlation_from_counts(CountTable(0, 0, 0, 0))
    with pytest.raises(ValueError):
        CountTable(-1, 0, 0, 0)


def test_count_error_against_bootstrap():
    table = CountTable(3, 297, 296, 4)
    est = correlation_from_counts(table)
    rng = np.random.default_rng(11)
    boot = rng.poisson(np.array([3, 297, 296, 4]), size=(200_000, 4))
    n = boot.sum(axis=1)
    e = (boot[:, 0] + boot[:, 3] - boot[:, 1] - boot[:, 2]) / n
    assert est.std_error == pytest.approx(e.std(), rel=0.03)


def test_count_error_magnitude_near_minus_one():
    # S/N = 0.0049 at N = 140 gives E = -0.990 and sigma = 0.0118
    n, frac = 140.0, 0.0049
    same, diff = frac * n, (1 - frac) * n
    assert (same - diff) / n == pytest.approx(-0.990, abs=5e-4)
    assert math.sqrt(4 * same * diff / n**3) == pytest.approx(0.0118, abs=5e-5)


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_count_error_equals_binomial_form(a, b, c, d):
    if a + b + c + d == 0:
        return
    e = correlation_from_counts(CountTable(a, b, c, d))
    assert e.std_error == pytest.approx(math.sqrt(max(1 - e.value**2, 0.0) / (a + b + c + d)), abs=1e-12)


def test_simulate_counts_examples(rng):
    t = simulate_counts(Z, Z, 1.0, 1e4, rng)
    assert t.n_pp == 0 and t.n_mm == 0
    b = math.cos(math.radians(20)) * Z + math.sin(math.radians(20)) * X
    e = correlation_from_counts(simulate_counts(Z, b, 0.99, 1e6, rng))
    assert abs(e.value + 0.99 * math.cos(math.radians(20))) <= 4 * e.std_error
    t1 = simulate_counts(Z, b, 0.99, 1e3, np.random.default_rng(1))
    t2 = simulate_counts(Z, b, 0.99, 1e3, np.random.default_rng(1))
    assert t1 == t2
    with pytest.raises(ValueError):
        simulate_counts(Z, b, 0.99, 0, rng)


def test_default_geometry_is_twenty_degrees():
    assert math.degrees(check_geometry(ExperimentConfig())) == pytest.approx(20.0, abs=1e-9)


def test_geometry_rejects_non_orthogonal_planes():
    cfg = ExperimentConfig(planes={"alpha2": "linear", "beta2": "linear", "beta3": "linear"})
    with pytest.raises(GeometryError):
        check_geometry(cfg)
    with pytest.raises(GeometryError):
        run_protocol(cfg)


def test_geometry_rejects_b3_off_a2():
    with pytest.raises(GeometryError):
        check_geometry(ExperimentConfig(beta3=5.0))


def test_geometry_rejects_unequal_angles():
    with pytest.raises(GeometryError):
        check_geometry(ExperimentConfig(beta2=12.0))


@pytest.mark.parametrize("phi", [0.0, 2.0, 18.8, 60.0])
def test_at_phi_geometry(phi):
    cfg = ExperimentConfig().at_phi(phi)
    assert math.degrees(check_geometry(cfg)) == pytest.approx(phi, abs=1e-9)


def test_analytic_values_follow_closed_forms():
    for phi in (0.0, 10.0, 20.0, 45.0):
        s_nlhv, s_chsh = analytic_values(ExperimentConfig(visibility=0.97).at_phi(phi))
        assert s_nlhv == pytest.approx(quantum_leggett_lhs(math.radians(phi), 0.97), abs=1e-12)
        assert s_chsh == pytest.approx(quantum_chsh_at_settings(math.radians(phi), 0.97), abs=1e-12)


def test_measured_fixture_through_protocol_evaluation():
    corr = {k: CorrelationEstimate(v, s, 0) for k, (v, s) in MEASURED.items()}
    nlhv, chsh = evaluate_protocol(corr, math.radians(20))
    assert nlhv.lhs == pytest.approx(3.8521, abs=5e-4)
    assert nlhv.std_error == pytest.approx(0.0227, rel=0.15)
    assert chsh.lhs == pytest.approx(2.178, abs=5e-4)
    assert chsh.std_error == pytest.approx(0.0199, rel=0.15)


def test_run_protocol_default_settings():
    rep = run_protocol(ExperimentConfig(visibility=0.99, mean_pairs=1e6, seed=42))
    assert abs(rep.nlhv.lhs - 3.840591) <= 4 * rep.nlhv.std_error
    assert abs(rep.chsh.lhs - rep.analytic_chsh) <= 4 * rep.chsh.std_error
    assert rep.nlhv.bound == pytest.approx(float(leggett_bound(math.radians(20))))
    assert set(rep.correlations) == set(PAIRS)
    d = rep.to_dict()
    assert d["s_nlhv"]["sigma_margin"] == rep.nlhv.sigma_margin


def test_run_protocol_zero_visibility():
    rep = run_protocol(ExperimentConfig(visibility=0.0, mean_pairs=1e6, seed=3))
    assert rep.nlhv.lhs <= 4 * rep.nlhv.std_error
    assert rep.chsh.lhs <= 4 * rep.chsh.std_error


def test_run_protocol_is_deterministic():
    cfg = ExperimentConfig(mean_pairs=1e4, seed=9)
    assert run_protocol(cfg).to_dict() == run_protocol(cfg).to_dict()


def test_per_role_visibilities():
    cfg = ExperimentConfig(visibility=0.99, visibility_intersection=0.95)
    e23 = -0.95
    s_nlhv, _ = analytic_values(cfg)
    c = 0.99 * math.cos(math.radians(20))
    assert s_nlhv == pytest.approx(2 * (c - e23), abs=1e-12)


def test_nlhv_model_protocol_restricted_singlet_strict_fails():
    # a single restricted singlet cannot stay valid in both planes at once
    cfg = ExperimentConfig(model="nlhv", source=SourceModel.singlet([0, 1, 0]), mean_pairs=2000)
    with pytest.raises(ModelInvalid):
        run_protocol(cfg)


def test_nlhv_model_protocol_clamped_respects_bound():
    cfg = ExperimentConfig(model="nlhv", source=SourceModel.singlet(), mean_pairs=200_000, allow_invalid=True)
    rep = run_protocol(cfg)
    assert rep.clamped
    assert rep.nlhv.lhs <= rep.nlhv.bound + 4 * rep.nlhv.std_error


def test_sweep_rows_and_edges():
    rows = sweep_phi(ExperimentConfig(visibility=1.0, phi_grid=(0.0, 18.8), mean_pairs=1e4))
    assert list(rows[0]) == list(SWEEP_COLUMNS)
    assert rows[0]["s_nlhv_analytic"] == pytest.approx(4.0) and rows[0]["leggett_bound"] == 4.0
    assert rows[1]["s_nlhv_analytic"] == pytest.approx(3.893, abs=5e-4)
    assert rows[1]["leggett_bound"] == pytest.approx(3.792, abs=5e-4)


def test_config_roundtrip_and_validation():
    cfg = ExperimentConfig(model="nlhv", source=SourceModel.fixed_pair(X, -X), phi_grid=[0, 5])
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    for bad in ({"visibility": 1.5}, {"mean_pairs": 0}, {"model": "classical"}, {"model": "nlhv"},
                {"alpha1": float("inf")}, {"planes": {"alpha1": "diagonal"}}, {"phi_grid": []}):
        with pytest.raises(ConfigError):
            ExperimentConfig(**bad)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"colour": "blue"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"source": {"kind": "nonsense"}})


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 40), st.floats(0.95, 1.0), st.floats(0.01, 0.05))
def test_pairs_for_target_error_inverts_propagation(phi_deg, v, target):
    phi = math.radians(phi_deg)
    n = pairs_for_target_error(phi, v, target)
    e_phi, e0 = -v * math.cos(phi), -v
    var = 2 * (1 - e_phi**2) / n + 2 * (1 - e0**2) / n
    assert math.sqrt(var) == pytest.approx(target, rel=1e-12)
