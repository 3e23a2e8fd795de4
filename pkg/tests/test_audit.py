import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlhvlab.audit import (audit_full_chain, check_dichotomic_identity, check_modulus_bound,
                           check_projection_bound, check_sine_difference_bounds, harmonic_rewrite_residual,
                           model_leggett_lhs, modulus_bound_gaps, plane_angles, random_orthogonal_normals,
                           rotation_averaged_correlation, run_lemma_checks, sine_difference_gaps, triangle_gaps,
                           xi_average_abs_cos)
from nlhvlab.errors import GeometryError, ModelInvalid
from nlhvlab.geometry import PlanePair, uniform_sphere_sample
from nlhvlab.inequalities import leggett_bound
from nlhvlab.nlhv_model import SourceModel

X, Y, Z = np.eye(3)
TWO_OVER_PI = float(2 / mpmath.pi)
angles = st.floats(-2 * math.pi, 2 * math.pi)


@pytest.mark.parametrize("A, B", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
def test_dichotomic_identity(A, B):
    assert check_dichotomic_identity(A, B)


def test_dichotomic_identity_rejects_non_outcomes():
    with pytest.raises(ValueError):
        check_dichotomic_identity(0, 1)


def test_modulus_bound_examples():
    point = [1, 0, 0, 0]
    assert modulus_bound_gaps(point) == pytest.approx(0.0)
    assert check_modulus_bound(point)
    assert check_modulus_bound([0.25] * 4)
    assert modulus_bound_gaps([0.25] * 4) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        check_modulus_bound([0.5, 0.5, 0.5, -0.5])


def test_modulus_bound_simplex(rng):
    assert check_modulus_bound(rng.dirichlet(np.ones(4), size=100_000))


@pytest.mark.parametrize("offset", [0.0, 1.234, math.pi / 2, -7.5])
def test_xi_average(offset):
    assert abs(xi_average_abs_cos(offset) - TWO_OVER_PI) < 1e-9
    assert xi_average_abs_cos(offset) == pytest.approx(0.63662, abs=5e-6)


def test_xi_average_random_offsets(rng):
    for off in rng.uniform(-100, 100, 100):
        assert abs(xi_average_abs_cos(off) - TWO_OVER_PI) < 1e-9


def test_sine_difference_examples():
    assert check_sine_difference_bounds(0.7, 0.7, 2.1)
    cos_gap, sin_gap = sine_difference_gaps(math.pi, 0.0, 0.0)
    assert sin_gap == pytest.approx(0.0, abs=1e-15)
    assert cos_gap >= 0


def test_sine_difference_stress_with_boundary_ranges(rng):
    # chi on [-2pi, 2pi], psi on [|chi|/2, 2pi - |chi|/2]; settings anywhere
    n = 10**6
    chi = rng.uniform(-2 * np.pi, 2 * np.pi, n)
    psi = rng.uniform(np.abs(chi) / 2, 2 * np.pi - np.abs(chi) / 2)
    phi, phi_p = rng.uniform(-2 * np.pi, 2 * np.pi, (2, n))
    assert check_sine_difference_bounds(phi, phi_p, chi)
    # the same ranges through the harmonic rewrite
    phi_u, phi_v = psi + chi / 2, psi - chi / 2
    xi = rng.uniform(0, 2 * np.pi, n)
    res = harmonic_rewrite_residual(rng.random(n), rng.random(n), xi + phi / 2, xi - phi / 2, phi_u, phi_v)
    assert res.max() < 1e-12


@given(angles, angles, angles)
def test_sine_difference_property(phi, phi_p, chi):
    cos_gap, sin_gap = sine_difference_gaps(phi, phi_p, chi)
    assert cos_gap >= -1e-12 and sin_gap >= -1e-12


def test_projection_bound_examples():
    planes = PlanePair((Z, X), (Z, Y))  # normals y and x, intersection along z
    assert check_projection_bound(Z, -Z, planes)
    assert check_projection_bound(Y, Y, planes)  # u normal to plane 1
    with pytest.raises(GeometryError):
        check_projection_bound(Z, Z, PlanePair((Z, X), (Z, (X + Y) / math.sqrt(2))))


def test_projection_bound_random(rng):
    for _ in range(50):
        n1, n2 = random_orthogonal_normals(rng)
        planes = PlanePair((np.cross(n1, n2), n2), (np.cross(n1, n2), n1))
        u, v = uniform_sphere_sample(rng, 1000), uniform_sphere_sample(rng, 1000)
        assert check_projection_bound(u, v, planes)


def test_triangle_gaps_nonnegative(rng):
    x, y = rng.standard_normal((2, 10**6, 2))
    assert triangle_gaps(x, y).min() >= -1e-12


@given(st.integers(0, 2**32 - 1))
def test_plane_angles_recover_projections(seed):
    rng = np.random.default_rng(seed)
    a, b, u, v = (uniform_sphere_sample(rng).as_array() for _ in range(4))
    pa = plane_angles(u, v, a, b)
    n = np.cross(a, b) / np.linalg.norm(np.cross(a, b))
    assert pa.u_proj == pytest.approx(math.sqrt(max(0, 1 - (u @ n) ** 2)), abs=1e-12)
    assert pa.v_proj == pytest.approx(math.sqrt(max(0, 1 - (v @ n) ** 2)), abs=1e-12)
    assert abs(pa.phi) == pytest.approx(math.acos(np.clip(a @ b, -1, 1)), abs=1e-9)
    # u.a - v.b through the mean/difference angles
    phi_u, phi_v = pa.psi + pa.chi / 2, pa.psi - pa.chi / 2
    phi_a, phi_b = pa.xi + pa.phi / 2, pa.xi - pa.phi / 2
    lhs = pa.u_proj * math.cos(phi_a - phi_u) - pa.v_proj * math.cos(phi_b - phi_v)
    assert lhs == pytest.approx(u @ a - v @ b, abs=1e-12)


def test_restricted_singlet_rotation_average(rng):
    src = SourceModel.singlet(Z)
    for phi in (0.3, 1.0):
        est = rotation_averaged_correlation(src, Z, phi, rng, n_xi=360, n_mc=1000)
        assert abs(est.value + math.cos(phi)) <= 4 * est.std_error
        exact = rotation_averaged_correlation(src, Z, phi, n_mc=None)
        assert exact.value == pytest.approx(-math.cos(phi), abs=1e-12)


def test_fixed_pair_in_plane_perfect_correlation(rng):
    u = (X + Z) / math.sqrt(2)
    est = rotation_averaged_correlation(SourceModel.fixed_pair(u, -u), Y, 0.0, rng)
    assert est.value == -1.0 and est.std_error == 0.0


def test_plane_given_by_two_vectors_equals_normal(rng):
    src = SourceModel.singlet(Z)
    a = rotation_averaged_correlation(src, (X, Y), 0.4, n_mc=None)
    b = rotation_averaged_correlation(src, Z, 0.4, n_mc=None)
    assert a.value == pytest.approx(b.value, abs=1e-12)
    with pytest.raises(GeometryError):
        rotation_averaged_correlation(src, (X, -X), 0.4, n_mc=None)


def test_grid_refinement_agrees(rng):
    src = SourceModel.weighted_list([(X, Y), (Z, -Z), ((X + Y) / math.sqrt(2), -X)], [0.2, 0.5, 0.3])
    coarse = rotation_averaged_correlation(src, Z, 0.6, rng, n_xi=360, n_mc=400, policy="clamp")
    fine = rotation_averaged_correlation(src, Z, 0.6, rng, n_xi=1440, n_mc=100, policy="clamp")
    assert abs(coarse.value - fine.value) <= 2 * math.hypot(coarse.std_error, fine.std_error)
    exact = rotation_averaged_correlation(src, Z, 0.6, n_xi=1440, n_mc=None, policy="clamp")
    assert abs(coarse.value - exact.value) <= 4 * coarse.std_error


def test_strict_rotation_average_raises_outside_validity(rng):
    src = SourceModel.fixed_pair(X, X)
    with pytest.raises(ModelInvalid):
        rotation_averaged_correlation(src, Y, 0.5, rng, n_mc=50)
    with pytest.raises(ModelInvalid):
        rotation_averaged_correlation(src, Y, 0.5, n_mc=None)


def test_exact_mode_needs_discrete_source():
    with pytest.raises(ValueError):
        rotation_averaged_correlation(SourceModel.singlet(), Z, 0.5, n_mc=None)


def test_singlet_source_cannot_reach_quantum_value(rng):
    phi = math.radians(18.8)
    n1, n2 = random_orthogonal_normals(rng)
    lhs, err = model_leggett_lhs(SourceModel.singlet(), (n1, n2), phi, rng, n_xi=360, n_mc=1000)
    assert lhs <= 3.792 + 4 * err
    assert lhs < 3.893


def test_phi_zero_chain_is_trivial(rng):
    n1, n2 = random_orthogonal_normals(rng)
    src = SourceModel.weighted_list([(X, -X), (Y, -Y)], [0.5, 0.5])
    lhs, _ = model_leggett_lhs(src, (n1, n2), 0.0, rng, n_xi=360, n_mc=None)
    assert lhs <= 4.0 + 1e-12 and leggett_bound(0.0) == 4.0


def test_audit_full_chain_hundred_trials():
    rep = audit_full_chain(100, np.random.default_rng(7))
    assert rep.passed == 100 and rep.failed == 0 and rep.ok
    assert rep.worst_margin < 0


def test_audit_strict_policy_counts_exclusions():
    rep = audit_full_chain(20, np.random.default_rng(3), n_mc=200, policy="strict")
    assert rep.passed + rep.failed + rep.excluded_invalid == 20
    assert rep.failed == 0


def test_audit_is_deterministic():
    a = audit_full_chain(5, np.random.default_rng(1), n_mc=100).to_dict()
    b = audit_full_chain(5, np.random.default_rng(1), n_mc=100).to_dict()
    assert a == b


def test_audit_rejects_zero_trials(rng):
    with pytest.raises(ValueError):
        audit_full_chain(0, rng)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_chain_never_exceeds_bound(seed):
    # discrete sources with exact lambda integration: no Monte Carlo slack at all
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    pairs = [(uniform_sphere_sample(rng), uniform_sphere_sample(rng)) for _ in range(k)]
    src = SourceModel.weighted_list(pairs, rng.dirichlet(np.ones(k)))
    phi = float(rng.uniform(0, math.pi))
    lhs, err = model_leggett_lhs(src, random_orthogonal_normals(rng), phi, n_xi=720, n_mc=None)
    assert err == 0.0
    assert lhs <= leggett_bound(phi) + 1e-9


def test_lemma_tallies_clean(rng):
    out = run_lemma_checks(rng, n_modulus=10_000, n_sine=10_000, n_projection=10_000, n_triangle=10_000,
                           n_offsets=10, n_harmonic=10_000)
    assert all(t["failures"] == 0 for t in out.values()), out
