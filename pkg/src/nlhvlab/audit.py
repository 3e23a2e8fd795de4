"""Numerical audit of the steps leading to the Leggett-type bound.

Each lemma is checked pointwise on sampled (and corner-case) inputs, and the
final inequality is checked end to end against the hidden-variable model with
rotation-averaged correlations.
"""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import GeometryError, ModelInvalid
from .estimates import CorrelationEstimate
from .geometry import plane_basis, plane_normal, planes_orthogonal, uniform_sphere_sample
from .inequalities import _abs_term_error, leggett_bound
from .nlhv_model import SourceKind, SourceModel, sample_tally

SLACK = 1e-12


@dataclass(frozen=True)
class PlaneAngles:
    """In-plane parametrization of settings and polarization projections."""

    xi: float     # mean setting angle
    phi: float    # setting difference phi_a - phi_b
    psi: float    # mean projection angle
    chi: float    # projection difference phi_u - phi_v
    n1: float
    n2: float

    @property
    def u_proj(self):
        return self.n1 + self.n2

    @property
    def v_proj(self):
        return self.n1 - self.n2


def plane_angles(u, v, a, b):
    """Decompose (u, v) relative to the plane of the settings a, b.

    Angles are measured from a inside span(a, b); u_kl = n1 + n2 and
    v_kl = n1 - n2 are the projection lengths of u and v onto that plane.
    """
    a, b, u, v = (np.asarray(x, dtype=float) for x in (a, b, u, v))
    e1 = a / np.linalg.norm(a)
    n = plane_normal(a, b)
    if n is None:
        e2 = plane_basis(e1)[0]
    else:
        e2 = np.cross(n, e1)

    def polar(w):
        return math.hypot(w @ e1, w @ e2), math.atan2(w @ e2, w @ e1)

    _, phi_a = polar(a)
    _, phi_b = polar(b)
    u_len, phi_u = polar(u)
    v_len, phi_v = polar(v)
    return PlaneAngles(
        xi=0.5 * (phi_a + phi_b), phi=phi_a - phi_b,
        psi=0.5 * (phi_u + phi_v), chi=phi_u - phi_v,
        n1=0.5 * (u_len + v_len), n2=0.5 * (u_len - v_len),
    )


def check_dichotomic_identity(A, B):
    """-1 + |A + B| == AB == 1 - |A - B| for A, B in {+1, -1}."""
    if A not in (1, -1) or B not in (1, -1):
        raise ValueError("outcomes must be +1 or -1")
    return -1 + abs(A + B) == A * B == 1 - abs(A - B)


def modulus_bound_gaps(probs):
    """Slack of -1 + |<A> + <B>| <= <AB> <= 1 - |<A> - <B>| for outcome distributions.

    ``probs`` has shape (..., 4) over the outcomes (++, +-, -+, --). Returns
    the smaller of the two gaps; negative values are violations.
    """
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or not np.allclose(p.sum(axis=-1), 1.0, atol=1e-12):
        raise ValueError("probabilities must be nonnegative and sum to 1")
    pp, pm, mp, mm = np.moveaxis(p, -1, 0)
    mean_a = pp + pm - mp - mm
    mean_b = pp - pm + mp - mm
    mean_ab = pp - pm - mp + mm
    lower = mean_ab - (-1.0 + np.abs(mean_a + mean_b))
    upper = (1.0 - np.abs(mean_a - mean_b)) - mean_ab
    return np.minimum(lower, upper)


def check_modulus_bound(probs):
    return bool(np.all(modulus_bound_gaps(probs) >= -SLACK))


def xi_average_abs_cos(offset, n=100_000):
    """(1/2pi) * integral over one period of |cos(xi + offset)|, periodic grid rule."""
    xi = 2.0 * np.pi * np.arange(n) / n
    return float(np.mean(np.abs(np.cos(xi + offset))))


def sine_difference_gaps(phi, phi_prime, chi):
    """Slack of the cosine-sum and sine-sum estimates against |sin((phi - phi')/2)|."""
    p = (np.asarray(phi) - chi) / 2.0
    q = (np.asarray(phi_prime) - chi) / 2.0
    rhs = np.abs(np.sin((np.asarray(phi) - phi_prime) / 2.0))
    cos_gap = np.abs(np.cos(p)) + np.abs(np.cos(q)) - rhs
    sin_gap = np.abs(np.sin(p)) + np.abs(np.sin(q)) - rhs
    return cos_gap, sin_gap


def check_sine_difference_bounds(phi, phi_prime, chi):
    cos_gap, sin_gap = sine_difference_gaps(phi, phi_prime, chi)
    return bool(np.all(cos_gap >= -SLACK) and np.all(sin_gap >= -SLACK))


def projection_gaps(u, v, n_first, n_second):
    """Slack of u_kl^2 + u_pq^2 >= 1 (for u and v) and of the combined sqrt(2) bound.

    Rows of ``u``, ``v`` are polarizations; ``n_first``, ``n_second`` are the
    unit normals of the two orthogonal planes (broadcast against the rows).
    """
    u, v = np.atleast_2d(u), np.atleast_2d(v)
    n_first, n_second = np.atleast_2d(n_first), np.atleast_2d(n_second)

    def proj2(w, n):
        return np.clip(1.0 - np.einsum("ij,ij->i", w, np.broadcast_to(n, w.shape)) ** 2, 0.0, None)

    u_kl, u_pq = proj2(u, n_first), proj2(u, n_second)
    v_kl, v_pq = proj2(v, n_first), proj2(v, n_second)
    per_vector = np.minimum(u_kl + u_pq, v_kl + v_pq) - 1.0
    combined = np.sqrt(u_kl + v_kl) + np.sqrt(u_pq + v_pq) - math.sqrt(2.0)
    return per_vector, combined


def check_projection_bound(u, v, planes):
    if not planes_orthogonal(planes):
        raise GeometryError("projection bound needs orthogonal planes")
    n1, n2 = plane_normal(*planes.first), plane_normal(*planes.second)
    if n1 is None or n2 is None:
        raise GeometryError("projection bound needs two proper planes")
    per_vector, combined = projection_gaps(u, v, n1, n2)
    return bool(np.all(per_vector >= -SLACK) and np.all(combined >= -SLACK))


def triangle_gaps(x, y):
    """||x|| + ||y|| - ||x + y|| for rows of 2-vectors."""
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    return np.hypot(x[:, 0], x[:, 1]) + np.hypot(y[:, 0], y[:, 1]) - np.hypot(x[:, 0] + y[:, 0], x[:, 1] + y[:, 1])


def harmonic_rewrite_residual(u_len, v_len, phi_a, phi_b, phi_u, phi_v):
    """Residual of rewriting u.a - v.b in mean/difference angles.

    u_kl cos(phi_a - phi_u) - v_kl cos(phi_b - phi_v) should equal
    2 [n2 cos((phi - chi)/2) cos(xi - psi) - n1 sin((phi - chi)/2) sin(xi - psi)].
    """
    n1, n2 = 0.5 * (u_len + v_len), 0.5 * (u_len - v_len)
    xi, phi = 0.5 * (phi_a + phi_b), phi_a - phi_b
    psi, chi = 0.5 * (phi_u + phi_v), phi_u - phi_v
    lhs = u_len * np.cos(phi_a - phi_u) - v_len * np.cos(phi_b - phi_v)
    rhs = 2.0 * (n2 * np.cos((phi - chi) / 2) * np.cos(xi - psi) - n1 * np.sin((phi - chi) / 2) * np.sin(xi - psi))
    return np.abs(lhs - rhs)


def _plane_rows(basis, phi, n_xi):
    e1, e2 = basis
    xi = 2.0 * np.pi * np.arange(n_xi) / n_xi
    ta, tb = xi + phi / 2.0, xi - phi / 2.0
    a = np.outer(np.cos(ta), e1) + np.outer(np.sin(ta), e2)
    b = np.outer(np.cos(tb), e1) + np.outer(np.sin(tb), e2)
    return a, b


def _as_basis(plane):
    plane = [np.asarray(x, dtype=float) for x in plane] if isinstance(plane, (tuple, list)) and len(plane) == 2 \
        else np.asarray(plane, dtype=float)
    if isinstance(plane, list):
        n = plane_normal(*plane)
        if n is None:
            raise GeometryError("plane vectors are collinear")
        e1 = plane[0] / np.linalg.norm(plane[0])
        return e1, np.cross(n, e1)
    return plane_basis(plane)


def rotation_averaged_correlation(source, plane, phi, rng=None, n_xi=360, n_mc=1000, policy="strict"):
    """Model correlation at relative angle phi, averaged over rotations inside a plane.

    ``plane`` is a normal vector or a pair of vectors spanning the plane. The
    mean setting angle runs over a uniform periodic grid of ``n_xi`` points;
    each grid point gets ``n_mc`` Monte Carlo draws. With ``n_mc=None`` the
    lambda integral and the source average are done exactly, which needs a
    source with finitely many polarization pairs.
    """
    if n_xi < 1:
        raise ValueError("n_xi must be positive")
    a_rows, b_rows = _plane_rows(_as_basis(plane), phi, n_xi)
    if n_mc is not None:
        return sample_tally(source, a_rows, b_rows, n_mc, rng, policy).correlation()

    if source.kind is SourceKind.SINGLET:
        if source.normal is None:
            raise ValueError("exact averaging needs a discrete source")
        us = np.array([source.normal, -source.normal])
        vs, weights = -us, np.array([0.5, 0.5])
    else:
        us, vs, weights = source.us, source.vs, source.weights
    ua = a_rows @ us.T
    vb = b_rows @ vs.T
    ab = np.einsum("ij,ij->i", a_rows, b_rows)[:, None]
    if policy == "strict":
        ok = (np.abs(ab + ua) <= 1.0 - vb + kernels.VALID_TOL) & (np.abs(ab - ua) <= 1.0 + vb + kernels.VALID_TOL)
        if not ok.all():
            r, k = np.argwhere(~ok)[0]
            raise ModelInvalid("rotation average leaves the validity region", a=a_rows[r], b=b_rows[r],
                               u=us[k], v=vs[k], invalid_fraction=float(1.0 - ok.mean()))
    per_xi = kernels.exact_mean_product(ua, vb, ab) @ weights
    return CorrelationEstimate(float(np.clip(per_xi.mean(), -1.0, 1.0)), 0.0, n_xi)


@dataclass(frozen=True)
class ChainResult:
    phi: float
    lhs: float
    bound: float
    std_error: float
    source_kind: str
    clamped: bool

    @property
    def margin(self):
        return self.lhs - self.bound

    def passed(self, n_sigma=4.0):
        return self.lhs <= self.bound + n_sigma * self.std_error + SLACK


def model_leggett_lhs(source, normals, phi, rng=None, n_xi=360, n_mc=1000, policy="clamp"):
    """|E(phi) + E(0)| in one plane plus the same in the orthogonal plane, from the model."""
    corr = []
    for normal in normals:
        for angle in (phi, 0.0):
            corr.append(rotation_averaged_correlation(source, normal, angle, rng, n_xi, n_mc, policy))
    e1p, e10, e2p, e20 = corr
    lhs = abs(e1p.value + e10.value) + abs(e2p.value + e20.value)
    var = (_abs_term_error((1, 1), (e1p.value, e10.value), (e1p.std_error, e10.std_error))
           + _abs_term_error((1, 1), (e2p.value, e20.value), (e2p.std_error, e20.std_error)))
    return lhs, math.sqrt(var)


def random_source(rng, max_pairs=6):
    """Random polarization distribution for audit trials."""
    roll = rng.random()
    if roll < 0.15:
        return SourceModel.singlet()
    if roll < 0.25:
        return SourceModel.singlet(uniform_sphere_sample(rng))
    k = int(rng.integers(1, max_pairs + 1))
    pairs = []
    for _ in range(k):
        u = uniform_sphere_sample(rng)
        v = -u if rng.random() < 0.5 else uniform_sphere_sample(rng)
        pairs.append((u, v))
    return SourceModel.weighted_list(pairs, rng.dirichlet(np.ones(k)))


def random_orthogonal_normals(rng):
    n1 = uniform_sphere_sample(rng).as_array()
    e1, e2 = plane_basis(n1)
    t = rng.uniform(0.0, 2.0 * np.pi)
    n2 = math.cos(t) * e1 + math.sin(t) * e2
    return n1, n2


@dataclass
class AuditReport:
    trials: int
    passed: int = 0
    failed: int = 0
    excluded_invalid: int = 0
    clamped_trials: int = 0
    worst_margin: float = -math.inf
    worst_sigma: float = -math.inf
    worst_trial: dict = None
    policy: str = "clamp"
    n_sigma: float = 4.0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return self.failed == 0

    def to_dict(self):
        return asdict(self)


def audit_full_chain(trials, rng, n_xi=360, n_mc=1000, policy="clamp", n_sigma=4.0, phi_range=(0.0, math.pi / 2)):
    """Check the final Leggett-type bound on random sources and geometries.

    Each trial draws a source, two orthogonal measurement planes and a
    relative angle, evaluates the four rotation-averaged model correlations
    and requires LHS <= bound + n_sigma standard errors. Under the strict
    policy trials that leave the validity region are excluded and counted.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    report = AuditReport(trials, policy=policy, n_sigma=n_sigma)
    for t in range(trials):
        source = random_source(rng)
        normals = random_orthogonal_normals(rng)
        phi = float(rng.uniform(*phi_range))
        try:
            lhs, err = model_leggett_lhs(source, normals, phi, rng, n_xi, n_mc, policy)
        except ModelInvalid:
            report.excluded_invalid += 1
            continue
        clamped = policy == "clamp" and _needs_clamp(source, normals, phi, n_xi)
        res = ChainResult(phi, lhs, float(leggett_bound(phi)), err, source.kind.value, clamped)
        report.clamped_trials += clamped
        if res.passed(n_sigma):
            report.passed += 1
        else:
            report.failed += 1
            report.failures.append({"trial": t, **asdict(res)})
        sigma = res.margin / err if err > 0 else (math.inf if res.margin > 0 else -math.inf)
        if res.margin > report.worst_margin:
            report.worst_margin = res.margin
            report.worst_trial = {"trial": t, **asdict(res)}
        report.worst_sigma = max(report.worst_sigma, sigma)
    return report


def _needs_clamp(source, normals, phi, n_xi):
    if source.kind is SourceKind.SINGLET and source.normal is None:
        return True
    try:
        for normal in normals:
            for angle in (phi, 0.0):
                rotation_averaged_correlation(source, normal, angle, None, n_xi, None, "strict")
    except ModelInvalid:
        return True
    return False


def run_lemma_checks(rng, n_modulus=100_000, n_sine=1_000_000, n_projection=1_000_000,
                     n_triangle=1_000_000, n_offsets=100, n_harmonic=100_000):
    """Tally every pointwise lemma on random inputs plus corner cases.

    Returns ``{name: {"checked": int, "failures": int, "worst_gap": float}}``;
    gaps are measured so that negative means violated.
    """
    out = {}

    def record(name, gaps, tol=SLACK):
        gaps = np.asarray(gaps, dtype=float).ravel()
        out[name] = {"checked": int(gaps.size), "failures": int(np.sum(gaps < -tol)),
                     "worst_gap": float(gaps.min())}

    pm = (1, -1)
    identity = [0.0 if check_dichotomic_identity(A, B) else -1.0 for A in pm for B in pm]
    record("dichotomic_identity", identity, tol=0.0)

    corners = np.eye(4)
    simplex = np.vstack([corners, np.full((1, 4), 0.25), rng.dirichlet(np.ones(4), size=n_modulus - 5)])
    record("modulus_bound", modulus_bound_gaps(simplex))

    offsets = np.concatenate([[0.0, math.pi / 2, 1.234], rng.uniform(-10, 10, n_offsets - 3)])
    record("xi_average_abs_cos", [1e-9 - abs(xi_average_abs_cos(o) - 2 / math.pi) for o in offsets], tol=0.0)

    # chi over [-2pi, 2pi] and phi anywhere on the circle, with the equality case included
    phi = np.concatenate([[math.pi], rng.uniform(-2 * np.pi, 2 * np.pi, n_sine - 1)])
    phi_p = np.concatenate([[0.0], rng.uniform(-2 * np.pi, 2 * np.pi, n_sine - 1)])
    chi = np.concatenate([[0.0], rng.uniform(-2 * np.pi, 2 * np.pi, n_sine - 1)])
    cos_gap, sin_gap = sine_difference_gaps(phi, phi_p, chi)
    record("sine_difference_cos", cos_gap)
    record("sine_difference_sin", sin_gap)

    u = uniform_sphere_sample(rng, n_projection)
    v = uniform_sphere_sample(rng, n_projection)
    n1 = uniform_sphere_sample(rng, n_projection)
    n2 = np.cross(n1, uniform_sphere_sample(rng, n_projection))
    n2 /= np.linalg.norm(n2, axis=1, keepdims=True)
    per_vector, combined = projection_gaps(u, v, n1, n2)
    record("projection_per_vector", per_vector)
    record("projection_sqrt2", combined)

    x = rng.standard_normal((n_triangle, 2))
    y = rng.standard_normal((n_triangle, 2))
    record("triangle", triangle_gaps(x, y))

    ang = rng.uniform(-np.pi, np.pi, (4, n_harmonic))
    lens = rng.random((2, n_harmonic))
    record("harmonic_rewrite", -harmonic_rewrite_residual(lens[0], lens[1], *ang), tol=1e-12)

    # Malus-compliant subensembles obey -1 + |ua + vb| <= <AB> <= 1 - |ua - vb|
    abuv = uniform_sphere_sample(rng, 4 * n_harmonic).reshape(4, n_harmonic, 3)
    ua = np.einsum("ij,ij->i", abuv[2], abuv[0])
    vb = np.einsum("ij,ij->i", abuv[3], abuv[1])
    ab = np.einsum("ij,ij->i", abuv[0], abuv[1])
    mean_ab = kernels.exact_mean_product(ua, vb, ab)
    record("subensemble_malus_bound",
           np.minimum(mean_ab - (-1.0 + np.abs(ua + vb)), 1.0 - np.abs(ua - vb) - mean_ab))
    return out
