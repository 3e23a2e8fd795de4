"""Invariant suite for the hidden-variable model, used by ``nlhvlab model-check``."""
import math

import numpy as np

from . import kernels
from .geometry import plane_basis, uniform_sphere_sample
from .nlhv_model import SourceModel, configuration_tally, source_correlation

N_SIGMA = 4.0


def valid_configurations(rng, count, batch=4096):
    """Draw ``count`` uniform (a, b, u, v) quadruples that pass the validity test.

    Returns four (count, 3) arrays.
    """
    got = [[], [], [], []]
    have = 0
    while have < count:
        a, b, u, v = (uniform_sphere_sample(rng, batch) for _ in range(4))
        ua = np.einsum("ij,ij->i", u, a)
        vb = np.einsum("ij,ij->i", v, b)
        ab = np.einsum("ij,ij->i", a, b)
        ok = (np.abs(ab + ua) <= 1.0 - vb) & (np.abs(ab - ua) <= 1.0 + vb)
        for store, arr in zip(got, (a, b, u, v)):
            store.append(arr[ok])
        have += int(ok.sum())
    return tuple(np.concatenate(s)[:count] for s in got)


def _dots(a, b, u, v):
    return (np.einsum("ij,ij->i", u, a), np.einsum("ij,ij->i", v, b), np.einsum("ij,ij->i", a, b))


def _z_scores(tally, target, which):
    mean = getattr(tally, which)
    n = tally.n_per_row
    m = 2.0 * mean / n - 1.0
    se = np.sqrt(np.clip(1.0 - target**2, 0.0, None) / n)
    dev = np.abs(m - target)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / se, np.where(dev > 0, np.inf, 0.0))
    return z


def _summary(z, extra=None):
    out = {"checked": int(z.size), "failures": int(np.sum(z > N_SIGMA)),
           "max_abs_z": float(z.max()) if z.size else 0.0}
    out.update(extra or {})
    return out


def check_correlations(rng, samples, configs):
    """E = -a.b within 4 binomial standard errors on random valid configurations."""
    a, b, u, v = valid_configurations(rng, configs)
    ua, vb, ab = _dots(a, b, u, v)
    tally = configuration_tally(ua, vb, ab, samples, rng)
    return _summary(_z_scores(tally, -ab, "ab_plus"), {"invalid_draws": int(tally.invalid.sum())})


def check_malus(rng, samples, configs):
    """<A> = u.a and <B> = v.b on random valid configurations."""
    a, b, u, v = valid_configurations(rng, configs)
    ua, vb, ab = _dots(a, b, u, v)
    tally = configuration_tally(ua, vb, ab, samples, rng)
    z = np.concatenate([_z_scores(tally, ua, "a_plus"), _z_scores(tally, vb, "b_plus")])
    return _summary(z)


def check_no_signalling(rng, samples, configs):
    """Bob's marginal does not depend on which valid setting Alice picks."""
    a, b, u, v = valid_configurations(rng, configs)
    # second Alice setting: reuse b, v and pick a' keeping the configuration valid
    a2 = np.empty_like(a)
    for i in range(configs):
        while True:
            cand = uniform_sphere_sample(rng).as_array()
            ua, vb, ab = u[i] @ cand, v[i] @ b[i], cand @ b[i]
            if abs(ab + ua) <= 1.0 - vb and abs(ab - ua) <= 1.0 + vb:
                a2[i] = cand
                break
    t1 = configuration_tally(*_dots(a, b, u, v), samples, rng)
    t2 = configuration_tally(*_dots(a2, b, u, v), samples, rng)
    m1 = 2.0 * t1.b_plus / samples - 1.0
    m2 = 2.0 * t2.b_plus / samples - 1.0
    vb = np.einsum("ij,ij->i", v, b)
    se = np.sqrt(2.0 * np.clip(1.0 - vb**2, 0.0, None) / samples)
    dev = np.abs(m1 - m2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / se, np.where(dev > 0, np.inf, 0.0))
    return _summary(z)


def check_perfect_correlations(rng, samples, configs):
    """b = a gives E = -1 and b = -a gives E = +1 with no error at all."""
    a = uniform_sphere_sample(rng, configs)
    u = uniform_sphere_sample(rng, configs)
    v = -u
    worst = 0.0
    for sign, target in ((1.0, -1.0), (-1.0, 1.0)):
        b = sign * a
        tally = configuration_tally(*_dots(a, b, u, v), samples, rng)
        m = 2.0 * tally.ab_plus / samples - 1.0
        worst = max(worst, float(np.max(np.abs(m - target))))
    return {"checked": 2 * configs, "failures": int(worst > 0.0), "max_abs_deviation": worst}


def check_validity_equivalence(rng, draws):
    """The inequality form of validity agrees with 0 <= x1 <= lambda_A <= x2 <= 1."""
    a, b, u, v = (uniform_sphere_sample(rng, draws) for _ in range(4))
    ua, vb, ab = _dots(a, b, u, v)
    tol = kernels.VALID_TOL
    by_inequality = (np.abs(ab + ua) <= 1.0 - vb + tol) & (np.abs(ab - ua) <= 1.0 + vb + tol)
    x1 = 0.25 * (1.0 + ua - vb + ab)
    x2 = 0.25 * (3.0 + ua + vb + ab)
    lam_a = 0.5 * (1.0 + ua)
    # the interval form is checked with a slightly looser slack to absorb rounding
    slack = 2 * tol
    by_interval = (x1 >= -slack) & (x2 <= 1.0 + slack) & (x1 <= lam_a + slack) & (lam_a <= x2 + slack)
    strict_inner = (np.abs(ab + ua) <= 1.0 - vb - 4 * tol) & (np.abs(ab - ua) <= 1.0 + vb - 4 * tol)
    outer = (np.abs(ab + ua) <= 1.0 - vb + 4 * tol) & (np.abs(ab - ua) <= 1.0 + vb + 4 * tol)
    # disagreements are only tolerated in a rounding-width band around the boundary
    bad = (by_inequality != by_interval) & (strict_inner | ~outer)
    return {"checked": int(draws), "failures": int(bad.sum()), "valid_fraction": float(by_inequality.mean())}


def check_chsh_maximum(rng, samples):
    """Singlet pairs with polarizations normal to the measurement plane reach 2 sqrt 2."""
    normal = uniform_sphere_sample(rng).as_array()
    e1, e2 = plane_basis(normal)

    def setting(deg):
        t = math.radians(deg)
        return math.cos(t) * e1 + math.sin(t) * e2

    source = SourceModel.singlet(normal)
    a1, a2, b1, b2 = setting(45), setting(135), setting(0), setting(90)
    e = [source_correlation(source, x, y, samples, rng) for x, y in ((a1, b1), (a1, b2), (a2, b1), (a2, b2))]
    s = abs(e[0].value + e[1].value - e[2].value + e[3].value)
    se = math.sqrt(sum(x.std_error**2 for x in e))
    target = 2.0 * math.sqrt(2.0)
    z = abs(s - target) / se if se > 0 else (0.0 if s == target else math.inf)
    return {"checked": 1, "failures": int(z > N_SIGMA), "s": s, "std_error": se, "z": z}


def run_model_suite(rng, samples=100_000, configs=200, validity_draws=1_000_000):
    """Run every invariant check; returns ``{suite: tally}``."""
    return {
        "malus": check_malus(rng, samples, configs),
        "correlations": check_correlations(rng, samples, configs),
        "perfect_correlations": check_perfect_correlations(rng, samples, configs),
        "validity_equivalence": check_validity_equivalence(rng, validity_draws),
        "no_signalling": check_no_signalling(rng, samples, configs),
        "chsh_maximum": check_chsh_maximum(rng, samples),
    }
