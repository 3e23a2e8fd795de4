"""Explicit non-local hidden-variable model.

A pair is emitted with definite polarizations u (to Alice) and v (to Bob)
and a shared hidden variable lambda, uniform on [0, 1]. Alice answers +1 on
[0, lambda_A] with lambda_A = (1 + u.a)/2. Bob answers +1 on [x1, x2], an
interval of width (1 + v.b)/2 whose position depends on Alice's setting and
polarization. Inside the validity region every subensemble reproduces the
singlet correlation -a.b together with Malus' law on both sides.

Two policies govern inputs outside that region:

``"strict"``
    raise :class:`ModelInvalid` (default).
``"clamp"``
    slide Bob's interval back inside [0, 1] at fixed width. Malus' law still
    holds, so the model stays inside the class the Leggett-type bound covers,
    but correlations no longer equal -a.b. Results are labelled as clamped.
"""
import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ModelInvalid
from .estimates import estimate_from_products
from .geometry import PoincareVector, uniform_sphere_sample

POLICIES = ("strict", "clamp")


class Side(enum.Enum):
    ALICE = "alice"
    BOB = "bob"


class SourceKind(enum.Enum):
    SINGLET = "singlet"
    FIXED_PAIR = "fixed_pair"
    WEIGHTED_LIST = "weighted_list"


def _vec(x):
    return np.asarray(x, dtype=float)


def _check_policy(policy):
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def _check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"hidden variable must lie in [0, 1], got {lam}")


@dataclass(frozen=True, eq=False)
class SourceModel:
    """Distribution F(u, v) of emitted polarization pairs.

    Build instances with :meth:`singlet`, :meth:`fixed_pair` or
    :meth:`weighted_list`. A singlet source emits (u, -u) or (-u, u) with
    equal probability; u is uniform on the sphere, or fixed to the given
    ``normal`` when measurements are confined to the plane orthogonal to it.
    """

    kind: SourceKind
    us: np.ndarray = None
    vs: np.ndarray = None
    weights: np.ndarray = None
    normal: np.ndarray = None

    @classmethod
    def singlet(cls, normal=None):
        if normal is not None:
            normal = PoincareVector.normalized(normal).as_array()
        return cls(SourceKind.SINGLET, normal=normal)

    @classmethod
    def fixed_pair(cls, u, v):
        us = PoincareVector.normalized(u).as_array()[None, :]
        vs = PoincareVector.normalized(v).as_array()[None, :]
        return cls(SourceKind.FIXED_PAIR, us, vs, np.ones(1))

    @classmethod
    def weighted_list(cls, pairs, weights):
        if len(pairs) == 0 or len(pairs) != len(weights):
            raise ValueError("need one weight per (u, v) pair and at least one pair")
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
            raise ValueError("weights must be finite, nonnegative and not all zero")
        us = np.array([PoincareVector.normalized(u) for u, _ in pairs])
        vs = np.array([PoincareVector.normalized(v) for _, v in pairs])
        return cls(SourceKind.WEIGHTED_LIST, us, vs, w / w.sum())

    def to_dict(self):
        if self.kind is SourceKind.SINGLET:
            normal = None if self.normal is None else self.normal.tolist()
            return {"kind": self.kind.value, "normal": normal}
        if self.kind is SourceKind.FIXED_PAIR:
            return {"kind": self.kind.value, "u": self.us[0].tolist(), "v": self.vs[0].tolist()}
        return {
            "kind": self.kind.value,
            "pairs": [{"u": u.tolist(), "v": v.tolist(), "weight": float(w)}
                      for u, v, w in zip(self.us, self.vs, self.weights)],
        }

    @classmethod
    def from_dict(cls, data):
        kind = SourceKind(data["kind"])
        if kind is SourceKind.SINGLET:
            return cls.singlet(data.get("normal"))
        if kind is SourceKind.FIXED_PAIR:
            return cls.fixed_pair(data["u"], data["v"])
        pairs = data["pairs"]
        return cls.weighted_list([(p["u"], p["v"]) for p in pairs], [p["weight"] for p in pairs])

    def project(self, rng, a_rows, b_rows, n):
        """Draw n pairs per setting row and return their overlaps with the settings.

        Returns ``(ua, vb, pair_at)``: two (m, n) arrays of u.a and v.b and a
        function mapping a draw index (row, column) back to its (u, v).
        """
        a_rows = np.atleast_2d(_vec(a_rows))
        b_rows = np.atleast_2d(_vec(b_rows))
        m = a_rows.shape[0]
        if self.kind is SourceKind.SINGLET:
            sign = rng.integers(0, 2, size=(m, n)) * 2.0 - 1.0
            if self.normal is None:
                w = uniform_sphere_sample(rng, m * n).reshape(m, n, 3)
                wa = np.einsum("mnk,mk->mn", w, a_rows)
                wb = np.einsum("mnk,mk->mn", w, b_rows)

                def base(r, i):
                    return w[r, i]
            else:
                wa = (a_rows @ self.normal)[:, None] * np.ones((1, n))
                wb = (b_rows @ self.normal)[:, None] * np.ones((1, n))

                def base(r, i):
                    return self.normal

            def pair_at(r, i):
                u = sign[r, i] * base(r, i)
                return u, -u

            return sign * wa, -sign * wb, pair_at

        pu = a_rows @ self.us.T
        pv = b_rows @ self.vs.T
        if len(self.weights) == 1:
            idx = np.zeros((m, n), dtype=np.intp)
        else:
            idx = rng.choice(len(self.weights), size=(m, n), p=self.weights)

        def pair_at(r, i):
            k = idx[r, i]
            return self.us[k], self.vs[k]

        return np.take_along_axis(pu, idx, axis=1), np.take_along_axis(pv, idx, axis=1), pair_at


@dataclass(frozen=True)
class BobInterval:
    x1: float
    x2: float
    clamped: bool = False

    @property
    def width(self):
        return self.x2 - self.x1

    def contains(self, lam):
        return self.x1 <= lam <= self.x2


def _dots(a, b, u, v):
    a, b, u, v = map(_vec, (a, b, u, v))
    return float(u @ a), float(v @ b), float(a @ b)


def lambda_a(a, u):
    return 0.5 * (1.0 + float(_vec(u) @ _vec(a)))


def alice_outcome(a, u, lam):
    _check_lambda(lam)
    return 1 if lam <= lambda_a(a, u) else -1


def bob_interval(a, b, u, v, policy="strict"):
    """Bob's +1 interval for one subensemble.

    Raises :class:`ModelInvalid` under the strict policy when the printed
    interval leaves [0, 1].
    """
    _check_policy(policy)
    ua, vb, ab = _dots(a, b, u, v)
    x1 = 0.25 * (1.0 + ua - vb + ab)
    x2 = 0.25 * (3.0 + ua + vb + ab)
    tol = kernels.VALID_TOL
    if x1 >= -tol and x2 <= 1.0 + tol:
        return BobInterval(x1, x2)
    if policy == "strict":
        raise ModelInvalid(f"Bob's interval [{x1:.6g}, {x2:.6g}] leaves [0, 1]",
                           a=_vec(a), b=_vec(b), u=_vec(u), v=_vec(v))
    width = 0.5 * (1.0 + vb)
    lo = min(max(x1, 0.0), 1.0 - width)
    return BobInterval(lo, lo + width, clamped=True)


def bob_outcome(a, b, u, v, lam, policy="strict"):
    _check_lambda(lam)
    iv = bob_interval(a, b, u, v, policy)
    # same placement arithmetic as the Monte Carlo kernels
    width = 0.5 * (1.0 + float(_vec(v) @ _vec(b)))
    lo = min(max(iv.x1, 0.0), 1.0 - width)
    return 1 if lo <= lam <= lo + width else -1


def model_valid(a, b, u, v, tol=kernels.VALID_TOL):
    """Validity region |a.b + u.a| <= 1 - v.b and |a.b - u.a| <= 1 + v.b."""
    ua, vb, ab = _dots(a, b, u, v)
    return abs(ab + ua) <= 1.0 - vb + tol and abs(ab - ua) <= 1.0 + vb + tol


def subensemble_averages(a, b, u, v):
    """Closed-form lambda averages (mean A, mean B, mean AB) of one subensemble."""
    if not model_valid(a, b, u, v):
        raise ModelInvalid("subensemble outside the validity region",
                           a=_vec(a), b=_vec(b), u=_vec(u), v=_vec(v))
    ua, vb, ab = _dots(a, b, u, v)
    return ua, vb, -ab


def exact_correlation(a, b, u, v, policy="strict"):
    """Mean of AB over lambda by exact integration of the piecewise outcomes."""
    _check_policy(policy)
    if policy == "strict" and not model_valid(a, b, u, v):
        raise ModelInvalid("subensemble outside the validity region",
                           a=_vec(a), b=_vec(b), u=_vec(u), v=_vec(v))
    ua, vb, ab = _dots(a, b, u, v)
    return float(kernels.exact_mean_product(ua, vb, ab))


@dataclass(frozen=True)
class MonteCarloTally:
    n_per_row: int
    a_plus: np.ndarray
    b_plus: np.ndarray
    ab_plus: np.ndarray
    invalid: np.ndarray

    @property
    def invalid_fraction(self):
        return float(self.invalid.sum()) / (self.n_per_row * self.invalid.size)

    def correlation(self):
        return estimate_from_products(self.ab_plus, self.n_per_row)

    def alice_mean(self):
        return estimate_from_products(self.a_plus, self.n_per_row)

    def bob_mean(self):
        return estimate_from_products(self.b_plus, self.n_per_row)


def sample_tally(source, a_rows, b_rows, n, rng, policy="strict"):
    """Run the model for n draws per setting row and tally outcomes.

    Under the strict policy any draw outside the validity region raises
    :class:`ModelInvalid` carrying the first offending configuration.
    """
    _check_policy(policy)
    if n < 1:
        raise ValueError("need at least one sample")
    a_rows = np.atleast_2d(_vec(a_rows))
    b_rows = np.atleast_2d(_vec(b_rows))
    ua, vb, pair_at = source.project(rng, a_rows, b_rows, n)
    ab = np.einsum("mk,mk->m", a_rows, b_rows)
    lam = rng.random(ua.shape)
    a_plus, b_plus, ab_plus, invalid = kernels.outcome_counts(ua, vb, ab, lam)
    tally = MonteCarloTally(n, a_plus, b_plus, ab_plus, invalid)
    if policy == "strict" and invalid.any():
        bad = ~((np.abs(ab[:, None] + ua) <= 1.0 - vb + kernels.VALID_TOL)
                & (np.abs(ab[:, None] - ua) <= 1.0 + vb + kernels.VALID_TOL))
        r, i = np.argwhere(bad)[0]
        u, v = pair_at(r, i)
        frac = tally.invalid_fraction
        raise ModelInvalid(f"{frac:.3%} of draws fall outside the validity region",
                           a=a_rows[r], b=b_rows[r], u=np.array(u), v=np.array(v),
                           invalid_fraction=frac)
    return tally


def source_correlation(source, a, b, n, rng, policy="strict"):
    """Monte Carlo estimate of <AB> for the given source and settings."""
    return sample_tally(source, a, b, n, rng, policy).correlation()


def local_average(source, side, setting, n, rng, partner=None, policy="strict"):
    """Monte Carlo estimate of <A> or <B> for one side.

    Bob's outcome depends on Alice's setting, so ``partner`` (her setting) is
    required for ``side="bob"``. Alice's outcome ignores Bob entirely.
    """
    side = Side(side)
    if side is Side.ALICE:
        tally = sample_tally(source, setting, setting, n, rng, policy="clamp")
        return tally.alice_mean()
    if partner is None:
        raise ValueError("Bob's local average needs Alice's setting as partner")
    return sample_tally(source, partner, setting, n, rng, policy).bob_mean()


def configuration_tally(ua, vb, ab, n, rng, block=1 << 22):
    """Tally n lambda draws for each fixed subensemble (ua[i], vb[i], ab[i]).

    Rows are processed in blocks of about ``block`` draws so that large n
    does not materialize one huge lambda array. No validity policy is
    applied; the returned tally flags invalid rows for the caller.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    ua, vb, ab = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (ua, vb, ab))
    m = ua.shape[0]
    rows = max(1, block // n)
    out = [np.zeros(m, dtype=np.int64) for _ in range(4)]
    for start in range(0, m, rows):
        sl = slice(start, min(m, start + rows))
        k = sl.stop - sl.start
        # long rows are split into column chunks so memory stays bounded
        step = min(n, block)
        for col in range(0, n, step):
            c = min(step, n - col)
            lam = rng.random((k, c))
            res = kernels.outcome_counts(np.repeat(ua[sl, None], c, axis=1),
                                         np.repeat(vb[sl, None], c, axis=1), ab[sl], lam)
            for acc, r in zip(out, res):
                acc[sl] += r
    return MonteCarloTally(n, *out)
