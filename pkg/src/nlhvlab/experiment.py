"""Simulated coincidence-counting runs of the orthogonal-plane protocol.

Alice measures a1 and a2, Bob measures b1, b2 and b3 = a2. The pairs
(a1, b1) and (a2, b2) lie in orthogonal great circles with the same relative
angle phi, which feeds the Leggett-type inequality; the cross terms
E(a2, b1) and E(a1, b2) complete the CHSH combination.
"""
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import inequalities as ineq
from .errors import ConfigError, DegeneratePlane, EmptyTable, GeometryError
from .estimates import CorrelationEstimate
from .geometry import PlanePair, Plane, PolarizerSetting, planes_orthogonal, polarizer_to_poincare, sphere_angle
from .nlhv_model import SourceModel, source_correlation
from .quantum import cell_probabilities

SETTING_NAMES = ("alpha1", "alpha2", "beta1", "beta2", "beta3")
DEFAULT_PLANES = {"alpha1": "linear", "alpha2": "rotated", "beta1": "linear", "beta2": "rotated", "beta3": "rotated"}
# which correlations the protocol measures: name -> (Alice setting, Bob setting)
PAIRS = {
    "E11": ("alpha1", "beta1"),
    "E22": ("alpha2", "beta2"),
    "E23": ("alpha2", "beta3"),
    "E21": ("alpha2", "beta1"),
    "E12": ("alpha1", "beta2"),
}


@dataclass(frozen=True)
class CountTable:
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int

    def __post_init__(self):
        if min(self.n_pp, self.n_pm, self.n_mp, self.n_mm) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self):
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm


def correlation_from_counts(c):
    """(N++ + N-- - N+- - N-+) / N with first-order Poisson error sqrt(4 S D / N^3)."""
    n = c.total
    if n == 0:
        raise EmptyTable("no coincidences recorded")
    same = c.n_pp + c.n_mm
    diff = c.n_pm + c.n_mp
    value = (same - diff) / n
    return CorrelationEstimate(value, math.sqrt(4.0 * same * diff / n**3), n)


def simulate_counts(a, b, vis, mean_pairs, rng):
    """Independent Poisson counts per outcome cell."""
    if not mean_pairs > 0:
        raise ValueError("mean_pairs must be positive")
    counts = rng.poisson(mean_pairs * cell_probabilities(a, b, vis))
    return CountTable(*(int(k) for k in counts))


@dataclass(frozen=True)
class ExperimentConfig:
    """Protocol settings in lab degrees plus run parameters.

    ``visibility_linear``, ``visibility_circular`` and
    ``visibility_intersection`` override the scalar visibility for E11, E22
    and E23 respectively; cross-plane terms always use ``visibility``.
    """

    alpha1: float = 45.0
    alpha2: float = 0.0
    beta1: float = 55.0
    beta2: float = 10.0
    beta3: float = 0.0
    planes: dict = field(default_factory=lambda: dict(DEFAULT_PLANES))
    visibility: float = 0.99
    visibility_linear: float = None
    visibility_circular: float = None
    visibility_intersection: float = None
    mean_pairs: float = 1e6
    seed: int = 42
    phi_grid: tuple = tuple(float(x) for x in range(0, 62, 2))
    model: str = "quantum"
    source: SourceModel = None
    allow_invalid: bool = False

    def __post_init__(self):
        for name in SETTING_NAMES:
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be a finite angle")
        planes = dict(DEFAULT_PLANES)
        planes.update(self.planes or {})
        try:
            planes = {k: Plane(v).value for k, v in planes.items()}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "planes", planes)
        for name in ("visibility", "visibility_linear", "visibility_circular", "visibility_intersection"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if not (self.mean_pairs > 0 and math.isfinite(self.mean_pairs)):
            raise ConfigError("mean_pairs must be positive")
        if self.model not in ("quantum", "nlhv"):
            raise ConfigError("model must be 'quantum' or 'nlhv'")
        if self.model == "nlhv" and self.source is None:
            raise ConfigError("model 'nlhv' needs a source")
        grid = tuple(float(x) for x in self.phi_grid)
        if not grid:
            raise ConfigError("phi_grid must not be empty")
        object.__setattr__(self, "phi_grid", grid)

    def role_visibility(self, name):
        override = {"E11": self.visibility_linear, "E22": self.visibility_circular,
                    "E23": self.visibility_intersection}.get(name)
        return self.visibility if override is None else override

    def vector(self, name):
        return polarizer_to_poincare(PolarizerSetting(getattr(self, name), Plane(self.planes[name])))

    def to_dict(self):
        out = asdict(self)
        out["phi_grid"] = list(self.phi_grid)
        out["source"] = None if self.source is None else self.source.to_dict()
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if data.get("source") is not None:
            try:
                data["source"] = SourceModel.from_dict(data["source"])
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"bad source: {exc}") from None
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def at_phi(self, phi_deg):
        """Copy with Bob's settings turned so both planes sit at relative angle phi."""
        half = phi_deg / 2.0
        return replace(self, beta1=self.alpha1 + half, beta2=self.alpha2 + half, beta3=self.alpha2,
                       planes={**self.planes, "beta3": self.planes["alpha2"]})


def check_geometry(cfg):
    """Return the common relative angle phi or raise GeometryError."""
    v = {name: cfg.vector(name) for name in SETTING_NAMES}
    try:
        orthogonal = planes_orthogonal(PlanePair((v["alpha1"], v["beta1"]), (v["alpha2"], v["beta2"])))
    except DegeneratePlane:
        # phi = 0: fall back to the great circles the polarizers were configured in
        p = cfg.planes
        orthogonal = p["alpha1"] == p["beta1"] and p["alpha2"] == p["beta2"] and p["alpha1"] != p["alpha2"]
    if not orthogonal:
        raise GeometryError("plane(a1, b1) is not orthogonal to plane(a2, b2)")
    if not np.allclose(v["beta3"], v["alpha2"], atol=1e-12):
        raise GeometryError("b3 must coincide with a2")
    phi1 = sphere_angle(v["alpha1"], v["beta1"])
    phi2 = sphere_angle(v["alpha2"], v["beta2"])
    if abs(phi1 - phi2) > 1e-9:
        raise GeometryError(f"relative angles differ between planes: "
                            f"{math.degrees(phi1):.6f} vs {math.degrees(phi2):.6f} deg")
    return phi1


@dataclass(frozen=True)
class ProtocolReport:
    phi: float
    correlations: dict
    nlhv: ineq.InequalityReport
    chsh: ineq.InequalityReport
    analytic_nlhv: float = None
    analytic_chsh: float = None
    model: str = "quantum"
    clamped: bool = False

    def to_dict(self):
        return {
            "phi_deg": math.degrees(self.phi),
            "model": self.model,
            "clamped": self.clamped,
            "correlations": {k: e.to_dict() for k, e in self.correlations.items()},
            "s_nlhv": self.nlhv.to_dict(),
            "s_chsh": self.chsh.to_dict(),
            "analytic": {"s_nlhv": self.analytic_nlhv, "s_chsh": self.analytic_chsh},
        }


def evaluate_protocol(correlations, phi):
    """Build both inequality reports from the five measured correlations."""
    c = correlations
    return (ineq.leggett_report(c["E11"], c["E22"], c["E23"], phi),
            ineq.chsh_report(c["E11"], c["E12"], c["E21"], c["E22"], phi))


def analytic_values(cfg):
    """Noise-free S_NLHV and S_CHSH for the configured settings and visibilities."""
    e = {}
    for name, (sa, sb) in PAIRS.items():
        e[name] = -cfg.role_visibility(name) * float(np.dot(cfg.vector(sa), cfg.vector(sb)))
    phi = sphere_angle(cfg.vector("alpha1"), cfg.vector("beta1"))
    s_nlhv = ineq.leggett_lhs(ineq.LeggettInputs(e["E11"], e["E22"], e["E23"], phi))
    s_chsh = ineq.chsh_value(e["E11"], e["E12"], e["E21"], e["E22"])
    return s_nlhv, s_chsh


def _run(cfg, seed_seq):
    phi = check_geometry(cfg)
    streams = [np.random.default_rng(s) for s in seed_seq.spawn(len(PAIRS))]
    correlations = {}
    clamped = False
    for (name, (sa, sb)), rng in zip(PAIRS.items(), streams):
        a, b = cfg.vector(sa), cfg.vector(sb)
        if cfg.model == "quantum":
            table = simulate_counts(a, b, cfg.role_visibility(name), cfg.mean_pairs, rng)
            correlations[name] = correlation_from_counts(table)
        else:
            n = max(1, int(round(cfg.mean_pairs)))
            policy = "clamp" if cfg.allow_invalid else "strict"
            correlations[name] = source_correlation(cfg.source, a, b, n, rng, policy)
            clamped = cfg.allow_invalid
    nlhv, chsh = evaluate_protocol(correlations, phi)
    s_nlhv, s_chsh = analytic_values(cfg) if cfg.model == "quantum" else (None, None)
    return ProtocolReport(phi, correlations, nlhv, chsh, s_nlhv, s_chsh, cfg.model, clamped)


def run_protocol(cfg):
    """Simulate the five correlations and evaluate both inequalities.

    Each correlation draws from its own stream spawned from ``cfg.seed``.
    """
    return _run(cfg, np.random.SeedSequence(cfg.seed))


SWEEP_COLUMNS = ("phi_deg", "s_nlhv_analytic", "s_nlhv_mc", "s_nlhv_mc_err", "leggett_bound",
                 "s_chsh_analytic", "s_chsh_mc", "s_chsh_mc_err", "chsh_bound")


def sweep_phi(cfg):
    """One protocol run per grid angle (degrees); rows keyed by SWEEP_COLUMNS."""
    rows = []
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.phi_grid))
    for phi_deg, seed_seq in zip(cfg.phi_grid, seeds):
        rep = _run(cfg.at_phi(phi_deg), seed_seq)
        phi = math.radians(phi_deg)
        rows.append({
            "phi_deg": phi_deg,
            "s_nlhv_analytic": rep.analytic_nlhv,
            "s_nlhv_mc": rep.nlhv.lhs,
            "s_nlhv_mc_err": rep.nlhv.std_error,
            "leggett_bound": float(ineq.leggett_bound(phi)),
            "s_chsh_analytic": rep.analytic_chsh,
            "s_chsh_mc": rep.chsh.lhs,
            "s_chsh_mc_err": rep.chsh.std_error,
            "chsh_bound": ineq.CHSH_BOUND,
        })
    return rows


def pairs_for_target_error(phi, vis, target):
    """Mean pairs per setting giving an expected S_NLHV error of ``target``.

    Uses var(E) = (1 - E^2) / N for each correlation and the propagation of
    :func:`nlhvlab.inequalities.leggett_report`.
    """
    e_phi = vis * math.cos(phi)
    var_unit = 2.0 * (1.0 - e_phi**2) + 2.0 * (1.0 - vis**2)
    return var_unit / target**2
