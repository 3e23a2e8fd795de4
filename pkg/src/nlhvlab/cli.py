"""Command-line entry point: ``nlhvlab {bounds,scan,simulate,audit,model-check}``.

Exit codes: 0 success, 2 flag or config error, 3 geometry or model-validity
error, 4 audit or check failure.
"""
import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, inequalities as ineq
from ._accel import backend
from .audit import audit_full_chain, run_lemma_checks
from .errors import ConfigError, GeometryError, ModelInvalid, NlhvError
from .experiment import SWEEP_COLUMNS, ExperimentConfig, run_protocol, sweep_phi
from .model_checks import run_model_suite

EXIT_OK, EXIT_USAGE, EXIT_GEOMETRY, EXIT_AUDIT = 0, 2, 3, 4
SEED_ENV = "NLHVLAB_SEED"
CSV_SCHEMA = "scan-v1"


class UsageError(Exception):
    pass


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def manifest(subcommand, config, seed, outputs=(), **extra):
    out = {"subcommand": subcommand, "config": config, "seed": seed, "version": __version__,
           "backend": backend(), "outputs": [str(p) for p in outputs]}
    out.update(extra)
    return out


def parse_range(text):
    """'start:stop:step' in degrees, stop included when it lands on the grid."""
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError:
        raise UsageError(f"bad range {text!r}") from None
    if len(parts) == 1:
        return (parts[0],)
    if len(parts) != 3:
        raise UsageError("range must look like start:stop:step")
    start, stop, step = parts
    if not step > 0 or stop < start:
        raise UsageError("range needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(count))


def positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return x


def positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return x


def unit_interval(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return x


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def bounds_report(vis=1.0):
    phi_max = ineq.find_phi_max()
    try:
        low, high = ineq.violation_window(vis)
        window = [math.degrees(low), math.degrees(high)]
    except ineq.NoViolation:
        window = None
    return {
        "phi_max_deg": math.degrees(phi_max),
        "phi_max_margin_deg": math.degrees(ineq.find_phi_max_margin()),
        "leggett_bound": float(ineq.leggett_bound(phi_max)),
        "quantum_leggett_lhs": float(ineq.quantum_leggett_lhs(phi_max)),
        "quantum_chsh": float(ineq.quantum_chsh_at_settings(phi_max)),
        "critical_visibility_nlhv": ineq.critical_visibility_nlhv(phi_max),
        "critical_visibility_chsh_here": ineq.critical_visibility_chsh_here(phi_max),
        "critical_visibility_chsh_standard": ineq.critical_visibility_chsh_standard(),
        "visibility": vis,
        "violation_window_deg": window,
    }


def cmd_bounds(args):
    rep = bounds_report(args.vis)
    if args.json:
        _emit_json({"manifest": manifest("bounds", {"vis": args.vis}, None), "bounds": rep}, None)
        return EXIT_OK
    for key, value in rep.items():
        print(f"{key}: {value!r}")
    return EXIT_OK


def cmd_scan(args):
    seed = default_seed() if args.seed is None else args.seed
    cfg = ExperimentConfig(visibility=args.vis, mean_pairs=args.pairs, seed=seed, phi_grid=parse_range(args.phi))
    rows = sweep_phi(cfg)
    out = Path(args.out)
    side = out.with_name(out.name + ".manifest.json")
    man = manifest("scan", cfg.to_dict(), seed, [out, side], csv_schema=CSV_SCHEMA, columns=list(SWEEP_COLUMNS))
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(row[c])) for c in SWEEP_COLUMNS])
    _emit_json(man, side)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def load_config(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(data)


def cmd_simulate(args):
    cfg = load_config(args.config)
    if args.allow_invalid:
        cfg = replace(cfg, allow_invalid=True)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    rep = run_protocol(cfg)
    outputs = [args.out] if args.out else []
    _emit_json({"manifest": manifest("simulate", cfg.to_dict(), cfg.seed, outputs), "report": rep.to_dict()},
               args.out)
    return EXIT_OK


def cmd_audit(args):
    seed = default_seed() if args.seed is None else args.seed
    lemma_rng, chain_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    lemmas = run_lemma_checks(lemma_rng)
    policy = "strict" if args.strict else "clamp"
    chain = audit_full_chain(args.trials, chain_rng, n_xi=args.n_xi, n_mc=args.n_mc, policy=policy)
    ok = chain.ok and all(t["failures"] == 0 for t in lemmas.values())
    config = {"trials": args.trials, "n_xi": args.n_xi, "n_mc": args.n_mc, "policy": policy}
    _emit_json({"manifest": manifest("audit", config, seed, [args.out] if args.out else []),
                "ok": ok, "lemmas": lemmas, "chain": chain.to_dict()}, args.out)
    return EXIT_OK if ok else EXIT_AUDIT


def cmd_model_check(args):
    seed = default_seed() if args.seed is None else args.seed
    suites = run_model_suite(np.random.default_rng(seed), samples=args.samples, configs=args.configs)
    ok = all(t["failures"] == 0 for t in suites.values())
    config = {"samples": args.samples, "configs": args.configs}
    _emit_json({"manifest": manifest("model-check", config, seed, [args.out] if args.out else []),
                "ok": ok, "suites": suites}, args.out)
    return EXIT_OK if ok else EXIT_AUDIT


def build_parser():
    p = argparse.ArgumentParser(prog="nlhvlab", description="Leggett-type and CHSH inequality toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bounds", help="print the optimum angle, constants and critical visibilities")
    s.add_argument("--vis", type=unit_interval, default=1.0, help="visibility for the violation window")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("scan", help="sweep the relative angle and write a CSV table")
    s.add_argument("--vis", type=unit_interval, default=0.99)
    s.add_argument("--phi", default="0:60:2", help="start:stop:step in degrees")
    s.add_argument("--pairs", type=positive_float, default=1e6, help="mean pairs per setting")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("simulate", help="run the protocol from a JSON config")
    s.add_argument("config")
    s.add_argument("--seed", type=int, default=None, help="override the config seed")
    s.add_argument("--allow-invalid", action="store_true", help="clamp Bob's interval instead of failing")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("audit", help="numerical audit of the bound derivation")
    s.add_argument("--trials", type=positive_int, default=100)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--n-xi", type=positive_int, default=360)
    s.add_argument("--n-mc", type=positive_int, default=1000)
    s.add_argument("--strict", action="store_true", help="exclude trials that leave the validity region")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("model-check", help="invariant suite for the hidden-variable model")
    s.add_argument("--samples", type=positive_int, default=100_000)
    s.add_argument("--configs", type=positive_int, default=200)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_model_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, ModelInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (NlhvError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
