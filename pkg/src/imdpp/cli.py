"""Command line: run experiments, verify acceptance checks, generate datasets."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, ImdppError
from .harness import SOLVERS, Dataset, ExperimentConfig, SyntheticSpec, generate_synthetic


def _load_json(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"not valid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigError(str(path), "top level must be an object")
    return d


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.solver:
        cfg.solvers = list(args.solver)
    if args.out:
        cfg.output = args.out
    if args.workers:
        cfg.workers = args.workers
    cfg.validate()
    from .harness import run_experiment
    path = run_experiment(cfg)
    print(f"wrote {path}")
    return 0


VERIFY_KEYS = {"checks", "perturb_dr"}


def cmd_verify(args) -> int:
    d = _load_json(args.config) if args.config else {}
    for key in d:
        if key not in VERIFY_KEYS:
            raise ConfigError(key, "unknown verify key")
    checks = args.check or d.get("checks") or None
    perturb = args.perturb_dr or bool(d.get("perturb_dr", False))
    from .verification import run_checks
    results = run_checks(checks, perturb_dr=perturb)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else 1


def cmd_generate(args) -> int:
    spec = SyntheticSpec.from_dict(_load_json(args.spec))
    generate_synthetic(spec).save(args.out)
    print(f"wrote dataset to {args.out}")
    return 0


def cmd_estimate(args) -> int:
    from .diffusion import sigma_estimate, simulate_campaign, trace_jsonl
    from .harness import read_seeds, write_estimate
    from .world import Params
    world = Dataset.load(args.dataset).world(Params(args.eta, args.lam, args.mu, args.model))
    seeds = read_seeds(args.seeds)
    sig, se = sigma_estimate(seeds, world, args.T, args.samples, args.seed, budget=args.budget)
    print(f"sigma={sig:.6g} stderr={se:.6g}")
    if args.out:
        write_estimate(args.out, sig, se, args.samples, args.seed)
    if args.trace:
        Path(args.trace).write_text(trace_jsonl(simulate_campaign(seeds, world, args.T, args.seed)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imdpp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve and evaluate an experiment grid")
    r.add_argument("--config", required=True)
    r.add_argument("--solver", action="append", choices=SOLVERS,
                   help="override the configured solver list (repeatable)")
    r.add_argument("--out", help="override the output directory")
    r.add_argument("--workers", type=int)
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--config")
    v.add_argument("--check", type=int, action="append", help="run only this check (repeatable)")
    v.add_argument("--perturb-dr", action="store_true",
                   help="flip the sign of the substitutable term (negative control)")
    v.set_defaults(fn=cmd_verify)

    g = sub.add_parser("generate", help="write a synthetic dataset")
    g.add_argument("--spec", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    e = sub.add_parser("estimate", help="Monte Carlo influence of a seed file")
    e.add_argument("--dataset", required=True)
    e.add_argument("--seeds", required=True)
    e.add_argument("--T", type=int, required=True)
    e.add_argument("--samples", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--budget", type=float)
    e.add_argument("--eta", type=float, default=0.5)
    e.add_argument("--lam", type=float, default=0.1)
    e.add_argument("--mu", type=float, default=0.25)
    e.add_argument("--model", choices=("ic", "lt"), default="ic")
    e.add_argument("--out", help="estimate CSV")
    e.add_argument("--trace", help="trace of sample 0 as JSON lines")
    e.set_defaults(fn=cmd_estimate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ImdppError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
