"""Command line entry point: ``semiclass-lab run <config.json>`` and ``semiclass-lab list``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .evolution import NumericalAbort
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3, 4

DESCRIPTIONS = {
    "oracle": "RK4 against the constant-speed closed form; energy conservation",
    "theorem1": "energy growth rate along the flow, stability under refinement",
    "theorem2": "wave-packet probes of the localized two-sided estimate",
    "commutator_scaling": "O(t) law of the semicommutator of p^-1 and d",
    "dyadic_decay": "geometric decay of dyadic commutator pieces",
    "coercivity": "smallness of c_t(p, p^-1) and lower bound for p^-1(x, tD)",
    "boundedness": "uniform-in-t operator norms of d, p^-1<D>^m2 and p",
    "seminorm_scaling": "seminorms of p(x, t xi) nonincreasing as t decreases",
    "gamma_identity": "Gamma-transform Plancherel identity and duality bound",
}


def _load_configs(path, out_dir, n_override):
    raw = json.loads(Path(path).read_text())
    entries = raw["experiments"] if isinstance(raw, dict) and "experiments" in raw else [raw]
    if isinstance(raw, list):
        entries = raw
    cfgs = []
    for entry in entries:
        sub = Path(out_dir) / entry["name"] if out_dir else None
        cfg = ExperimentConfig.from_dict(entry, output_dir=str(sub) if sub else None)
        if n_override:
            cfg = cfg.with_n(n_override)
        cfgs.append(cfg)
    return cfgs


def _run_one(cfg):
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="[%(name)s] %(levelname)s %(message)s", force=True)
    try:
        report = run_experiment(cfg)
        return cfg.name, report.passed, None
    except NumericalAbort as exc:
        return cfg.name, False, f"numerical abort: {exc}"


def cmd_run(args) -> int:
    try:
        cfgs = _load_configs(args.config, args.out, args.n_override)
    except (ConfigError, OSError, json.JSONDecodeError, KeyError) as exc:
        logging.getLogger("semiclass_lab.cli").error("config rejected: %s", exc)
        return EXIT_CONFIG
    if args.workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, cfgs))
    else:
        results = [_run_one(c) for c in cfgs]
    log = logging.getLogger("semiclass_lab.cli")
    aborted = False
    failed = False
    for name, passed, err in results:
        if err:
            log.error("%s: %s", name, err)
            aborted = True
        elif not passed:
            failed = True
        print(f"{name}: {'ABORT' if err else ('pass' if passed else 'FAIL')}")
    if aborted:
        return EXIT_ABORT
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_list(args) -> int:
    for name in EXPERIMENTS:
        print(f"{name:20s} {DESCRIPTIONS[name]}")
    return EXIT_PASS


def build_parser():
    parser = argparse.ArgumentParser(prog="semiclass-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiments described by a JSON config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory (one subdirectory per experiment)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--n-override", type=int, default=None)
    run.set_defaults(func=cmd_run)
    lst = sub.add_parser("list", help="list the available experiments")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="[%(name)s] %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
