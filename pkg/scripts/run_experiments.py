"""Run shipped experiment configs and print a one-line summary per experiment.

    python scripts/run_experiments.py                  # every experiment
    python scripts/run_experiments.py oracle theorem1  # a subset
    python scripts/run_experiments.py --workers 4 --out results
"""
import argparse
import json
import sys
from pathlib import Path

from semiclass_lab.cli import main as cli_main

CONFIGS = Path(__file__).resolve().parent / "configs"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("names", nargs="*", help="experiment names (default: all)")
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--n-override", type=int, default=None)
    args = parser.parse_args(argv)

    entries = json.loads((CONFIGS / "all.json").read_text())["experiments"]
    if args.names:
        known = {e["name"] for e in entries}
        unknown = set(args.names) - known
        if unknown:
            parser.error(f"unknown experiments: {', '.join(sorted(unknown))}")
        entries = [e for e in entries if e["name"] in args.names]
    Path(args.out).mkdir(parents=True, exist_ok=True)
    selection = Path(args.out) / "selection.json"
    selection.write_text(json.dumps({"experiments": entries}, indent=2))
    cli_args = ["run", str(selection), "--out", args.out, "--workers", str(args.workers)]
    if args.n_override:
        cli_args += ["--n-override", str(args.n_override)]
    return cli_main(cli_args)


if __name__ == "__main__":
    sys.exit(main())
