"""Command-line entry point ``vqcgenlab``."""
import argparse
import json
import logging
from pathlib import Path
import sys

from ..errors import ParseError, ValidationError
from . import experiments
from .records import load_json, write_csv, write_json
from .validate import MUTATIONS, SUITES, run_validation

COMMANDS = {
    "compile-scan": experiments.compile_scan,
    "near-solution": experiments.near_solution,
    "phase": experiments.phase,
    "bounds": experiments.bounds_report,
}

DEFAULT_CONFIGS = {
    "compile-scan": "compile_scan.json",
    "near-solution": "near_solution.json",
    "phase": "phase.json",
    "bounds": "bounds.json",
}

CONFIG_DIR = Path(__file__).parent / "configs"


def _seeds(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("seeds must be comma separated integers") from None


def load_config(path, command):
    path = Path(path) if path else CONFIG_DIR / DEFAULT_CONFIGS[command]
    try:
        cfg = load_json(path)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}: line {exc.lineno} column {exc.colno}") from None
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    # region definitions may live in a separate file next to the config
    ref = cfg.get("regions_config")
    if isinstance(ref, str):
        rp = Path(ref)
        if not rp.is_absolute():
            rp = (path.parent / rp) if (path.parent / rp).exists() else CONFIG_DIR / rp
        cfg["regions_config"] = load_json(rp)
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="vqcgenlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["validate"]:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config (default: the bundled sample)")
        s.add_argument("--out", default=f"out/{name}", help="output directory")
        s.add_argument("--seeds", type=_seeds, help="comma separated seeds, overrides the config")
        s.add_argument("--threads", type=int, default=1,
                       help="worker processes (VQCGENLAB_THREADS overrides)")
        if name == "validate":
            s.add_argument("--mutate", action="append", default=[], choices=sorted(MUTATIONS),
                           help="inject a deliberate fault (mutation test)")
            s.add_argument("--suite", action="append", default=[], choices=list(SUITES))
    return p


def _validate(args):
    seed = (args.seeds or [0])[0]
    results = run_validation(seed, args.mutate, args.suite)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "runs.csv", ["suite", "passed", "message"], results)
    write_csv(out / "timings.csv", ["suite", "wall_ms"], results)
    write_json(out / "summary.json", {"passed": all(r["passed"] for r in results),
                                      "suites": [{k: r[k] for k in ("suite", "passed", "message",
                                                                     "counterexample")}
                                                 for r in results]})
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{status}  {r['suite']:<26} {r['wall_ms']:9.1f} ms  {r['message']}")
        if not r["passed"] and r["counterexample"] is not None:
            print("      counterexample:", json.dumps(r["counterexample"])[:2000])
    print(f"{sum(r['passed'] for r in results)}/{len(results)} suites passed")
    return 0 if all(r["passed"] for r in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return _validate(args)
        cfg = load_config(args.config, args.command)
        seeds = args.seeds or cfg.get("seeds", [0])
        threads = experiments.thread_count(args.threads)
        summary = COMMANDS[args.command](cfg, seeds, args.out, threads)
    except (ValidationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
