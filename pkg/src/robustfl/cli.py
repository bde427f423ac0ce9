"""Command line entry point.

    robustfl run CONFIG [--out DIR] [--workers N]
    robustfl sweep-alpha CONFIG --alphas 0.1 0.3 ... [--out DIR]
    robustfl summarize LOG [--from-round N]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import RobustFLError, SimulationError
from .runlog import read_log, summarize, write_log
from .simulation import simulate, sweep_alpha
from .smoothing import save_state


def _default_out(config_path: str) -> Path:
    return Path("runs") / Path(config_path).stem


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.workers:
        config = config.replace(workers=args.workers).validate()
    out = Path(args.out) if args.out else _default_out(args.config)
    log_path = out / "rounds.jsonl"
    try:
        result = simulate(config)
    except SimulationError as exc:
        write_log(exc.records, log_path)
        print(f"error: {exc} (partial log in {log_path})", file=sys.stderr)
        return 1
    write_log(result.records, log_path)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    if result.state is not None:
        save_state(result.state, out / "smoothing_state.bin")
    summary = summarize(result.records)
    summary["initial_accuracy"] = result.initial_accuracy
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    table = sweep_alpha(config, args.alphas)
    print("alpha\tfinal_accuracy")
    for alpha, acc in table:
        print(f"{alpha:g}\t{acc:.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [{"alpha": a, "accuracy": acc} for a, acc in table]
        (out / "alpha_sweep.json").write_text(json.dumps(rows, indent=2) + "\n")
    return 0


def cmd_summarize(args) -> int:
    try:
        records = read_log(args.log)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summarize(records, args.from_round), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustfl", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default runs/<config stem>)")
    p.add_argument("--workers", type=int, help="threads for client training")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-alpha", help="final accuracy per smoothing factor")
    p.add_argument("config")
    p.add_argument("--alphas", type=float, nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize", help="summarize a rounds.jsonl log")
    p.add_argument("log")
    p.add_argument("--from-round", type=int, default=1)
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RobustFLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
