"""Command-line entry point.

Usage:
    dyniso <mode> --input FILE [--verify] [--timing] [--seed S]
           [--epoch E] [--max-candidates K] [--report json|text]
    dyniso gen --kind MODE --n N --batches B --batch-size K --seed S

Modes: rank, reach, dist, match-det, match-rank.  The run commands emit
one line-delimited JSON record per query (or an aligned text table with
--report text) and exit non-zero iff any verified answer mismatched.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import DynIsoError
from .harness import (
    MODES,
    RunOptions,
    gen_scenario,
    parse_scenario,
    run_scenario,
    run_timing,
)

_TEXT_COLUMNS = ("query_id", "query", "answer", "oracle", "match", "micros")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyniso",
        description="Dynamic rank / reachability / matching over change scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for mode in MODES:
        sp = sub.add_parser(mode, help=f"replay a scenario in {mode} mode")
        sp.add_argument("--input", required=True, help="scenario file, '-' for stdin")
        sp.add_argument("--verify", action="store_true",
                        help="cross-check every answer against the oracle")
        sp.add_argument("--timing", action="store_true",
                        help="report dynamic vs. from-scratch per-batch time")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--epoch", type=int, default=None,
                        help="epoch batch budget override")
        sp.add_argument("--max-candidates", type=int, default=None,
                        help="weight-family candidate cap override")
        sp.add_argument("--report", choices=("json", "text"), default="json")

    gen = sub.add_parser("gen", help="generate a deterministic random scenario")
    gen.add_argument("--kind", required=True, choices=MODES)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--batches", type=int, required=True)
    gen.add_argument("--batch-size", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", default="-", help="output file, '-' for stdout")
    return parser


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit_text(report: dict, out) -> None:
    widths = {c: len(c) for c in _TEXT_COLUMNS}
    rows = []
    for rec in report["records"]:
        row = {c: json.dumps(rec.get(c)) for c in _TEXT_COLUMNS}
        for c in _TEXT_COLUMNS:
            widths[c] = max(widths[c], len(row[c]))
        rows.append(row)
    print("  ".join(c.ljust(widths[c]) for c in _TEXT_COLUMNS), file=out)
    for row in rows:
        print("  ".join(row[c].ljust(widths[c]) for c in _TEXT_COLUMNS), file=out)
    print(f"mismatches: {report['mismatches']}", file=out)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout

    try:
        if args.command == "gen":
            text = gen_scenario(
                args.kind, args.n, args.batches, args.batch_size, args.seed
            )
            if args.output == "-":
                out.write(text)
            else:
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(text)
            return 0

        scenario = parse_scenario(_read_input(args.input))
        options = RunOptions(
            seed=args.seed,
            verify=args.verify,
            epoch=args.epoch,
            max_candidates=args.max_candidates,
        )
        if args.timing:
            print(json.dumps(run_timing(scenario, args.command, options)), file=out)
            return 0
        report = run_scenario(scenario, args.command, options)
        if args.report == "json":
            for rec in report["records"]:
                print(json.dumps(rec), file=out)
        else:
            _emit_text(report, out)
        return 1 if report["mismatches"] else 0
    except DynIsoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
