"""Command-line entry point.

Writes a machine-readable JSONL report (identical bytes for identical
arguments) and prints a human summary to stdout. Usage errors exit with
status 2, runtime failures with 1.
"""

from __future__ import annotations

import argparse
import sys

from .errors import CapacityError
from .harness import (
    MODES,
    ExperimentConfig,
    default_report_path,
    run_experiment,
    write_report,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridecrypt",
        description=(
            "Simulate the block-masked ride-matching protocol, measure how "
            "many responders pin down a rider block, and run the full "
            "location-recovery pipeline on generated road networks."
        ),
    )
    parser.add_argument("--mode", required=True, choices=MODES)
    parser.add_argument(
        "--l",
        type=int,
        default=None,
        help="bits per block (1..4); table1 runs all four widths when omitted",
    )
    parser.add_argument(
        "--m",
        type=int,
        default=None,
        help="blocks per coordinate (default: sized to the network diameter)",
    )
    parser.add_argument("--n", type=int, default=8, help="embedding dimension")
    parser.add_argument(
        "--trials",
        type=int,
        default=None,
        help="trials (table1) or sessions (session modes)",
    )
    parser.add_argument(
        "--drivers",
        type=int,
        default=None,
        help="responding drivers per session",
    )
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument(
        "--out",
        default=None,
        help="report path (default: $RIDECRYPT_REPORT_DIR/<mode>_report.jsonl)",
    )
    parser.add_argument(
        "--network-file",
        default=None,
        help="road-network file to use instead of a generated grid",
    )
    parser.add_argument(
        "--strict-lemma",
        action="store_true",
        help="declare a block recovered only once all 2^l differences appeared",
    )
    parser.add_argument("--rows", type=int, default=6, help="grid rows")
    parser.add_argument("--cols", type=int, default=6, help="grid columns")
    parser.add_argument(
        "--weights",
        type=int,
        nargs=2,
        default=(1, 9),
        metavar=("LO", "HI"),
        help="inclusive edge-weight range for generated grids",
    )
    parser.add_argument(
        "--merge-requests",
        action="store_true",
        help="accumulate one ledger across all sessions of a fixed rider",
    )
    parser.add_argument(
        "--workers", type=int, default=1, help="parallel workers (same output)"
    )
    return parser


def _summarize(records: list[dict]) -> str:
    lines = []
    for record in records:
        kind = record.get("record")
        if kind == "table1_row":
            lines.append(
                "l={l}: mean {mean:.4f} +/- {stderr:.4f} over {trials} trials "
                "(analytic {analytic:.4f}, ceiling {analytic_ceiling}, "
                "expected {expected_drivers})".format(**record)
            )
        elif kind == "aggregate":
            lines.append(
                "{sessions} sessions, {num_drivers} drivers: "
                "selection matched plaintext in {selection_matches}, "
                "distances matched in {distances_match}".format(**record)
            )
            if "sessions_fully_recovered" in record:
                lines.append(
                    "recovery: {sessions_fully_recovered} sessions fully "
                    "recovered, {sessions_rider_exact} rider-exact, "
                    "{sessions_sound} sound".format(**record)
                )
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    config = ExperimentConfig(
        mode=args.mode,
        block_bits=args.l,
        num_blocks=args.m,
        dim=args.n,
        rows=args.rows,
        cols=args.cols,
        weight_range=tuple(args.weights),
        network_file=args.network_file,
        num_drivers=args.drivers,
        trials=args.trials,
        seed=args.seed,
        strict_lemma=args.strict_lemma,
        merge_requests=args.merge_requests,
        workers=args.workers,
        out=args.out,
    )
    try:
        config.validate()
    except ValueError as exc:
        parser.error(str(exc))  # exits 2

    try:
        records = run_experiment(config)
    except (CapacityError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    path = args.out or default_report_path(args.mode)
    write_report(path, records)
    summary = _summarize(records)
    if summary:
        print(summary)
    print(f"report written to {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
