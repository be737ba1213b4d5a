"""Command-line interface: ingest, run, analyze, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..analysis.distances import pairwise_domain_distances
from ..data.cache import ingest
from ..data.types import NormalizationSpec
from ..errors import HaroodError
from ..scenarios.serialize import load_bundle
from .config import parse_config, parse_override_pairs
from .report import emit_report
from .store import ResultsStore
from .train import train_entry

_NORM_ALIASES = {"minmax": "min_max", "zscore": "z_score",
                 "min_max": "min_max", "z_score": "z_score", "none": "none"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harood",
        description="Out-of-distribution generalization benchmark for "
                    "sensor-based human activity recognition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="convert a raw dataset into the cache")
    p_ingest.add_argument("--dataset", required=True)
    p_ingest.add_argument("--root", required=True)
    p_ingest.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="train per a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE")

    p_analyze = sub.add_parser("analyze", help="domain-distance report for a bundle")
    p_analyze.add_argument("--bundle", required=True)
    p_analyze.add_argument("--normalization", default="minmax",
                           choices=sorted(_NORM_ALIASES))
    p_analyze.add_argument("--out", required=True)
    p_analyze.add_argument("--sample-cap", type=int, default=1000)
    p_analyze.add_argument("--seed", type=int, default=0)

    p_report = sub.add_parser("report", help="emit CSV/Markdown tables from a store")
    p_report.add_argument("--store", required=True)
    p_report.add_argument("--protocol", default="valid", choices=["valid", "oracle"])
    p_report.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            paths = ingest(args.dataset, args.root, args.out)
            print(f"wrote {len(paths)} subject cache file(s) to {args.out}")
        elif args.command == "run":
            config = parse_config(args.config, parse_override_pairs(args.overrides))
            summary = train_entry(config)
            print(json.dumps(summary, indent=1, sort_keys=True))
        elif args.command == "analyze":
            bundle = load_bundle(args.bundle)
            norm = NormalizationSpec(mode=_NORM_ALIASES[args.normalization])
            report = pairwise_domain_distances(bundle, norm,
                                               sample_cap=args.sample_cap,
                                               seed=args.seed)
            Path(args.out).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
            print(f"wrote distance report to {args.out}")
        elif args.command == "report":
            store = ResultsStore(args.store)
            protocol = ("oracle" if args.protocol == "oracle"
                        else "training_domain_validation")
            paths = emit_report(store, protocol, out_dir=args.out)
            for name, path in paths.items():
                print(f"{name}: {path}")
    except HaroodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
