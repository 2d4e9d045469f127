"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 runtime fault, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import CheckpointError
from .config import KINDS, ConfigError, parse_config
from .experiments import ExperimentError, RunReport, run_experiment
from .imageio import UnsupportedImage

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
U64_MAX = 2**64 - 1


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2, which matches the config-error code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="snpinr", description="Noise-pretrained sine INR experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in KINDS + ("report",):
        s = sub.add_parser(kind)
        s.add_argument("--config", type=Path, required=kind != "report")
        s.add_argument("--out", type=Path, required=True)
        s.add_argument("--seed", type=_u64, default=None, help="overrides experiment.seed")
        s.add_argument("--jobs", type=_positive, default=None, help="overrides experiment.jobs")
    return p


def _report(out: Path) -> int:
    """Recompute aggregates from every report.json below ``out`` and print them."""
    paths = sorted(out.rglob("report.json"))
    if not paths:
        print(f"no report.json under {out}", file=sys.stderr)
        return EXIT_IO
    summary = {}
    for path in paths:
        rep = RunReport.from_dict(json.loads(path.read_text()))
        rel = str(path.parent.relative_to(out)) or "."
        summary[rel] = {"kind": rep.kind, "aggregates": rep.aggregates()}
        print(f"== {rel} ({rep.kind})")
        if rep.rows:
            print(rep.table())
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return _report(args.out)
        overrides = {}
        if args.seed is not None:
            overrides[("experiment", "seed")] = args.seed
        if args.jobs is not None:
            overrides[("experiment", "jobs")] = args.jobs
        cfg = parse_config(args.config, overrides, defaults={("experiment", "kind"): args.command})
        if cfg.kind != args.command:
            raise ConfigError(f"config declares kind {cfg.kind!r} but subcommand is "
                              f"{args.command!r}", "kind")
        report = run_experiment(cfg, args.out)
        if report is not None and report.rows:
            print(report.table())
        print(f"wrote {args.out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, (OSError, UnsupportedImage, CheckpointError)):
            return EXIT_IO
        if isinstance(exc.cause, ConfigError):
            return EXIT_CONFIG
        return EXIT_RUNTIME
    except (OSError, UnsupportedImage, CheckpointError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
