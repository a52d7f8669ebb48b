"""Command-line entry point: ``numabias simulate | gen-trace | compare``.

Exit codes: 0 success, 1 invalid input (config key, trace line, spec,
mismatched reports), 2 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from dataclasses import replace

from .config import load_config
from .hierarchy import POLICY_MODES, RecordError, run_trace
from .report import DigestMismatch, diff, diff_csv, emit, format_diff, load_report, trace_digest_of
from .topology import ConfigError, SystemTopology
from .trace import SpecError, TraceError, generate, read_trace, spec_from_dict, validate_spec, write_trace

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class UsageFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt_amat(value) -> str:
    return "n/a" if value is None else f"{float(value):.6f}"


def cmd_simulate(args) -> int:
    try:
        run = load_config(args.config)
    except OSError as e:
        raise UsageFailure(EXIT_IO, f"cannot read config: {e}")
    except ConfigError as e:
        raise UsageFailure(EXIT_INVALID, f"config {args.config}: {e}")
    hier = run.hierarchy
    if args.policy:
        hier = hier.with_mode(args.policy)
    try:
        records = read_trace(args.trace, hier.topology)
    except OSError as e:
        raise UsageFailure(EXIT_IO, f"cannot read trace: {e}")
    except TraceError as e:
        raise UsageFailure(EXIT_INVALID, f"trace {args.trace}: {e}")
    try:
        report = run_trace(hier, records, trace_digest_of(records))
    except RecordError as e:
        raise UsageFailure(EXIT_INVALID, f"trace {args.trace}: {e}")

    fmt = args.format or run.output_format
    out = args.out or run.output_path
    data = emit(report, fmt)
    if out:
        try:
            write_atomic(out, data)
        except OSError as e:
            raise UsageFailure(EXIT_IO, f"cannot write report: {e}")
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    t = report.total
    print(
        f"policy={hier.mode} accesses={t.accesses} l1_misses={t.l1_misses} "
        f"llc_misses={t.llc_misses} amat={_fmt_amat(t.amat)} "
        f"dram_remote_fetches={t.dram_remote_fetches}",
        file=sys.stderr if not out else sys.stdout,
    )
    return EXIT_OK


def cmd_gen_trace(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise UsageFailure(EXIT_IO, f"cannot read spec: {e}")
    except json.JSONDecodeError as e:
        raise UsageFailure(EXIT_INVALID, f"spec {args.spec}: invalid JSON: {e}")
    if not isinstance(doc, dict) or not isinstance(doc.get("topology"), dict):
        raise UsageFailure(EXIT_INVALID, f"spec {args.spec}: missing key 'topology'")
    try:
        topo = SystemTopology(**doc["topology"])
    except (TypeError, ConfigError) as e:
        raise UsageFailure(EXIT_INVALID, f"spec {args.spec}: topology: {e}")
    spec, errors = spec_from_dict(doc)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    errors += validate_spec(spec, topo)
    if errors:
        raise UsageFailure(EXIT_INVALID, f"spec {args.spec} is invalid:\n  " + "\n  ".join(errors))
    try:
        records = generate(spec, topo)
    except SpecError as e:  # pragma: no cover - validated above
        raise UsageFailure(EXIT_INVALID, str(e))
    buf = io.StringIO()
    n = write_trace(records, buf)
    try:
        write_atomic(args.out, buf.getvalue().encode("utf-8"))
    except OSError as e:
        raise UsageFailure(EXIT_IO, f"cannot write trace: {e}")
    print(f"wrote {n} records to {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    reports = []
    for path in (args.a, args.b):
        try:
            with open(path, "rb") as f:
                reports.append(load_report(f.read()))
        except OSError as e:
            raise UsageFailure(EXIT_IO, f"cannot read report: {e}")
        except (ValueError, KeyError, TypeError) as e:
            raise UsageFailure(EXIT_INVALID, f"{path}: not a report ({e})")
    a, b = reports
    try:
        rows = diff(a, b)
    except DigestMismatch as e:
        raise UsageFailure(EXIT_INVALID, str(e))
    label_a = a.policy.get("mode", "a")
    label_b = b.policy.get("mode", "b")
    if label_a == label_b:
        label_a, label_b = "a", "b"
    sys.stdout.write(format_diff(rows, label_a, label_b))
    if args.csv:
        try:
            write_atomic(args.csv, diff_csv(rows))
        except OSError as e:
            raise UsageFailure(EXIT_IO, f"cannot write csv: {e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="numabias",
        description="Trace-driven ccNUMA cache simulator with remote-biased replacement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a trace through the cache hierarchy")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--trace", required=True, metavar="PATH")
    p.add_argument("--policy", choices=POLICY_MODES, help="override the config's policy mode")
    p.add_argument("--out", metavar="PATH", help="report path (default: config output.path, else stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-trace", help="generate a synthetic trace from a phase spec")
    p.add_argument("--spec", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--seed", type=int, help="override the spec's seed")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("compare", help="diff two reports of the same experiment")
    p.add_argument("a", metavar="REPORT_A")
    p.add_argument("b", metavar="REPORT_B")
    p.add_argument("--csv", metavar="PATH", help="also write the table as CSV")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageFailure as e:
        print(f"numabias {args.command}: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
