"""Command-line interface.

Subcommands: extract (meter a capture into flow records), enhance (append
collector features to a nettisa CSV), stats (summary statistics), bench
(per-mode wall time and memory).  Exit codes: 0 success, 1 fatal input
problem, 2 configuration problem.
"""

from __future__ import annotations

import argparse
import contextlib
import csv as _csv
import json
import sys

from .bench import bench_capture, format_table
from .config import ConfigError, FORMATS, MODES, VARIANCE_MODES, build_config
from .enhance import VARIANCE_PAPER_LITERAL, VARIANCE_STANDARD
from .flows import FlowSession, canonical_key
from .packets import CaptureError, open_capture, read_packets
from .records import CsvWriter, JsonlWriter, enhance_csv, write_binary
from .splt import SPLT_MAX_PACKETS, splt_coverage


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-i", "--input", required=True, help="capture file (pcap or pcapng)")
    p.add_argument("--mode", choices=MODES, default=None,
                   help="pipeline mode (default nettisa)")
    p.add_argument("--active-timeout", type=float, default=None, metavar="S",
                   help="split flows longer than S seconds (default 300)")
    p.add_argument("--inactive-timeout", type=float, default=None, metavar="S",
                   help="expire flows idle for S seconds (default 65)")
    p.add_argument("--forced-flush", type=float, default=None, metavar="S",
                   help="export all live flows every S seconds of capture time")
    p.add_argument("--max-entries", type=int, default=None,
                   help="flow table capacity before eviction")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads; 1 (the default) is the benchmark configuration")


def _build_config(args: argparse.Namespace, **extra):
    overrides = {
        "mode": getattr(args, "mode", None),
        "active_timeout_s": getattr(args, "active_timeout", None),
        "inactive_timeout_s": getattr(args, "inactive_timeout", None),
        "forced_flush_interval_s": getattr(args, "forced_flush", None),
        "max_entries": getattr(args, "max_entries", None),
        "threads": getattr(args, "threads", None),
    }
    overrides.update(extra)
    cfg = build_config(**overrides)
    if cfg.threads > 1:
        print("note: multi-threaded processing is not implemented; running on one thread",
              file=sys.stderr)
    return cfg


@contextlib.contextmanager
def _open_sink(path: str, binary: bool):
    if path == "-":
        yield sys.stdout.buffer if binary else sys.stdout
        return
    mode = "wb" if binary else "w"
    with open(path, mode) as f:
        yield f


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _build_config(
        args,
        output_format=args.format,
        enhanced=True if args.enhanced else None,
        variance=args.variance,
    )
    labeler = None
    if args.labels:
        if cfg.output_format == "binary":
            raise ConfigError("binary records have no label field; use csv or jsonl")
        labels = _load_labels(args.labels)
        labeler = lambda f: labels.get(
            canonical_key(f.src_ip, f.dst_ip, f.src_port, f.dst_port, f.protocol), "")
    reader = open_capture(args.input)

    with _open_sink(args.output, binary=cfg.output_format == "binary") as sink:
        if cfg.output_format == "csv":
            writer = CsvWriter(sink, cfg.mode, cfg.enhanced, cfg.variance, labeler)
            emit = writer.write
        elif cfg.output_format == "jsonl":
            writer = JsonlWriter(sink, cfg.mode, cfg.enhanced, cfg.variance, labeler)
            emit = writer.write
        else:
            kind = "classic" if cfg.mode == "classic" else "nettisa"
            emit = lambda flow: write_binary(flow, kind, sink)

        session = FlowSession(cfg)
        session.process(iter(reader), emit)
        session.finish(emit)

    print(
        f"packets {session.ingested_packets}  flows {session.exported_flows}  "
        f"non-ip {reader.skipped_non_ip}  malformed {reader.malformed}  "
        f"reordered {session.reordered}  evicted {session.evicted}",
        file=sys.stderr,
    )
    return 0


def cmd_enhance(args: argparse.Namespace) -> int:
    cfg = build_config(variance=args.variance)
    with _open_sink(args.output, binary=False) as sink:
        enhance_csv(args.input, sink, cfg.variance)
    return 0


def _load_labels(path: str) -> dict:
    """Map canonical flow keys to labels from a CSV of five-tuples."""
    from .records import parse_addr

    labels: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = _csv.DictReader(row for row in f if not row.startswith("#"))
        needed = {"src_ip", "dst_ip", "src_port", "dst_port", "protocol", "label"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            missing = sorted(needed - set(reader.fieldnames or ()))
            raise ValueError(f"labels file missing columns: {', '.join(missing)}")
        for row in reader:
            _, src = parse_addr(row["src_ip"])
            _, dst = parse_addr(row["dst_ip"])
            key = canonical_key(src, dst, int(row["src_port"]),
                                int(row["dst_port"]), int(row["protocol"]))
            labels[key] = row["label"]
    return labels


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = _build_config(args, mode="classic")
    labels = _load_labels(args.labels) if args.labels else None

    flows: list = []
    reader = open_capture(args.input)
    session = FlowSession(cfg)
    session.process(iter(reader), flows.append)
    session.finish(flows.append)

    counts = [f.packets + f.packets_rev for f in flows]
    total_packets = sum(counts)
    total_bytes = sum(f.octets + f.octets_rev for f in flows)
    coverage = splt_coverage(counts)

    print(f"flows            {len(flows)}")
    print(f"packets          {total_packets}")
    print(f"bytes            {total_bytes}")
    print(f"over splt cap    {coverage:.2%} (flows with more than {SPLT_MAX_PACKETS} packets)")
    print(f"non-ip frames    {reader.skipped_non_ip}")
    print(f"malformed        {reader.malformed}")

    if labels is not None:
        per: dict = {}
        for f in flows:
            key = canonical_key(f.src_ip, f.dst_ip, f.src_port, f.dst_port, f.protocol)
            name = labels.get(key, "(unlabeled)")
            row = per.setdefault(name, [0, 0, 0])
            row[0] += 1
            row[1] += f.packets + f.packets_rev
            if f.packets + f.packets_rev > SPLT_MAX_PACKETS:
                row[2] += 1
        print()
        print(f"{'label':<20}{'flows':>8}{'packets':>10}{'over cap':>10}")
        for name in sorted(per):
            flows_n, pkts, over = per[name]
            print(f"{name:<20}{flows_n:>8}{pkts:>10}{over:>10}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"unknown mode {m!r}")

    packets, reader = read_packets(args.input)
    if not packets:
        raise CaptureError(f"{args.input}: no meterable packets")
    results = bench_capture(packets, cfg, modes, repeats=args.repeats)

    print(f"capture: {args.input}  packets: {len(packets)}  "
          f"non-ip: {reader.skipped_non_ip}  malformed: {reader.malformed}")
    print(format_table(results))
    if args.json:
        report = {
            "capture": args.input,
            "packets": len(packets),
            "repeats": args.repeats,
            "results": [r.to_dict() for r in results],
        }
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nettisa",
        description="Flow metering with streamwise time-series features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="meter a capture into flow records")
    _add_common_flags(p)
    p.add_argument("-o", "--output", default="-", help="output file ('-' = stdout)")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="output format (default csv)")
    p.add_argument("--enhanced", action="store_true",
                   help="append the seven collector features to each record")
    p.add_argument("--variance", choices=VARIANCE_MODES, default=None,
                   help=f"variance column: '{VARIANCE_STANDARD}' emits stdev^2, "
                        f"'{VARIANCE_PAPER_LITERAL}' emits sqrt(stdev)")
    p.add_argument("--labels", default=None,
                   help="CSV of five-tuples with a label column; adds a trailing "
                        "label column to csv/jsonl output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("enhance", help="append collector features to a nettisa CSV")
    p.add_argument("-i", "--input", required=True, help="nettisa CSV to enhance")
    p.add_argument("-o", "--output", default="-", help="output file ('-' = stdout)")
    p.add_argument("--variance", choices=VARIANCE_MODES, default=None)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("stats", help="summary statistics for a capture")
    _add_common_flags(p)
    p.add_argument("--labels", default=None,
                   help="CSV of five-tuples with a label column for per-label stats")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="benchmark pipeline modes over a capture")
    _add_common_flags(p)
    p.add_argument("--modes", default="classic,nettisa,splt,oracle",
                   help="comma-separated modes to run")
    p.add_argument("--repeats", type=int, default=3, help="timed runs per mode")
    p.add_argument("--json", default=None, help="write a JSON report here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CaptureError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
