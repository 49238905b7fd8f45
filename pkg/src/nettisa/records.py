"""Flow record serialization: binary, CSV, and JSONL.

Binary layout (little-endian throughout, headerless record stream):

* key block: af byte (4 or 6), source address, destination address,
  source port (u16), destination port (u16), protocol (u8), 7 zero pad
  bytes.  21 bytes for IPv4, 45 for IPv6.
* base block (40 bytes): t_first and t_last as u32 seconds + u32
  microseconds each, packets and packets_rev as u32, bytes and bytes_rev
  as u64.
* nettisa extension (52 bytes): the 13 features in canonical order, each an
  IEEE-754 single.

An IPv4 classic record is therefore exactly 61 bytes and an IPv4 nettisa
record 113.  CSV prints floats with 9 significant digits (enough to
round-trip single precision) after a schema comment line; JSONL mirrors the
CSV fields one object per line.
"""

from __future__ import annotations

import json
import socket
import struct
from typing import IO, Iterator

from .enhance import VARIANCE_STANDARD, enhance
from .features import (
    BASE_FIELD_NAMES,
    ENHANCED_FIELD_NAMES,
    FEATURE_NAMES,
    NettisaRecord,
)

KEY_BLOCK_V4 = 21
KEY_BLOCK_V6 = 45
BASE_BLOCK = 40
EXTENSION_BLOCK = 52
RECORD_CLASSIC_V4 = KEY_BLOCK_V4 + BASE_BLOCK
RECORD_NETTISA_V4 = RECORD_CLASSIC_V4 + EXTENSION_BLOCK

_KEY_V4 = struct.Struct("<B4s4sHHB7x")
_KEY_V6 = struct.Struct("<B16s16sHHB7x")
_BASE = struct.Struct("<IIIIIIQQ")
_EXT = struct.Struct("<13f")

assert _KEY_V4.size == KEY_BLOCK_V4
assert _KEY_V6.size == KEY_BLOCK_V6
assert _BASE.size == BASE_BLOCK
assert _EXT.size == EXTENSION_BLOCK
assert RECORD_CLASSIC_V4 == 61 and RECORD_NETTISA_V4 == 113

CSV_SCHEMA_TAG = "# nettisa-csv v1"

_IDENTITY_COLUMNS = ("src_ip", "dst_ip", "src_port", "dst_port", "protocol",
                     "t_first", "t_last")
_SPLT_COLUMNS = ("splt_lengths", "splt_directions", "splt_times")

_INT_COLUMNS = frozenset({"src_port", "dst_port", "protocol",
                          "packets", "packets_rev", "bytes", "bytes_rev"})
_FLOAT_COLUMNS = frozenset(("t_first", "t_last") + FEATURE_NAMES + ENHANCED_FIELD_NAMES)
_STRING_COLUMNS = frozenset(("src_ip", "dst_ip", "label") + _SPLT_COLUMNS)


def csv_columns(mode: str, enhanced: bool) -> tuple[str, ...]:
    cols = _IDENTITY_COLUMNS + BASE_FIELD_NAMES
    if mode in ("nettisa", "oracle"):
        cols = cols + FEATURE_NAMES
        if enhanced:
            cols = cols + ENHANCED_FIELD_NAMES
    elif mode == "splt":
        cols = cols + _SPLT_COLUMNS
    return cols


def _split_time(t: float) -> tuple[int, int]:
    sec = int(t)
    usec = int(round((t - sec) * 1e6))
    if usec >= 1_000_000:
        sec += 1
        usec -= 1_000_000
    return sec, usec


def format_addr(af: int, addr: bytes) -> str:
    family = socket.AF_INET if af == 4 else socket.AF_INET6
    return socket.inet_ntop(family, addr)


def parse_addr(text: str) -> tuple[int, bytes]:
    try:
        return 4, socket.inet_pton(socket.AF_INET, text)
    except OSError:
        return 6, socket.inet_pton(socket.AF_INET6, text)


# ---------------------------------------------------------------------------
# Binary
# ---------------------------------------------------------------------------

def write_binary(flow, kind: str, sink: IO[bytes]) -> int:
    """Serialize one exported flow; returns bytes written."""
    key_struct = _KEY_V4 if flow.af == 4 else _KEY_V6
    out = key_struct.pack(flow.af, flow.src_ip, flow.dst_ip,
                          flow.src_port, flow.dst_port, flow.protocol)
    fs, fu = _split_time(flow.t_first)
    ls, lu = _split_time(flow.t_last)
    out += _BASE.pack(fs, fu, ls, lu, flow.packets, flow.packets_rev,
                      flow.octets, flow.octets_rev)
    if kind == "nettisa":
        if flow.features is None:
            raise ValueError("flow has no features; was the table in nettisa mode?")
        out += _EXT.pack(*flow.features)
    elif kind != "classic":
        raise ValueError(f"binary format does not define {kind!r} records")
    sink.write(out)
    return len(out)


def read_binary(stream: IO[bytes], kind: str) -> Iterator[dict]:
    """Parse a record stream written by write_binary."""
    if kind not in ("classic", "nettisa"):
        raise ValueError(f"binary format does not define {kind!r} records")
    while True:
        af_byte = stream.read(1)
        if not af_byte:
            return
        af = af_byte[0]
        if af == 4:
            key_struct, addr_len = _KEY_V4, 4
        elif af == 6:
            key_struct, addr_len = _KEY_V6, 16
        else:
            raise ValueError(f"bad address family byte {af}")
        rest = stream.read(key_struct.size - 1 + BASE_BLOCK)
        if len(rest) < key_struct.size - 1 + BASE_BLOCK:
            raise ValueError("truncated record")
        _, src, dst, sport, dport, proto = key_struct.unpack(af_byte + rest[:key_struct.size - 1])
        fs, fu, ls, lu, pk, pkr, oc, ocr = _BASE.unpack(rest[key_struct.size - 1:])
        row = {
            "af": af,
            "src_ip": format_addr(af, src[:addr_len]),
            "dst_ip": format_addr(af, dst[:addr_len]),
            "src_port": sport,
            "dst_port": dport,
            "protocol": proto,
            "t_first": fs + fu * 1e-6,
            "t_last": ls + lu * 1e-6,
            "packets": pk,
            "packets_rev": pkr,
            "bytes": oc,
            "bytes_rev": ocr,
        }
        if kind == "nettisa":
            ext = stream.read(EXTENSION_BLOCK)
            if len(ext) < EXTENSION_BLOCK:
                raise ValueError("truncated record")
            for name, value in zip(FEATURE_NAMES, _EXT.unpack(ext)):
                row[name] = value
        yield row


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt_float(v: float) -> str:
    return format(v, "#.9g")


class CsvWriter:
    """Streams exported flows as CSV rows under a fixed schema.

    An optional labeler maps an exported flow to a string; when given, a
    trailing `label` column is added to the schema.
    """

    def __init__(self, sink: IO[str], mode: str, enhanced: bool = False,
                 variance_mode: str = VARIANCE_STANDARD, labeler=None):
        self.sink = sink
        self.mode = mode
        self.enhanced = enhanced and mode in ("nettisa", "oracle")
        self.variance_mode = variance_mode
        self.labeler = labeler
        self.columns = csv_columns(mode, enhanced)
        if labeler is not None:
            self.columns = self.columns + ("label",)
        sink.write(CSV_SCHEMA_TAG + "\n")
        sink.write(",".join(self.columns) + "\n")

    def write(self, flow) -> None:
        cells = [
            format_addr(flow.af, flow.src_ip),
            format_addr(flow.af, flow.dst_ip),
            str(flow.src_port),
            str(flow.dst_port),
            str(flow.protocol),
            f"{flow.t_first:.6f}",
            f"{flow.t_last:.6f}",
            str(flow.packets),
            str(flow.packets_rev),
            str(flow.octets),
            str(flow.octets_rev),
        ]
        if self.mode in ("nettisa", "oracle"):
            cells.extend(_fmt_float(v) for v in flow.features)
            if self.enhanced:
                rec = enhance(NettisaRecord.from_tuple(flow.features),
                              flow.packets, flow.packets_rev,
                              flow.octets, flow.octets_rev,
                              flow.t_first, flow.t_last, self.variance_mode)
                cells.extend(_fmt_float(v) for v in rec.enhanced_tuple())
        elif self.mode == "splt":
            cells.append(";".join(str(v) for v in flow.splt_lengths))
            cells.append(";".join(str(v) for v in flow.splt_directions))
            cells.append(";".join(_fmt_float(v) for v in flow.splt_times))
        if self.labeler is not None:
            cells.append(self.labeler(flow))
        self.sink.write(",".join(cells) + "\n")


def _convert_cell(column: str, text: str, lineno: int):
    try:
        if column in _INT_COLUMNS:
            return int(text)
        if column in _FLOAT_COLUMNS:
            return float(text)
    except ValueError:
        raise ValueError(f"line {lineno}: bad value {text!r} for column {column}") from None
    return text


def read_csv(path: str) -> tuple[list[str], list[dict]]:
    """Read a flow CSV back into typed rows.

    Unknown columns are a schema error; corrupt numeric cells report their
    line number.
    """
    with open(path, "r", encoding="utf-8") as f:
        lineno = 0
        header: list[str] | None = None
        rows: list[dict] = []
        for line in f:
            lineno += 1
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                known = _INT_COLUMNS | _FLOAT_COLUMNS | _STRING_COLUMNS
                for col in header:
                    if col not in known:
                        raise ValueError(f"schema mismatch: unexpected column {col!r}")
                continue
            if len(parts) != len(header):
                raise ValueError(
                    f"line {lineno}: expected {len(header)} cells, found {len(parts)}")
            rows.append({col: _convert_cell(col, cell, lineno)
                         for col, cell in zip(header, parts)})
    if header is None:
        raise ValueError(f"{path}: empty CSV, no header row")
    return header, rows


def _render_cell(column: str, value) -> str:
    if column in ("t_first", "t_last"):
        return f"{value:.6f}"
    if column in _FLOAT_COLUMNS:
        return _fmt_float(value)
    return str(value)


def enhance_csv(in_path: str, sink: IO[str], variance_mode: str = VARIANCE_STANDARD) -> int:
    """Append the seven collector features to a nettisa CSV.

    Returns the number of rows written.  Refuses input that lacks the 13
    feature columns or already carries the enhanced ones.
    """
    header, rows = read_csv(in_path)
    missing = [c for c in FEATURE_NAMES + BASE_FIELD_NAMES + ("t_first", "t_last")
               if c not in header]
    if missing:
        raise ValueError(f"{in_path}: not a nettisa CSV (missing column {missing[0]!r})")
    if any(c in header for c in ENHANCED_FIELD_NAMES):
        raise ValueError(f"{in_path}: already enhanced")

    # A label column stays trailing in the output.
    lead = [c for c in header if c != "label"]
    out_header = lead + list(ENHANCED_FIELD_NAMES)
    if "label" in header:
        out_header.append("label")
    sink.write(CSV_SCHEMA_TAG + "\n")
    sink.write(",".join(out_header) + "\n")
    for row in rows:
        record = NettisaRecord(*[row[name] for name in FEATURE_NAMES])
        extra = enhance(record, row["packets"], row["packets_rev"],
                        row["bytes"], row["bytes_rev"],
                        row["t_first"], row["t_last"], variance_mode)
        cells = [_render_cell(col, row[col]) for col in lead]
        cells.extend(_fmt_float(v) for v in extra.enhanced_tuple())
        if "label" in header:
            cells.append(row["label"])
        sink.write(",".join(cells) + "\n")
    return len(rows)


# ---------------------------------------------------------------------------
# JSONL
# ---------------------------------------------------------------------------

class JsonlWriter:
    """One JSON object per exported flow; mirrors the CSV fields and adds
    the export trigger."""

    def __init__(self, sink: IO[str], mode: str, enhanced: bool = False,
                 variance_mode: str = VARIANCE_STANDARD, labeler=None):
        self.sink = sink
        self.mode = mode
        self.enhanced = enhanced and mode in ("nettisa", "oracle")
        self.variance_mode = variance_mode
        self.labeler = labeler

    def write(self, flow) -> None:
        row = {
            "src_ip": format_addr(flow.af, flow.src_ip),
            "dst_ip": format_addr(flow.af, flow.dst_ip),
            "src_port": flow.src_port,
            "dst_port": flow.dst_port,
            "protocol": flow.protocol,
            "t_first": flow.t_first,
            "t_last": flow.t_last,
            "packets": flow.packets,
            "packets_rev": flow.packets_rev,
            "bytes": flow.octets,
            "bytes_rev": flow.octets_rev,
            "trigger": flow.trigger,
        }
        if self.mode in ("nettisa", "oracle"):
            row.update(zip(FEATURE_NAMES, flow.features))
            if self.enhanced:
                rec = enhance(NettisaRecord.from_tuple(flow.features),
                              flow.packets, flow.packets_rev,
                              flow.octets, flow.octets_rev,
                              flow.t_first, flow.t_last, self.variance_mode)
                row.update(zip(ENHANCED_FIELD_NAMES, rec.enhanced_tuple()))
        elif self.mode == "splt":
            row["splt_lengths"] = list(flow.splt_lengths)
            row["splt_directions"] = list(flow.splt_directions)
            row["splt_times"] = list(flow.splt_times)
        if self.labeler is not None:
            row["label"] = self.labeler(flow)
        self.sink.write(json.dumps(row) + "\n")
