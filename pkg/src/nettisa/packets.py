"""Capture reading and packet decoding.

Reads classic pcap (both byte orders, microsecond and nanosecond variants)
and pcapng (enhanced/simple/obsolete packet blocks, per-interface timestamp
resolution), then decodes Ethernet or raw-IP frames down to the fields the
flow table needs.  Only header fields are trusted for payload arithmetic, so
snaplen-truncated captures still meter correctly as long as the headers made
it into the capture.

Decoding rules:

* TCP payload = IP payload length - data offset * 4
* UDP payload = UDP length field - 8
* anything else (ICMP, fragments, unknown transports) = bytes after the
  network layer, with ports (0, 0)

Non-IP frames are counted and skipped; structurally broken frames are
counted as malformed; a capture whose final record is cut short is used up
to that record with a warning.
"""

from __future__ import annotations

import io
import logging
import struct
from typing import Iterator, NamedTuple

log = logging.getLogger(__name__)


class CaptureError(Exception):
    """Fatal problem with a capture file (bad magic, unsupported link type)."""


class PacketRecord(NamedTuple):
    """One decoded packet.

    Field order is load-bearing: the compiled flow table indexes packet
    tuples positionally (see the PKT_* constants in nettisa._fast).
    """

    src_ip: bytes
    dst_ip: bytes
    src_port: int
    dst_port: int
    protocol: int
    timestamp: float
    payload_len: int
    af: int


LINKTYPE_ETHERNET = 1
LINKTYPE_RAW = 101

_ETH_IPV4 = 0x0800
_ETH_IPV6 = 0x86DD
_VLAN_TAGS = (0x8100, 0x88A8, 0x9100)

_IPV6_EXTENSIONS = frozenset({0, 43, 60, 135})
_IPV6_FRAGMENT = 44
_IPV6_AH = 51


def _decode_ipv4(data: bytes, off: int, ts: float) -> PacketRecord | None:
    if len(data) - off < 20:
        return None
    b0 = data[off]
    if b0 >> 4 != 4:
        return None
    ihl = (b0 & 0x0F) * 4
    if ihl < 20 or len(data) - off < ihl:
        return None
    total_len = int.from_bytes(data[off + 2:off + 4], "big")
    if total_len < ihl:
        return None
    proto = data[off + 9]
    src = data[off + 12:off + 16]
    dst = data[off + 16:off + 20]
    frag = int.from_bytes(data[off + 6:off + 8], "big") & 0x1FFF
    t = off + ihl
    ip_payload = total_len - ihl

    if frag > 0:
        # Later fragment: no transport header, meter it portless.
        return PacketRecord(src, dst, 0, 0, proto, ts, ip_payload, 4)
    if proto == 6:
        if len(data) - t < 14:
            return None
        doff = (data[t + 12] >> 4) * 4
        payload = ip_payload - doff
        if doff < 20 or payload < 0:
            return None
        sport = int.from_bytes(data[t:t + 2], "big")
        dport = int.from_bytes(data[t + 2:t + 4], "big")
        return PacketRecord(src, dst, sport, dport, proto, ts, payload, 4)
    if proto == 17:
        if len(data) - t < 8:
            return None
        udp_len = int.from_bytes(data[t + 4:t + 6], "big")
        if udp_len < 8:
            return None
        sport = int.from_bytes(data[t:t + 2], "big")
        dport = int.from_bytes(data[t + 2:t + 4], "big")
        return PacketRecord(src, dst, sport, dport, proto, ts, udp_len - 8, 4)
    return PacketRecord(src, dst, 0, 0, proto, ts, ip_payload, 4)


def _decode_ipv6(data: bytes, off: int, ts: float) -> PacketRecord | None:
    if len(data) - off < 40:
        return None
    if data[off] >> 4 != 6:
        return None
    payload_len = int.from_bytes(data[off + 4:off + 6], "big")
    proto = data[off + 6]
    src = data[off + 8:off + 24]
    dst = data[off + 24:off + 40]
    t = off + 40
    remaining = payload_len

    # Walk the extension chain; each header states its successor.
    for _ in range(8):
        if proto in _IPV6_EXTENSIONS:
            if len(data) - t < 2:
                return None
            nxt = data[t]
            ext_len = (data[t + 1] + 1) * 8
            t += ext_len
            remaining -= ext_len
            proto = nxt
        elif proto == _IPV6_AH:
            if len(data) - t < 2:
                return None
            nxt = data[t]
            ext_len = (data[t + 1] + 2) * 4
            t += ext_len
            remaining -= ext_len
            proto = nxt
        elif proto == _IPV6_FRAGMENT:
            if len(data) - t < 8:
                return None
            nxt = data[t]
            frag_off = int.from_bytes(data[t + 2:t + 4], "big") >> 3
            t += 8
            remaining -= 8
            if frag_off > 0:
                return PacketRecord(src, dst, 0, 0, nxt, ts, max(remaining, 0), 6)
            proto = nxt
        else:
            break
    if remaining < 0:
        return None

    if proto == 6:
        if len(data) - t < 14:
            return None
        doff = (data[t + 12] >> 4) * 4
        payload = remaining - doff
        if doff < 20 or payload < 0:
            return None
        sport = int.from_bytes(data[t:t + 2], "big")
        dport = int.from_bytes(data[t + 2:t + 4], "big")
        return PacketRecord(src, dst, sport, dport, proto, ts, payload, 6)
    if proto == 17:
        if len(data) - t < 8:
            return None
        udp_len = int.from_bytes(data[t + 4:t + 6], "big")
        if udp_len < 8:
            return None
        sport = int.from_bytes(data[t:t + 2], "big")
        dport = int.from_bytes(data[t + 2:t + 4], "big")
        return PacketRecord(src, dst, sport, dport, proto, ts, udp_len - 8, 6)
    return PacketRecord(src, dst, 0, 0, proto, ts, remaining, 6)


def decode_frame(data: bytes, link_type: int, ts: float) -> PacketRecord | str:
    """Decode one captured frame.

    Returns a PacketRecord, or "non-ip" / "malformed" describing why the
    frame does not meter.
    """
    if link_type == LINKTYPE_ETHERNET:
        if len(data) < 14:
            return "malformed"
        ethertype = int.from_bytes(data[12:14], "big")
        off = 14
        while ethertype in _VLAN_TAGS:
            if len(data) < off + 4:
                return "malformed"
            ethertype = int.from_bytes(data[off + 2:off + 4], "big")
            off += 4
        if ethertype == _ETH_IPV4:
            rec = _decode_ipv4(data, off, ts)
        elif ethertype == _ETH_IPV6:
            rec = _decode_ipv6(data, off, ts)
        else:
            return "non-ip"
        return rec if rec is not None else "malformed"
    if link_type == LINKTYPE_RAW:
        if not data:
            return "malformed"
        version = data[0] >> 4
        if version == 4:
            rec = _decode_ipv4(data, 0, ts)
        elif version == 6:
            rec = _decode_ipv6(data, 0, ts)
        else:
            return "non-ip"
        return rec if rec is not None else "malformed"
    raise CaptureError(f"unsupported link type {link_type}")


class CaptureReader:
    """Iterates PacketRecords out of a pcap or pcapng file.

    Counters (skipped_non_ip, malformed, truncated_tail) are valid once
    iteration finishes.
    """

    def __init__(self, path: str):
        self.path = path
        self.skipped_non_ip = 0
        self.malformed = 0
        self.truncated_tail = False
        with open(path, "rb") as f:
            head = f.read(4)
        if len(head) < 4:
            raise CaptureError(f"{path}: too short to be a capture")
        if head == b"\x0a\x0d\x0d\x0a":
            self._kind = "pcapng"
        elif head in (b"\xd4\xc3\xb2\xa1", b"\xa1\xb2\xc3\xd4",
                      b"\x4d\x3c\xb2\xa1", b"\xa1\xb2\x3c\x4d"):
            self._kind = "pcap"
        else:
            raise CaptureError(f"{path}: not a pcap or pcapng file")

    def __iter__(self) -> Iterator[PacketRecord]:
        with open(self.path, "rb") as f:
            stream = io.BufferedReader(f, buffer_size=1 << 20)
            if self._kind == "pcap":
                yield from self._iter_pcap(stream)
            else:
                yield from self._iter_pcapng(stream)

    def _handle(self, data: bytes, link_type: int, ts: float):
        decoded = decode_frame(data, link_type, ts)
        if decoded == "non-ip":
            self.skipped_non_ip += 1
            return None
        if decoded == "malformed":
            self.malformed += 1
            return None
        return decoded

    # -- classic pcap ------------------------------------------------------

    def _iter_pcap(self, f) -> Iterator[PacketRecord]:
        header = f.read(24)
        if len(header) < 24:
            raise CaptureError(f"{self.path}: truncated pcap header")
        magic = header[:4]
        endian = "<" if magic in (b"\xd4\xc3\xb2\xa1", b"\x4d\x3c\xb2\xa1") else ">"
        frac_unit = 1e-9 if magic in (b"\x4d\x3c\xb2\xa1", b"\xa1\xb2\x3c\x4d") else 1e-6
        link_type = struct.unpack(endian + "I", header[20:24])[0]
        rec_hdr = struct.Struct(endian + "IIII")

        while True:
            hdr = f.read(16)
            if not hdr:
                return
            if len(hdr) < 16:
                self.truncated_tail = True
                log.warning("%s: truncated record header at end of capture", self.path)
                return
            ts_sec, ts_frac, incl_len, _orig_len = rec_hdr.unpack(hdr)
            if incl_len > (1 << 28):
                raise CaptureError(f"{self.path}: corrupt record length {incl_len}")
            data = f.read(incl_len)
            if len(data) < incl_len:
                self.truncated_tail = True
                log.warning("%s: truncated final record skipped", self.path)
                return
            rec = self._handle(data, link_type, ts_sec + ts_frac * frac_unit)
            if rec is not None:
                yield rec

    # -- pcapng ------------------------------------------------------------

    def _iter_pcapng(self, f) -> Iterator[PacketRecord]:
        endian = "<"
        interfaces: list[tuple[int, float]] = []  # (link_type, tick seconds)

        while True:
            head = f.read(8)
            if not head:
                return
            if len(head) < 8:
                self.truncated_tail = True
                log.warning("%s: truncated block at end of capture", self.path)
                return
            btype = struct.unpack(endian + "I", head[:4])[0]
            if btype == 0x0A0D0D0A:
                # Section header: byte order can change per section.
                body_peek = f.read(4)
                if len(body_peek) < 4:
                    raise CaptureError(f"{self.path}: truncated section header")
                # The magic is the value 0x1A2B3C4D, so a little-endian
                # section stores it reversed on disk.
                if body_peek == b"\x4d\x3c\x2b\x1a":
                    endian = "<"
                elif body_peek == b"\x1a\x2b\x3c\x4d":
                    endian = ">"
                else:
                    raise CaptureError(f"{self.path}: bad pcapng byte-order magic")
                total_len = struct.unpack(endian + "I", head[4:])[0]
                rest = f.read(total_len - 12)
                if len(rest) < total_len - 12:
                    raise CaptureError(f"{self.path}: truncated section header")
                interfaces = []
                continue

            total_len = struct.unpack(endian + "I", head[4:])[0]
            if total_len < 12 or total_len > (1 << 28):
                raise CaptureError(f"{self.path}: corrupt block length {total_len}")
            body = f.read(total_len - 8)
            if len(body) < total_len - 8:
                self.truncated_tail = True
                log.warning("%s: truncated final block skipped", self.path)
                return
            body = body[:-4]  # trailing length copy

            if btype == 0x01:  # interface description
                link_type = struct.unpack(endian + "H", body[:2])[0]
                tick = self._tsresol(body[8:], endian)
                interfaces.append((link_type, tick))
            elif btype == 0x06:  # enhanced packet
                if len(body) < 20:
                    raise CaptureError(f"{self.path}: short enhanced packet block")
                iface, ts_hi, ts_lo, cap_len, _orig = struct.unpack(
                    endian + "IIIII", body[:20])
                if iface >= len(interfaces):
                    raise CaptureError(f"{self.path}: packet for unknown interface {iface}")
                link_type, tick = interfaces[iface]
                ts = ((ts_hi << 32) | ts_lo) * tick
                rec = self._handle(body[20:20 + cap_len], link_type, ts)
                if rec is not None:
                    yield rec
            elif btype == 0x03:  # simple packet: no timestamp available
                if not interfaces:
                    raise CaptureError(f"{self.path}: simple packet before interface block")
                link_type, _tick = interfaces[0]
                rec = self._handle(body[4:], link_type, 0.0)
                if rec is not None:
                    yield rec
            elif btype == 0x02:  # obsolete packet block
                if len(body) < 20:
                    raise CaptureError(f"{self.path}: short packet block")
                iface, _drops, ts_hi, ts_lo, cap_len, _orig = struct.unpack(
                    endian + "HHIIII", body[:20])
                if iface >= len(interfaces):
                    raise CaptureError(f"{self.path}: packet for unknown interface {iface}")
                link_type, tick = interfaces[iface]
                ts = ((ts_hi << 32) | ts_lo) * tick
                rec = self._handle(body[20:20 + cap_len], link_type, ts)
                if rec is not None:
                    yield rec
            # anything else (name resolution, statistics, custom): skipped

    @staticmethod
    def _tsresol(options: bytes, endian: str) -> float:
        """Timestamp tick length from an interface's options (default 1 us)."""
        off = 0
        while off + 4 <= len(options):
            code, length = struct.unpack_from(endian + "HH", options, off)
            off += 4
            if code == 0 and length == 0:
                break
            if code == 9 and length >= 1:
                raw = options[off]
                if raw & 0x80:
                    return 2.0 ** -(raw & 0x7F)
                return 10.0 ** -raw
            off += (length + 3) & ~3
        return 1e-6


def open_capture(path: str) -> CaptureReader:
    return CaptureReader(path)


def read_packets(path: str) -> tuple[list[PacketRecord], CaptureReader]:
    """Read a whole capture into memory; returns packets plus the reader
    (for its counters)."""
    reader = open_capture(path)
    return list(reader), reader
