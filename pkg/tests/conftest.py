"""Shared test builders: crafted frames, capture files, random flows.

Everything here constructs bytes by hand so the parser is tested against an
independent encoding of the same formats, not against its own output.
"""

from __future__ import annotations

import random
import struct

import pytest

from nettisa.packets import PacketRecord

IP_A = b"\x0a\x00\x00\x01"
IP_B = b"\x0a\x00\x00\x02"
IP6_A = bytes.fromhex("20010db8000000000000000000000001")
IP6_B = bytes.fromhex("20010db8000000000000000000000002")

MAC_PAIR = bytes.fromhex("020000000001" "020000000002")


# -- layer builders ----------------------------------------------------------

def eth_frame(payload: bytes, ethertype: int, vlans: tuple[int, ...] = ()) -> bytes:
    """Ethernet frame, optionally nested inside 802.1Q/QinQ tags.

    Each tag occupies the ethertype slot (TPID) followed by a TCI word; the
    real ethertype comes after the innermost tag.
    """
    head = MAC_PAIR
    for tpid in vlans:
        head += struct.pack(">HH", tpid, 0x0001)
    head += struct.pack(">H", ethertype)
    return head + payload


def ipv4_packet(src: bytes, dst: bytes, proto: int, payload: bytes, *,
                options: bytes = b"", frag_off: int = 0, more_frags: bool = False,
                total_len: int | None = None) -> bytes:
    assert len(options) % 4 == 0
    ihl = 5 + len(options) // 4
    if total_len is None:
        total_len = ihl * 4 + len(payload)
    flags_frag = (0x2000 if more_frags else 0) | (frag_off & 0x1FFF)
    hdr = struct.pack(">BBHHHBBH4s4s", (4 << 4) | ihl, 0, total_len, 1,
                      flags_frag, 64, proto, 0, src, dst)
    return hdr + options + payload


def ipv6_packet(src: bytes, dst: bytes, next_header: int, payload: bytes, *,
                payload_len: int | None = None) -> bytes:
    if payload_len is None:
        payload_len = len(payload)
    hdr = struct.pack(">IHBB16s16s", 6 << 28, payload_len, next_header, 64, src, dst)
    return hdr + payload


def ipv6_ext(next_header: int, body_units: int = 0) -> bytes:
    """Generic hop-by-hop/routing/destination extension header."""
    length = 8 * (body_units + 1)
    return bytes([next_header, body_units]) + b"\x00" * (length - 2)


def ipv6_frag_ext(next_header: int, frag_off: int, more: bool = False) -> bytes:
    off_field = (frag_off << 3) | (1 if more else 0)
    return struct.pack(">BBHI", next_header, 0, off_field, 0xBEEF)


def tcp_segment(sport: int, dport: int, payload: bytes, *, doff: int = 5,
                tcp_options: bytes = b"") -> bytes:
    assert len(tcp_options) % 4 == 0
    if tcp_options:
        doff = 5 + len(tcp_options) // 4
    hdr = struct.pack(">HHIIBBHHH", sport, dport, 1, 1, doff << 4, 0x18, 8192, 0, 0)
    return hdr + tcp_options + payload


def udp_datagram(sport: int, dport: int, payload: bytes, *,
                 length: int | None = None) -> bytes:
    if length is None:
        length = 8 + len(payload)
    return struct.pack(">HHHH", sport, dport, length, 0) + payload


def udp4_frame(src=IP_A, dst=IP_B, sport=5000, dport=53, payload=b"x" * 20,
               vlans: tuple[int, ...] = ()) -> bytes:
    return eth_frame(ipv4_packet(src, dst, 17, udp_datagram(sport, dport, payload)),
                     0x0800, vlans)


def tcp4_frame(src=IP_A, dst=IP_B, sport=1234, dport=80, payload=b"x" * 20,
               tcp_options: bytes = b"", vlans: tuple[int, ...] = ()) -> bytes:
    return eth_frame(
        ipv4_packet(src, dst, 6, tcp_segment(sport, dport, payload,
                                             tcp_options=tcp_options)),
        0x0800, vlans)


def arp_frame() -> bytes:
    body = struct.pack(">HHBBH", 1, 0x0800, 6, 4, 1) + b"\x00" * 20
    return eth_frame(body, 0x0806)


# -- capture file builders ---------------------------------------------------

PCAP_MAGIC = {
    ("<", "us"): b"\xd4\xc3\xb2\xa1",
    (">", "us"): b"\xa1\xb2\xc3\xd4",
    ("<", "ns"): b"\x4d\x3c\xb2\xa1",
    (">", "ns"): b"\xa1\xb2\x3c\x4d",
}


def write_pcap(path, frames, *, endian: str = "<", resolution: str = "us",
               link_type: int = 1) -> None:
    """frames: iterable of (timestamp_seconds, frame_bytes)."""
    unit = 1_000_000 if resolution == "us" else 1_000_000_000
    with open(path, "wb") as f:
        f.write(PCAP_MAGIC[(endian, resolution)])
        f.write(struct.pack(endian + "HHiIII", 2, 4, 0, 0, 1 << 16, link_type))
        for ts, frame in frames:
            sec = int(ts)
            frac = int(round((ts - sec) * unit))
            if frac >= unit:
                sec, frac = sec + 1, frac - unit
            f.write(struct.pack(endian + "IIII", sec, frac, len(frame), len(frame)))
            f.write(frame)


def _ng_block(endian: str, btype: int, body: bytes) -> bytes:
    pad = (-len(body)) % 4
    total = 12 + len(body) + pad
    return (struct.pack(endian + "II", btype, total) + body + b"\x00" * pad
            + struct.pack(endian + "I", total))


def _ng_option(endian: str, code: int, value: bytes) -> bytes:
    pad = (-len(value)) % 4
    return struct.pack(endian + "HH", code, len(value)) + value + b"\x00" * pad


def write_pcapng(path, frames, *, endian: str = "<", tsresol: int | None = None,
                 link_type: int = 1, simple: bool = False) -> None:
    """frames: iterable of (timestamp_seconds, frame_bytes).

    tsresol is the raw if_tsresol byte (e.g. 9 for nanoseconds, 0x80 | 10 for
    2^-10 ticks); None leaves the interface at the default microsecond tick.
    """
    tick = 1e-6
    idb_opts = b""
    if tsresol is not None:
        idb_opts = _ng_option(endian, 9, bytes([tsresol]))
        idb_opts += _ng_option(endian, 0, b"")
        tick = 2.0 ** -(tsresol & 0x7F) if tsresol & 0x80 else 10.0 ** -tsresol

    out = _ng_block(endian, 0x0A0D0D0A,
                    struct.pack(endian + "IHHq", 0x1A2B3C4D, 1, 0, -1))
    out += _ng_block(endian, 0x01,
                     struct.pack(endian + "HHI", link_type, 0, 1 << 16) + idb_opts)
    for ts, frame in frames:
        if simple:
            out += _ng_block(endian, 0x03, struct.pack(endian + "I", len(frame)) + frame)
        else:
            ticks = int(round(ts / tick))
            body = struct.pack(endian + "IIIII", 0, ticks >> 32,
                               ticks & 0xFFFFFFFF, len(frame), len(frame)) + frame
            out += _ng_block(endian, 0x06, body)
    with open(path, "wb") as f:
        f.write(out)


# -- synthetic flows ---------------------------------------------------------

def random_series(rng: random.Random, n: int | None = None, *,
                  max_n: int = 500, reorder_rate: float = 0.01):
    """One random flow as (payload lengths, timestamps).

    Payload lengths are integers in [0, 1460]; gaps in [0, 10] seconds; a
    reorder_rate fraction of timestamps swap with their predecessor so the
    clamped-gap path gets exercised.
    """
    if n is None:
        n = rng.randint(1, max_n)
    lengths = [float(rng.randint(0, 1460)) for _ in range(n)]
    times = []
    t = rng.uniform(0, 1000)
    for _ in range(n):
        t += rng.uniform(0, 10)
        times.append(t)
    for i in range(1, n):
        if rng.random() < reorder_rate:
            times[i - 1], times[i] = times[i], times[i - 1]
    return lengths, times


def flow_records(lengths, times, *, src=IP_A, dst=IP_B, sport=1234, dport=80,
                 proto=6) -> list[PacketRecord]:
    return [PacketRecord(src, dst, sport, dport, proto, ts, int(x), 4)
            for x, ts in zip(lengths, times)]


def traffic_mix(rng: random.Random, n_packets: int):
    """Synthetic mixed traffic: bulk transfers, request/response, chatter.

    Yields (ts, src, dst, sport, dport, proto, payload_len) sorted by time.
    Payload sizes cluster per flow the way production traffic does, rather
    than being uniform noise.
    """
    events = []
    flow_id = 0
    while len(events) < n_packets:
        flow_id += 1
        kind = rng.random()
        a = bytes([10, 0, (flow_id >> 8) & 0xFF, flow_id & 0xFF])
        b = bytes([10, 1, 0, 1])
        sport = 40000 + flow_id % 20000
        t = rng.random() * 50.0
        if kind < 0.25:
            # bulk transfer: full segments one way, sparse acks back
            for i in range(rng.randrange(800, 4000)):
                t += rng.uniform(0.0001, 0.0012)
                if i % 3 == 2:
                    events.append((t, b, a, 443, sport, 6, 0))
                else:
                    events.append((t, a, b, sport, 443, 6, 1460))
        elif kind < 0.7:
            # request/response exchanges
            for i in range(rng.randrange(20, 200)):
                t += rng.uniform(0.001, 0.05)
                if i % 2 == 0:
                    events.append((t, a, b, sport, 443, 6,
                                   rng.choice((220, 517, 640))))
                else:
                    events.append((t, b, a, 443, sport, 6, 1460))
        else:
            # dns-ish chatter
            for i in range(rng.randrange(2, 10)):
                t += rng.uniform(0.0005, 0.02)
                if i % 2 == 0:
                    events.append((t, a, b, sport, 53, 17, rng.randrange(40, 120)))
                else:
                    events.append((t, b, a, 53, sport, 17, rng.randrange(90, 400)))
    events.sort(key=lambda e: e[0])
    return events


def write_mix_pcap(path, events) -> int:
    """Write traffic_mix events as a snaplen-truncated capture.

    Only headers are stored (the length fields still describe the full
    packet), which is exactly what a snaplen-limited capture looks like and
    keeps million-packet files small.
    """
    udp_hdr = struct.Struct(">HHHH")
    count = 0
    with open(path, "wb") as f:
        f.write(PCAP_MAGIC[("<", "us")])
        f.write(struct.pack("<HHiIII", 2, 4, 0, 0, 64, 1))
        rec = struct.Struct("<IIII")
        for ts, src, dst, sport, dport, proto, plen in events:
            if proto == 17:
                transport = udp_hdr.pack(sport, dport, 8 + plen, 0)
            else:
                transport = struct.pack(">HHIIBBHHH", sport, dport, 1, 1,
                                        5 << 4, 0x10, 8192, 0, 0)
            total_len = 20 + len(transport) + plen
            ip = struct.pack(">BBHHHBBH4s4s", 0x45, 0, total_len, 1, 0, 64,
                             proto, 0, src, dst)
            frame = MAC_PAIR + b"\x08\x00" + ip + transport
            sec = int(ts)
            usec = int((ts - sec) * 1e6)
            f.write(rec.pack(sec, usec, len(frame), len(frame) + plen))
            f.write(frame)
            count += 1
    return count


@pytest.fixture
def rng():
    return random.Random(0xBEEF)
