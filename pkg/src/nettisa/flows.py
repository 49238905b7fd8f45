"""Pipeline session: capture packets in, exported flow records out.

Thin Python orchestration around the compiled flow table.  A session owns
one table configured from a RunConfig, feeds it packets in batches, and
hands every export to a writer callback.  In oracle mode the stored series
is turned into features here, through the batch reference implementation,
which is exactly the cost the streamwise mode avoids.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator

from . import _fast
from .config import RunConfig
from .oracle import oracle_record
from .packets import PacketRecord

MODE_IDS = {
    "classic": _fast.MODE_CLASSIC,
    "nettisa": _fast.MODE_NETTISA,
    "splt": _fast.MODE_SPLT,
    "oracle": _fast.MODE_ORACLE,
}

# The compiled table indexes packet tuples positionally; keep the contract
# between PacketRecord and the PKT_* constants pinned at import time.
assert PacketRecord._fields == (
    "src_ip", "dst_ip", "src_port", "dst_port", "protocol",
    "timestamp", "payload_len", "af",
)
assert (_fast.PKT_SRC_IP, _fast.PKT_DST_IP, _fast.PKT_SRC_PORT,
        _fast.PKT_DST_PORT, _fast.PKT_PROTOCOL, _fast.PKT_TIMESTAMP,
        _fast.PKT_PAYLOAD_LEN, _fast.PKT_AF) == (0, 1, 2, 3, 4, 5, 6, 7)

_BATCH = 8192


class FlowSession:
    """Drives one flow table over a packet stream."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.mode = config.mode
        self.table = _fast.FlowTable(
            mode=MODE_IDS[config.mode],
            active_timeout=config.active_timeout_s,
            inactive_timeout=config.inactive_timeout_s,
            max_entries=config.max_entries,
            forced_flush_interval=config.forced_flush_interval_s,
        )

    def _deliver(self, sink: Callable | None) -> int:
        exports = self.table.take()
        if self.mode == "oracle":
            for flow in exports:
                flow.features = oracle_record(
                    flow.series_lengths, flow.series_times).as_tuple()
        if sink is not None:
            for flow in exports:
                sink(flow)
        return len(exports)

    def process(self, packets: Iterable[PacketRecord],
                sink: Callable | None = None) -> int:
        """Ingest a packet stream; returns flows exported along the way."""
        exported = 0
        batch: list = []
        append = batch.append
        for pkt in packets:
            append(pkt)
            if len(batch) >= _BATCH:
                self.table.ingest_many(batch)
                batch = []
                append = batch.append
                exported += self._deliver(sink)
        if batch:
            self.table.ingest_many(batch)
        exported += self._deliver(sink)
        return exported

    def expire(self, now: float, sink: Callable | None = None) -> int:
        """Apply the inactive timeout as of a capture-clock reading."""
        self.table.expire(now)
        return self._deliver(sink)

    def finish(self, sink: Callable | None = None) -> int:
        """End of input: export everything still live."""
        self.table.flush_all()
        return self._deliver(sink)

    # Counters proxied from the table for summaries and invariant checks.

    @property
    def ingested_packets(self) -> int:
        return self.table.ingested_packets

    @property
    def ingested_bytes(self) -> int:
        return self.table.ingested_octets

    @property
    def exported_flows(self) -> int:
        return self.table.exported_flows

    @property
    def reordered(self) -> int:
        return self.table.reordered

    @property
    def evicted(self) -> int:
        return self.table.evicted


def meter_capture(packets: Iterable[PacketRecord], config: RunConfig,
                  sink: Callable | None = None) -> FlowSession:
    """Run a whole capture through a fresh session, including final flush."""
    session = FlowSession(config)
    session.process(packets, sink)
    session.finish(sink)
    return session


def canonical_key(src_ip: bytes, dst_ip: bytes, src_port: int, dst_port: int,
                  protocol: int) -> tuple:
    """Direction-independent flow key: endpoints ordered (address, port)."""
    if (src_ip, src_port) <= (dst_ip, dst_port):
        return (src_ip, dst_ip, src_port, dst_port, protocol)
    return (dst_ip, src_ip, dst_port, src_port, protocol)


def collect_flows(packets: Iterable[PacketRecord], config: RunConfig) -> list:
    """Convenience: meter and return all exported flows in export order."""
    flows: list = []
    meter_capture(packets, config, flows.append)
    return flows
