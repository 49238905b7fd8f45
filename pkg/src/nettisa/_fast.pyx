# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled metering core: per-flow accumulator state and the flow table.

The per-packet path (key canonicalization, timeout checks, counter and
accumulator updates) runs compiled because it executes once per packet; the
rest of the package stays in plain Python.  Packets enter as plain tuples
whose field order is pinned by the PKT_* constants below and mirrored by
PacketRecord in nettisa.packets.
"""

cimport cython

from libc.math cimport sqrt

# Tuple index contract for packet records.
PKT_SRC_IP = 0
PKT_DST_IP = 1
PKT_SRC_PORT = 2
PKT_DST_PORT = 3
PKT_PROTOCOL = 4
PKT_TIMESTAMP = 5
PKT_PAYLOAD_LEN = 6
PKT_AF = 7

# Pipeline modes.
MODE_CLASSIC = 0
MODE_NETTISA = 1
MODE_SPLT = 2
MODE_ORACLE = 3

#: Packets retained per flow by the splt baseline.
SPLT_MAX_PACKETS = 30

DEF _MODE_CLASSIC = 0
DEF _MODE_NETTISA = 1
DEF _MODE_SPLT = 2
DEF _MODE_ORACLE = 3
DEF _SPLT_MAX = 30


@cython.final
cdef class NettisaState:
    """Constant-size accumulator for the 13 streamwise features.

    Fifteen floating accumulators and two counters, updated in a bounded
    number of arithmetic operations per packet.  The struct never grows with
    the flow, which is the entire point of the feature set.
    """

    cdef public double sum_x, sum_x2, min_x, max_x, mu_hat, sum_abs_dev, sum_dev4
    cdef public double t_first, t_prev, sum_rel_t, min_dt, max_dt, mu_hat_dt
    cdef public double sum_abs_dev_dt, prev_len
    cdef public int n, switches

    cdef inline void _update(self, double x, double ts) noexcept:
        # Conditional expressions instead of if-branches where the data is
        # unpredictable; the compiler turns them into branch-free selects.
        cdef double mu, d, dt, mdt, e
        cdef int n = self.n + 1
        self.n = n
        self.sum_x += x
        self.sum_x2 += x * x
        if n == 1:
            self.min_x = x
            self.max_x = x
            self.t_first = ts
            # Running mean after the first element is that element; its
            # deviation terms are zero, so only the mean needs setting.
            self.mu_hat = x
        else:
            self.min_x = x if x < self.min_x else self.min_x
            self.max_x = x if x > self.max_x else self.max_x
            mu = self.mu_hat + (x - self.mu_hat) / n
            self.mu_hat = mu
            d = x - mu
            d = -d if d < 0.0 else d
            self.sum_abs_dev += d
            self.sum_dev4 += (d * d) * (d * d)
            # Inter-arrival gap, clamped at zero when capture reordering
            # makes it negative.  The clamped value participates in min/max.
            dt = ts - self.t_prev
            dt = 0.0 if dt < 0.0 else dt
            if n == 2:
                self.min_dt = dt
                self.max_dt = dt
            else:
                self.min_dt = dt if dt < self.min_dt else self.min_dt
                self.max_dt = dt if dt > self.max_dt else self.max_dt
            mdt = self.mu_hat_dt + (dt - self.mu_hat_dt) / (n - 1)
            self.mu_hat_dt = mdt
            e = dt - mdt
            e = -e if e < 0.0 else e
            self.sum_abs_dev_dt += e
            self.switches += 1 if x != self.prev_len else 0
            self.sum_rel_t += ts - self.t_first
        self.prev_len = x
        self.t_prev = ts

    cpdef update(self, double x, double ts):
        """Fold one packet (payload length x, timestamp ts) into the state."""
        self._update(x, ts)

    cpdef tuple finalize(self):
        """Produce the 13 features in canonical order.

        Features undefined for short flows are zero: the deviation family
        needs 2 packets, time_distribution needs 3 and a nonzero gap range.
        """
        cdef int n = self.n
        cdef double mean, var, std, rms, ad, kurt, mrt
        cdef double mtd = 0.0, mindt = 0.0, maxdt = 0.0, tdist = 0.0, sr = 0.0
        mean = self.sum_x / n
        var = self.sum_x2 / n - mean * mean
        if var < 0.0:
            var = 0.0
        std = sqrt(var)
        rms = sqrt(self.sum_x2 / n)
        ad = self.sum_abs_dev / n
        if std > 0.0:
            kurt = self.sum_dev4 / (n * (std * std) * (std * std))
        else:
            kurt = 0.0
        mrt = self.sum_rel_t / n
        if n >= 2:
            # Sum of consecutive gaps telescopes to last minus first.
            mtd = (self.t_prev - self.t_first) / (n - 1)
            mindt = self.min_dt
            maxdt = self.max_dt
            sr = self.switches / (0.5 * (n - 1))
        if n >= 3 and self.max_dt > self.min_dt:
            tdist = (self.sum_abs_dev_dt / (n - 1)) / (0.5 * (self.max_dt - self.min_dt))
        return (mean, self.min_x, self.max_x, std, rms, ad, kurt,
                mrt, mtd, mindt, maxdt, tdist, sr)


@cython.final
cdef class FlowEntry:
    """Live flow-table slot.  Which optional state it carries depends on mode."""

    cdef public object key
    cdef public bytes src_ip, dst_ip
    cdef public int src_port, dst_port, protocol, af
    cdef public double t_first, t_last
    cdef public long long packets, packets_rev
    cdef public unsigned long long octets, octets_rev
    cdef public NettisaState state
    cdef public list splt_lengths, splt_directions, splt_times
    cdef public double splt_prev_ts
    cdef public list series_lengths, series_times


@cython.final
cdef class ExportedFlow:
    """Finished flow handed to the caller when a table entry retires."""

    cdef public bytes src_ip, dst_ip
    cdef public int src_port, dst_port, protocol, af
    cdef public double t_first, t_last
    cdef public long long packets, packets_rev
    cdef public unsigned long long octets, octets_rev
    cdef public tuple features
    cdef public list splt_lengths, splt_directions, splt_times
    cdef public list series_lengths, series_times
    cdef public str trigger


cdef ExportedFlow _make_export(FlowEntry e, str trigger, int mode):
    cdef ExportedFlow x = ExportedFlow.__new__(ExportedFlow)
    x.src_ip = e.src_ip
    x.dst_ip = e.dst_ip
    x.src_port = e.src_port
    x.dst_port = e.dst_port
    x.protocol = e.protocol
    x.af = e.af
    x.t_first = e.t_first
    x.t_last = e.t_last
    x.packets = e.packets
    x.packets_rev = e.packets_rev
    x.octets = e.octets
    x.octets_rev = e.octets_rev
    x.trigger = trigger
    if mode == _MODE_NETTISA:
        x.features = e.state.finalize()
    elif mode == _MODE_SPLT:
        x.splt_lengths = e.splt_lengths
        x.splt_directions = e.splt_directions
        x.splt_times = e.splt_times
    elif mode == _MODE_ORACLE:
        x.series_lengths = e.series_lengths
        x.series_times = e.series_times
    return x


@cython.final
cdef class FlowTable:
    """Bidirectional flow cache with active/inactive timeouts.

    Flows are keyed by the canonical five-tuple: the (address, port)
    endpoint pairs are ordered so both directions land in one entry, and the
    first packet's source defines the forward direction.  Expired or flushed
    flows accumulate in an export buffer the caller drains with take().

    Timing is driven entirely by capture timestamps, so replaying the same
    capture yields the same export sequence.
    """

    cdef public dict entries
    cdef public int mode
    cdef public double active_timeout, inactive_timeout, forced_flush_interval
    cdef public double sweep_interval
    cdef public long long max_entries
    cdef public long long ingested_packets
    cdef public unsigned long long ingested_octets
    cdef public long long exported_flows, reordered, evicted
    cdef list exports
    cdef double next_sweep, next_flush, last_expire
    cdef int started

    def __init__(self, mode=MODE_NETTISA, double active_timeout=300.0,
                 double inactive_timeout=65.0, long long max_entries=1 << 20,
                 double forced_flush_interval=0.0):
        if active_timeout <= 0.0 or inactive_timeout <= 0.0:
            raise ValueError("timeouts must be positive")
        if max_entries < 1:
            raise ValueError("max_entries must be at least 1")
        if forced_flush_interval < 0.0:
            raise ValueError("forced_flush_interval must be >= 0")
        self.entries = {}
        self.mode = mode
        self.active_timeout = active_timeout
        self.inactive_timeout = inactive_timeout
        self.forced_flush_interval = forced_flush_interval
        self.max_entries = max_entries
        self.sweep_interval = max(1.0, inactive_timeout / 8.0)
        self.exports = []
        self.started = 0
        self.last_expire = -1e308

    def __len__(self):
        return len(self.entries)

    cpdef ingest(self, pkt):
        """Feed one packet tuple (see PKT_* for the field order)."""
        # isinstance instead of a typed arg: PacketRecord is a tuple
        # subclass and Cython's arg check wants the exact type.  The
        # length check matters because indexing below is unchecked.
        if not isinstance(pkt, tuple) or len(<tuple>pkt) < 8:
            raise TypeError("packet must be an 8-field tuple")
        self._step(<tuple>pkt)

    cpdef ingest_many(self, list packets):
        """Feed a batch of packet tuples; the loop stays compiled."""
        for pkt in packets:
            if not isinstance(pkt, tuple) or len(<tuple>pkt) < 8:
                raise TypeError("packet must be an 8-field tuple")
            self._step(<tuple>pkt)

    cdef int _step(self, tuple pkt) except -1:
        cdef bytes src = <bytes>pkt[0]
        cdef bytes dst = <bytes>pkt[1]
        cdef int sport = pkt[2]
        cdef int dport = pkt[3]
        cdef int proto = pkt[4]
        cdef double ts = pkt[5]
        cdef long plen = pkt[6]
        cdef double x = plen
        cdef object key
        cdef FlowEntry e
        cdef int fwd

        self.ingested_packets += 1
        self.ingested_octets += plen

        if not self.started:
            self.started = 1
            self.next_sweep = ts + self.sweep_interval
            self.next_flush = ts + self.forced_flush_interval

        if self.forced_flush_interval > 0.0 and ts >= self.next_flush:
            while ts >= self.next_flush:
                self.next_flush += self.forced_flush_interval
            self._export_all("flush")
            self.next_sweep = ts + self.sweep_interval
        elif ts >= self.next_sweep:
            self._sweep(ts if ts > self.last_expire else self.last_expire)
            self.next_sweep = ts + self.sweep_interval

        if (src, sport) <= (dst, dport):
            key = (src, dst, sport, dport, proto)
        else:
            key = (dst, src, dport, sport, proto)

        e = self.entries.get(key)
        if e is not None and ts - e.t_first >= self.active_timeout:
            # Long-lived flow: retire the segment and restart fresh with
            # this packet.
            self.exports.append(_make_export(e, "active", self.mode))
            self.exported_flows += 1
            del self.entries[key]
            e = None
        if e is None:
            if len(self.entries) >= self.max_entries:
                self._evict()
            e = FlowEntry.__new__(FlowEntry)
            e.key = key
            e.src_ip = src
            e.dst_ip = dst
            e.src_port = sport
            e.dst_port = dport
            e.protocol = proto
            e.af = pkt[7]
            e.t_first = ts
            e.t_last = ts
            if self.mode == _MODE_NETTISA:
                e.state = NettisaState()
            elif self.mode == _MODE_SPLT:
                e.splt_lengths = []
                e.splt_directions = []
                e.splt_times = []
                e.splt_prev_ts = ts
            elif self.mode == _MODE_ORACLE:
                e.series_lengths = []
                e.series_times = []
            self.entries[key] = e

        fwd = e.src_ip == src and e.src_port == sport
        if ts < e.t_last:
            self.reordered += 1
        else:
            e.t_last = ts
        if fwd:
            e.packets += 1
            e.octets += plen
        else:
            e.packets_rev += 1
            e.octets_rev += plen

        if self.mode == _MODE_NETTISA:
            e.state._update(x, ts)
        elif self.mode == _MODE_SPLT:
            self._splt_append(e, plen, ts, fwd)
        elif self.mode == _MODE_ORACLE:
            e.series_lengths.append(x)
            e.series_times.append(ts)
        return 0

    cdef void _splt_append(self, FlowEntry e, long plen, double ts, int fwd):
        # splt_prev_ts starts at the first packet's timestamp, so the first
        # stored gap is 0; negative gaps from reordering clamp to 0.
        cdef double dt
        if len(e.splt_lengths) >= _SPLT_MAX:
            return
        dt = ts - e.splt_prev_ts
        if dt < 0.0:
            dt = 0.0
        e.splt_lengths.append(plen)
        e.splt_directions.append(1 if fwd else -1)
        e.splt_times.append(dt)
        e.splt_prev_ts = ts

    cdef _sweep(self, double now):
        """Export every entry idle for at least the inactive timeout."""
        cdef FlowEntry e
        cdef list dead = []
        for e in self.entries.values():
            if now - e.t_last >= self.inactive_timeout:
                dead.append(e)
        if not dead:
            return
        dead.sort(key=_entry_key)
        for e in dead:
            self.exports.append(_make_export(e, "inactive", self.mode))
            self.exported_flows += 1
            del self.entries[e.key]

    cdef _evict(self):
        """Drop the oldest-touched entry to stay within max_entries."""
        cdef FlowEntry e, oldest = None
        for e in self.entries.values():
            if oldest is None or e.t_last < oldest.t_last:
                oldest = e
        if oldest is None:
            return
        self.exports.append(_make_export(oldest, "evict", self.mode))
        self.exported_flows += 1
        self.evicted += 1
        del self.entries[oldest.key]

    cdef _export_all(self, str trigger):
        cdef FlowEntry e
        cdef list live = sorted(self.entries.values(), key=_entry_key)
        for e in live:
            self.exports.append(_make_export(e, trigger, self.mode))
            self.exported_flows += 1
        self.entries.clear()

    def expire(self, double now):
        """Export flows idle since before now - inactive_timeout.

        now must not go backwards across calls.
        """
        if now < self.last_expire:
            raise ValueError("expire time went backwards")
        self.last_expire = now
        self._sweep(now)

    def flush_all(self):
        """End of input: export everything still live, ordered by key."""
        self._export_all("final")

    def take(self):
        """Drain and return the export buffer."""
        out = self.exports
        self.exports = []
        return out


def _entry_key(FlowEntry e):
    return e.key
