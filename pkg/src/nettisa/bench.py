"""Benchmark harness: wall time, throughput, and memory per pipeline mode.

The capture is decoded once up front; each timed run covers flow
aggregation, feature computation, and record serialization over the
in-memory packets.  File decoding is identical across modes and would only
dilute the contrast, so it stays outside the timed region.  Process RSS is
sampled on a side thread at 20 Hz while a mode runs.
"""

from __future__ import annotations

import statistics
import sys
import threading
import time
from dataclasses import dataclass
from typing import Sequence

import psutil

from .config import RunConfig
from .flows import FlowSession
from .records import CsvWriter, write_binary


class ByteCounter:
    """Binary sink that only counts."""

    def __init__(self) -> None:
        self.count = 0

    def write(self, data: bytes) -> int:
        self.count += len(data)
        return len(data)


class NullText:
    """Text sink that only counts."""

    def __init__(self) -> None:
        self.count = 0

    def write(self, text: str) -> int:
        self.count += len(text)
        return len(text)


class _RssSampler(threading.Thread):
    """Samples process RSS at a fixed rate until stopped."""

    def __init__(self, interval: float = 0.05):
        super().__init__(daemon=True)
        self.interval = interval
        self.samples: list[int] = []
        self._halt = threading.Event()
        self._proc = psutil.Process()

    def run(self) -> None:
        while not self._halt.is_set():
            self.samples.append(self._proc.memory_info().rss)
            self._halt.wait(self.interval)

    def stop(self) -> list[int]:
        self._halt.set()
        self.join()
        return self.samples


@dataclass
class BenchResult:
    mode: str
    repeats: int
    wall_times_s: list[float]
    median_wall_s: float
    packets: int
    packets_per_s: float
    exported_flows: int
    output_bytes: int
    rss_peak_bytes: int
    rss_mean_bytes: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "repeats": self.repeats,
            "wall_times_s": self.wall_times_s,
            "median_wall_s": self.median_wall_s,
            "packets": self.packets,
            "packets_per_s": self.packets_per_s,
            "exported_flows": self.exported_flows,
            "output_bytes": self.output_bytes,
            "rss_peak_bytes": self.rss_peak_bytes,
            "rss_mean_bytes": self.rss_mean_bytes,
        }


def _run_once(packets: Sequence, config: RunConfig) -> tuple[float, int, int]:
    """One timed pass: aggregate, finalize, serialize.  Returns
    (wall seconds, exported flows, output bytes)."""
    if config.mode == "splt":
        sink = NullText()
        writer = CsvWriter(sink, mode="splt")
        emit = writer.write
        counter = sink
    else:
        counter = ByteCounter()
        kind = "classic" if config.mode == "classic" else "nettisa"
        emit = lambda flow: write_binary(flow, kind, counter)

    session = FlowSession(config)
    t0 = time.perf_counter()
    session.process(packets, emit)
    session.finish(emit)
    wall = time.perf_counter() - t0
    return wall, session.exported_flows, counter.count


def run_mode(packets: Sequence, base: RunConfig, mode: str,
             repeats: int = 3) -> BenchResult:
    """Benchmark one mode over in-memory packets."""
    config = RunConfig(
        mode=mode,
        active_timeout_s=base.active_timeout_s,
        inactive_timeout_s=base.inactive_timeout_s,
        max_entries=base.max_entries,
        forced_flush_interval_s=base.forced_flush_interval_s,
    ).validate()

    sampler = _RssSampler()
    sampler.start()
    walls = []
    flows = 0
    out_bytes = 0
    for _ in range(repeats):
        wall, flows, out_bytes = _run_once(packets, config)
        walls.append(wall)
    samples = sampler.stop()

    median = statistics.median(walls)
    return BenchResult(
        mode=mode,
        repeats=repeats,
        wall_times_s=walls,
        median_wall_s=median,
        packets=len(packets),
        packets_per_s=len(packets) / median if median > 0 else float("inf"),
        exported_flows=flows,
        output_bytes=out_bytes,
        rss_peak_bytes=max(samples) if samples else 0,
        rss_mean_bytes=statistics.fmean(samples) if samples else 0.0,
    )


def bench_capture(packets: Sequence, config: RunConfig, modes: Sequence[str],
                  repeats: int = 3) -> list[BenchResult]:
    return [run_mode(packets, config, mode, repeats) for mode in modes]


def format_table(results: Sequence[BenchResult]) -> str:
    header = f"{'mode':<10}{'median s':>10}{'pkts/s':>14}{'flows':>10}{'out bytes':>12}{'rss peak MB':>13}"
    lines = [header, "-" * len(header)]
    for r in results:
        lines.append(
            f"{r.mode:<10}{r.median_wall_s:>10.3f}{r.packets_per_s:>14,.0f}"
            f"{r.exported_flows:>10}{r.output_bytes:>12}"
            f"{r.rss_peak_bytes / 1048576:>13.1f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Per-flow state accounting (used by the memory-contrast checks)
# ---------------------------------------------------------------------------

def accumulator_size(state) -> int:
    """Size in bytes of the constant accumulator object."""
    return sys.getsizeof(state)


def series_deep_size(lengths: list, times: list) -> int:
    """Bytes held by a stored per-packet series, elements included."""
    total = sys.getsizeof(lengths) + sys.getsizeof(times)
    total += sum(sys.getsizeof(v) for v in lengths)
    total += sum(sys.getsizeof(v) for v in times)
    return total
