"""Flow feature records.

A nettisa record carries 13 statistics computed over a flow's sequence of
payload lengths and packet timestamps.  All of them are computable from a
fixed set of running accumulators, so the metering core never stores the
per-packet series; the definitions here are the single source of truth for
feature names and ordering used by the CSV, JSONL, and binary writers.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

#: Canonical feature order.  Locked: serialized records, CSV columns, and the
#: binary extension block all follow this order.
FEATURE_NAMES = (
    "mean",
    "min",
    "max",
    "stdev",
    "rms",
    "avg_dispersion",
    "kurtosis",
    "mean_relative_times",
    "mean_time_differences",
    "min_time_differences",
    "max_time_differences",
    "time_distribution",
    "switching_ratio",
)

#: Per-flow counters exported alongside the features.
BASE_FIELD_NAMES = ("packets", "packets_rev", "bytes", "bytes_rev")

#: Collector-side features derived from a finalized record plus counters.
ENHANCED_FIELD_NAMES = (
    "max_minus_min",
    "percent_deviation",
    "variance",
    "burstiness",
    "coef_variation",
    "directions",
    "duration",
)


@dataclass
class NettisaRecord:
    """The 13 streamwise features of one exported flow.

    Payload statistics (bytes): mean, min, max, stdev, rms, avg_dispersion,
    kurtosis.  Timing statistics (seconds): mean_relative_times (mean offset
    from the first packet), mean/min/max_time_differences (inter-packet
    gaps), time_distribution (spread of gaps relative to their range), and
    switching_ratio (payload-length change rate, dimensionless).
    """

    mean: float = 0.0
    min: float = 0.0
    max: float = 0.0
    stdev: float = 0.0
    rms: float = 0.0
    avg_dispersion: float = 0.0
    kurtosis: float = 0.0
    mean_relative_times: float = 0.0
    mean_time_differences: float = 0.0
    min_time_differences: float = 0.0
    max_time_differences: float = 0.0
    time_distribution: float = 0.0
    switching_ratio: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    @classmethod
    def from_tuple(cls, values) -> "NettisaRecord":
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(values)}")
        return cls(*[float(v) for v in values])


@dataclass
class EnhancedRecord:
    """A nettisa record extended with counters and collector-side features.

    Adds the four flow counters and seven derived statistics, giving the 20
    feature values a downstream classifier consumes (13 + 7 here; the four
    counters are carried next to them).
    """

    features: NettisaRecord
    packets: int = 0
    packets_rev: int = 0
    bytes: int = 0
    bytes_rev: int = 0
    max_minus_min: float = 0.0
    percent_deviation: float = 0.0
    variance: float = 0.0
    burstiness: float = 0.0
    coef_variation: float = 0.0
    directions: float = 0.0
    duration: float = 0.0

    def enhanced_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in ENHANCED_FIELD_NAMES)


# Sanity lock between the dataclass and the canonical order.
assert tuple(f.name for f in fields(NettisaRecord)) == FEATURE_NAMES
