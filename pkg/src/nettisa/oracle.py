"""Batch reference implementation of the flow features.

Every feature is recomputed here from the stored per-packet series, one
self-contained function per feature, written directly from the feature's
definition.  Nothing is shared or cached between functions on purpose: this
module is the oracle the streamwise core is verified against, so each value
must be derivable by reading a single function top to bottom.

Two families are computed:

* the *approximated* variants, which use the same running-mean convention as
  the streamwise core and must match it to near machine precision, and
* the *exact* variants, which use true two-pass means.  These quantify the
  approximation error of the running-mean shortcut; they are reported, not
  asserted against the core.

The cost of this module is intentionally Theta(n) per flow with the full
series held in memory.  The metering core exists to avoid exactly that.
"""

from __future__ import annotations

import math
from typing import Iterator, Sequence

from .features import NettisaRecord


class StoredSeries:
    """Per-flow packet series kept by the oracle pipeline mode.

    Grows without bound with the flow length; the bench harness uses that
    deliberately to contrast against the constant-size accumulator state.
    """

    __slots__ = ("lengths", "times")

    def __init__(self) -> None:
        self.lengths: list[float] = []
        self.times: list[float] = []

    def append(self, payload_len: float, timestamp: float) -> None:
        self.lengths.append(payload_len)
        self.times.append(timestamp)

    def __len__(self) -> int:
        return len(self.lengths)


def running_mean_trace(values: Sequence[float]) -> Iterator[float]:
    """Yield the running approximated mean after each element.

    The estimate starts at 0 and advances by (x - estimate) / i, so after the
    first element it equals that element exactly; deviations taken against
    the post-update estimate therefore start at 0.
    """
    mu = 0.0
    for i, x in enumerate(values, start=1):
        mu += (x - mu) / i
        yield mu


def inter_arrival_gaps(times: Sequence[float]) -> list[float]:
    """Consecutive timestamp differences, clamped at zero for reordering."""
    return [max(0.0, times[i] - times[i - 1]) for i in range(1, len(times))]


# ---------------------------------------------------------------------------
# Payload-size features
# ---------------------------------------------------------------------------

def oracle_mean(xs: Sequence[float]) -> float:
    total = 0.0
    for x in xs:
        total += x
    return total / len(xs)


def oracle_min(xs: Sequence[float]) -> float:
    lowest = xs[0]
    for x in xs:
        if x < lowest:
            lowest = x
    return lowest


def oracle_max(xs: Sequence[float]) -> float:
    highest = xs[0]
    for x in xs:
        if x > highest:
            highest = x
    return highest


def oracle_stdev(xs: Sequence[float]) -> float:
    """Population standard deviation in its accumulator form.

    Computed as sqrt(E[x^2] - E[x]^2), the same expression the streamwise
    core evaluates, with the tiny-negative guard for cancellation.
    """
    n = len(xs)
    total = 0.0
    total_sq = 0.0
    for x in xs:
        total += x
        total_sq += x * x
    mean = total / n
    var = total_sq / n - mean * mean
    if var < 0.0:
        var = 0.0
    return math.sqrt(var)


def oracle_stdev_exact(xs: Sequence[float]) -> float:
    """Population standard deviation by the direct two-pass definition."""
    n = len(xs)
    total = 0.0
    for x in xs:
        total += x
    mean = total / n
    dev_sq = 0.0
    for x in xs:
        d = x - mean
        dev_sq += d * d
    return math.sqrt(dev_sq / n)


def oracle_rms(xs: Sequence[float]) -> float:
    n = len(xs)
    total_sq = 0.0
    for x in xs:
        total_sq += x * x
    return math.sqrt(total_sq / n)


def oracle_avg_dispersion(xs: Sequence[float]) -> float:
    """Mean absolute deviation taken against the running approximated mean."""
    n = len(xs)
    total = 0.0
    for x, mu in zip(xs, running_mean_trace(xs)):
        total += abs(x - mu)
    return total / n


def oracle_avg_dispersion_exact(xs: Sequence[float]) -> float:
    """Mean absolute deviation against the true mean (two passes)."""
    n = len(xs)
    total = 0.0
    for x in xs:
        total += x
    mean = total / n
    dev = 0.0
    for x in xs:
        dev += abs(x - mean)
    return dev / n


def oracle_kurtosis(xs: Sequence[float]) -> float:
    """Fourth standardized moment with the running approximated mean.

    The numerator accumulates (x - running mean)^4; the denominator uses the
    accumulator-form standard deviation.  Zero when the deviation is zero.
    No excess correction is applied.
    """
    n = len(xs)
    std = oracle_stdev(xs)
    if std <= 0.0:
        return 0.0
    total = 0.0
    for x, mu in zip(xs, running_mean_trace(xs)):
        d = x - mu
        total += d * d * d * d
    return total / (n * std ** 4)


def oracle_kurtosis_exact(xs: Sequence[float]) -> float:
    """Fourth standardized moment with the true mean and exact deviation."""
    n = len(xs)
    std = oracle_stdev_exact(xs)
    if std <= 0.0:
        return 0.0
    total = 0.0
    for x in xs:
        total += x
    mean = total / n
    quartic = 0.0
    for x in xs:
        d = x - mean
        quartic += d * d * d * d
    return quartic / (n * std ** 4)


# ---------------------------------------------------------------------------
# Timing features
# ---------------------------------------------------------------------------

def oracle_mean_relative_times(ts: Sequence[float]) -> float:
    """Mean offset of each packet from the flow's first packet."""
    t0 = ts[0]
    total = 0.0
    for t in ts:
        total += t - t0
    return total / len(ts)


def oracle_mean_time_differences(ts: Sequence[float]) -> float:
    """Mean inter-packet gap, from the raw (unclamped) difference sequence.

    The streamwise core telescopes this to (t_last - t_first) / (n - 1);
    summing the differences here keeps the two routes independent.
    """
    n = len(ts)
    if n < 2:
        return 0.0
    total = 0.0
    for i in range(1, n):
        total += ts[i] - ts[i - 1]
    return total / (n - 1)


def oracle_min_time_differences(ts: Sequence[float]) -> float:
    if len(ts) < 2:
        return 0.0
    return min(inter_arrival_gaps(ts))


def oracle_max_time_differences(ts: Sequence[float]) -> float:
    if len(ts) < 2:
        return 0.0
    return max(inter_arrival_gaps(ts))


def oracle_time_distribution(ts: Sequence[float]) -> float:
    """Spread of inter-packet gaps relative to half their range.

    Numerator: mean absolute deviation of the gaps against their running
    approximated mean.  Denominator: half the gap range.  Defined only for
    three or more packets with a nonzero range; zero otherwise.
    """
    n = len(ts)
    if n < 3:
        return 0.0
    gaps = inter_arrival_gaps(ts)
    lo, hi = min(gaps), max(gaps)
    if not hi > lo:
        return 0.0
    dev = 0.0
    for g, mu in zip(gaps, running_mean_trace(gaps)):
        dev += abs(g - mu)
    return (dev / len(gaps)) / (0.5 * (hi - lo))


def oracle_time_distribution_exact(ts: Sequence[float]) -> float:
    """Gap spread using the true mean of the gaps."""
    n = len(ts)
    if n < 3:
        return 0.0
    gaps = inter_arrival_gaps(ts)
    lo, hi = min(gaps), max(gaps)
    if not hi > lo:
        return 0.0
    total = 0.0
    for g in gaps:
        total += g
    mean = total / len(gaps)
    dev = 0.0
    for g in gaps:
        dev += abs(mean - g)
    return (dev / len(gaps)) / (0.5 * (hi - lo))


def oracle_switching_ratio(xs: Sequence[float]) -> float:
    """Payload-length changes normalized by half the transition count."""
    n = len(xs)
    if n < 2:
        return 0.0
    switches = 0
    prev = xs[0]
    for x in xs[1:]:
        if x != prev:
            switches += 1
        prev = x
    return switches / (0.5 * (n - 1))


# ---------------------------------------------------------------------------
# Collector-side (enhanced) features, by definition
# ---------------------------------------------------------------------------

def oracle_enhanced(
    xs: Sequence[float],
    ts: Sequence[float],
    packets: int,
    packets_rev: int,
) -> dict[str, float]:
    mean = oracle_mean(xs)
    std = oracle_stdev(xs)
    return {
        "max_minus_min": oracle_max(xs) - oracle_min(xs),
        "percent_deviation": oracle_avg_dispersion(xs) / mean if mean != 0.0 else 0.0,
        "variance": std * std,
        "burstiness": (std - mean) / (std + mean) if std + mean != 0.0 else 0.0,
        "coef_variation": std / mean if mean != 0.0 else 0.0,
        "directions": packets / (packets + packets_rev),
        "duration": ts[-1] - ts[0],
    }


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def oracle_record(xs: Sequence[float], ts: Sequence[float]) -> NettisaRecord:
    """All 13 features in their approximated-variant form.

    This is the value the streamwise core must reproduce for the same
    packet sequence.
    """
    if len(xs) == 0 or len(xs) != len(ts):
        raise ValueError("series must be non-empty and aligned")
    return NettisaRecord(
        mean=oracle_mean(xs),
        min=oracle_min(xs),
        max=oracle_max(xs),
        stdev=oracle_stdev(xs),
        rms=oracle_rms(xs),
        avg_dispersion=oracle_avg_dispersion(xs),
        kurtosis=oracle_kurtosis(xs),
        mean_relative_times=oracle_mean_relative_times(ts),
        mean_time_differences=oracle_mean_time_differences(ts),
        min_time_differences=oracle_min_time_differences(ts),
        max_time_differences=oracle_max_time_differences(ts),
        time_distribution=oracle_time_distribution(ts),
        switching_ratio=oracle_switching_ratio(xs),
    )


def oracle_exact_variants(xs: Sequence[float], ts: Sequence[float]) -> dict[str, float]:
    """The features whose approximated form differs from the exact one."""
    return {
        "stdev": oracle_stdev_exact(xs),
        "avg_dispersion": oracle_avg_dispersion_exact(xs),
        "kurtosis": oracle_kurtosis_exact(xs),
        "time_distribution": oracle_time_distribution_exact(ts),
    }


def oracle_report(xs: Sequence[float], ts: Sequence[float]) -> dict:
    """Approximated record, exact variants, and their gaps, for inspection."""
    approx = oracle_record(xs, ts)
    exact = oracle_exact_variants(xs, ts)
    gaps = {
        name: abs(getattr(approx, name) - value) for name, value in exact.items()
    }
    return {"approx": approx, "exact": exact, "gap": gaps}
