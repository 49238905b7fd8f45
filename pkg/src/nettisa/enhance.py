"""Collector-side feature derivation.

The exporter ships only the 13 streamwise features plus flow counters; the
seven features here are cheap scalar combinations of those, so they are
computed where records land rather than on the metering box.  Degenerate
flows (zero mean, zero deviation) define ratios as 0 instead of dividing.
"""

from __future__ import annotations

import math

from .features import EnhancedRecord, NettisaRecord

VARIANCE_STANDARD = "standard"
#: Emits sqrt(stdev) instead of stdev^2, reproducing a literal reading of
#: the original feature description.  Off by default.
VARIANCE_PAPER_LITERAL = "paper-literal"


def enhance(
    record: NettisaRecord,
    packets: int,
    packets_rev: int,
    octets: int,
    octets_rev: int,
    t_first: float,
    t_last: float,
    variance_mode: str = VARIANCE_STANDARD,
) -> EnhancedRecord:
    """Derive the collector features for one finalized flow.

    Pure: neither the record nor any shared state is modified.
    """
    if variance_mode not in (VARIANCE_STANDARD, VARIANCE_PAPER_LITERAL):
        raise ValueError(f"unknown variance mode {variance_mode!r}")
    mean = record.mean
    std = record.stdev
    if variance_mode == VARIANCE_STANDARD:
        variance = std * std
    else:
        variance = math.sqrt(std)
    return EnhancedRecord(
        features=record,
        packets=packets,
        packets_rev=packets_rev,
        bytes=octets,
        bytes_rev=octets_rev,
        max_minus_min=record.max - record.min,
        percent_deviation=record.avg_dispersion / mean if mean != 0.0 else 0.0,
        variance=variance,
        burstiness=(std - mean) / (std + mean) if std + mean != 0.0 else 0.0,
        coef_variation=std / mean if mean != 0.0 else 0.0,
        directions=packets / (packets + packets_rev),
        duration=t_last - t_first,
    )
