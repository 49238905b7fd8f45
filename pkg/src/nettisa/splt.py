"""SPLT baseline helpers.

The packet-level capture (lengths, directions, inter-packet times of the
first packets of a flow) is the established richer-telemetry baseline the
streamwise features are compared against.  The capped per-packet triples are
collected by the flow table; this module holds the cap, a plain-Python
reference builder used to verify the compiled path, and the coverage
statistic.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from ._fast import SPLT_MAX_PACKETS


def splt_series(
    lengths: Sequence[int],
    times: Sequence[float],
    directions: Sequence[int],
    cap: int = SPLT_MAX_PACKETS,
) -> tuple[list[int], list[int], list[float]]:
    """Reference construction of the capped SPLT lists for one flow.

    The first packet's gap is 0; later gaps clamp at 0 under reordering.
    """
    out_len: list[int] = []
    out_dir: list[int] = []
    out_dt: list[float] = []
    prev_t: float | None = None
    for plen, t, d in zip(lengths, times, directions):
        if len(out_len) >= cap:
            break
        dt = 0.0 if prev_t is None else max(0.0, t - prev_t)
        out_len.append(plen)
        out_dir.append(1 if d >= 0 else -1)
        out_dt.append(dt)
        prev_t = t
    return out_len, out_dir, out_dt


def splt_coverage(packet_counts: Iterable[int], cap: int = SPLT_MAX_PACKETS) -> float:
    """Share of flows whose packet count exceeds the SPLT cap.

    Flows at or under the cap are fully described by SPLT; the remainder is
    the fraction where the streamwise features add information.
    """
    total = 0
    over = 0
    for count in packet_counts:
        total += 1
        if count > cap:
            over += 1
    return over / total if total else 0.0
