"""Flow metering with streamwise time-series features.

Meters packet captures into bidirectional flows and computes a compact
13-feature statistical description of each flow's payload-length and timing
series using constant per-flow state, alongside classic counters, a capped
per-packet (SPLT) baseline, and a batch reference oracle for verification.
"""

from ._fast import (
    SPLT_MAX_PACKETS,
    ExportedFlow,
    FlowTable,
    NettisaState,
)
from .config import ConfigError, RunConfig, build_config
from .enhance import enhance
from .features import (
    BASE_FIELD_NAMES,
    ENHANCED_FIELD_NAMES,
    FEATURE_NAMES,
    EnhancedRecord,
    NettisaRecord,
)
from .flows import FlowSession, canonical_key, collect_flows, meter_capture
from .oracle import StoredSeries, oracle_record, oracle_report
from .packets import CaptureError, PacketRecord, open_capture, read_packets

__version__ = "0.1.0"

__all__ = [
    "BASE_FIELD_NAMES",
    "CaptureError",
    "ConfigError",
    "ENHANCED_FIELD_NAMES",
    "EnhancedRecord",
    "ExportedFlow",
    "FEATURE_NAMES",
    "FlowSession",
    "FlowTable",
    "NettisaRecord",
    "NettisaState",
    "PacketRecord",
    "RunConfig",
    "SPLT_MAX_PACKETS",
    "StoredSeries",
    "build_config",
    "canonical_key",
    "collect_flows",
    "enhance",
    "meter_capture",
    "open_capture",
    "oracle_record",
    "oracle_report",
    "read_packets",
]
