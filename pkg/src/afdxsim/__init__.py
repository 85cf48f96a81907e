"""Discrete-event simulation and analysis of AFDX (ARINC 664 Part 7) networks."""

from .core import (
    DEFAULT_CONSTANTS,
    Frame,
    NetworkConstants,
    VirtualLinkSpec,
    advance_seq,
    decode_dest_mac,
    encode_dest_mac,
    max_jitter_for_es,
    next_seq,
    transmission_time,
    validate_vl,
)
from .engine import Engine, ModelLevel, Pacing, Scenario, run, run_paced
from .generators import fms_topology, generate_random, parse_csv, emit_csv, replicate, RandomGenSpec
from .analysis import build_ecdf, percentile, series_stats
from .monitors import JitterClass, LatencyClass, classify_jitter, check_latency, count_drops, monitor_report
from .network import TimedChannelSpec, TopologySpec, load_topology, dump_topology
from .policing import BucketParams, bucket_params, check_equivalence
from .trace import TraceEvent, TraceLog

__version__ = "0.1.0"
