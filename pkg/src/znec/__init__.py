"""Network error correction on the four-node zig-zag network with low-capacity feedback."""

from .bounds import (
    BoundReport,
    CutSpec,
    NetworkParams,
    bound_report,
    classify,
    confusion_attack,
    four_node_cut,
    lemma1_margin,
    singleton_bounds,
    theorem1_bound,
    theorem1_min,
    tight_condition,
    upper_bound,
)
from .codec import CodecKeys, Link, MessageBlock, RowLayout, build_keys, encode, plan_layout
from .harness import SessionConfig, run_session
from .mds import MdsCode, make_mds, mds_encode, mds_erasure_decode, mds_error_decode

__version__ = "0.1.0"
