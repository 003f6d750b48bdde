"""Streaming erasure codes for a three-node relay under delay constraints."""

from streamrelay.channel import DcswChannel, ErasurePattern, GilbertElliott, enumerate_patterns, is_permissible
from streamrelay.gf import FieldElem, GaloisField, get_field
from streamrelay.mds import MdsCode
from streamrelay.planner import RelayParams, plan, upper_bound
from streamrelay.relay import RelayCode, build_relay_code, run_end_to_end, trace
from streamrelay.sde import SdeCode, build_sde
from streamrelay.verify import VerifyPlan, verify_relay

__all__ = [
    "DcswChannel", "ErasurePattern", "GilbertElliott", "enumerate_patterns", "is_permissible",
    "FieldElem", "GaloisField", "get_field", "MdsCode",
    "RelayParams", "plan", "upper_bound",
    "RelayCode", "build_relay_code", "run_end_to_end", "trace",
    "SdeCode", "build_sde", "VerifyPlan", "verify_relay",
]
__version__ = "0.1.0"
