"""Work extraction from multitime quantum processes.

Process tensors and control strategies, the sequential, joint, global and
comb extraction protocols, and estimates of how far a process is from being
memoryless.
"""
from .channels import QuantumChannel
from .comb import (
    ControlComb,
    Dilation,
    ProcessTensor,
    apply_control_comb,
    build_from_dilation,
    conditional_channel,
    global_output,
    global_storage_comb,
    identity_feedthrough_comb,
    markov_product,
    product_input_comb,
    validate_comb,
)
from .nonmarkov import NMBracket, closest_markov_search, nm_bracket, nm_lower_bound, nm_upper_estimate, \
    process_rel_entropy
from .optimize import OptimizerConfig
from .protocols import ProtocolReport, comb_work_bracket, gap_report, global_work, joint_work, local_max_work, \
    sequential_work
from .scenarios import SCENARIOS, random_process, scenario
from .serialization import ProcessFormatError, parse_process, serialize_process
from .thermo import ThermalContext, WorkValue, channel_work, distillable_work, f_max
from .verify import VerificationRecord, emit_report, verify_suite

__version__ = "0.1.0"
