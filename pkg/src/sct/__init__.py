"""Secrecy and common-information measures of finite tripartite distributions."""
from .dist import (Channel, JointDist, JointDist2, JointDist3, SctError, apply_channel, entropy,
                   marginalize, mutual_information, tensor_product, tv_distance, validate)
from .gk import (conditional_gk_ci, conditional_gk_ci_per_z, double_markov_decompose,
                 ergodic_decomposition, gk_ci, resolvability_flags)
from .measures import (MeasureResult, Quantity, bounds_report, intrinsic_information,
                       theorem3_certificate, wyner_ci, wyner_ci_cond, wyner_intrinsic_ci)

__all__ = [
    "Channel", "JointDist", "JointDist2", "JointDist3", "SctError", "apply_channel", "entropy",
    "marginalize", "mutual_information", "tensor_product", "tv_distance", "validate",
    "conditional_gk_ci", "conditional_gk_ci_per_z", "double_markov_decompose",
    "ergodic_decomposition", "gk_ci", "resolvability_flags", "MeasureResult", "Quantity",
    "bounds_report", "intrinsic_information", "theorem3_certificate", "wyner_ci",
    "wyner_ci_cond", "wyner_intrinsic_ci",
]
