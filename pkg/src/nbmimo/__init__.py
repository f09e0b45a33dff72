"""Large-MIMO uplink receivers: non-binary BP detection of M-QAM, GF(q) LDPC
codes, EXIT-chart code design and pilot-based channel estimation."""

from .errors import ConfigurationError, ConstructionError, DomainError
from .galois import GfField, gf_build, gf_inv, gf_mul
from .mimo import (ComplexChannel, PamAlphabet, RealSystem, SnrSpec, draw_channel, modulate,
                   pam_alphabet, realify, transmit)
from .nbbp import NbbpConfig, OpCounter, PosteriorTable, bit_probabilities, detect, op_count_estimate
from .baselines import bbp_detect, hard_detect, linear_detect, soft_detect
from .ldpc import DegreeProfile, ParityCheckMatrix, decode, encode, optimize_entries, realize_code
from .exit_chart import ExitCurve, detector_exit_curve, j_function, j_inverse, optimize_profile
from .chanest import iterative_receive, make_frame, mmse_estimate, refine_estimate
from .harness import BerRecord, SimConfig, ber_confidence, parse_config, run, siso_awgn_reference

__version__ = "0.1.0"
