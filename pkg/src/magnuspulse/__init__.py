"""Fourier-parametrized correction pulses from the Magnus expansion."""

__version__ = "0.1.0"

from .algebra import OperatorBasis, build_basis, decompose
from .schedule import Envelope, FieldTemplate, FourierField, eval_envelope, eval_field, theta_accumulated
from .propagation import frame_coefficients, full_propagator_oracle, ideal_propagator, to_interaction_picture
from .magnus import MagnusStack, integrate_magnus, magnus_defect
from .solver import CorrectionResult, correct_to_order, solve_min_norm
from .metrics import avg_fidelity_error, squeezing_db
from .scenarios import REGISTRY, build_scenario, pdc_squeezing, qubit_strong_driving, snap_gate, transmon_gate
