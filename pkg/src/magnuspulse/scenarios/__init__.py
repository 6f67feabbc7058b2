"""Declarative builders for the worked examples."""

from .base import Scenario, raw_subspace_projector
from .pdc import PDCScenario, pdc_reduced_matrix, pdc_squeezing
from .qubit import qubit_derivative_correction, qubit_reduced_matrix, qubit_strong_driving
from .snap import SnapScenario, snap_gate
from .transmon import drag_baseline, harmonic_cutoff, transmon_gate

# scenario id -> (builder, name of its dimensionless time argument)
REGISTRY = {
    "qubit": (qubit_strong_driving, "wq_tf"),
    "pdc": (pdc_squeezing, "wa_tf"),
    "transmon": (transmon_gate, "alpha_tf"),
    "snap": (snap_gate, "chi_tf"),
}


def build_scenario(name: str, tf: float, params: dict = None) -> Scenario:
    """Build scenario ``name`` at dimensionless gate time ``tf``."""
    from ..errors import InvalidParameter

    if name not in REGISTRY:
        raise InvalidParameter(f"unknown scenario {name!r}; choose from {sorted(REGISTRY)}")
    builder, tf_name = REGISTRY[name]
    kw = dict(params or {})
    kw.pop(tf_name, None)
    if name == "snap" and "phases" in kw:
        kw["phases"] = {int(k): float(v) for k, v in kw["phases"].items()}
    return builder(**{tf_name: float(tf)}, **kw)


__all__ = ["Scenario", "PDCScenario", "SnapScenario", "REGISTRY", "build_scenario",
           "qubit_strong_driving", "qubit_reduced_matrix", "qubit_derivative_correction",
           "pdc_squeezing", "pdc_reduced_matrix", "transmon_gate", "drag_baseline",
           "harmonic_cutoff", "snap_gate", "raw_subspace_projector"]
