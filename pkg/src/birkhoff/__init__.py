"""Rigorous Birkhoff normal forms and effective stability estimates."""

from .majorant import (
    NoStableRegime,
    ResonantStability,
    StabilityResult,
    TailDivergence,
    optimal_scan,
    optimal_scan_grid,
    resonant_pipeline,
    resonant_scan_grid,
    stability_radius,
)
from .models import cprtbp_frequencies, cprtbp_hamiltonian, cprtbp_model, frequency, henon_heiles
from .normalform import (
    Frequencies,
    HamiltonianState,
    NormSnapshot,
    ResonanceError,
    ResonanceMode,
    normalize,
    step,
)
from .polyring import HomoPoly
from .rigor import ComplexInterval, Interval, LogBound, SafeRangeError

__all__ = [
    "ComplexInterval",
    "Frequencies",
    "HamiltonianState",
    "HomoPoly",
    "Interval",
    "LogBound",
    "NoStableRegime",
    "NormSnapshot",
    "ResonanceError",
    "ResonanceMode",
    "ResonantStability",
    "SafeRangeError",
    "StabilityResult",
    "TailDivergence",
    "cprtbp_frequencies",
    "cprtbp_hamiltonian",
    "cprtbp_model",
    "frequency",
    "henon_heiles",
    "normalize",
    "optimal_scan",
    "optimal_scan_grid",
    "resonant_pipeline",
    "resonant_scan_grid",
    "stability_radius",
    "step",
]
