"""Hybrid simulator for a two-display-case refrigeration loop.

Two display cases share one compressor rack.  Each case's air temperature
relaxes toward a warm equilibrium while its inlet valve is shut and is pulled
down, at a rate coupled to the shared suction pressure, while the valve is
open; the pressure in turn relaxes toward a level set by how many valves are
open.  Hysteresis valve logic (open at the upper temperature bound, close at
the lower one) makes the closed loop a hybrid system whose modes are the
four valve patterns.

The package provides exact event-driven simulation of the noiseless system
(piecewise closed-form flows, bisected guard crossings, periodic-cycle
detection), a stochastic executor where measurement noise thickens each
switching surface into a band of uniform firing, and ensemble analyses:
state-plane occupancy maps and classification of the synchronized switching
pattern the noiseless loop locks into.
"""

from .dynamics import (
    CANONICAL_COEFFICIENTS,
    Mode,
    PhysicalParameters,
    REFERENCE_PLANT,
    ReducedCoefficients,
    State,
    affine_fixed_point,
    propagate_exact,
    propagate_rk4,
    reduce_physical,
    vector_field,
)
from .hybrid import (
    CANONICAL_BOX,
    Box,
    Facet,
    HybridTimeDomain,
    HybridTrajectory,
    PeriodicCertificate,
    SwitchEvent,
    detect_period,
    guard_facet,
    label,
    run_deterministic,
)
from .stochastic import (
    NoiseModel,
    RandomSource,
    StepSizeError,
    SwitchClock,
    hazard,
    map_ensemble,
    run_ensemble,
    run_stochastic,
    signed_distance,
    survivor,
)
from .intensity import (
    IntensityGrid,
    SweepRow,
    SyncReport,
    accumulate_intensity,
    classify_synchronization,
    prevalence_sweep,
    sweep_to_csv,
)
from .config import RunConfig, load_config, merge_flags

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_BOX",
    "CANONICAL_COEFFICIENTS",
    "Box",
    "Facet",
    "HybridTimeDomain",
    "HybridTrajectory",
    "IntensityGrid",
    "Mode",
    "NoiseModel",
    "PeriodicCertificate",
    "PhysicalParameters",
    "REFERENCE_PLANT",
    "RandomSource",
    "ReducedCoefficients",
    "RunConfig",
    "State",
    "StepSizeError",
    "SweepRow",
    "SwitchClock",
    "SwitchEvent",
    "SyncReport",
    "accumulate_intensity",
    "affine_fixed_point",
    "classify_synchronization",
    "detect_period",
    "guard_facet",
    "hazard",
    "label",
    "load_config",
    "map_ensemble",
    "merge_flags",
    "prevalence_sweep",
    "propagate_exact",
    "propagate_rk4",
    "reduce_physical",
    "run_deterministic",
    "run_ensemble",
    "run_stochastic",
    "signed_distance",
    "survivor",
    "sweep_to_csv",
    "vector_field",
    "__version__",
]
