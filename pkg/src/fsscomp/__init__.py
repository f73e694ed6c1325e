"""Frequency-shift compensation of fine-structure splitting in biexciton cascades."""

from .compensation import (
    ShiftSpec,
    apply_shift,
    optimal_shift_for_qdot,
    separability_residual,
    shift_amplitude,
)
from .spectra import (
    CONSTANTS,
    FrequencyGrid,
    PhysConstants,
    QDotParams,
    SpectralAmplitude,
    eval_phi,
    marginal,
    normalize,
    overlap,
)
from .state import (
    PolDensityMatrix,
    TwoPhotonState,
    concurrence,
    fidelity_phi_plus,
    reduce_polarization,
    state_fidelity,
)

__version__ = "0.1.0"
