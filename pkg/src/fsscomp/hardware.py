"""Electro-optic drive planning for the polarization-selective frequency shift.

A Pockels cell adds phase alpha*V(t) to the V-polarized mode, so a linear
voltage ramp with slope dV/dt = S/(hbar*alpha) produces the required
serrodyne shift. Cells placed in series along one arm add their phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .spectra import CONSTANTS
from .timedomain import truncated_coherence

DEFAULT_MAX_CELLS = 4


@dataclass(frozen=True)
class PockelsCell:
    """Phase sensitivity alpha (rad/V) and driver limits.

    ``placeholder_limits`` marks max_slew/max_voltage values that are
    assumptions rather than datasheet numbers.
    """

    alpha: float
    max_slew: float
    max_voltage: float
    name: str = "cell"
    placeholder_limits: bool = False

    def __post_init__(self):
        for field_name in ("alpha", "max_slew", "max_voltage"):
            value = getattr(self, field_name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"{field_name} must be positive, got {value}")


# 52 mrad/V at 830 nm; slew and voltage limits are assumed
CONOPTICS_830NM = PockelsCell(
    alpha=0.052, max_slew=50.0, max_voltage=300.0, name="eo-52mrad-830nm", placeholder_limits=True
)
DEFAULT_CATALOG = (CONOPTICS_830NM,)


@dataclass(frozen=True)
class RampPlan:
    """Drive plan for one arm.

    For an infeasible request ``feasible`` is False, ``binding`` names the
    constraint that needs more than ``max_cells`` cells, and the numeric
    fields describe the plan at ``max_cells``.
    """

    n_cells: int
    per_cell_slew: float  # V/ns
    window: float  # ns
    peak_voltage: float  # V
    achieved_rate: float  # rad/ns
    required_slew: float  # V/ns, single-cell equivalent
    feasible: bool = True
    binding: str | None = None


def required_slew(S: float, alpha: float) -> float:
    """dV/dt in V/ns that shifts a photon by S (µeV) through a cell of sensitivity alpha (rad/V)."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return CONSTANTS.energy_to_rate(S) / alpha


def plan_cells(
    S: float, cell: PockelsCell, window: float, max_cells: int = DEFAULT_MAX_CELLS
) -> RampPlan:
    """Fewest series cells meeting both the slew and the peak-voltage budget.

    Sign of S is irrelevant for the budget (the two arms ramp in opposite
    directions); magnitudes are planned.
    """
    if not window > 0:
        raise ParameterError(f"window must be positive, got {window}")
    if max_cells < 1:
        raise ParameterError("max_cells must be at least 1")
    total = abs(required_slew(S, cell.alpha))
    need_slew = math.ceil(total / cell.max_slew)
    need_volt = math.ceil(total * window / cell.max_voltage)
    n = max(1, need_slew, need_volt)
    feasible = n <= max_cells
    binding = None
    if not feasible:
        binding = "max_voltage" if need_volt >= need_slew else "max_slew"
        n = max_cells
    per_cell = total / n
    return RampPlan(
        n_cells=n,
        per_cell_slew=per_cell,
        window=window,
        peak_voltage=per_cell * window,
        achieved_rate=n * cell.alpha * per_cell,
        required_slew=total,
        feasible=feasible,
        binding=binding,
    )


def residual_fidelity(S: float, Gamma: float, window: float) -> float:
    """Fidelity to Phi+ when the canonical ramps only run for ``window`` ns after emission starts."""
    return 0.5 * (1.0 + truncated_coherence(S, Gamma, window).real)
