"""Polarization-dependent frequency shift U(d1, d2) acting on the VV amplitude."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BoundaryLossError, BoundaryMassWarning, ParameterError, ShiftRangeError
from .spectra import CONSTANTS, QDotParams, SpectralAmplitude, overlap
from .state import TwoPhotonState
from .timedomain import TimeGrid, to_frequency, to_time, TemporalAmplitude

SNAP_TOL = 1e-6  # fraction of a grid step
WARN_MASS = 1e-6
MAX_MASS = 1e-3


@dataclass(frozen=True)
class ShiftSpec:
    """Frequency shifts (µeV) applied to the V-polarized photons 1 and 2."""

    delta1: float
    delta2: float

    def __post_init__(self):
        if not (math.isfinite(self.delta1) and math.isfinite(self.delta2)):
            raise ParameterError("shift components must be finite")

    def rates(self) -> tuple[float, float]:
        return CONSTANTS.energy_to_rate(self.delta1), CONSTANTS.energy_to_rate(self.delta2)

    def __add__(self, other: ShiftSpec) -> ShiftSpec:
        return ShiftSpec(self.delta1 + other.delta1, self.delta2 + other.delta2)

    def __neg__(self) -> ShiftSpec:
        return ShiftSpec(-self.delta1, -self.delta2)


class Separability(NamedTuple):
    residual: float
    phase: float


def _snap(steps: float) -> int | None:
    k = round(steps)
    return int(k) if abs(steps - k) < SNAP_TOL else None


def _wrapped_mass(values: np.ndarray, k1: int, k2: int, dw: float) -> float:
    """Mass whose rows/columns cross the edge when rolled by (k1, k2)."""
    p = np.abs(values) ** 2
    n = values.shape[0]
    rows = np.zeros(n, dtype=bool)
    cols = np.zeros(n, dtype=bool)
    if k1 > 0:
        rows[n - k1:] = True
    elif k1 < 0:
        rows[:-k1] = True
    if k2 > 0:
        cols[n - k2:] = True
    elif k2 < 0:
        cols[:-k2] = True
    mass = p[rows].sum() + p[~rows][:, cols].sum()
    return float(mass) * dw**2


def shift_amplitude(
    a: SpectralAmplitude, rate1: float, rate2: float, tgrid: TimeGrid | None = None
) -> tuple[SpectralAmplitude, float]:
    """Return a(w1 - rate1, w2 - rate2) on the same grid, plus the boundary mass.

    Shifts are circular on the grid torus, so the map is exactly unitary.
    Integer grid steps are a plain roll; anything else is a band-limited
    shift done as a linear phase in the emission-time picture.
    """
    grid = a.grid
    if abs(rate1) > grid.span / 2 or abs(rate2) > grid.span / 2:
        raise ShiftRangeError(f"shift ({rate1}, {rate2}) rad/ns exceeds half the span {grid.span / 2}")
    s1, s2 = rate1 / grid.dw, rate2 / grid.dw
    k1, k2 = _snap(s1), _snap(s2)
    if k1 is not None and k2 is not None:
        mass = _wrapped_mass(a.values, k1, k2, grid.dw)
        if k1 == 0 and k2 == 0:
            return a, mass
        return SpectralAmplitude(grid, np.roll(a.values, (k1, k2), axis=(0, 1)), a.notes), mass

    mass = _wrapped_mass(a.values, int(math.copysign(math.ceil(abs(s1)), s1)),
                         int(math.copysign(math.ceil(abs(s2)), s2)), grid.dw)
    f = to_time(a, tgrid)
    t = f.grid.axis
    v = f.values * np.exp(-1j * rate1 * t)[:, None]
    v *= np.exp(-1j * rate2 * t)[None, :]
    return to_frequency(TemporalAmplitude(f.grid, v, f.notes)), mass


def _check_mass(mass: float, periodic: bool) -> None:
    if mass > MAX_MASS:
        raise BoundaryLossError(f"{mass:.3g} of the V amplitude crossed the grid boundary")
    if mass > WARN_MASS and not periodic:
        warnings.warn(
            f"{mass:.3g} of the V amplitude wrapped across the grid boundary",
            BoundaryMassWarning,
            stacklevel=3,
        )


def apply_shift(state: TwoPhotonState, shift: ShiftSpec) -> TwoPhotonState:
    """U(d1, d2): phiV(w1, w2) -> phiV(w1 - d1/hbar, w2 - d2/hbar); phiH untouched."""
    r1, r2 = shift.rates()
    v, mass = shift_amplitude(state.phiV, r1, r2)
    _check_mass(mass, "periodic" in state.phiV.notes)
    diag = dict(state.diagnostics)
    diag["boundary_mass"] = diag.get("boundary_mass", 0.0) + mass
    return TwoPhotonState(state.phiH, v, diag)


def separability_residual(state: TwoPhotonState) -> Separability:
    """1 - |<phiH|phiV>| and arg <phiH|phiV>; zero residual iff the state factorizes."""
    o = overlap(state.phiH, state.phiV)
    return Separability(float(min(1.0, max(0.0, 1.0 - abs(o)))), float(np.angle(o)))


def optimal_shift_for_qdot(params: QDotParams) -> ShiftSpec:
    return ShiftSpec(-params.S, params.S)
