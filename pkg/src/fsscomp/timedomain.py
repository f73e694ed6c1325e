"""Emission-time picture of the two-photon state and polarization-selective phase ramps.

Fourier convention (both axes):

    f(t) = 1/sqrt(2 pi) * integral F(w) exp(-i w t) dw

so multiplying f(t) by exp(+i r t) moves the spectrum to F(w + r), i.e. it
shifts the line by -r. A photon-1 ramp at +S/hbar therefore shifts that
photon by -S.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft

from .errors import GridCoverageWarning, GridMismatchError, ParameterError
from .spectra import CONSTANTS, FrequencyGrid, QDotParams, SpectralAmplitude, _sum_sq
from .state import TwoPhotonState


@dataclass(frozen=True)
class TimeGrid:
    """Time axis (shared by both photons) dual to a FrequencyGrid: dt = 2 pi / span."""

    t_min: float
    t_max: float
    n: int
    partner: FrequencyGrid = field(repr=False)

    def __post_init__(self):
        if self.n != self.partner.n:
            raise GridMismatchError(f"time grid n={self.n} != frequency grid n={self.partner.n}")
        if not self.t_max > self.t_min:
            raise ParameterError("t_max must exceed t_min")
        if not math.isclose(self.dt * self.partner.dw, 2 * math.pi / self.n, rel_tol=1e-12):
            raise GridMismatchError("time grid is not FFT-dual to its frequency grid")

    @classmethod
    def dual(cls, grid: FrequencyGrid, lead_fraction: float = 0.125) -> TimeGrid:
        """Dual grid with t=0 on a node and ``lead_fraction`` of the window before it.

        Keeping t_min an integer multiple of dt makes an integer-step phase ramp
        an exact circular shift of the spectrum.
        """
        dt = 2 * math.pi / grid.span
        lead = int(round(lead_fraction * grid.n))
        t_min = -lead * dt
        return cls(t_min, t_min + (grid.n - 1) * dt, grid.n, grid)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        return self.t_min + np.arange(self.n) * self.dt


@dataclass(frozen=True, eq=False)
class TemporalAmplitude:
    grid: TimeGrid
    values: np.ndarray
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError(f"values shape {values.shape} does not match n={self.grid.n}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm2(self) -> float:
        return _sum_sq(self.values) * self.grid.dt**2


@dataclass(frozen=True, eq=False)
class TemporalState:
    psiH: TemporalAmplitude
    psiV: TemporalAmplitude

    def norm2(self) -> float:
        return 0.5 * (self.psiH.norm2() + self.psiV.norm2())


@dataclass(frozen=True)
class PhaseRamp:
    """Linear phase ramps on the V component of each photon.

    Inside ``window`` photon k's V component picks up exp(i*rate_k*t_k). The
    modulator phase is held at its end values outside the window, so times
    before t_on see rate*t_on and times after t_off see rate*t_off.
    """

    rate1: float
    rate2: float
    window: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        t_on, t_off = self.window
        if not t_on < t_off:
            raise ParameterError(f"ramp window must satisfy t_on < t_off, got {self.window}")

    @classmethod
    def canonical(cls, params: QDotParams, window: tuple[float, float] = (-math.inf, math.inf)):
        s = params.split_rate
        return cls(s, -s, window)

    def phase(self, rate: float, t: np.ndarray) -> np.ndarray:
        return rate * np.clip(t, *self.window)


def _phases(grid: FrequencyGrid, tgrid: TimeGrid):
    j = np.arange(grid.n)
    pre = np.exp(-1j * j * grid.dw * tgrid.t_min)
    t = tgrid.axis
    post1 = np.exp(-1j * grid.axis1[0] * t)
    post2 = np.exp(-1j * grid.axis2[0] * t)
    return pre, post1, post2


def to_time(a: SpectralAmplitude, tgrid: TimeGrid | None = None) -> TemporalAmplitude:
    grid = a.grid
    tgrid = tgrid or TimeGrid.dual(grid)
    if tgrid.partner != grid:
        raise GridMismatchError("time grid is not dual to the amplitude's frequency grid")
    pre, post1, post2 = _phases(grid, tgrid)
    x = a.values * pre[:, None]
    x *= pre[None, :]
    f = scipy.fft.fft2(x, overwrite_x=True)
    f *= post1[:, None]
    f *= post2[None, :]
    f *= grid.dw**2 / (2 * math.pi)
    return TemporalAmplitude(tgrid, f, a.notes)


def to_frequency(f: TemporalAmplitude) -> SpectralAmplitude:
    tgrid = f.grid
    grid = tgrid.partner
    pre, post1, post2 = _phases(grid, tgrid)
    x = f.values * post1.conj()[:, None]
    x *= post2.conj()[None, :]
    F = scipy.fft.ifft2(x, overwrite_x=True)
    F *= pre.conj()[:, None]
    F *= pre.conj()[None, :]
    F *= (tgrid.dt * grid.n) ** 2 / (2 * math.pi)
    return SpectralAmplitude(grid, F, f.notes)


def to_time_state(state: TwoPhotonState, tgrid: TimeGrid | None = None) -> TemporalState:
    tgrid = tgrid or TimeGrid.dual(state.grid)
    return TemporalState(to_time(state.phiH, tgrid), to_time(state.phiV, tgrid))


def to_frequency_state(state: TemporalState) -> TwoPhotonState:
    return TwoPhotonState(to_frequency(state.psiH), to_frequency(state.psiV))


def analytic_temporal(
    path: Literal["H", "V"], tgrid: TimeGrid, params: QDotParams
) -> TemporalAmplitude:
    """Closed-form emission-time amplitude of one decay path.

        psi(t1, t2) = -sqrt(2) G exp(-G (t1 + t2)/2) exp(-i (w_p1 t1 + w_p2 t2))

    for 0 < t1 < t2 and zero otherwise. The overall -1 comes from
    transforming the two poles with the convention in the module docstring.
    Edge nodes (t1 = 0 or t1 = t2) carry amplitude weight 1/sqrt(2) and the
    corner 1/sqrt(8), so that sum |psi|^2 dt^2 is a trapezoid-rule quadrature.
    """
    G = params.Gamma
    notes: tuple[str, ...] = ()
    if not (tgrid.t_min <= 0 < tgrid.t_max) or tgrid.t_max < 5 / G:
        warnings.warn("time window does not cover [0, 5/Gamma]", GridCoverageWarning, stacklevel=2)
        notes = ("window-too-short",)
    w1, w2 = params.line_centers(path)
    t = tgrid.axis
    pos = np.clip(t, 0.0, None)
    env = np.exp(-0.5 * G * pos)
    c1 = env * np.exp(-1j * w1 * t)
    c2 = env * np.exp(-1j * w2 * t)
    psi = (-math.sqrt(2.0) * G) * c1[:, None] * c2[None, :]

    # causal support 0 <= t1 <= t2
    tol = 1e-9 * tgrid.dt
    t1 = t[:, None]
    t2 = t[None, :]
    weight = np.where((t1 > tol) & (t2 - t1 > tol), 1.0, 0.0)
    edge = ((np.abs(t1) <= tol) & (t2 > tol)) | ((np.abs(t2 - t1) <= tol) & (t1 > tol))
    weight[edge] = math.sqrt(0.5)
    weight[(np.abs(t1) <= tol) & (np.abs(t2) <= tol)] = math.sqrt(0.125)
    psi *= weight
    return TemporalAmplitude(tgrid, psi, notes)


def apply_ramp(state: TemporalState, ramp: PhaseRamp) -> TemporalState:
    t = state.psiV.grid.axis
    p1 = np.exp(1j * ramp.phase(ramp.rate1, t))
    p2 = np.exp(1j * ramp.phase(ramp.rate2, t))
    v = state.psiV.values * p1[:, None]
    v *= p2[None, :]
    return TemporalState(state.psiH, TemporalAmplitude(state.psiV.grid, v, state.psiV.notes))


def ramp_compensate(state: TwoPhotonState, ramp: PhaseRamp) -> TwoPhotonState:
    """Frequency-picture state after the time-domain ramp."""
    return to_frequency_state(apply_ramp(to_time_state(state), ramp))


def truncated_coherence(S: float, Gamma: float, window: float, hbar: float | None = None) -> complex:
    """<phiH|phiV> after canonical ramps running over [0, window] and held afterwards.

    Splits the emission-time integral into both photons inside the window
    (fully compensated), photon 1 inside and photon 2 after (residual phase
    S (t2 - T)/hbar) and both after (uncompensated delay phase).
    """
    if window < 0:
        raise ParameterError("window must be non-negative")
    s = S / (hbar or CONSTANTS.hbar)
    G = Gamma
    z = G / (G - 1j * s)
    if math.isinf(window):
        return 1.0 + 0j
    e1 = math.exp(-G * window)
    e2 = e1 * e1
    both_in = 2 * (1 - e1) - (1 - e2)
    straddle = 2 * (1 - e1) * e1 * z
    both_out = e2 * z
    return complex(both_in + straddle + both_out)
