"""Frequency grids, quantum-dot parameters and the cascade joint spectral amplitudes.

Units used throughout the package: energies in µeV, times in ns, angular
frequencies in rad/ns. The only conversion between energy and angular
frequency goes through :data:`CONSTANTS`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from .errors import (
    DegenerateInputError,
    GridCoverageWarning,
    GridMismatchError,
    ParameterError,
)

Path = Literal["H", "V"]

# photon-1 marginal has HWHM 3G/2, so the norm deficit is ~6G/(pi*span) = 1.9e-3 here
DEFAULT_SPAN_GAMMAS = 1024.0
DEFAULT_N = 4096


@dataclass(frozen=True)
class PhysConstants:
    hbar: float = 0.6582119569  # µeV·ns

    def energy_to_rate(self, energy: float) -> float:
        """µeV -> rad/ns."""
        return energy / self.hbar

    def rate_to_energy(self, rate: float) -> float:
        """rad/ns -> µeV."""
        return rate * self.hbar


CONSTANTS = PhysConstants()


@dataclass(frozen=True)
class QDotParams:
    """Cascade parameters.

    Attributes
    ----------
    omega0 : float
        XX -> GS total transition angular frequency, rad/ns.
    omegaH2 : float
        X_H -> GS transition angular frequency, rad/ns.
    S : float
        Fine-structure splitting, µeV.
    Gamma : float
        Common decay rate of the four transitions, 1/ns.
    """

    omega0: float
    omegaH2: float
    S: float
    Gamma: float

    def __post_init__(self):
        for name in ("omega0", "omegaH2", "S", "Gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.Gamma <= 0:
            raise ParameterError(f"Gamma must be positive, got {self.Gamma}")

    @classmethod
    def typical(cls, S: float = 1.0, Gamma: float = 1.0) -> QDotParams:
        """Parameters of an InAs-like dot: 1.4 eV exciton, 2 meV biexciton binding."""
        exciton = 1.4e6  # µeV
        binding = 2.0e3  # µeV
        return cls(
            omega0=CONSTANTS.energy_to_rate(2 * exciton - binding),
            omegaH2=CONSTANTS.energy_to_rate(exciton),
            S=S,
            Gamma=Gamma,
        )

    @property
    def split_rate(self) -> float:
        """S/hbar in rad/ns."""
        return CONSTANTS.energy_to_rate(self.S)

    @property
    def omegaV2(self) -> float:
        return self.omegaH2 - self.split_rate

    @property
    def omegaH1(self) -> float:
        return self.omega0 - self.omegaH2

    @property
    def omegaV1(self) -> float:
        return self.omega0 - self.omegaV2

    def line_centers(self, path: Path) -> tuple[float, float]:
        if path == "H":
            return self.omegaH1, self.omegaH2
        if path == "V":
            return self.omegaV1, self.omegaV2
        raise ParameterError(f"path must be 'H' or 'V', got {path!r}")


@dataclass(frozen=True)
class FrequencyGrid:
    """Square grid over (omega1, omega2); axis k holds center_k - span/2 + j*dw."""

    center1: float
    center2: float
    span: float
    n: int

    def __post_init__(self):
        if not (self.span > 0 and math.isfinite(self.span)):
            raise ParameterError(f"span must be positive, got {self.span}")
        if self.n < 16 or self.n & (self.n - 1):
            raise ParameterError(f"n must be a power of two >= 16, got {self.n}")

    @classmethod
    def default(
        cls, params: QDotParams, span_gammas: float = DEFAULT_SPAN_GAMMAS, n: int = DEFAULT_N
    ) -> FrequencyGrid:
        return cls(params.omegaH1, params.omegaH2, span_gammas * params.Gamma, n)

    @classmethod
    def for_exact_step(
        cls, params: QDotParams, span_gammas: float = DEFAULT_SPAN_GAMMAS, n: int = DEFAULT_N
    ) -> FrequencyGrid:
        """Grid near the requested span whose spacing divides S/hbar exactly.

        Falls back to :meth:`default` when S = 0.
        """
        split = abs(params.split_rate)
        if split == 0:
            return cls.default(params, span_gammas, n)
        target_dw = span_gammas * params.Gamma / n
        steps = max(1, round(split / target_dw))
        return cls(params.omegaH1, params.omegaH2, n * split / steps, n)

    @property
    def dw(self) -> float:
        return self.span / self.n

    @cached_property
    def axis1(self) -> np.ndarray:
        return self.center1 - self.span / 2 + np.arange(self.n) * self.dw

    @cached_property
    def axis2(self) -> np.ndarray:
        return self.center2 - self.span / 2 + np.arange(self.n) * self.dw

    def axis(self, k: int) -> np.ndarray:
        if k == 1:
            return self.axis1
        if k == 2:
            return self.axis2
        raise ParameterError(f"axis must be 1 or 2, got {k}")

    def offsets(self, k: int, origin: float) -> np.ndarray:
        """Axis k relative to ``origin``, computed without large cancellations."""
        center = self.center1 if k == 1 else self.center2
        return (center - origin) - self.span / 2 + np.arange(self.n) * self.dw

    def covers(self, k: int, lo: float, hi: float) -> bool:
        ax = self.axis(k)
        return ax[0] <= lo and ax[-1] >= hi


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    """Complex amplitude on a FrequencyGrid, units (rad/ns)^-1.

    ``notes`` carries non-fatal diagnostics (coverage warnings, boundary mass).
    """

    grid: FrequencyGrid
    values: np.ndarray
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError(
                f"values shape {values.shape} does not match grid n={self.grid.n}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm2(self) -> float:
        return _sum_sq(self.values) * self.grid.dw**2

    def scaled(self, factor: complex) -> SpectralAmplitude:
        return SpectralAmplitude(self.grid, self.values * factor, self.notes)


def _sum_sq(values: np.ndarray) -> float:
    """sum |v|^2 with numpy's pairwise summation (BLAS dot loses ~1e-12 at 4096^2)."""
    x = values.reshape(-1).view(np.float64)
    return float(np.sum(x * x))


def _periodic_pole(z: np.ndarray, period: float) -> np.ndarray:
    # sum_m 1/(z + m*period), symmetric summation
    return (np.pi / period) / np.tan(np.pi * z / period)


def eval_phi(
    path: Path, grid: FrequencyGrid, params: QDotParams, periodic: bool = False
) -> SpectralAmplitude:
    """Joint spectral amplitude of one decay path sampled on ``grid``.

    Evaluates (sqrt(2)*G/2pi) / (w1 + w2 - w0 + iG) / (w2 - w_path2 + iG/2).

    With ``periodic=True`` the line shape is summed over all aliases
    w -> w + m*span on both axes (closed form via cot). That is the spectrum
    the grid torus actually represents, and it makes integer-step circular
    shifts reproduce the other path exactly.
    """
    c1, c2 = params.line_centers(path)
    G = params.Gamma
    notes: tuple[str, ...] = ()
    if not (grid.covers(1, c1 - 5 * G, c1 + 5 * G) and grid.covers(2, c2 - 5 * G, c2 + 5 * G)):
        msg = f"grid does not cover +-5 Gamma around the {path} line centers"
        warnings.warn(msg, GridCoverageWarning, stacklevel=2)
        notes = ("grid-too-narrow",)

    # w1 + w2 - w0 == (w1 - c1) + (w2 - c2) because c1 + c2 == w0
    d1 = grid.offsets(1, c1)
    d2 = grid.offsets(2, c2)
    if periodic:
        notes += ("periodic",)
        first = _periodic_pole(d1[:, None] + d2[None, :] + 1j * G, grid.span)
        second = _periodic_pole(d2 + 0.5j * G, grid.span)
    else:
        first = 1.0 / (d1[:, None] + d2[None, :] + 1j * G)
        second = 1.0 / (d2 + 0.5j * G)
    first *= (math.sqrt(2.0) * G / (2 * np.pi)) * second[None, :]
    return SpectralAmplitude(grid, first, notes)


def normalize(a: SpectralAmplitude) -> SpectralAmplitude:
    n2 = a.norm2()
    if not n2 > 0:
        raise DegenerateInputError("cannot normalize a zero amplitude")
    if abs(n2 - 1.0) <= 4 * np.finfo(float).eps:
        return a
    return a.scaled(1.0 / math.sqrt(n2))


def _check_same_grid(a: SpectralAmplitude, b: SpectralAmplitude) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def overlap(a: SpectralAmplitude, b: SpectralAmplitude) -> complex:
    """<a|b> = sum conj(a) b dw^2."""
    _check_same_grid(a, b)
    return complex(np.vdot(a.values, b.values)) * a.grid.dw**2


def marginal(a: SpectralAmplitude, axis: int) -> np.ndarray:
    """Probability density of photon ``axis`` (1 or 2), per rad/ns."""
    if axis not in (1, 2):
        raise ParameterError(f"axis must be 1 or 2, got {axis}")
    p = np.abs(a.values) ** 2
    other = 1 if axis == 1 else 0
    return p.sum(axis=other) * a.grid.dw


def lorentzian_amplitude(
    grid: FrequencyGrid, center1: float, center2: float, width1: float, width2: float
) -> SpectralAmplitude:
    """Normalized product of single-photon Lorentzian amplitudes.

    Each factor is sqrt(g/pi) / (w - c + i g), whose modulus squared is a
    unit-area Lorentzian with half width g.
    """
    if not (width1 > 0 and width2 > 0):
        raise ParameterError("Lorentzian widths must be positive")
    f1 = math.sqrt(width1 / np.pi) / (grid.offsets(1, center1) + 1j * width1)
    f2 = math.sqrt(width2 / np.pi) / (grid.offsets(2, center2) + 1j * width2)
    return normalize(SpectralAmplitude(grid, f1[:, None] * f2[None, :]))
