"""Two-photon polarization-frequency state and its polarization reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import GridMismatchError, NumericError, ParameterError
from .spectra import FrequencyGrid, QDotParams, SpectralAmplitude, eval_phi, normalize, overlap

BASIS = ("HH", "HV", "VH", "VV")

# sigma_y (x) sigma_y; real, so the spin flip only needs conj(rho)
_SPIN_FLIP = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]])).real

NORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """(|HH> phiH + |VV> phiV)/sqrt(2) with both amplitudes unit norm.

    The 1/sqrt(2) is implied and never stored. ``diagnostics`` records
    bookkeeping from operations that produced the state (e.g. boundary mass).
    """

    phiH: SpectralAmplitude
    phiV: SpectralAmplitude
    diagnostics: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.phiH.grid != self.phiV.grid:
            raise GridMismatchError("phiH and phiV must share one grid")
        for name in ("phiH", "phiV"):
            n2 = getattr(self, name).norm2()
            if abs(n2 - 1.0) > NORM_TOL:
                raise ParameterError(f"{name} has squared norm {n2}, expected 1")
        object.__setattr__(self, "diagnostics", MappingProxyType(dict(self.diagnostics)))

    @classmethod
    def cascade(
        cls, params: QDotParams, grid: FrequencyGrid | None = None, periodic: bool = False
    ) -> TwoPhotonState:
        grid = grid or FrequencyGrid.default(params)
        return cls(
            normalize(eval_phi("H", grid, params, periodic)),
            normalize(eval_phi("V", grid, params, periodic)),
        )

    @property
    def grid(self) -> FrequencyGrid:
        return self.phiH.grid

    def norm2(self) -> float:
        return 0.5 * (self.phiH.norm2() + self.phiV.norm2())


@dataclass(frozen=True, eq=False)
class PolDensityMatrix:
    """4x4 polarization density matrix in the basis HH, HV, VH, VV."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.shape != (4, 4):
            raise ParameterError(f"density matrix must be 4x4, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12, psd_tol: float = 1e-10):
        if self.hermiticity_error() > herm_tol:
            raise NumericError(f"not Hermitian (error {self.hermiticity_error():.3g})")
        if abs(self.trace() - 1) > trace_tol:
            raise NumericError(f"trace {self.trace()} != 1")
        if self.min_eigenvalue() < -psd_tol:
            raise NumericError(f"not PSD (min eigenvalue {self.min_eigenvalue():.3g})")
        return self


def state_overlap(a: TwoPhotonState, b: TwoPhotonState) -> complex:
    """<a|b> for the full polarization-frequency states."""
    return 0.5 * (overlap(a.phiH, b.phiH) + overlap(a.phiV, b.phiV))


def state_fidelity(a: TwoPhotonState, b: TwoPhotonState) -> float:
    return abs(state_overlap(a, b)) ** 2


def reduce_polarization(state: TwoPhotonState) -> PolDensityMatrix:
    """Partial trace over both frequencies.

    Only the HH/VV block is populated; the coherence is
    <HH|rho|VV> = <phiV|phiH>/2, so rho[VV, HH] = overlap(phiH, phiV)/2.
    """
    o = overlap(state.phiH, state.phiV)
    rho = np.zeros((4, 4), dtype=np.complex128)
    rho[0, 0] = 0.5 * state.phiH.norm2()
    rho[3, 3] = 0.5 * state.phiV.norm2()
    rho[3, 0] = 0.5 * o
    rho[0, 3] = 0.5 * np.conj(o)
    # renormalize the diagonal so trace is 1 to rounding even for slightly off-norm input
    rho /= np.trace(rho).real
    return PolDensityMatrix(rho)


def fidelity_phi_plus(rho: PolDensityMatrix) -> float:
    """<Phi+|rho|Phi+> with Phi+ = (|HH> + |VV>)/sqrt(2)."""
    m = rho.matrix
    return float(0.5 * (m[0, 0] + m[3, 3] + m[0, 3] + m[3, 0]).real)


def concurrence(rho: PolDensityMatrix, psd_tol: float = 1e-10) -> float:
    """Wootters concurrence.

    The square roots of the eigenvalues of rho * rho_tilde are obtained as the
    singular values of sqrt(rho) Y conj(sqrt(rho)), which avoids taking square
    roots of eigenvalues that are zero up to rounding.
    """
    m = 0.5 * (rho.matrix + rho.matrix.conj().T)
    w, v = np.linalg.eigh(m)
    if w[0] < -psd_tol:
        raise NumericError(f"density matrix is not PSD (min eigenvalue {w[0]:.3g})")
    # eigenvalues at rounding level are exact zeros; their sqrt (~1e-8) would leak into the result
    w = np.where(w > 16 * np.finfo(float).eps * w[-1], w, 0.0)
    sqrt_rho = (v * np.sqrt(w)) @ v.conj().T
    lam = np.linalg.svd(sqrt_rho @ _SPIN_FLIP @ sqrt_rho.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
