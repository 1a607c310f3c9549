"""Vector fields on the torus and the core spectral operators.

Fields are stored as full complex coefficient arrays in FFT layout, one
d-vector per wavevector.  The normalization is the Fourier-series one:
``u(x) = sum_k uhat_k exp(i k.x)``, so ``forward_transform`` divides by the
total sample count and Parseval reads ``sum_k |uhat_k|^2 = mean_x |u(x)|^2``.
Every norm in this package is built on that convention; the Sobolev norm of
order s is ``sqrt(sum_{k != 0} |k|^{2s} |uhat_k|^2)``.

All operations are pure: inputs are never mutated, outputs are fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import GridMismatch, SymmetryViolation
from .grid import WaveGrid, worker_count

__all__ = [
    "SpectralVectorField", "RealVectorField", "SpectralScalarField",
    "forward_transform", "inverse_transform", "inverse_transform_scalar",
    "leray_project", "fractional_laplacian", "galerkin_project",
    "sobolev_norm", "sobolev_inner", "l2_inner", "l2_norm",
    "hermitian_reflection", "random_solenoidal",
    "to_physical", "from_physical", "full_spectrum_from_half",
]


@dataclass
class SpectralVectorField:
    """Complex Fourier coefficients of a real d-vector field, zero mean.

    ``coeffs`` has shape (dim, n, ..., n).  ``solenoidal`` is a bookkeeping
    flag set by constructors that guarantee divergence-free output; the
    numerical invariant itself is checked by :meth:`divergence_residual`.
    """

    grid: WaveGrid
    coeffs: np.ndarray
    solenoidal: bool = False

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise ValueError(
                f"coeff shape {self.coeffs.shape} != expected {expected}")

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs.copy(), self.solenoidal)

    def hermitian_residual(self) -> float:
        """Max deviation from coeff(-k) = conj(coeff(k)), relative to max |coeff|."""
        scale = np.abs(self.coeffs).max()
        if scale == 0.0:
            return 0.0
        dev = np.abs(self.coeffs - hermitian_reflection(self.coeffs, self.grid.dim))
        return float(dev.max() / scale)

    def divergence_residual(self) -> float:
        """max_k |k . uhat_k| relative to the L2 norm of the field."""
        norm = l2_norm(self)
        if norm == 0.0:
            return 0.0
        div = np.sum(self.grid.k * self.coeffs, axis=0)
        return float(np.abs(div).max() / norm)

    def in_dealias_band(self) -> bool:
        return bool(np.all(self.coeffs[:, ~self.grid.dealias_mask] == 0.0))


@dataclass
class RealVectorField:
    """Physical-space samples of a d-vector field, shape (dim, n, ..., n)."""

    grid: WaveGrid
    data: np.ndarray

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        if self.data.shape != expected:
            raise ValueError(
                f"sample shape {self.data.shape} != expected {expected}")

    def copy(self) -> "RealVectorField":
        return RealVectorField(self.grid, self.data.copy())


@dataclass
class SpectralScalarField:
    """Spectral coefficients of a real scalar field (e.g. pressure)."""

    grid: WaveGrid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeff shape {self.coeffs.shape} != expected {self.grid.shape}")


def hermitian_reflection(coeffs: np.ndarray, dim: int) -> np.ndarray:
    """conj(coeffs) evaluated at -k, i.e. the array a Hermitian field equals."""
    out = coeffs
    for ax in range(coeffs.ndim - dim, coeffs.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


def to_physical(grid: WaveGrid, coeffs: np.ndarray) -> np.ndarray:
    """Fast inverse transform for Hermitian coefficient stacks.

    Uses only the half spectrum (real FFT), so the input must satisfy the
    Hermitian symmetry; callers on the hot path guarantee that structurally.
    """
    axes = tuple(range(coeffs.ndim - grid.dim, coeffs.ndim))
    half = coeffs[..., : grid.n // 2 + 1]
    return scipy.fft.irfftn(half, s=grid.shape, axes=axes, norm="forward",
                            workers=worker_count())


def from_physical(grid: WaveGrid, data: np.ndarray) -> np.ndarray:
    """Fast forward transform of real stacks to full Hermitian spectra."""
    axes = tuple(range(data.ndim - grid.dim, data.ndim))
    half = scipy.fft.rfftn(data, axes=axes, norm="forward",
                           workers=worker_count())
    return full_spectrum_from_half(grid, half)


def full_spectrum_from_half(grid: WaveGrid, half: np.ndarray) -> np.ndarray:
    """Complete an rfft half spectrum to the full FFT layout via symmetry."""
    n = grid.n
    out = np.empty(half.shape[:-1] + (n,), dtype=complex)
    out[..., : n // 2 + 1] = half
    tail = np.conj(half[..., n // 2 - 1: 0: -1])
    for ax in range(half.ndim - grid.dim, half.ndim - 1):
        tail = np.roll(np.flip(tail, axis=ax), 1, axis=ax)
    out[..., n // 2 + 1:] = tail
    return out


def forward_transform(r: RealVectorField) -> SpectralVectorField:
    """Discrete Fourier coefficients of physical samples (series convention).

    The mean (k=0) component is kept as-is; callers that require mean-free
    fields zero it themselves.
    """
    coeffs = scipy.fft.fftn(r.data, axes=tuple(range(1, r.grid.dim + 1)),
                            norm="forward", workers=worker_count())
    return SpectralVectorField(r.grid, coeffs)


def inverse_transform(s: SpectralVectorField) -> RealVectorField:
    """Pointwise evaluation of the truncated Fourier series.

    Raises SymmetryViolation if the Hermitian residual exceeds 1e-10
    relative; the (then roundoff-level) imaginary part is discarded.
    """
    res = s.hermitian_residual()
    if res > 1e-10:
        raise SymmetryViolation(
            f"Hermitian symmetry violated: relative residual {res:.3e}")
    data = scipy.fft.ifftn(s.coeffs, axes=tuple(range(1, s.grid.dim + 1)),
                           norm="forward", workers=worker_count())
    return RealVectorField(s.grid, np.ascontiguousarray(data.real))


def inverse_transform_scalar(p: SpectralScalarField) -> np.ndarray:
    """Physical samples of a spectral scalar (Hermitian checked loosely)."""
    data = scipy.fft.ifftn(p.coeffs, norm="forward", workers=worker_count())
    return np.ascontiguousarray(data.real)


def leray_project(s: SpectralVectorField) -> SpectralVectorField:
    """Remove the component parallel to k at every mode (Leray-Helmholtz)."""
    g = s.grid
    k_dot = np.sum(g.k * s.coeffs, axis=0)
    coeffs = s.coeffs - g.k_over_ksq * k_dot[np.newaxis]
    return SpectralVectorField(g, coeffs, solenoidal=True)


def fractional_laplacian(s: SpectralVectorField, theta: float) -> SpectralVectorField:
    """Multiply coefficients by |k|^(2*theta); the zero mode stays zero."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if theta == 0.0:
        return s.copy()
    mult = s.grid.k_power(2.0 * theta)
    return SpectralVectorField(s.grid, s.coeffs * mult, s.solenoidal)


def galerkin_project(s: SpectralVectorField, m: int) -> SpectralVectorField:
    """Keep modes on the spherical ball |k| <= m * (2*pi/L), zero the rest.

    The comparison is done on exact integer mode indices, so shell membership
    never depends on floating-point rounding.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    mask = s.grid.a_sq <= m * m
    return SpectralVectorField(s.grid, np.where(mask, s.coeffs, 0.0), s.solenoidal)


def sobolev_norm(s: SpectralVectorField, sexp: float) -> float:
    """H^s norm over the mean-free modes: sqrt(sum |k|^{2s} |uhat|^2)."""
    w = s.grid.k_power(2.0 * sexp)
    total = np.sum(w * np.sum(np.abs(s.coeffs) ** 2, axis=0))
    return float(np.sqrt(total))


def sobolev_inner(u: SpectralVectorField, v: SpectralVectorField, sexp: float) -> float:
    """Real V^s pairing sum |k|^{2s} uhat_k . conj(vhat_k)."""
    if not u.grid.same_as(v.grid):
        raise GridMismatch("inner product requires a common grid")
    w = u.grid.k_power(2.0 * sexp)
    return float(np.real(np.sum(w * np.sum(u.coeffs * np.conj(v.coeffs), axis=0))))


def l2_inner(u: SpectralVectorField, v: SpectralVectorField) -> float:
    """L2 inner product in the series convention, (1/L^d) * integral(u.v)."""
    if not u.grid.same_as(v.grid):
        raise GridMismatch("inner product requires a common grid")
    return float(np.real(np.sum(u.coeffs * np.conj(v.coeffs))))


def l2_norm(u: SpectralVectorField) -> float:
    return float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))


def random_solenoidal(grid: WaveGrid, seed: int, spectrum_slope: float,
                      cutoff_shell: int) -> SpectralVectorField:
    """Deterministic random divergence-free field with power-law amplitudes.

    Each retained mode gets a random solenoidal direction; every mode of
    shell j carries the exact vector amplitude (j * 2*pi/L)^spectrum_slope,
    so the shell-averaged energy spectrum follows the requested power law.
    Shells above ``cutoff_shell`` are empty.  Hermitian symmetry and the
    zero-mean / Nyquist pins hold by construction, and the same seed
    reproduces the field bit for bit.
    """
    if cutoff_shell > grid.dealias_cutoff:
        raise ValueError(
            f"cutoff_shell {cutoff_shell} exceeds dealias cutoff "
            f"{grid.dealias_cutoff}")
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.shape
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    z = 0.5 * (z + hermitian_reflection(z, grid.dim))

    # Solenoidal projection, then per-mode renormalization to the shell law.
    z -= grid.k_over_ksq * np.sum(grid.k * z, axis=0)[np.newaxis]
    keep = grid.mode_mask & (grid.shell >= 1) & (grid.shell <= cutoff_shell)
    z[:, ~keep] = 0.0
    amp = np.sqrt(np.sum(np.abs(z) ** 2, axis=0))
    target = np.zeros(grid.shape)
    target[keep] = (grid.k0 * grid.shell[keep].astype(float)) ** spectrum_slope
    scale = np.where(amp > 0, target / np.where(amp > 0, amp, 1.0), 0.0)
    return SpectralVectorField(grid, z * scale[np.newaxis], solenoidal=True)
