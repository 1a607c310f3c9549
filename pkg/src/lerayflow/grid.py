"""Periodic torus discretization in Fourier space.

A :class:`WaveGrid` holds the wavevector bookkeeping for a ``d``-dimensional
periodic box of side ``L`` sampled with ``n`` points per axis.  Mode indices
follow standard FFT layout, ``a_j in {0, 1, ..., n/2-1, -n/2, ..., -1}``, and
the physical wavevector is ``k = 2*pi*a/L``.  Two masks matter everywhere
downstream:

* ``mode_mask``   : modes with every ``|a_j| < n/2``.  The Nyquist planes are
  pinned to zero for all fields because they cannot carry Hermitian-symmetric
  derivative information.
* ``dealias_mask``: the subset with every ``|a_j| <= dealias_cutoff``; every
  nonlinear product is truncated to it (2/3 rule by default), which is what
  makes the discrete transport identities hold to roundoff.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["WaveGrid", "worker_count"]


def worker_count() -> int:
    """Internal parallelism cap, from the LERAY_THREADS environment variable.

    Defaults to 1.  FFT results are bit-identical for any worker count (the
    thread split is over independent outer axes), so this only affects speed.
    """
    raw = os.environ.get("LERAY_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


class WaveGrid:
    """Wavevector set, masks and quadrature weights for one periodic box."""

    def __init__(self, dim: int, n: int, L: float = 2.0 * np.pi,
                 dealias_cutoff: int | None = None):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if n < 8 or n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {n}")
        if L <= 0:
            raise ValueError(f"period L must be positive, got {L}")
        if dealias_cutoff is None:
            dealias_cutoff = n // 3
        if not 1 <= dealias_cutoff <= n // 2:
            raise ValueError(
                f"dealias_cutoff must lie in [1, n/2], got {dealias_cutoff}")

        self.dim = dim
        self.n = n
        self.L = float(L)
        self.dealias_cutoff = int(dealias_cutoff)
        self.shape = (n,) * dim
        self.n_total = n ** dim
        self.cell_volume = (self.L / n) ** dim
        self.k0 = 2.0 * np.pi / self.L  # fundamental wavenumber

        # Integer mode indices per axis, FFT layout.
        axis = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        mesh = np.meshgrid(*([axis] * dim), indexing="ij")
        self.a = np.stack(mesh)                       # (dim, *shape) ints
        self.a_sq = np.sum(self.a * self.a, axis=0)   # exact integer |a|^2
        self.k = self.k0 * self.a.astype(np.float64)
        self.k_sq = (self.k0 ** 2) * self.a_sq.astype(np.float64)
        self.k_mag = np.sqrt(self.k_sq)

        # k / |k|^2 with the zero mode mapped to 0 (Leray projection kernel).
        k_sq_safe = np.where(self.k_sq > 0, self.k_sq, 1.0)
        self.k_over_ksq = self.k / k_sq_safe
        self.k_over_ksq[(slice(None),) + (0,) * dim] = 0.0

        abs_a = np.abs(self.a)
        self.mode_mask = np.all(abs_a < n // 2, axis=0)
        self.dealias_mask = self.mode_mask & np.all(
            abs_a <= self.dealias_cutoff, axis=0)

        # Integer shell index |k| in units of k0, rounded to nearest shell.
        self.shell = np.rint(np.sqrt(self.a_sq.astype(np.float64))).astype(np.int64)
        self.max_shell = int(self.shell[self.mode_mask].max())

        # half-spectrum arrays for the real-FFT fast path (fields are Hermitian)
        self.k_half = np.ascontiguousarray(self.k[..., : n // 2 + 1])
        self.ik_half = np.ascontiguousarray(1j * self.k_half)
        self.not_dealias_mask = ~self.dealias_mask
        self._k_power_cache: dict[float, np.ndarray] = {}

    # spatial axes of a (dim, n, ..., n) component-stacked array
    @property
    def spatial_axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    def k_power(self, exponent: float) -> np.ndarray:
        """|k|^exponent with the zero mode mapped to 0 (mean-free spaces).

        Cached per exponent; treat the returned array as read-only.
        """
        key = float(exponent)
        cached = self._k_power_cache.get(key)
        if cached is None:
            cached = np.zeros(self.shape)
            nz = self.k_mag > 0
            cached[nz] = self.k_mag[nz] ** exponent
            self._k_power_cache[key] = cached
        return cached

    def mesh(self) -> np.ndarray:
        """Physical sample coordinates, shape (dim, *shape)."""
        x = np.arange(self.n) * (self.L / self.n)
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def same_as(self, other: "WaveGrid") -> bool:
        return (self.dim == other.dim and self.n == other.n
                and self.L == other.L
                and self.dealias_cutoff == other.dealias_cutoff)

    def __repr__(self) -> str:
        return (f"WaveGrid(dim={self.dim}, n={self.n}, L={self.L:.6g}, "
                f"dealias_cutoff={self.dealias_cutoff})")
