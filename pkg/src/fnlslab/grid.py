"""Periodic-box discretization of R^d and its wavenumber tables.

The computational domain is the cube [-L, L)^d sampled on n points per
axis, so dx = 2L/n, x_j = -L + j*dx, and the wavenumbers per axis are
(pi/L) * {-n/2, ..., n/2 - 1} in FFT layout.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _sfft

# Arrays at or above this size get a second FFT worker thread.
_BIG = 1 << 20

# Soft cap on total sample count; fields above this would not fit the
# memory budget of a desk-scale run.
_MAX_POINTS = 1 << 24


def fftn(a: np.ndarray) -> np.ndarray:
    return _sfft.fftn(a, workers=2 if a.size >= _BIG else 1)


def ifftn(a: np.ndarray) -> np.ndarray:
    return _sfft.ifftn(a, workers=2 if a.size >= _BIG else 1)


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic Cartesian grid on [-L, L)^d.

    d: spatial dimension, 2 <= d <= 5.
    n_per_dim: samples per axis, a power of two.
    box_half_length: L > 0.
    """

    d: int
    n_per_dim: int
    box_half_length: float

    def __post_init__(self):
        from .errors import GridError

        if not isinstance(self.d, (int, np.integer)) or not 2 <= self.d <= 5:
            raise GridError(f"dimension d must be an integer in [2, 5], got {self.d}")
        n = self.n_per_dim
        if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
            raise GridError(f"n_per_dim must be a power of two >= 8, got {n}")
        if self.d >= 5 and n > 32:
            raise GridError(f"n_per_dim <= 32 required for d >= 5, got {n}")
        if not (self.box_half_length > 0 and np.isfinite(self.box_half_length)):
            raise GridError(f"box_half_length must be positive, got {self.box_half_length}")
        if n**self.d > _MAX_POINTS:
            raise GridError(f"grid with {n}^{self.d} points exceeds the memory budget")

    # -- basic geometry -------------------------------------------------

    @property
    def L(self) -> float:
        return self.box_half_length

    @property
    def dx(self) -> float:
        return 2.0 * self.box_half_length / self.n_per_dim

    @property
    def shape(self) -> tuple:
        return (self.n_per_dim,) * self.d

    @property
    def npoints(self) -> int:
        return self.n_per_dim**self.d

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def box_volume(self) -> float:
        return (2.0 * self.box_half_length) ** self.d

    @cached_property
    def x1d(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n_per_dim)

    @cached_property
    def k1d(self) -> np.ndarray:
        """Per-axis wavenumbers in FFT ordering, values (pi/L)*m."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_per_dim, d=self.dx)

    def axis_coord(self, axis: int) -> np.ndarray:
        """x along one axis, shaped for broadcasting over the full grid."""
        shape = [1] * self.d
        shape[axis] = self.n_per_dim
        return self.x1d.reshape(shape)

    def axis_wavenumber(self, axis: int) -> np.ndarray:
        shape = [1] * self.d
        shape[axis] = self.n_per_dim
        return self.k1d.reshape(shape)

    # -- derived full tables (cached; each costs one field worth of memory)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the full spectral grid."""
        out = np.zeros(self.shape)
        for ax in range(self.d):
            out = out + self.axis_wavenumber(ax) ** 2
        return out

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def rmag(self) -> np.ndarray:
        """|x| on the full physical grid."""
        out = np.zeros(self.shape)
        for ax in range(self.d):
            out = out + self.axis_coord(ax) ** 2
        return np.sqrt(out)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask: True on retained (low) modes, per axis."""
        cutoff = (2.0 / 3.0) * (np.pi / self.L) * (self.n_per_dim / 2)
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.d):
            mask &= np.abs(self.axis_wavenumber(ax)) < cutoff
        return mask

    @property
    def dealias_cutoff(self) -> float:
        """Per-axis wavenumber magnitude below which modes are retained."""
        return (2.0 / 3.0) * (np.pi / self.L) * (self.n_per_dim / 2)

    def fractional_symbol(self, s: float) -> np.ndarray:
        """|k|^s multiplier table; the zero mode maps to 0."""
        return self.kmag**s

    def __eq__(self, other):
        return (
            isinstance(other, SpectralGrid)
            and self.d == other.d
            and self.n_per_dim == other.n_per_dim
            and self.box_half_length == other.box_half_length
        )

    def __hash__(self):
        return hash((self.d, self.n_per_dim, self.box_half_length))
