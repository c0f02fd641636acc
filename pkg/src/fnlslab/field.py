"""Complex-valued sampled fields with a tagged physical/spectral representation.

Spectral values follow the raw numpy FFT convention (unnormalized forward
transform); the discrete L^2 pairing carries the quadrature weight dx^d.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import GridError, NonFiniteFieldError
from .grid import SpectralGrid, fftn, ifftn

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass
class ComplexField:
    grid: SpectralGrid
    values: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        if self.space not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"space must be '{PHYSICAL}' or '{SPECTRAL}'")
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} does not match grid shape {self.grid.shape}")
        if v.dtype != np.complex128:
            v = v.astype(np.complex128)
        self.values = v

    # -- representation changes -----------------------------------------

    def to_physical(self) -> "ComplexField":
        if self.space == PHYSICAL:
            return self
        return ComplexField(self.grid, ifftn(self.values), PHYSICAL)

    def to_spectral(self) -> "ComplexField":
        if self.space == SPECTRAL:
            return self
        return ComplexField(self.grid, fftn(self.values), SPECTRAL)

    @property
    def physical_values(self) -> np.ndarray:
        return self.to_physical().values

    @property
    def spectral_values(self) -> np.ndarray:
        return self.to_spectral().values

    def copy(self) -> "ComplexField":
        return replace(self, values=self.values.copy())

    # -- validation helpers ----------------------------------------------

    def require_finite(self, what: str = "field") -> "ComplexField":
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteFieldError(f"{what} contains non-finite samples")
        return self

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, grid: SpectralGrid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), PHYSICAL)

    @classmethod
    def from_radial(cls, grid: SpectralGrid, profile) -> "ComplexField":
        """Sample profile(r) on the grid, r = |x|."""
        return cls(grid, np.asarray(profile(grid.rmag), dtype=np.complex128), PHYSICAL)

    @classmethod
    def gaussian(cls, grid: SpectralGrid, sigma: float = 1.0, amplitude: float = 1.0, chirp: float = 0.0) -> "ComplexField":
        """amplitude * exp(-|x|^2 / (2 sigma^2) + i * chirp * |x|^2)."""
        r2 = grid.rmag**2
        vals = amplitude * np.exp(-r2 / (2.0 * sigma**2) + 1j * chirp * r2)
        return cls(grid, vals, PHYSICAL)

    @classmethod
    def plane_wave(cls, grid: SpectralGrid, mode: tuple) -> "ComplexField":
        """exp(i k.x) for the lattice wavevector k = (pi/L)*mode."""
        phase = np.zeros(grid.shape)
        for ax, m in enumerate(mode):
            phase = phase + (np.pi / grid.L) * m * grid.axis_coord(ax)
        return cls(grid, np.exp(1j * phase), PHYSICAL)


def require_same_grid(*fields: ComplexField) -> SpectralGrid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridError("fields live on different grids")
    return g
