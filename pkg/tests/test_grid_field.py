import math

import numpy as np
import pytest

from fnlslab import ComplexField, GridError, SpectralGrid
from fnlslab import spectral as sp


def test_grid_geometry():
    g = SpectralGrid(2, 256, 12.0)
    assert g.npoints == 256**2
    assert g.dx * g.n_per_dim == pytest.approx(2 * g.L, rel=1e-15)
    assert g.x1d[0] == -12.0
    assert g.x1d[-1] == pytest.approx(12.0 - g.dx)


def test_wavenumber_table_symmetric_except_nyquist():
    g = SpectralGrid(2, 64, 6.0)
    k = np.sort(g.k1d)
    nyquist = -np.pi / g.L * (g.n_per_dim // 2)
    assert k[0] == pytest.approx(nyquist)
    positives = set(np.round(k[k > 0], 12))
    negatives = set(np.round(-k[(k < 0) & (k > nyquist + 1e-12)], 12))
    assert positives == negatives


@pytest.mark.parametrize(
    "d, n, L",
    [(1, 64, 1.0), (6, 16, 1.0), (2, 100, 1.0), (2, 4, 1.0), (2, 64, -1.0), (5, 64, 1.0)],
)
def test_grid_rejects_bad_parameters(d, n, L):
    with pytest.raises(GridError):
        SpectralGrid(d, n, L)


def test_round_trip_physical_spectral(grid_2d):
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(grid_2d.shape) + 1j * rng.standard_normal(grid_2d.shape)
    f = ComplexField(grid_2d, vals)
    back = f.to_spectral().to_physical()
    assert np.linalg.norm(back.values - vals) / np.linalg.norm(vals) < 1e-12


def test_plancherel(grid_2d):
    f = ComplexField.gaussian(grid_2d, sigma=1.3, amplitude=0.7, chirp=0.4)
    n2 = sp.l2_norm(f) ** 2
    assert abs(n2 - sp.spectral_l2_sum(f)) < 1e-12 * n2


def test_gaussian_l2_norm_matches_analytic(grid_2d):
    # || exp(-|x|^2/2) ||^2 = pi^{d/2}
    f = ComplexField.gaussian(grid_2d, sigma=1.0)
    assert sp.l2_norm(f) ** 2 == pytest.approx(math.pi, rel=1e-10)


def test_field_shape_mismatch_rejected(grid_2d):
    with pytest.raises(GridError):
        ComplexField(grid_2d, np.zeros((8, 8), dtype=np.complex128))


def test_require_finite(grid_2d):
    vals = np.zeros(grid_2d.shape, dtype=np.complex128)
    vals[0, 0] = np.nan
    from fnlslab import NonFiniteFieldError

    with pytest.raises(NonFiniteFieldError):
        ComplexField(grid_2d, vals).require_finite()
