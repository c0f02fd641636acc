"""Fourier-side operators: fractional Laplacian, nonlinear potentials, norms,
inner products, dealiasing, and radial shell statistics."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import BranchError, DiscretizationError, GridError, ModelError, NonFiniteFieldError
from .field import PHYSICAL, SPECTRAL, ComplexField, require_same_grid
from .grid import SpectralGrid, fftn, ifftn
from .model import HARTREE, POWER, ModelParams

# Values of the Hartree potential below -NEGATIVITY_TOL * max(V) indicate a
# discretization failure rather than harmless roundoff.
NEGATIVITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# fractional Laplacian and dealiasing
# ---------------------------------------------------------------------------

def fractional_laplacian(f: ComplexField, s: float) -> ComplexField:
    """Apply |nabla|^s: multiply spectral coefficients by |k|^s.

    The zero mode is annihilated (|0|^s = 0 for s > 0).  The result keeps
    the representation of the input.
    """
    if not s > 0:
        raise ValueError(f"fractional order s must be positive, got {s}")
    f.require_finite("fractional_laplacian input")
    sym = f.grid.fractional_symbol(s)
    if f.space == SPECTRAL:
        return ComplexField(f.grid, sym * f.values, SPECTRAL)
    return ComplexField(f.grid, ifftn(sym * fftn(f.values)), PHYSICAL)


def dealias(f: ComplexField) -> ComplexField:
    """2/3-rule truncation; keeps the input's representation."""
    mask = f.grid.dealias_mask
    if f.space == SPECTRAL:
        return ComplexField(f.grid, np.where(mask, f.values, 0.0), SPECTRAL)
    return ComplexField(f.grid, ifftn(np.where(mask, fftn(f.values), 0.0)), PHYSICAL)


# ---------------------------------------------------------------------------
# nonlinear potentials
# ---------------------------------------------------------------------------

def power_potential(u: ComplexField, params: ModelParams) -> np.ndarray:
    """V(u) = |u|^sigma, pointwise, as a real array on the grid."""
    if params.branch != POWER:
        raise BranchError("power_potential requires the power branch")
    return np.abs(u.physical_values) ** params.sigma


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def riesz_gaussian_origin(d: int, alpha: float, a: float) -> float:
    """Radial-quadrature oracle: integral of |y|^(-2 alpha) * exp(-a |y|^2) over R^d.

    This is the value at the origin of the Riesz-potential convolution with a
    Gaussian; used both as a test oracle and to calibrate the spectral kernel.
    """
    if not d > 2 * alpha:
        raise ModelError("Riesz integral requires d > 2*alpha")
    val, _ = quad(lambda r: r ** (d - 1 - 2 * alpha) * math.exp(-a * r * r), 0.0, np.inf)
    return sphere_area(d) * val


def _plane_wave_sphere_average(d: int, s: np.ndarray) -> np.ndarray:
    """Average of exp(i s cos(theta)) over S^{d-1}: Gamma(d/2) (2/s)^nu J_nu(s)."""
    from scipy.special import jv

    nu = (d - 2) / 2.0
    s = np.asarray(s, dtype=float)
    out = np.ones_like(s)
    big = s > 1e-8
    sb = s[big]
    out[big] = math.gamma(d / 2.0) * (2.0 / sb) ** nu * jv(nu, sb)
    return out


def _truncated_kernel_transform(d: int, alpha: float, L: float, k: np.ndarray) -> np.ndarray:
    """Fourier transform of the radially truncated Riesz kernel.

    Khat(k) = integral over |x| < L of |x|^(-2 alpha) exp(-i k.x) dx, by
    Gauss-Legendre quadrature after the substitution u = r^(d - 2 alpha),
    which removes the endpoint singularity.  Khat(0) is the exact
    truncated-kernel integral S_{d-1} L^(d-2a) / (d-2a).
    """
    beta = d - 2.0 * alpha
    k = np.asarray(k, dtype=float)
    klmax = float(k.max()) * L
    order = int(min(4096, max(512, 3.2 * klmax)))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    u = 0.5 * L**beta * (nodes + 1.0)
    wq = 0.5 * L**beta * weights
    r = u ** (1.0 / beta)
    vals = np.empty_like(k)
    chunk = max(1, int(4e6 / order))  # batch rows to bound the Bessel workspace
    for i in range(0, k.size, chunk):
        s = np.outer(k[i : i + chunk], r)
        vals[i : i + chunk] = _plane_wave_sphere_average(d, s) @ wq
    return sphere_area(d) / beta * vals


_riesz_multiplier_cache: dict = {}


def _riesz_multiplier(grid: SpectralGrid, alpha: float) -> np.ndarray:
    """Torus multiplier of the truncated Riesz kernel on the grid's modes.

    |k| takes only sqrt(integer) * pi/L values, so the transform is evaluated
    exactly once per unique wavenumber magnitude and scattered back.  The
    kernel is nonnegative, so convolving a nonnegative density stays
    nonnegative up to the input's own spectral-truncation level.
    """
    key = (grid.d, grid.n_per_dim, grid.box_half_length, round(float(alpha), 12))
    if key not in _riesz_multiplier_cache:
        n = grid.n_per_dim
        m1d = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        m2 = np.zeros(grid.shape, dtype=np.int64)
        for ax in range(grid.d):
            shape = [1] * grid.d
            shape[ax] = n
            m2 = m2 + m1d.reshape(shape) ** 2
        uniq, inverse = np.unique(m2, return_inverse=True)
        kvals = (np.pi / grid.L) * np.sqrt(uniq.astype(float))
        table = _truncated_kernel_transform(grid.d, alpha, grid.L, kvals)
        _riesz_multiplier_cache[key] = table[inverse].reshape(grid.shape)
    return _riesz_multiplier_cache[key]


def _convolve_riesz(w: np.ndarray, grid: SpectralGrid, alpha: float) -> np.ndarray:
    """Periodic convolution of w with the truncated Riesz kernel |x|^(-2a)."""
    what = fftn(w.astype(np.complex128))
    what *= grid.dealias_mask
    return ifftn(_riesz_multiplier(grid, alpha) * what).real


def hartree_effective_constant(d: int, alpha: float, L: float) -> float:
    """Effective Riesz-multiplier constant: Khat(k) * k^(d-2a) deep in kL.

    Derived from the kernel quadrature, never transcribed from any table;
    logged to run manifests for reproducibility.
    """
    k_ref = np.array([200.0 / L])
    return float(_truncated_kernel_transform(d, alpha, L, k_ref)[0] * k_ref[0] ** (d - 2.0 * alpha))


def hartree_potential(u: ComplexField, params: ModelParams) -> np.ndarray:
    """V(u) = |x|^(-2 alpha) * |u|^2, computed spectrally on the torus.

    Tiny negative values (an artifact of truncation) are clamped to zero;
    values below -1e-10 * max(V) are treated as a discretization failure.
    """
    if params.branch != HARTREE:
        raise BranchError("hartree_potential requires the hartree branch")
    if not params.d > 2 * params.alpha:
        raise ModelError("hartree potential requires d > 2*alpha")
    grid = u.grid
    w = np.abs(u.physical_values) ** 2
    v = _convolve_riesz(w, grid, params.alpha)
    vmax = float(v.max(initial=0.0))
    if vmax > 0 and float(v.min()) < -NEGATIVITY_TOL * vmax:
        raise DiscretizationError(
            f"hartree potential reached {v.min():.3e} (max {vmax:.3e}); "
            "grid cannot represent the convolution"
        )
    return np.maximum(v, 0.0)


def potential(u: ComplexField, params: ModelParams) -> np.ndarray:
    """Branch dispatch for V(u)."""
    if params.branch == POWER:
        return power_potential(u, params)
    return hartree_potential(u, params)


# ---------------------------------------------------------------------------
# inner products and norms (Riemann quadrature with weight dx^d)
# ---------------------------------------------------------------------------

def l2_inner(f: ComplexField, g: ComplexField) -> complex:
    """<f, g> = integral of f * conj(g)."""
    grid = require_same_grid(f, g)
    return complex(np.vdot(g.physical_values, f.physical_values) * grid.cell_volume)


def l2_norm(f: ComplexField) -> float:
    if f.space == SPECTRAL:
        # Plancherel: ||f||^2 = (2L)^(-d) * sum |vhat * dx^d|^2
        grid = f.grid
        s = np.vdot(f.values, f.values).real * grid.cell_volume**2 / grid.box_volume
        return math.sqrt(max(s, 0.0))
    return math.sqrt(np.vdot(f.values, f.values).real * f.grid.cell_volume)


def lp_norm(f: ComplexField, r: float) -> float:
    """(sum |f|^r dx^d)^(1/r); r = inf gives the max norm."""
    if r < 1:
        raise ValueError(f"Lebesgue exponent must satisfy r >= 1, got {r}")
    a = np.abs(f.physical_values)
    if math.isinf(r):
        return float(a.max())
    return float((np.sum(a**r) * f.grid.cell_volume) ** (1.0 / r))


def spectral_l2_sum(f: ComplexField) -> float:
    """(2L)^(-d)-normalized spectral sum; equals ||f||_{L^2}^2 (Plancherel)."""
    grid = f.grid
    vhat = f.spectral_values
    return float(np.vdot(vhat, vhat).real * grid.cell_volume**2 / grid.box_volume)


def homogeneous_sobolev_norm2(f: ComplexField, s: float) -> float:
    """|| |nabla|^s f ||_{L^2}^2 evaluated spectrally."""
    grid = f.grid
    vhat = f.spectral_values
    w = grid.fractional_symbol(2.0 * s)
    return float(np.sum(w * np.abs(vhat) ** 2) * grid.cell_volume**2 / grid.box_volume)


def kinetic_density(f: ComplexField, alpha: float) -> np.ndarray:
    """| |nabla|^(alpha/2) f |^2 in physical space."""
    g = fractional_laplacian(f.to_physical(), alpha / 2.0)
    return np.abs(g.values) ** 2


# ---------------------------------------------------------------------------
# radial shell statistics
# ---------------------------------------------------------------------------

@dataclass
class RadialProfile:
    """Shell-averaged statistics by |x|; bins with no samples are dropped."""

    r: np.ndarray            # mean radius of each occupied bin
    mean_abs: np.ndarray     # shell average of |f|
    mean_kinetic: np.ndarray  # shell average of | |nabla|^(a/2) f |^2 (zeros if no alpha)
    counts: np.ndarray
    edges: np.ndarray


def radial_profile(f: ComplexField, n_bins: int, alpha: float = None) -> RadialProfile:
    """Spherical-shell binning of |f| (and optionally of its kinetic density)."""
    if n_bins < 8:
        raise ValueError(f"n_bins must be at least 8, got {n_bins}")
    grid = f.grid
    r = grid.rmag.ravel()
    rmax = float(r.max())
    width = rmax / n_bins
    idx = np.minimum((r / width).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    absf = np.abs(f.physical_values).ravel()
    sums_r = np.bincount(idx, weights=r, minlength=n_bins)
    sums_a = np.bincount(idx, weights=absf, minlength=n_bins)
    if alpha is not None:
        kd = kinetic_density(f, alpha).ravel()
        sums_k = np.bincount(idx, weights=kd, minlength=n_bins)
    else:
        sums_k = np.zeros(n_bins)
    occupied = counts > 0
    c = counts[occupied].astype(float)
    return RadialProfile(
        r=sums_r[occupied] / c,
        mean_abs=sums_a[occupied] / c,
        mean_kinetic=sums_k[occupied] / c,
        counts=counts[occupied],
        edges=np.linspace(0.0, rmax, n_bins + 1),
    )


def _radius_classes(grid: SpectralGrid) -> np.ndarray:
    """Index of each grid point's exact-radius equivalence class.

    x-coordinates are integer multiples of dx, so |x|^2 / dx^2 is an integer;
    grouping by it separates angular variation from radial variation exactly.
    """
    n = grid.n_per_dim
    m1d = (np.arange(n) - n // 2).astype(np.int64)
    m2 = np.zeros(grid.shape, dtype=np.int64)
    for ax in range(grid.d):
        shape = [1] * grid.d
        shape[ax] = n
        m2 = m2 + m1d.reshape(shape) ** 2
    _, inverse = np.unique(m2.ravel(), return_inverse=True)
    return inverse


_radius_class_cache: dict = {}


def symmetry_deviation(f: ComplexField) -> float:
    """Root-mean-square scatter of |f| over exact-radius classes, relative to
    max|f|.  Zero (to roundoff) for radial samples; gates radial diagnostics.
    """
    grid = f.grid
    key = (grid.d, grid.n_per_dim)
    if key not in _radius_class_cache:
        _radius_class_cache[key] = _radius_classes(grid)
    idx = _radius_class_cache[key]
    absf = np.abs(f.physical_values).ravel()
    fmax = float(absf.max())
    if fmax == 0.0:
        return 0.0
    counts = np.bincount(idx).astype(float)
    sums = np.bincount(idx, weights=absf)
    sums2 = np.bincount(idx, weights=absf**2)
    var = np.maximum(sums2 - sums**2 / counts, 0.0)
    return math.sqrt(float(var.sum()) / absf.size) / fmax


def radial_cumulative_kinetic(u: ComplexField, alpha: float, n_bins: int = None):
    """Cumulative integral of the kinetic density over balls |x| <= R.

    Returns (edges, cumulative) where cumulative[i] integrates over
    |x| <= edges[i+1]; staircase-exact at bin resolution.
    """
    grid = u.grid
    if n_bins is None:
        n_bins = grid.n_per_dim
    r = grid.rmag.ravel()
    rmax = float(r.max())
    width = rmax / n_bins
    idx = np.minimum((r / width).astype(np.int64), n_bins - 1)
    kd = kinetic_density(u, alpha).ravel()
    shell = np.bincount(idx, weights=kd, minlength=n_bins) * grid.cell_volume
    edges = np.linspace(0.0, rmax, n_bins + 1)
    return edges, np.cumsum(shell)
