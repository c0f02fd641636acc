"""Strichartz admissibility bookkeeping and sampled linear-propagator checks."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .field import ComplexField
from .dynamics import linear_propagate
from . import spectral as sp

REL_TOL = 1e-12


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float


def forbidden_endpoint(d: int) -> tuple:
    """The excluded endpoint pair (2, (4d-2)/(2d-3))."""
    return 2.0, (4.0 * d - 2.0) / (2.0 * d - 3.0)


def is_admissible(q: float, r: float, alpha: float, d: int) -> bool:
    """Scaling relation alpha/q + d/r = d/2 with q, r >= 2, minus the
    forbidden endpoint; math.inf is a valid exponent."""
    if not (q >= 2.0 and r >= 2.0):
        return False
    lhs = (0.0 if math.isinf(q) else alpha / q) + (0.0 if math.isinf(r) else d / r)
    if abs(lhs - d / 2.0) > REL_TOL * max(1.0, d / 2.0):
        return False
    fq, fr = forbidden_endpoint(d)
    if abs(q - fq) <= REL_TOL * fq and abs(r - fr) <= REL_TOL * fr:
        return False
    return True


def admissible_r(q: float, alpha: float, d: int) -> float:
    """The r solving the scaling relation for given q."""
    rest = d / 2.0 - (0.0 if math.isinf(q) else alpha / q)
    if rest <= 0:
        raise ModelError(f"no admissible r for q={q}")
    return d / rest


def strichartz_ratio(
    f: ComplexField,
    pair: AdmissiblePair,
    alpha: float,
    window_T: float,
    n_samples: int = 64,
) -> float:
    """|| U(t) f ||_{L^q_t L^r_x([0, T])} / || f ||_{L^2}.

    The free flow is exact (spectral); the time norm uses a composite
    trapezoid rule on uniform samples.
    """
    grid = f.grid
    if not is_admissible(pair.q, pair.r, alpha, grid.d):
        raise ModelError(f"pair (q={pair.q}, r={pair.r}) is not admissible")
    denom = sp.l2_norm(f)
    if denom == 0.0:
        raise ZeroDivisionError("strichartz ratio undefined for the zero field")
    times = np.linspace(0.0, window_T, n_samples)
    vals = np.empty(n_samples)
    fhat = f.to_spectral()
    for i, t in enumerate(times):
        vals[i] = sp.lp_norm(linear_propagate(fhat, alpha, float(t)), pair.r)
    if math.isinf(pair.q):
        return float(vals.max()) / denom
    integral = float(np.trapezoid(vals**pair.q, times))
    return integral ** (1.0 / pair.q) / denom


def ratio_family_report(
    fields,
    pair: AdmissiblePair,
    alpha: float,
    window_T: float,
    n_samples: int = 64,
) -> dict:
    """Empirical supremum of the ratio over a family of fields."""
    ratios = [strichartz_ratio(f, pair, alpha, window_T, n_samples) for f in fields]
    return {
        "q": pair.q,
        "r": pair.r,
        "family_size": len(ratios),
        "window": window_T,
        "max_ratio": max(ratios),
        "mean_ratio": float(np.mean(ratios)),
    }


def random_radial_bumps(grid, count: int, seed: int, r_scale: float = None, amplitude: float = 1.0):
    """Deterministic family of smooth radial bumps from a counter-based
    generator; used by the sampled inequality checks."""
    rng = np.random.Generator(np.random.Philox(seed))
    if r_scale is None:
        r_scale = grid.L / 3.0
    r2 = grid.rmag**2
    fields = []
    for _ in range(count):
        n_terms = int(rng.integers(1, 4))
        vals = np.zeros(grid.shape)
        for _ in range(n_terms):
            amp = amplitude * float(rng.uniform(0.2, 1.0))
            center = float(rng.uniform(0.0, r_scale)) ** 2
            width = float(rng.uniform(0.35, 1.0)) * r_scale**2 / 2.0
            vals = vals + amp * np.exp(-((r2 - center) ** 2) / width**2)
        fields.append(ComplexField(grid, vals.astype(np.complex128)))
    return fields
