"""Shared fixtures; the expensive ground-state solves are session-scoped."""

import warnings

import numpy as np
import pytest

from fnlslab import ComplexField, ModelParams, SpectralGrid
from fnlslab import dynamics as dyn
from fnlslab import groundstate as gst

warnings.filterwarnings("ignore", message=".*boundary samples.*")
warnings.filterwarnings("ignore", message=".*radial symmetry.*")
warnings.filterwarnings("ignore", message=".*not monotone.*")


@pytest.fixture(scope="session")
def power_2d():
    return ModelParams(2, 1.5, "power")


@pytest.fixture(scope="session")
def grid_2d():
    return SpectralGrid(2, 256, 12.0)


@pytest.fixture(scope="session")
def grid_2d_small():
    return SpectralGrid(2, 64, 12.0)


@pytest.fixture(scope="session")
def gs_discrete_2d(power_2d, grid_2d):
    return gst.petviashvili_solve(power_2d, grid_2d)


@pytest.fixture(scope="session")
def gs_reference_2d(power_2d, grid_2d):
    return gst.reference_ground_state(power_2d, grid_2d)


@pytest.fixture(scope="session")
def power_3d():
    return ModelParams(3, 1.5, "power")


@pytest.fixture(scope="session")
def grid_3d():
    return SpectralGrid(3, 64, 10.0)


@pytest.fixture(scope="session")
def gs_discrete_3d(power_3d, grid_3d):
    return gst.petviashvili_solve(power_3d, grid_3d)


@pytest.fixture(scope="session")
def hartree_4d():
    return ModelParams(4, 1.5, "hartree")


@pytest.fixture(scope="session")
def gs_discrete_hartree(hartree_4d):
    return gst.petviashvili_solve(hartree_4d, SpectralGrid(4, 32, 8.0))


@pytest.fixture(scope="session")
def gs_discrete_aubin():
    return gst.petviashvili_solve(ModelParams(4, 2.0, "power"), SpectralGrid(4, 32, 10.0))


class ConcentrationCapture(dyn.DiagnosticsSinks):
    """Keeps the radial cumulative kinetic profile and the dilation moment
    of every emitted record."""

    def __init__(self, alpha):
        from fnlslab import diagnostics as dg
        from fnlslab import spectral as sp

        self._sp = sp
        self._dg = dg
        self.alpha = alpha
        self.times = []
        self.profiles = []
        self.dilation_moments = []

    def on_sync(self, t, u):
        self.times.append(t)
        self.profiles.append(self._sp.radial_cumulative_kinetic(u, self.alpha))
        self.dilation_moments.append(self._dg.dilation_moment(u, self.alpha))


@pytest.fixture(scope="session")
def blowup_run(power_2d, grid_2d, gs_reference_2d):
    """The 1.2 x ground-state run shared by the virial/trapping/concentration
    checks; detection tuned to fire during the primary collapse.  Returns
    (outcome, concentration capture)."""
    phi = ComplexField(grid_2d, 1.2 * gs_reference_2d.field.values)
    cfg = dyn.EvolveConfig(
        dt_init=2e-3, t_max=5.0, cfl_safety=0.9,
        blowup_kinetic_factor=10.0, gradient_resolution_floor=0.9997,
        record_every=10, phase_budget=0.5,
    )
    capture = ConcentrationCapture(power_2d.alpha)
    outcome = dyn.evolve(phi, power_2d, cfg, sinks=capture, gs=gs_reference_2d)
    return outcome, capture


@pytest.fixture(scope="session")
def blowup_outcome(blowup_run):
    return blowup_run[0]


@pytest.fixture(scope="session")
def subthreshold_outcome(power_2d, grid_2d, gs_reference_2d):
    phi = ComplexField(grid_2d, 0.5 * gs_reference_2d.field.values)
    cfg = dyn.EvolveConfig(dt_init=2e-3, t_max=3.0, cfl_safety=0.9, record_every=20)
    return dyn.evolve(phi, power_2d, cfg, gs=gs_reference_2d)


def l2_rel_diff(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
