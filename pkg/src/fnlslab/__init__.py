"""fnlslab: pseudospectral lab for the focusing energy-critical fractional NLS.

Simulates i u_t = |nabla|^alpha u - V(u) u on a periodic box with power or
Hartree nonlinearity, computes ground states and their thresholds, and runs
property checks of the conservation laws, virial identities, and functional
inequalities at desk scale.
"""

from .errors import (
    BranchError,
    CheckpointError,
    ConfigError,
    ConsistencyError,
    ConvergenceError,
    DiscretizationError,
    FnlsError,
    GridError,
    ModelError,
    NonFiniteFieldError,
)
from .field import ComplexField
from .grid import SpectralGrid
from .model import HARTREE, POWER, ModelParams

__version__ = "0.1.0"

__all__ = [
    "BranchError",
    "CheckpointError",
    "ComplexField",
    "ConfigError",
    "ConsistencyError",
    "ConvergenceError",
    "DiscretizationError",
    "FnlsError",
    "GridError",
    "HARTREE",
    "ModelError",
    "ModelParams",
    "NonFiniteFieldError",
    "POWER",
    "SpectralGrid",
    "__version__",
]
