"""Model parameters: dimension, dispersion order, nonlinearity branch."""

from dataclasses import dataclass

from .errors import BranchError, ModelError

POWER = "power"
HARTREE = "hartree"

# alpha = 2 is admitted as the classical-Laplacian limit; it is needed for
# the ground-state oracle in d = 4 (the Aubin-Talenti profile).
_ALPHA_MAX = 2.0


@dataclass(frozen=True)
class ModelParams:
    d: int
    alpha: float
    branch: str

    def __post_init__(self):
        if self.branch not in (POWER, HARTREE):
            raise ModelError(f"branch must be '{POWER}' or '{HARTREE}', got {self.branch!r}")
        if not 2 <= int(self.d) <= 5:
            raise ModelError(f"d must lie in [2, 5], got {self.d}")
        if not (1.0 < self.alpha <= _ALPHA_MAX):
            raise ModelError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.branch == POWER and not self.alpha < self.d:
            raise ModelError(f"power branch requires alpha < d, got alpha={self.alpha}, d={self.d}")
        if self.branch == HARTREE and not self.d > 2.0 * self.alpha:
            raise ModelError(
                f"hartree branch requires d > 2*alpha (kernel |x|^(-2a) locally integrable), "
                f"got alpha={self.alpha}, d={self.d}"
            )

    @property
    def mu(self) -> float:
        """Exponent in the potential energy: 2d/(d-alpha) for power, 4 for Hartree."""
        if self.branch == POWER:
            return 2.0 * self.d / (self.d - self.alpha)
        return 4.0

    @property
    def sigma(self) -> float:
        """Power-branch nonlinearity exponent 2*alpha/(d-alpha)."""
        if self.branch != POWER:
            raise BranchError("sigma is defined for the power branch only")
        return 2.0 * self.alpha / (self.d - self.alpha)

    @property
    def supports_thresholds(self) -> bool:
        """Whether the dichotomy/threshold experiments apply: d <= 2*alpha (power)."""
        if self.branch == POWER:
            return self.d <= 2.0 * self.alpha
        return True

    def spacetime_exponents(self) -> tuple:
        """(q, r) of the scale-critical space-time norm for this branch."""
        if self.branch == POWER:
            q = 2.0 * (self.d + self.alpha) / (self.d - self.alpha)
            return q, q
        r = 2.0 * self.d / (self.d - 4.0 * self.alpha / 3.0)
        if r < 1.0:
            raise ModelError(f"hartree space-time exponent r={r} < 1 is inadmissible")
        return 6.0, r

    def describe(self) -> str:
        return f"{self.branch}(d={self.d}, alpha={self.alpha})"
