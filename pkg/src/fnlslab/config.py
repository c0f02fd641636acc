"""Scenario configuration: `key = value` text with dotted keys, full-file
validation (all problems reported at once), and documented defaults."""

import math
import os
from dataclasses import dataclass, field as dataclass_field

from .errors import ConfigError
from .dynamics import EvolveConfig
from .grid import SpectralGrid
from .model import HARTREE, POWER, ModelParams

SCENARIOS = ("groundstate", "evolve", "verify-inequalities", "concentration-study", "thresholds")

INITIAL_DATA_KINDS = ("gaussian", "scaled_groundstate", "chirped_gaussian", "from_checkpoint")


@dataclass
class InitialData:
    kind: str = "gaussian"
    sigma: float = 1.0
    amplitude: float = 1.0
    chirp_b: float = 0.0
    factor: float = 1.0
    path: str = ""


@dataclass
class ScenarioConfig:
    scenario: str
    model: ModelParams
    grid: SpectralGrid
    evolve: EvolveConfig
    initial_data: InitialData
    output_dir: str = "out"
    seed: int = 0
    n_bins: int = 64


# key -> (type, default or REQUIRED, validator message)
_REQUIRED = object()

_SCHEMA = {
    "scenario": (str, _REQUIRED),
    "model.d": (int, _REQUIRED),
    "model.alpha": (float, _REQUIRED),
    "model.branch": (str, POWER),
    "grid.n_per_dim": (int, _REQUIRED),
    "grid.L": (float, _REQUIRED),
    "evolve.dt_init": (float, 1e-3),
    "evolve.t_max": (float, 1.0),
    "evolve.cfl_safety": (float, 0.9),
    "evolve.blowup_kinetic_factor": (float, 1e3),
    "evolve.gradient_resolution_floor": (float, 0.99),
    "evolve.checkpoint_every": (int, 0),
    "evolve.record_every": (int, 10),
    "evolve.phase_budget": (float, 1.0),
    "initial_data.kind": (str, "gaussian"),
    "initial_data.sigma": (float, 1.0),
    "initial_data.amplitude": (float, 1.0),
    "initial_data.chirp_b": (float, 0.0),
    "initial_data.factor": (float, 1.0),
    "initial_data.path": (str, ""),
    "output_dir": (str, "out"),
    "seed": (int, 0),
    "n_bins": (int, 64),
}


def _parse_value(raw: str, typ: type):
    raw = raw.strip()
    if typ is int:
        value = int(raw, 0)
    elif typ is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError("non-finite value")
    else:
        value = raw
    return value


def parse_config(text: str, scenario_override: str = None) -> ScenarioConfig:
    """Parse and validate; raises ConfigError carrying every problem found."""
    problems = []
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append((lineno, f"expected 'key = value', got {stripped!r}"))
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            problems.append((lineno, f"unknown key {key!r}"))
            continue
        if key in values:
            problems.append((lineno, f"duplicate key {key!r}"))
            continue
        typ, _default = _SCHEMA[key]
        try:
            values[key] = (_parse_value(raw, typ), lineno)
        except ValueError:
            problems.append((lineno, f"cannot parse {raw.strip()!r} as {typ.__name__} for {key!r}"))

    if scenario_override is not None:
        if "scenario" in values and values["scenario"][0] != scenario_override:
            problems.append((values["scenario"][1],
                             f"scenario {values['scenario'][0]!r} conflicts with the "
                             f"command verb {scenario_override!r}"))
        values["scenario"] = (scenario_override, 0)

    def get(key):
        if key in values:
            return values[key][0]
        typ, default = _SCHEMA[key]
        return None if default is _REQUIRED else default

    def lineof(key):
        return values[key][1] if key in values else 0

    for key, (typ, default) in _SCHEMA.items():
        if default is _REQUIRED and key not in values:
            problems.append((0, f"missing required key {key!r}"))

    # domain validation; every diagnosable problem is collected before raising
    scenario = get("scenario")
    if scenario is not None and scenario not in SCENARIOS:
        problems.append((lineof("scenario"), f"scenario must be one of {SCENARIOS}, got {scenario!r}"))

    d = get("model.d")
    alpha = get("model.alpha")
    branch = get("model.branch")
    model = None
    if branch not in (POWER, HARTREE):
        problems.append((lineof("model.branch"), f"model.branch must be '{POWER}' or '{HARTREE}'"))
    if alpha is not None and not (1.0 < alpha <= 2.0):
        problems.append((lineof("model.alpha"), "model.alpha must lie in (1, 2]"))
    if d is not None and not 2 <= d <= 5:
        problems.append((lineof("model.d"), "model.d must lie in [2, 5]"))
    if d is not None and alpha is not None and branch in (POWER, HARTREE) and (1.0 < alpha <= 2.0) and 2 <= d <= 5:
        if branch == HARTREE and not d > 2 * alpha:
            problems.append((lineof("model.d"), f"hartree branch requires d > 2*alpha, got d={d}, alpha={alpha}"))
        elif branch == POWER and not alpha < d:
            problems.append((lineof("model.d"), f"power branch requires alpha < d, got d={d}, alpha={alpha}"))
        else:
            model = ModelParams(d, alpha, branch)

    n = get("grid.n_per_dim")
    box_l = get("grid.L")
    grid = None
    if n is not None and (n < 8 or (n & (n - 1)) != 0):
        problems.append((lineof("grid.n_per_dim"), "grid.n_per_dim must be a power of two >= 8"))
    elif box_l is not None and box_l <= 0:
        problems.append((lineof("grid.L"), "grid.L must be positive"))
    elif n is not None and box_l is not None and model is not None:
        try:
            grid = SpectralGrid(d, n, box_l)
        except Exception as exc:
            problems.append((lineof("grid.n_per_dim"), str(exc)))

    kind = get("initial_data.kind")
    if kind not in INITIAL_DATA_KINDS:
        problems.append((lineof("initial_data.kind"),
                         f"initial_data.kind must be one of {INITIAL_DATA_KINDS}"))
    if kind == "from_checkpoint":
        path = get("initial_data.path")
        if not path:
            problems.append((lineof("initial_data.path"), "from_checkpoint requires initial_data.path"))
        elif not os.path.exists(path):
            problems.append((lineof("initial_data.path"), f"checkpoint path {path!r} does not exist"))
    if get("initial_data.sigma") <= 0:
        problems.append((lineof("initial_data.sigma"), "initial_data.sigma must be positive"))

    evolve_cfg = EvolveConfig(
        dt_init=get("evolve.dt_init"),
        t_max=get("evolve.t_max"),
        cfl_safety=get("evolve.cfl_safety"),
        blowup_kinetic_factor=get("evolve.blowup_kinetic_factor"),
        gradient_resolution_floor=get("evolve.gradient_resolution_floor"),
        checkpoint_every=get("evolve.checkpoint_every"),
        record_every=get("evolve.record_every"),
        phase_budget=get("evolve.phase_budget"),
    )
    try:
        evolve_cfg.validate()
    except Exception as exc:
        problems.append((0, f"evolve configuration: {exc}"))

    if get("n_bins") < 8:
        problems.append((lineof("n_bins"), "n_bins must be at least 8"))
    if get("seed") < 0:
        problems.append((lineof("seed"), "seed must be nonnegative"))

    if problems:
        raise ConfigError(problems)

    return ScenarioConfig(
        scenario=scenario,
        model=model,
        grid=grid,
        evolve=evolve_cfg,
        initial_data=InitialData(
            kind=kind,
            sigma=get("initial_data.sigma"),
            amplitude=get("initial_data.amplitude"),
            chirp_b=get("initial_data.chirp_b"),
            factor=get("initial_data.factor"),
            path=get("initial_data.path"),
        ),
        output_dir=get("output_dir"),
        seed=get("seed"),
        n_bins=get("n_bins"),
    )


def config_defaults_text() -> str:
    """Reference listing of every key with its default (or REQUIRED)."""
    lines = []
    for key, (typ, default) in _SCHEMA.items():
        tag = "REQUIRED" if default is _REQUIRED else repr(default)
        lines.append(f"{key} ({typ.__name__}) = {tag}")
    return "\n".join(lines)
