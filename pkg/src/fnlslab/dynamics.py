"""Time evolution by Strang splitting: exact linear flow in Fourier space,
exact phase-rotation nonlinear flow in physical space, 2/3-rule dealiasing,
adaptive stepping, and blowup/resolution-loss detection."""

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ModelError, NonFiniteFieldError
from .field import ComplexField, SPECTRAL
from .grid import SpectralGrid, fftn, ifftn
from .model import HARTREE, POWER, ModelParams
from . import spectral as sp
from .diagnostics import DiagnosticsRecord, make_record
from .groundstate import GroundState, kinetic_norm2, _potential_integral

COMPLETED = "completed"
BLOWUP = "blowup"
RESOLUTION_LOST = "resolution_lost"


@dataclass
class EvolveConfig:
    dt_init: float
    t_max: float
    cfl_safety: float = 0.9
    blowup_kinetic_factor: float = 1e3
    gradient_resolution_floor: float = 0.99
    checkpoint_every: int = 0           # steps between checkpoints; 0 disables
    record_every: int = 10              # steps between diagnostics records
    phase_budget: float = 1.0           # target phase advance per step (rad)
    max_steps: int = 500_000

    def validate(self):
        if not (self.dt_init > 0 and self.t_max > 0):
            raise ModelError("dt_init and t_max must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ModelError("cfl_safety must lie in (0, 1]")
        if self.blowup_kinetic_factor <= 1:
            raise ModelError("blowup_kinetic_factor must exceed 1")
        if not 0 < self.gradient_resolution_floor <= 1:
            raise ModelError("gradient_resolution_floor must lie in (0, 1]")
        if self.record_every < 1 or self.checkpoint_every < 0:
            raise ModelError("invalid cadence")
        return self


@dataclass
class TrajectoryState:
    t: float
    u: ComplexField
    s_alpha_accumulator: float = 0.0    # running integral of ||u||_r^q
    step_count: int = 0
    last_dt: float = 0.0


def s_alpha_report(state: TrajectoryState, params: ModelParams) -> float:
    """Space-time norm accumulated so far, reported as the q-th root."""
    q, _ = params.spacetime_exponents()
    return state.s_alpha_accumulator ** (1.0 / q)


@dataclass
class RunOutcome:
    status: str
    t_final: float
    records: list
    state: TrajectoryState
    t_star_estimate: float = math.nan
    t_star_fit: dict = dataclass_field(default_factory=dict)


# ---------------------------------------------------------------------------
# elementary flows
# ---------------------------------------------------------------------------

def linear_propagate(f: ComplexField, alpha: float, t: float) -> ComplexField:
    """Exact free flow: multiply spectrum by exp(-i t |k|^alpha)."""
    vhat = f.spectral_values * np.exp(-1j * t * f.grid.fractional_symbol(alpha))
    return ComplexField(f.grid, ifftn(vhat))


def strang_step(state: TrajectoryState, dt: float, params: ModelParams) -> TrajectoryState:
    """One Strang step: half linear flow, exact nonlinear phase rotation with
    V(u) frozen (|u| is invariant under it), half linear flow, dealias.

    Negative dt runs the step backwards; dt = 0 is the identity up to
    dealiasing roundoff.
    """
    grid = state.u.grid
    half = np.exp(-1j * (dt / 2.0) * grid.fractional_symbol(params.alpha))
    vhat = state.u.spectral_values * half
    v = ifftn(vhat)
    vfield = ComplexField(grid, v)
    pot = _potential_raw(v, params, grid)
    v = v * np.exp(1j * dt * pot)
    vhat = fftn(v)
    vhat *= grid.dealias_mask
    vhat *= half
    out = ComplexField(grid, ifftn(vhat))
    if not out.is_finite():
        raise NonFiniteFieldError(f"strang_step produced non-finite samples at t={state.t + dt}")
    return TrajectoryState(
        t=state.t + dt,
        u=out,
        s_alpha_accumulator=state.s_alpha_accumulator,
        step_count=state.step_count + 1,
        last_dt=dt,
    )


def _potential_raw(v: np.ndarray, params: ModelParams, grid: SpectralGrid) -> np.ndarray:
    """V(u) without the public op's nonnegativity gate (inner-loop form)."""
    if params.branch == POWER:
        return np.abs(v) ** params.sigma
    return sp._convolve_riesz(np.abs(v) ** 2, grid, params.alpha)


def s_alpha_accumulate(state: TrajectoryState, dt: float, params: ModelParams) -> float:
    """Accumulator plus dt * ||u||_{L^r}^q for this branch's (q, r)."""
    q, r = params.spacetime_exponents()
    return state.s_alpha_accumulator + dt * sp.lp_norm(state.u, r) ** q


def adapt_dt(state: TrajectoryState, params: ModelParams, cfg: EvolveConfig) -> float:
    """cfl_safety * min(dt_init, phase_budget / (||V||_inf + k_eff^alpha)),
    never more than doubling the previous step."""
    grid = state.u.grid
    pot = _potential_raw(state.u.physical_values, params, grid)
    vinf = float(np.abs(pot).max())
    keff = _occupied_wavenumber(state.u)
    rate = vinf + keff**params.alpha
    dt = cfg.cfl_safety * (cfg.dt_init if rate == 0.0 else min(cfg.dt_init, cfg.phase_budget / rate))
    if state.last_dt > 0:
        dt = min(dt, 2.0 * state.last_dt)
    return dt


def _occupied_wavenumber(u: ComplexField) -> float:
    """Largest |k| whose spectral amplitude exceeds 1e-12 of the peak."""
    vhat = np.abs(u.spectral_values)
    peak = float(vhat.max())
    if peak == 0.0:
        return 0.0
    occupied = vhat > 1e-12 * peak
    return float(u.grid.kmag[occupied].max())


def precondition_class(phi: ComplexField, params: ModelParams, gs: GroundState) -> str:
    """Classify initial data against the ground-state thresholds.

    'subthreshold' if E(phi) < E(W) and || |nabla|^(a/2) phi ||^2 < threshold;
    'blowup-class' if E(phi) < E(W) and the kinetic norm meets the threshold
    (the boundary counts as blowup-class); otherwise 'indeterminate'.
    Comparisons carry 1e-9 relative slack so the exact-W case is stable.
    """
    if gs.kind == "discrete" and gs.residual > 1e-4:
        raise ModelError(f"ground state residual {gs.residual:.2e} too large to classify against")
    e_phi = 0.5 * kinetic_norm2(phi, params.alpha) - _potential_integral(phi, params) / params.mu
    k_phi = kinetic_norm2(phi, params.alpha)
    slack_e = 1e-9 * max(abs(gs.energy_threshold), gs.kinetic_threshold)
    below_energy = e_phi <= gs.energy_threshold + slack_e
    kinetic_high = k_phi >= gs.kinetic_threshold * (1.0 - 1e-9)
    if below_energy and not kinetic_high:
        return "subthreshold"
    if below_energy and kinetic_high:
        return "blowup-class"
    return "indeterminate"


# ---------------------------------------------------------------------------
# the driver
# ---------------------------------------------------------------------------

class DiagnosticsSinks:
    """Record/checkpoint consumers; each sink owns a single producer."""

    def on_record(self, record: DiagnosticsRecord) -> None:
        pass

    def on_sync(self, t: float, u: ComplexField) -> None:
        """Called with the synchronized state whenever a record is emitted."""

    def on_checkpoint(self, t: float, u: ComplexField) -> None:
        pass


def evolve(
    phi: ComplexField,
    params: ModelParams,
    cfg: EvolveConfig,
    sinks: DiagnosticsSinks = None,
    gs: GroundState = None,
) -> RunOutcome:
    """March the splitting until t_max, blowup, or resolution loss.

    Equivalent to chained ``strang_step`` calls (adjacent half linear flows
    are merged between records for speed).  Emits DiagnosticsRecords every
    ``record_every`` steps.  The resolution monitor accumulates the spectral
    mass the 2/3 mask removes; once that exceeds (1 - gradient_resolution_floor)
    of the initial mass the grid no longer represents the solution.  Blowup
    is declared only when the kinetic energy has also grown past
    blowup_kinetic_factor times its initial value; a starved spectrum without
    the kinetic rise is plain resolution loss.
    """
    cfg.validate()
    phi.require_finite("initial data")
    if sp.symmetry_deviation(phi) > 1e-3:
        warnings.warn("initial data deviates from radial symmetry; diagnostics assume it")
    grid = phi.grid
    sym = grid.fractional_symbol(params.alpha)
    mask = grid.dealias_mask
    dv2_over_box = grid.cell_volume**2 / grid.box_volume
    q_exp, r_exp = params.spacetime_exponents()

    uhat = fftn(phi.physical_values.astype(np.complex128))
    uhat *= mask
    kin0_raw = float(np.sum(sym * np.abs(uhat) ** 2)) * dv2_over_box
    mass0_spec = float(np.sum(np.abs(uhat) ** 2))
    shed = 0.0  # spectral mass removed by dealiasing since t = 0
    records = []
    state = TrajectoryState(t=0.0, u=ComplexField(grid, ifftn(uhat)), last_dt=0.0)

    def emit(status_now: str, sync_field: ComplexField, dt_now: float):
        rec = make_record(state.t, sync_field, params,
                          s_alpha=state.s_alpha_accumulator ** (1.0 / q_exp),
                          dt=dt_now, gs=gs)
        records.append(rec)
        if sinks is not None:
            sinks.on_record(rec)
            sinks.on_sync(state.t, sync_field)

    emit(COMPLETED, state.u, 0.0)
    if sinks is not None and cfg.checkpoint_every:
        sinks.on_checkpoint(0.0, state.u)

    status = COMPLETED
    eps_t = 1e-9 * cfg.dt_init
    dt = adapt_dt(state, params, cfg)
    pending_half = 0.0
    drift_cache = (None, None)  # (drift, multiplier): adaptive dt often saturates

    while cfg.t_max - state.t > eps_t and state.step_count < cfg.max_steps:
        dt = min(dt, cfg.t_max - state.t)
        # enter/extend the staggered (mid-step) representation
        drift = dt / 2.0 + pending_half
        if drift_cache[0] != drift:
            drift_cache = (drift, np.exp(-1j * drift * sym))
        uhat *= drift_cache[1]
        u_mid = ifftn(uhat)
        pot = _potential_raw(u_mid, params, grid)
        vinf = float(np.abs(pot).max())
        u_mid *= np.exp(1j * dt * pot)
        uhat = fftn(u_mid)
        # resolution monitor on the pre-mask spectrum of the kicked state
        a2 = uhat.real**2 + uhat.imag**2
        tot = float(a2.sum())
        above = tot - float(a2[mask].sum())
        uhat[~mask] = 0.0
        if not np.isfinite(tot):
            raise NonFiniteFieldError(f"evolution overflowed at t={state.t + dt}")

        state.t += dt
        state.step_count += 1
        state.last_dt = dt
        state.s_alpha_accumulator += dt * float(
            (np.sum(np.abs(u_mid) ** r_exp) * grid.cell_volume) ** (q_exp / r_exp)
        )
        pending_half = dt / 2.0

        shed += above
        kin_raw = float(np.sum(sym * a2 * mask)) * dv2_over_box
        starved = shed > (1.0 - cfg.gradient_resolution_floor) * mass0_spec
        kinetic_blown = kin_raw >= cfg.blowup_kinetic_factor * kin0_raw
        if starved:
            status = BLOWUP if kinetic_blown else RESOLUTION_LOST

        at_end = cfg.t_max - state.t <= eps_t
        record_due = state.step_count % cfg.record_every == 0
        checkpoint_due = bool(cfg.checkpoint_every) and state.step_count % cfg.checkpoint_every == 0
        if status != COMPLETED or record_due or checkpoint_due or at_end:
            uhat = uhat * np.exp(-1j * pending_half * sym)
            pending_half = 0.0
            state.u = ComplexField(grid, ifftn(uhat))
            if record_due or status != COMPLETED or at_end:
                emit(status, state.u, dt)
            if sinks is not None and checkpoint_due:
                sinks.on_checkpoint(state.t, state.u)
        if status != COMPLETED:
            break
        # next step size from the quantities already in hand
        peak2 = float(a2.max())
        keff = float(grid.kmag[a2 > 1e-24 * peak2].max()) if peak2 > 0 else 0.0
        rate = vinf + keff**params.alpha
        dt_next = cfg.cfl_safety * (cfg.dt_init if rate == 0.0 else min(cfg.dt_init, cfg.phase_budget / rate))
        dt = min(dt_next, 2.0 * dt)

    if pending_half:
        uhat = uhat * np.exp(-1j * pending_half * sym)
        state.u = ComplexField(grid, ifftn(uhat))

    outcome = RunOutcome(status=status, t_final=state.t, records=records, state=state)
    if status == BLOWUP:
        outcome.t_star_estimate, outcome.t_star_fit = fit_blowup_time(records, params.alpha)
    return outcome


def fit_blowup_time(records: list, alpha: float, window: int = 20) -> tuple:
    """Least-squares fit of K_raw(t)^(-theta) to a linear ramp a + b t over the
    last ``window`` records; the ramp's root estimates the blowup time.  theta
    is chosen among {alpha/2, 1} by fit quality; the normalized residual is
    reported alongside."""
    recs = records[-window:]
    if len(recs) < 4:
        return math.nan, {"theta": math.nan, "residual": math.inf}
    ts = np.array([r.t for r in recs])
    kin = np.array([2.0 * r.kinetic for r in recs])
    best = None
    for theta in (alpha / 2.0, 1.0):
        y = kin ** (-theta)
        coef = np.polyfit(ts, y, 1)
        fitted = np.polyval(coef, ts)
        resid = float(np.linalg.norm(y - fitted) / max(np.linalg.norm(y), 1e-300))
        b, a = coef[0], coef[1]
        if b >= 0:
            continue
        t_star = -a / b
        if best is None or resid < best[1]:
            best = (theta, resid, t_star)
    if best is None:
        return math.nan, {"theta": math.nan, "residual": math.inf}
    theta, resid, t_star = best
    return float(max(t_star, ts[-1])), {"theta": float(theta), "residual": resid}
