import math

import numpy as np
import pytest

from fnlslab import ComplexField, ModelError, ModelParams, SpectralGrid
from fnlslab import dynamics as dyn
from fnlslab import diagnostics as dg
from fnlslab import spectral as sp


def _state(field):
    return dyn.TrajectoryState(0.0, field)


# ---------------------------------------------------------------------------
# strang_step
# ---------------------------------------------------------------------------

def test_linear_limit_exact_phase(power_2d, grid_2d_small):
    # vanishing-amplitude mode: nonlinearity off, the linear flow is exact
    amp = 1e-3  # V = amp^6 ~ 1e-18
    f = ComplexField(grid_2d_small, amp * ComplexField.plane_wave(grid_2d_small, (3, 0)).values)
    k = 3 * math.pi / grid_2d_small.L
    dt = 0.173
    out = dyn.strang_step(_state(f), dt, power_2d)
    expected = f.values * np.exp(-1j * dt * k**1.5)
    assert np.abs(out.u.values - expected).max() < 1e-12 * amp


def test_zero_dt_identity(power_2d, grid_2d_small):
    f = sp.dealias(ComplexField.gaussian(grid_2d_small))  # step assumes dealiased state
    out = dyn.strang_step(_state(f), 0.0, power_2d)
    assert np.abs(out.u.values - f.values).max() < 1e-14


def test_selfconvergence_second_order(power_2d, grid_2d):
    phi = ComplexField.gaussian(grid_2d, sigma=1.0, amplitude=1.0)
    t_end = 0.2

    def run(dt):
        st = _state(phi)
        for _ in range(int(round(t_end / dt))):
            st = dyn.strang_step(st, dt, power_2d)
        return st.u.values

    ref = run(5e-4)
    errs = [np.linalg.norm(run(dt) - ref) for dt in (4e-3, 2e-3)]
    order = math.log2(errs[0] / errs[1])
    assert 1.8 <= order <= 2.2


def test_mass_conserved_per_step(power_2d, grid_2d):
    phi = ComplexField.gaussian(grid_2d, sigma=1.0, amplitude=0.9)
    st = _state(phi)
    st = dyn.strang_step(st, 1e-3, power_2d)  # settle dealiasing
    m_prev = sp.l2_norm(st.u) ** 2
    for _ in range(5):
        st = dyn.strang_step(st, 1e-3, power_2d)
        m = sp.l2_norm(st.u) ** 2
        assert abs(m - m_prev) < 1e-12 * m_prev
        m_prev = m


def test_time_reversibility(power_2d, grid_2d):
    phi = ComplexField.gaussian(grid_2d, sigma=1.0, amplitude=0.8)
    fwd = dyn.strang_step(_state(phi), 2e-3, power_2d)
    back = dyn.strang_step(fwd, -2e-3, power_2d)
    assert np.linalg.norm(back.u.values - phi.values) < 1e-10 * np.linalg.norm(phi.values)


def test_nonfinite_state_raises(power_2d, grid_2d_small):
    vals = np.full(grid_2d_small.shape, 1e200, dtype=np.complex128)
    from fnlslab import NonFiniteFieldError

    with pytest.raises(NonFiniteFieldError):
        st = _state(ComplexField(grid_2d_small, vals))
        for _ in range(50):
            st = dyn.strang_step(st, 1.0, power_2d)


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

def test_evolve_matches_reference_stepping(power_2d, grid_2d_small):
    phi = ComplexField.gaussian(grid_2d_small, sigma=1.0, amplitude=0.8)
    cfg = dyn.EvolveConfig(dt_init=1e-3, t_max=0.05, cfl_safety=1.0, record_every=7)
    out = dyn.evolve(phi, power_2d, cfg)
    # replicate: evolve dealiases once, then fixed-dt Strang steps
    u = ComplexField(grid_2d_small, np.fft.ifftn(np.fft.fftn(phi.values) * grid_2d_small.dealias_mask))
    st = _state(u)
    for _ in range(out.state.step_count):
        st = dyn.strang_step(st, 1e-3, power_2d)
    rel = np.linalg.norm(st.u.values - out.state.u.values) / np.linalg.norm(st.u.values)
    assert rel < 1e-12
    assert out.status == dyn.COMPLETED


def test_small_data_global_behavior(power_2d, grid_2d):
    phi = ComplexField.gaussian(grid_2d, sigma=1.0, amplitude=0.01)
    cfg = dyn.EvolveConfig(dt_init=2e-3, t_max=1.0, cfl_safety=1.0, record_every=50)
    out = dyn.evolve(phi, power_2d, cfg)
    assert out.status == dyn.COMPLETED
    kin = [r.kinetic for r in out.records]
    assert max(kin) < 2.0 * kin[0] + 1e-12
    assert np.isfinite(out.records[-1].s_alpha)
    assert out.records[-1].s_alpha > 0


def test_stationarity_of_reference_profile():
    # the sampled soliton is static up to the box periodization defect; the
    # radial |u| profile moves less than 1e-3 over a unit of time
    from fnlslab import groundstate as gst

    p = ModelParams(2, 1.5, "power")
    grid = SpectralGrid(2, 512, 24.0)
    ref = gst.reference_ground_state(p, grid)
    cfg = dyn.EvolveConfig(dt_init=2e-3, t_max=1.0, cfl_safety=1.0, record_every=250)
    out = dyn.evolve(ref.field, p, cfg)
    assert out.status == dyn.COMPLETED
    before = sp.radial_profile(ref.field, 64).mean_abs
    after = sp.radial_profile(out.state.u, 64).mean_abs
    assert np.linalg.norm(after - before) / np.linalg.norm(before) < 1e-3


def test_blowup_run_detects(blowup_outcome, gs_reference_2d):
    out = blowup_outcome
    assert out.status == dyn.BLOWUP
    k0 = 2 * out.records[0].kinetic
    assert 2 * out.records[-1].kinetic >= 10.0 * k0
    assert math.isfinite(out.t_star_estimate)
    assert out.t_star_estimate >= out.t_final
    assert out.t_star_fit["theta"] in (0.75, 1.0)


def test_blowup_dt_shrinks_through_final_surge(power_2d, grid_2d, gs_reference_2d):
    phi = ComplexField(grid_2d, 1.2 * gs_reference_2d.field.values)
    cfg = dyn.EvolveConfig(dt_init=2e-3, t_max=5.0, cfl_safety=0.9,
                           blowup_kinetic_factor=10.0, gradient_resolution_floor=0.9997,
                           record_every=1, phase_budget=0.5)
    out = dyn.evolve(phi, power_2d, cfg, gs=gs_reference_2d)
    assert out.status == dyn.BLOWUP
    dts = [r.dt for r in out.records[-21:]]
    assert all(b <= a + 1e-15 for a, b in zip(dts[1:], dts[2:]))


def test_subthreshold_run_completes(subthreshold_outcome):
    assert subthreshold_outcome.status == dyn.COMPLETED


def test_dilation_moment_concavity_trend_on_blowup(blowup_run):
    # M(u) stays nonnegative and its growth rate eventually decreases as the
    # run focuses (the concave turn of the dilation moment)
    _outcome, capture = blowup_run
    m = np.array(capture.dilation_moments)
    assert np.all(m >= 0.0)
    dm = np.diff(m) / np.diff(np.array(capture.times))
    k = len(dm) // 2
    assert dm[-1] < dm[:k].max()


def test_evolve_rejects_bad_config(power_2d, grid_2d_small):
    phi = ComplexField.gaussian(grid_2d_small)
    with pytest.raises(ModelError):
        dyn.evolve(phi, power_2d, dyn.EvolveConfig(dt_init=-1.0, t_max=1.0))
    with pytest.raises(ModelError):
        dyn.evolve(phi, power_2d, dyn.EvolveConfig(dt_init=1e-3, t_max=1.0, cfl_safety=0.0))


# ---------------------------------------------------------------------------
# adapt_dt / s_alpha
# ---------------------------------------------------------------------------

def test_adapt_dt_zero_field(power_2d, grid_2d_small):
    cfg = dyn.EvolveConfig(dt_init=3e-3, t_max=1.0, cfl_safety=0.5)
    dt = dyn.adapt_dt(_state(ComplexField.zero(grid_2d_small)), power_2d, cfg)
    assert dt == pytest.approx(0.5 * 3e-3, rel=1e-14)


def test_adapt_dt_halves_when_potential_doubles(power_2d, grid_2d_small):
    # constant-modulus fields: k_eff = 0, saturated regime dt ~ c/V
    cfg = dyn.EvolveConfig(dt_init=10.0, t_max=1.0, cfl_safety=1.0, phase_budget=1.0)
    a1 = 1.5
    a2 = a1 * 2.0 ** (1.0 / 6.0)  # doubles V = |u|^6
    dts = []
    for amp in (a1, a2):
        f = ComplexField(grid_2d_small, np.full(grid_2d_small.shape, amp, dtype=np.complex128))
        dts.append(dyn.adapt_dt(_state(f), power_2d, cfg))
    assert dts[1] == pytest.approx(dts[0] / 2.0, rel=1e-12)


def test_adapt_dt_growth_capped(power_2d, grid_2d_small):
    cfg = dyn.EvolveConfig(dt_init=1.0, t_max=1.0, cfl_safety=1.0)
    st = _state(ComplexField.zero(grid_2d_small))
    st.last_dt = 1e-4
    assert dyn.adapt_dt(st, power_2d, cfg) <= 2e-4 + 1e-18


def test_s_alpha_accumulation(power_2d, grid_2d_small):
    zero = _state(ComplexField.zero(grid_2d_small))
    assert dyn.s_alpha_accumulate(zero, 0.1, power_2d) == 0.0
    # stationary modulus: accumulator grows linearly, reported norm like t^{1/q}
    f = ComplexField.gaussian(grid_2d_small)
    st = _state(f)
    q, r = power_2d.spacetime_exponents()
    a1 = dyn.s_alpha_accumulate(st, 0.1, power_2d)
    st.s_alpha_accumulator = a1
    a2 = dyn.s_alpha_accumulate(st, 0.1, power_2d)
    assert a2 == pytest.approx(2 * a1, rel=1e-12)
    assert (a2 ** (1 / q)) / (a1 ** (1 / q)) == pytest.approx(2 ** (1 / q), rel=1e-12)


def test_s_alpha_inadmissible_exponent():
    # Hartree r = 2d/(d - 4a/3) < 1 is impossible within the model domain,
    # but the guard is exercised via spacetime_exponents on a crafted case
    p = ModelParams(5, 1.8, "hartree")
    q, r = p.spacetime_exponents()
    assert q == 6.0 and r > 1.0


# ---------------------------------------------------------------------------
# precondition_class
# ---------------------------------------------------------------------------

def test_classification_dichotomy(power_2d, grid_2d, gs_reference_2d):
    w = gs_reference_2d.field.values
    half = ComplexField(grid_2d, 0.5 * w)
    assert dyn.precondition_class(half, power_2d, gs_reference_2d) == "subthreshold"
    exact = ComplexField(grid_2d, w.copy())
    assert dyn.precondition_class(exact, power_2d, gs_reference_2d) == "blowup-class"
    big = ComplexField(grid_2d, 1.2 * w)
    assert dyn.precondition_class(big, power_2d, gs_reference_2d) == "blowup-class"


def test_classification_signs(power_2d, grid_2d, gs_reference_2d):
    # 1.2 x W: kinetic up by 1.44, energy drops below the threshold value
    from fnlslab.groundstate import kinetic_norm2, _potential_integral

    big = ComplexField(grid_2d, 1.2 * gs_reference_2d.field.values)
    k = kinetic_norm2(big, power_2d.alpha)
    e = 0.5 * k - _potential_integral(big, power_2d) / power_2d.mu
    assert k == pytest.approx(1.44 * gs_reference_2d.kinetic_threshold, rel=1e-10)
    assert e < gs_reference_2d.energy_threshold


def test_classification_indeterminate(power_2d, grid_2d, gs_reference_2d):
    # high-frequency small-amplitude wave: kinetic huge, potential negligible,
    # so the energy sits far above the ground-state energy
    wave = ComplexField(grid_2d, 0.2 * ComplexField.plane_wave(grid_2d, (40, 0)).values)
    label = dyn.precondition_class(wave, power_2d, gs_reference_2d)
    assert label == "indeterminate"
