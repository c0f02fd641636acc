"""Batch orchestration: `fnls <verb> --config <path> [--out <dir>]`.

Verbs map one-to-one onto scenarios: groundstate, evolve, verify
(verify-inequalities), concentrate (concentration-study), thresholds.
Exit codes: 0 success (a detected blowup is a recorded outcome, not a
failure), 2 configuration error, 3 resolution lost, 4 internal numerical
error.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .config import ScenarioConfig, parse_config, SCENARIOS
from .errors import CheckpointError, ConfigError, FnlsError
from .field import ComplexField
from .grid import SpectralGrid
from .model import HARTREE, POWER, ModelParams
from .dynamics import (
    BLOWUP,
    COMPLETED,
    RESOLUTION_LOST,
    DiagnosticsSinks,
    EvolveConfig,
    evolve,
    precondition_class,
)
from .diagnostics import commutator_scaling_check, radial_sobolev_ratio
from .groundstate import (
    groundstate_manifest,
    petviashvili_solve,
    reference_ground_state,
    thresholds,
)
from .inequalities import AdmissiblePair, admissible_r, is_admissible, random_radial_bumps, ratio_family_report
from .io import (
    CsvRecordSink,
    read_checkpoint,
    write_checkpoint,
    write_manifest,
    write_plot_data,
    write_records_csv,
)
from . import spectral as sp

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOLUTION = 3
EXIT_NUMERICAL = 4

_VERB_TO_SCENARIO = {
    "groundstate": "groundstate",
    "evolve": "evolve",
    "verify": "verify-inequalities",
    "concentrate": "concentration-study",
    "thresholds": "thresholds",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fnls", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fnls {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in _VERB_TO_SCENARIO:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = parse_config(text, scenario_override=_VERB_TO_SCENARIO[args.verb])
    except ConfigError as exc:
        for lineno, message in exc.problems:
            where = f"line {lineno}: " if lineno else ""
            print(f"config error: {where}{message}", file=sys.stderr)
        return EXIT_CONFIG

    if args.out:
        cfg.output_dir = args.out
    code = run_scenario(cfg)
    return code


def run_scenario(cfg: ScenarioConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    try:
        if cfg.scenario == "groundstate":
            return _run_groundstate(cfg)
        if cfg.scenario == "thresholds":
            return _run_thresholds(cfg)
        if cfg.scenario in ("evolve", "concentration-study"):
            return _run_evolution(cfg)
        if cfg.scenario == "verify-inequalities":
            return _run_verify(cfg)
        raise ConfigError([(0, f"unknown scenario {cfg.scenario!r}")])
    except ConfigError as exc:
        for lineno, message in exc.problems:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FnlsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _base_manifest(cfg: ScenarioConfig) -> dict:
    entries = {
        "code_version": __version__,
        "scenario": cfg.scenario,
        "model.d": cfg.model.d,
        "model.alpha": cfg.model.alpha,
        "model.branch": cfg.model.branch,
        "grid.n_per_dim": cfg.grid.n_per_dim,
        "grid.L": cfg.grid.box_half_length,
        "seed": cfg.seed,
    }
    if cfg.model.branch == HARTREE:
        entries["hartree_effective_constant"] = sp.hartree_effective_constant(
            cfg.model.d, cfg.model.alpha, cfg.grid.box_half_length
        )
    return entries


def _groundstate_for_runs(cfg: ScenarioConfig):
    """Ground state backing scaled_groundstate data and threshold columns.

    Power branch: the resolved analytic profile (room to focus, thresholds
    measured on it).  Hartree branch: the discrete Petviashvili extremizer,
    the only representative available without a closed form.
    """
    if cfg.model.branch == POWER:
        return reference_ground_state(cfg.model, cfg.grid)
    return petviashvili_solve(cfg.model, cfg.grid)


def _initial_field(cfg: ScenarioConfig, gs):
    data = cfg.initial_data
    if data.kind == "gaussian":
        return ComplexField.gaussian(cfg.grid, sigma=data.sigma, amplitude=data.amplitude)
    if data.kind == "chirped_gaussian":
        return ComplexField.gaussian(cfg.grid, sigma=data.sigma, amplitude=data.amplitude,
                                     chirp=data.chirp_b)
    if data.kind == "scaled_groundstate":
        return ComplexField(cfg.grid, data.factor * gs.field.values)
    params, field, _t = read_checkpoint(data.path)
    if params.d != cfg.model.d:
        raise CheckpointError(
            f"checkpoint dimension d={params.d} does not match scenario d={cfg.model.d}"
        )
    if field.grid != cfg.grid:
        raise CheckpointError("checkpoint grid does not match the scenario grid")
    return field


def _run_groundstate(cfg: ScenarioConfig) -> int:
    gs = petviashvili_solve(cfg.model, cfg.grid)
    kin, en, c_dalpha = thresholds(gs)
    manifest = _base_manifest(cfg)
    manifest.update(groundstate_manifest(gs))
    write_manifest(os.path.join(cfg.output_dir, "manifest.txt"), manifest)
    write_checkpoint(os.path.join(cfg.output_dir, "groundstate.fnls"), cfg.model, gs.field, 0.0)
    prof = sp.radial_profile(gs.field, cfg.n_bins, alpha=cfg.model.alpha)
    write_plot_data(
        os.path.join(cfg.output_dir, "groundstate_profile.dat"),
        {"r": prof.r, "mean_abs": prof.mean_abs, "mean_kinetic_density": prof.mean_kinetic},
        comment="radial profile of the computed ground state",
    )
    with open(os.path.join(cfg.output_dir, "thresholds_report.txt"), "w") as fh:
        fh.write(f"kinetic_threshold = {kin!r}\n")
        fh.write(f"energy_threshold = {en!r}\n")
        fh.write(f"C_dalpha = {c_dalpha!r}\n")
        fh.write(f"identity |K - C^(-2/(mu-2))|/K = "
                 f"{abs(kin - c_dalpha ** (-2 / (cfg.model.mu - 2))) / kin!r}\n")
    print(f"groundstate: residual {gs.residual:.3e}, kinetic threshold {kin:.8f}")
    return EXIT_OK


def _run_thresholds(cfg: ScenarioConfig) -> int:
    """Threshold identity on the configured grid and its 2x refinement."""
    rows = []
    for factor in (1, 2):
        grid = SpectralGrid(cfg.grid.d, cfg.grid.n_per_dim * factor, cfg.grid.box_half_length)
        gs = petviashvili_solve(cfg.model, grid)
        kin, en, c_dalpha = thresholds(gs)
        defect = abs(kin - c_dalpha ** (-2.0 / (cfg.model.mu - 2.0))) / kin
        rows.append((grid.n_per_dim, kin, en, c_dalpha, defect, gs.residual))
    manifest = _base_manifest(cfg)
    for n, kin, en, c_dalpha, defect, residual in rows:
        manifest[f"kinetic_threshold_n{n}"] = kin
        manifest[f"energy_threshold_n{n}"] = en
        manifest[f"C_dalpha_n{n}"] = c_dalpha
        manifest[f"identity_defect_n{n}"] = defect
        manifest[f"residual_n{n}"] = residual
    write_manifest(os.path.join(cfg.output_dir, "manifest.txt"), manifest)
    with open(os.path.join(cfg.output_dir, "report.txt"), "w") as fh:
        fh.write("n kinetic_threshold energy_threshold C_dalpha identity_defect residual\n")
        for row in rows:
            fh.write(" ".join("%.12g" % v for v in row) + "\n")
    print("thresholds:", rows)
    return EXIT_OK


class _ConcentrationSink(DiagnosticsSinks):
    """Collects per-record radial cumulative kinetic profiles and the
    dilation moment."""

    def __init__(self, alpha):
        self.alpha = alpha
        self.times = []
        self.profiles = []  # (edges, cumulative)
        self.dilation_moments = []

    def on_sync(self, t, u):
        from .diagnostics import dilation_moment

        self.times.append(t)
        self.profiles.append(sp.radial_cumulative_kinetic(u, self.alpha))
        self.dilation_moments.append(dilation_moment(u, self.alpha))


class _TeeSinks(DiagnosticsSinks):
    def __init__(self, *sinks):
        self.sinks = sinks

    def on_record(self, record):
        for s in self.sinks:
            s.on_record(record)

    def on_sync(self, t, u):
        for s in self.sinks:
            s.on_sync(t, u)

    def on_checkpoint(self, t, u):
        for s in self.sinks:
            s.on_checkpoint(t, u)


class _CheckpointSink(DiagnosticsSinks):
    def __init__(self, directory, params):
        self.directory = directory
        self.params = params
        self.count = 0
        os.makedirs(directory, exist_ok=True)

    def on_checkpoint(self, t, u):
        path = os.path.join(self.directory, f"checkpoint_{self.count:06d}.fnls")
        write_checkpoint(path, self.params, u, t)
        self.count += 1


def _run_evolution(cfg: ScenarioConfig) -> int:
    gs = None
    if cfg.initial_data.kind == "scaled_groundstate" or cfg.scenario == "concentration-study":
        gs = _groundstate_for_runs(cfg)
    phi = _initial_field(cfg, gs)

    csv_sink = CsvRecordSink(os.path.join(cfg.output_dir, "diagnostics.csv"))
    sinks = [csv_sink]
    if cfg.evolve.checkpoint_every:
        sinks.append(_CheckpointSink(os.path.join(cfg.output_dir, "checkpoints"), cfg.model))
    conc_sink = None
    if cfg.scenario == "concentration-study":
        conc_sink = _ConcentrationSink(cfg.model.alpha)
        sinks.append(conc_sink)

    manifest = _base_manifest(cfg)
    manifest["initial_data.kind"] = cfg.initial_data.kind
    manifest["initial_data.factor"] = cfg.initial_data.factor
    manifest["initial_data.amplitude"] = cfg.initial_data.amplitude
    # all box moments are finite on a periodic domain; recorded, not assumed
    manifest["moment_hypothesis"] = "vacuous-on-torus"
    if gs is not None:
        manifest["groundstate.kind"] = gs.kind
        manifest["groundstate.kinetic_threshold"] = gs.kinetic_threshold
        manifest["groundstate.energy_threshold"] = gs.energy_threshold
        manifest["groundstate.residual"] = gs.residual
        manifest["initial_class"] = precondition_class(phi, cfg.model, gs)

    try:
        outcome = evolve(phi, cfg.model, cfg.evolve, sinks=_TeeSinks(*sinks), gs=gs)
    finally:
        csv_sink.close()

    manifest["outcome"] = outcome.status
    manifest["t_final"] = outcome.t_final
    manifest["steps"] = outcome.state.step_count
    if outcome.status == BLOWUP:
        manifest["t_star_estimate"] = outcome.t_star_estimate
        manifest["t_star_fit_theta"] = outcome.t_star_fit.get("theta", math.nan)
        manifest["t_star_fit_residual"] = outcome.t_star_fit.get("residual", math.nan)
    write_checkpoint(os.path.join(cfg.output_dir, "final.fnls"), cfg.model,
                     outcome.state.u, outcome.t_final)

    records = outcome.records
    write_plot_data(
        os.path.join(cfg.output_dir, "conserved.dat"),
        {
            "t": [r.t for r in records],
            "mass": [r.mass for r in records],
            "energy": [r.energy for r in records],
            "kinetic": [r.kinetic for r in records],
        },
        comment="conserved quantities per record",
    )

    if cfg.scenario == "concentration-study":
        _write_concentration_report(cfg, gs, outcome, conc_sink)

    write_manifest(os.path.join(cfg.output_dir, "manifest.txt"), manifest)
    print(f"{cfg.scenario}: {outcome.status} at t = {outcome.t_final:.6f} "
          f"({outcome.state.step_count} steps)")
    if outcome.status == RESOLUTION_LOST:
        return EXIT_RESOLUTION
    return EXIT_OK


def _write_concentration_report(cfg, gs, outcome, conc_sink) -> None:
    records = outcome.records
    t_star = outcome.t_star_estimate
    rows = {"t": [], "conc_r_half": [], "conc_r_full": [], "dilation_moment": [],
            "ball_R": [], "ball_kinetic": []}
    for rec, (t, (edges, cum)), moment in zip(records,
                                              zip(conc_sink.times, conc_sink.profiles),
                                              conc_sink.dilation_moments):
        rows["t"].append(rec.t)
        rows["conc_r_half"].append(rec.conc_r_half)
        rows["conc_r_full"].append(rec.conc_r_full)
        rows["dilation_moment"].append(moment)
        if outcome.status == BLOWUP and math.isfinite(t_star) and t_star > rec.t:
            radius = 10.0 * (t_star - rec.t) ** (1.0 / cfg.model.alpha)
            ball = float(np.interp(radius, edges[1:], cum))
        else:
            radius, ball = math.nan, math.nan
        rows["ball_R"].append(radius)
        rows["ball_kinetic"].append(ball)
    write_plot_data(os.path.join(cfg.output_dir, "concentration.dat"), rows,
                    comment="concentration radii and paper-scale ball kinetic mass")
    finite = [b for b in rows["ball_kinetic"] if not math.isnan(b)]
    with open(os.path.join(cfg.output_dir, "concentration_report.txt"), "w") as fh:
        fh.write(f"outcome = {outcome.status}\n")
        fh.write(f"t_star_estimate = {t_star!r}\n")
        fh.write(f"t_star_fit = {outcome.t_star_fit!r}\n")
        fh.write(f"kinetic_threshold = {gs.kinetic_threshold!r}\n")
        if finite:
            fh.write(f"max_ball_kinetic = {max(finite)!r}\n")
            fh.write(f"reaches_0.9_threshold = {max(finite) >= 0.9 * gs.kinetic_threshold}\n")
        tail = [r.conc_r_half for r in records[-20:]]
        fh.write(f"conc_r_half_final20_max_increase = "
                 f"{max((b - a) for a, b in zip(tail, tail[1:])) if len(tail) > 1 else 0.0!r}\n")


def _run_verify(cfg: ScenarioConfig) -> int:
    model = cfg.model
    grid = cfg.grid
    report_path = os.path.join(cfg.output_dir, "verification_report.txt")
    lines = [f"grid: d = {grid.d}, n_per_dim = {grid.n_per_dim}, L = {grid.box_half_length}",
             f"model: {model.describe()}", ""]

    # admissible pairs: the endpoint, a solved pair, and the exclusion
    q_samples = [math.inf, 6.0, 3.0]
    lines.append("== admissible pairs (q, r) with alpha/q + d/r = d/2 ==")
    pairs = []
    for q in q_samples:
        try:
            r = admissible_r(q, model.alpha, model.d)
        except FnlsError:
            continue
        ok = is_admissible(q, r, model.alpha, model.d)
        pairs.append(AdmissiblePair(q, r))
        lines.append(f"q = {q}, r = {r:.6f}: admissible = {ok}")
    from .inequalities import forbidden_endpoint
    fq, fr = forbidden_endpoint(model.d)
    lines.append(f"forbidden endpoint ({fq}, {fr:.6f}): admissible = "
                 f"{is_admissible(fq, fr, model.alpha, model.d)}")

    # sampled propagator ratios over a seeded bump family
    bumps = random_radial_bumps(grid, 50, cfg.seed)
    lines.append("")
    lines.append("== linear propagator space-time ratios (trapezoid in time) ==")
    for pair in pairs[:3]:
        for window in (2.0, 4.0):
            rep = ratio_family_report(bumps, pair, model.alpha, window)
            lines.append(
                f"(q={rep['q']}, r={rep['r']:.4f}) window={window}: "
                f"max={rep['max_ratio']:.6f} mean={rep['mean_ratio']:.6f} "
                f"family={rep['family_size']}"
            )

    # radial weighted-sup / kinetic-norm ratios
    lines.append("")
    lines.append("== weighted radial sup / kinetic norm ==")
    ratios = [radial_sobolev_ratio(f, model.alpha) for f in bumps]
    lines.append(f"family max = {max(ratios):.6f}, mean = {float(np.mean(ratios)):.6f}")

    # commutator dilation decay
    lines.append("")
    lines.append("== commutator dilation slopes ==")
    for s in (1.5, 0.5):
        slope, _vals = commutator_scaling_check(s, [1, 2, 4, 8])
        lines.append(f"s = {s}: fitted slope = {slope:.4f}")

    text = "\n".join(lines) + "\n"
    with open(report_path, "w") as fh:
        fh.write(text)
    manifest = _base_manifest(cfg)
    manifest["report"] = os.path.basename(report_path)
    write_manifest(os.path.join(cfg.output_dir, "manifest.txt"), manifest)
    print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
