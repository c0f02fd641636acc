import numpy as np
import pytest

from fnlslab import CheckpointError, ComplexField, ConfigError, ModelParams, SpectralGrid
from fnlslab.config import parse_config
from fnlslab.diagnostics import CSV_COLUMNS
from fnlslab.io import read_checkpoint, write_checkpoint, write_records_csv

MINIMAL = """
scenario = evolve
model.d = 2
model.alpha = 1.5
grid.n_per_dim = 64
grid.L = 12.0
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.model.branch == "power"
    assert cfg.evolve.dt_init == 1e-3
    assert cfg.evolve.blowup_kinetic_factor == 1e3
    assert cfg.evolve.gradient_resolution_floor == 0.99
    assert cfg.initial_data.kind == "gaussian"
    assert cfg.seed == 0


def test_alpha_domain_error_with_line_number():
    text = MINIMAL.replace("model.alpha = 1.5", "model.alpha = 2.5")
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    problems = err.value.problems
    assert any("alpha" in msg and ln > 0 for ln, msg in problems)


def test_hartree_domain_error_cites_constraint():
    text = """
scenario = evolve
model.d = 3
model.alpha = 1.6
model.branch = hartree
grid.n_per_dim = 64
grid.L = 8.0
"""
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert any("2*alpha" in msg for _ln, msg in err.value.problems)


def test_all_errors_reported_at_once():
    text = """
scenario = warp
model.d = 7
model.alpha = 0.5
grid.n_per_dim = 63
grid.L = -2.0
bogus_key = 1
evolve.cfl_safety = 3.0
"""
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    messages = [msg for _ln, msg in err.value.problems]
    assert len(messages) >= 4
    assert any("unknown key" in m for m in messages)


def test_type_mismatch_reported():
    text = MINIMAL.replace("grid.n_per_dim = 64", "grid.n_per_dim = sixty")
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert any("cannot parse" in msg for _ln, msg in err.value.problems)


def test_comments_and_blank_lines_ignored():
    text = "# header\n\n" + MINIMAL + "\nseed = 42   # trailing comment\n"
    cfg = parse_config(text)
    assert cfg.seed == 42


def test_scenario_verb_override_conflict():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, scenario_override="groundstate")
    cfg = parse_config(MINIMAL.replace("scenario = evolve\n", ""), scenario_override="thresholds")
    assert cfg.scenario == "thresholds"


def test_missing_checkpoint_path_flagged(tmp_path):
    text = MINIMAL + "initial_data.kind = from_checkpoint\ninitial_data.path = /nonexistent/x.fnls\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert any("does not exist" in msg for _ln, msg in err.value.problems)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def test_checkpoint_round_trip_bit_exact(tmp_path, power_2d, grid_2d_small):
    rng = np.random.default_rng(9)
    vals = rng.standard_normal(grid_2d_small.shape) + 1j * rng.standard_normal(grid_2d_small.shape)
    field = ComplexField(grid_2d_small, vals)
    path = tmp_path / "state.fnls"
    write_checkpoint(path, power_2d, field, 3.25)
    params, loaded, t = read_checkpoint(path)
    assert t == 3.25
    assert params == power_2d
    assert loaded.grid == grid_2d_small
    assert np.array_equal(loaded.values, vals)
    # writing the loaded state reproduces the file byte-for-byte
    path2 = tmp_path / "state2.fnls"
    write_checkpoint(path2, params, loaded, t)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_truncation_detected(tmp_path, power_2d, grid_2d_small):
    path = tmp_path / "trunc.fnls"
    write_checkpoint(path, power_2d, ComplexField.gaussian(grid_2d_small), 0.0)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_checkpoint_bad_magic(tmp_path, power_2d, grid_2d_small):
    path = tmp_path / "bad.fnls"
    write_checkpoint(path, power_2d, ComplexField.gaussian(grid_2d_small), 0.0)
    raw = bytearray(path.read_bytes())
    raw[:5] = b"NOPE!"
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_checkpoint_dimension_mismatch(tmp_path, power_2d, grid_2d_small):
    # a d=2 checkpoint loaded into a d=3 scenario is refused
    from fnlslab.cli import _initial_field
    from fnlslab.config import parse_config

    path = tmp_path / "d2.fnls"
    write_checkpoint(path, power_2d, ComplexField.gaussian(grid_2d_small), 0.0)
    text = f"""
scenario = evolve
model.d = 3
model.alpha = 1.5
grid.n_per_dim = 32
grid.L = 12.0
initial_data.kind = from_checkpoint
initial_data.path = {path}
"""
    cfg = parse_config(text)
    with pytest.raises(CheckpointError):
        _initial_field(cfg, None)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def test_csv_schema_column_order(tmp_path, power_2d, grid_2d_small):
    from fnlslab.diagnostics import make_record

    rec = make_record(0.5, ComplexField.gaussian(grid_2d_small), power_2d, dt=1e-3)
    path = tmp_path / "diag.csv"
    write_records_csv(path, [rec])
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[0].startswith("t,mass,kinetic,potential,energy,virial_A,virial_A_rhs,")
    assert lines[0].endswith("s_alpha,conc_r_half,conc_r_full,sym_dev,dt")
    assert len(lines) == 2
