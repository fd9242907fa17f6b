from pathlib import Path

import pytest

from stabilized_stokes.helper.confighelper import (
    ConfigFileError,
    load_run_config,
    parse_key_values,
    parse_level_range,
)
from stabilized_stokes.schemas import ExperimentName, Method, MomentumForm


@pytest.fixture
def write_config(tmp_path):
    def write(text: str) -> Path:
        path = tmp_path / "case.cfg"
        path.write_text(text, encoding="utf-8")
        return path
    return write


@pytest.mark.parametrize("text,expected", [("2..6", (2, 6)), ("3", (3, 3)), (" 0..1 ", (0, 1))])
def test_parse_level_range(text, expected):
    assert parse_level_range(text) == expected


@pytest.mark.parametrize("text", ["a..b", "1..2..3", "", "1-3"])
def test_parse_level_range_rejects_malformed(text):
    with pytest.raises(ValueError, match="Invalid level range"):
        parse_level_range(text)


def test_parse_key_values_skips_comments(write_config):
    path = write_config("# header\n\nsigma = 60  # strong reaction\nmethod=BVS\n")
    assert parse_key_values(path) == {"sigma": ("60", 3), "method": ("BVS", 4)}


@pytest.mark.parametrize("text,line,message", [
    ("sigma = 1\nmethod BVS\n", 2, "Expected 'key = value'"),
    ("= 1\n", 1, "Empty key"),
    ("gamma = 1\n\ngamma = 2\n", 3, "Duplicate key 'gamma'"),
])
def test_parse_key_values_errors(write_config, text, line, message):
    with pytest.raises(ConfigFileError, match=message) as exc_info:
        parse_key_values(write_config(text))
    assert exc_info.value.line == line
    assert str(exc_info.value).startswith(f"{exc_info.value.path}:{line}: ")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigFileError, match="Cannot read configuration file"):
        parse_key_values(tmp_path / "missing.cfg")


def test_load_run_config(write_config):
    path = write_config(
        "experiment = exp2\n"
        "sigma = 60\n"
        "method = PSPG\n"
        "form = GL\n"
        "gamma = 2.5\n"
        "levels = 2..5\n"
    )
    config = load_run_config(path)
    assert config.experiment == ExperimentName.EXP2
    assert config.method == Method.PSPG
    assert config.form == MomentumForm.GL
    assert config.gamma == 2.5
    assert (config.level_min, config.level_max) == (2, 5)
    assert config.case_parameters == {"sigma": 60.0}
    assert config.custom_file == path
    assert config.stabilization.reaction_in_residual


def test_overrides_take_precedence(write_config, tmp_path):
    config = load_run_config(write_config("gamma = 2\nlevels = 1..2\n"), gamma=7.0, output_dir=tmp_path / "x")
    assert config.gamma == 7.0
    assert config.output_dir == tmp_path / "x"


@pytest.mark.parametrize("text,line,key", [
    ("method = BVS\ngamma = -1\n", 2, "gamma"),
    ("sigma = lots\n", 1, "sigma"),
    ("experiment = exp9\n", 1, "experiment"),
])
def test_invalid_values_report_line(write_config, text, line, key):
    with pytest.raises(ConfigFileError, match=f"Invalid value for '{key}'") as exc_info:
        load_run_config(write_config(text))
    assert exc_info.value.line == line


def test_inverted_level_range_rejected(write_config):
    with pytest.raises(ConfigFileError, match="exceeds level_max"):
        load_run_config(write_config("levels = 5..2\n"))


@pytest.mark.parametrize("key", ["custom_file", "case_parameters"])
def test_reserved_keys_rejected(write_config, key):
    with pytest.raises(ConfigFileError, match="cannot be set from a file"):
        load_run_config(write_config(f"{key} = x\n"))


def test_bad_levels_line(write_config):
    with pytest.raises(ConfigFileError, match="Invalid level range") as exc_info:
        load_run_config(write_config("gamma = 1\nlevels = two\n"))
    assert exc_info.value.line == 2


def test_exp1_accepts_reaction(write_config):
    config = load_run_config(write_config("experiment = exp1\nsigma = 1\nmethod = BVS\nlevels = 1\n"))
    assert config.case_parameters == {"sigma": 1.0}


@pytest.mark.parametrize("text,line,message", [
    ("experiment = exp1\nlevels = 1\nviscosity = 3\n", 3, "Unknown parameter 'viscosity' for exp1"),
    ("experiment = couette\nkappa = 0.4\n", 2, "Unknown parameter 'kappa' for couette"),
    ("levels = 1\nkappa = -0.4\n", 2, "exp1 needs a, b, kappa > 0"),
    ("experiment = exp2\n\nsigma = -1\n", 3, "must be non-negative"),
    ("experiment = uniform\nprofile = 4\n", 2, "Unknown viscosity profile"),
])
def test_case_parameter_errors_report_line(write_config, text, line, message):
    with pytest.raises(ConfigFileError, match=message) as exc_info:
        load_run_config(write_config(text))
    assert exc_info.value.line == line
