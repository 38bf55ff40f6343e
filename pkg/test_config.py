import math

import pytest

from ruledmin.config import (
    DEFAULT_TOLERANCES,
    THREADS_ENV,
    ConfigParser,
    RunConfig,
    load_config,
    parse_flag,
    parse_grid,
    parse_theta_list,
)
from ruledmin.errors import ConfigError
from ruledmin.validator import RunConfigValidator


SAMPLE = """
# torus run
surface = equilateral-torus
seed = 11
samples = 25
theta = 0, 0.5, 1.0
grid = 32x16
equivariance = yes
tol.minimal = 1e-6
"""


def test_parse_full_config():
    config = ConfigParser(SAMPLE).parse()
    assert config.surface == 'equilateral-torus'
    assert config.seed == 11
    assert config.samples == 25
    assert config.thetas == [0.0, 0.5, 1.0]
    assert config.grid == (32, 16)
    assert config.equivariance is True
    assert config.tolerances.minimal == 1e-6
    assert config.tolerances.jet == DEFAULT_TOLERANCES.jet


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        ConfigParser("seed = 1\ncolour = red\n").parse()


def test_bad_syntax():
    with pytest.raises(ConfigError):
        ConfigParser("surface equilateral-torus").parse()


def test_bad_value():
    with pytest.raises(ConfigError):
        ConfigParser("samples = many").parse()


def test_unknown_tolerance():
    with pytest.raises(ConfigError):
        ConfigParser("tol.nonsense = 1").parse()


def test_helpers():
    assert parse_theta_list("0.1,0.2") == [0.1, 0.2]
    assert parse_grid("64x64") == (64, 64)
    assert parse_flag("off") is False
    with pytest.raises(ValueError):
        parse_grid("64")
    with pytest.raises(ValueError):
        parse_flag("maybe")


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("samples = 3\n")
    assert load_config(str(path)).samples == 3


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    assert RunConfig().threads == 4
    monkeypatch.setenv(THREADS_ENV, "lots")
    assert RunConfig().threads == 1


def test_validator_accepts_defaults():
    result = RunConfigValidator(RunConfig()).validate()
    assert result['errors'] == []


def test_validator_errors_and_warnings():
    config = RunConfig(surface='nope', samples=0, thetas=[7.0])
    config.tolerances = config.tolerances.override(rank=0.0)
    result = RunConfigValidator(config).validate()
    assert any('nope' in e for e in result['errors'])
    assert any('samples' in e for e in result['errors'])
    assert any("'rank'" in e for e in result['errors'])
    assert any('theta' in w for w in result['warnings'])


def test_validator_warns_on_equivariance_without_pseudoholomorphic_surface():
    config = RunConfig(surface='equilateral-torus', equivariance=True)
    result = RunConfigValidator(config).validate()
    assert any('pseudoholomorphic' in w for w in result['warnings'])


def test_theta_range_is_not_an_error():
    config = RunConfig(thetas=[0.0, math.pi, 1.5 * math.pi])
    assert RunConfigValidator(config).validate()['errors'] == []
