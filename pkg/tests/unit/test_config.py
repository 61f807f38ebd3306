import pytest

from core.config import (
    RunConfig,
    environment_values,
    parse_complex,
    parse_complex_list,
    parse_overrides,
    resolve_config,
)
from core.exceptions import ConfigurationError


def test_defaults():
    config = resolve_config({}, environ={})
    assert config == RunConfig()
    assert config.params == [0j]
    assert config.base_point == ()
    assert config.grid_coords == ()


def test_precedence_environment_flags_overrides():
    environ = {"DYNLAB_SEED": "5", "DYNLAB_FAMILY": "mod2", "DYNLAB_TOL": "1e-6", "HOME": "/tmp"}
    config = resolve_config({"seed": 7, "method": None}, ["tol=1e-9"], environ=environ)
    assert config.family == "mod2"
    assert config.seed == 7
    assert config.tol == 1e-9
    assert config.method == "formula"


def test_dotenv_file_is_read(tmp_path, monkeypatch):
    env_file = tmp_path / ".env"
    env_file.write_text("DYNLAB_WORKERS=3\nDYNLAB_OUT=from_dotenv\n")
    monkeypatch.setenv("DYNLAB_OUT", "from_shell")
    # registered so that the value loaded from the file is removed afterwards
    monkeypatch.setenv("DYNLAB_WORKERS", "")
    monkeypatch.delenv("DYNLAB_WORKERS")
    values = environment_values(dotenv_path=str(env_file))
    assert values["workers"] == 3
    assert values["out"] == "from_shell"


def test_unknown_environment_keys_are_ignored():
    assert environment_values({"DYNLAB_COLOUR": "red"}) == {}


@pytest.mark.parametrize("items,expected", [
    (["seed=3"], {"seed": 3}),
    (["tol = 1e-4", "family=polyca:3"], {"tol": 1e-4, "family": "polyca:3"}),
    (["param=0.1,0.2j"], {"param": "0.1,0.2j"}),
])
def test_parse_overrides(items, expected):
    assert parse_overrides(items) == expected


@pytest.mark.parametrize("items", [["seed"], ["=3"], ["colour=red"], ["seed=three"], ["tol=small"]])
def test_parse_overrides_rejects(items):
    with pytest.raises(ConfigurationError):
        parse_overrides(items)


@pytest.mark.parametrize("values", [
    {"subcommand": "plot"},
    {"seed": -1},
    {"seed": 2 ** 64},
    {"workers": 0},
    {"tol": 0.0},
    {"samples": 0},
    {"burn_in": -1},
    {"suite": "huge"},
])
def test_run_config_validation(values):
    with pytest.raises(ConfigurationError):
        RunConfig(**values)


def test_render_is_sorted_key_value_lines():
    lines = RunConfig(seed=4, tol=1e-3).render().splitlines()
    keys = [line.split("=", 1)[0] for line in lines]
    assert keys == sorted(keys)
    assert "seed=4" in lines
    assert "tol=0.001" in lines
    assert "family=quadratic" in lines


def test_complex_parsing():
    assert parse_complex(" -0.75 ") == -0.75
    assert parse_complex("0.25 + 0.5j") == 0.25 + 0.5j
    assert parse_complex_list("1,2j,,-1-1j") == [1, 2j, -1 - 1j]
    with pytest.raises(ConfigurationError):
        parse_complex("i")


def test_derived_properties():
    config = RunConfig(param="0.5,0.2j", base="1,2", coords="0, 1")
    assert config.params == [0.5, 0.2j]
    assert config.base_point == (1, 2)
    assert config.grid_coords == (0, 1)
    with pytest.raises(ConfigurationError):
        RunConfig(coords="a").grid_coords
