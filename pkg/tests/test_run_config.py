"""
Tests for run configuration

Validates:
- Environment defaults with warn-and-fallback on malformed values
- Flag parsing (eps lists, NX,NT)
- Problem document validation reports the offending path
- Precedence: CLI flags > problem document > environment > defaults
"""
import json
import logging
import os
from unittest.mock import patch

import pytest

from src.errors import ConfigInvalid
from src.run_config import (
    DEFAULT_SWEEP_EPS,
    build_problem,
    get_env_defaults,
    load_problem_document,
    parse_eps_list,
    parse_grid,
    resolve_config,
    validate_problem_document,
)


@pytest.fixture(autouse=True)
def clean_env():
    with patch.dict(os.environ, {}, clear=True):
        yield


def test_env_defaults():
    env = get_env_defaults()
    assert (env.out_dir, env.jobs, env.seed, env.log_level) == ("./runs", 1, 0, "INFO")


def test_env_values_read():
    with patch.dict(os.environ, {
        "OBSTACLE_LAB_OUT": "/tmp/lab",
        "OBSTACLE_LAB_JOBS": "4",
        "OBSTACLE_LAB_SEED": "17",
        "OBSTACLE_LAB_LOG_LEVEL": "debug",
    }, clear=True):
        env = get_env_defaults()
    assert (env.out_dir, env.jobs, env.seed, env.log_level) == ("/tmp/lab", 4, 17, "DEBUG")


@pytest.mark.parametrize("name,value", [
    ("OBSTACLE_LAB_JOBS", "many"),
    ("OBSTACLE_LAB_JOBS", "0"),
    ("OBSTACLE_LAB_SEED", "1.5"),
    ("OBSTACLE_LAB_LOG_LEVEL", "loud"),
])
def test_malformed_env_falls_back(caplog, name, value):
    with patch.dict(os.environ, {name: value}, clear=True), caplog.at_level(logging.WARNING, logger="src.run_config"):
        env = get_env_defaults()
    assert (env.jobs, env.seed, env.log_level) == (1, 0, "INFO")
    assert name in caplog.text


def test_parse_eps_list():
    assert parse_eps_list("1e-1, 1e-2") == (0.1, 0.01)
    with pytest.raises(ConfigInvalid) as exc:
        parse_eps_list("small")
    assert exc.value.path == "eps"
    with pytest.raises(ConfigInvalid):
        parse_eps_list("1e-2,-1")


def test_parse_grid():
    assert parse_grid("33,9") == (33, 9)
    for text in ("2,9", "33,2", "33", "a,b"):
        with pytest.raises(ConfigInvalid) as exc:
            parse_grid(text)
        assert exc.value.path == "grid"


@pytest.mark.parametrize("doc,path", [
    ({"eps": 0.1}, "problem.test"),
    ({"test": "thick-active", "colour": 1}, "problem.colour"),
    ({"test": "thick-active", "eps": True}, "problem.eps"),
    ({"test": "thick-active", "eps": 0}, "problem.eps"),
    ({"test": "dynamic-caloric", "alpha": 1.5}, "problem.alpha"),
    ({"test": "thick-active", "eps_list": [0.1, -0.01]}, "problem.eps_list.1"),
    ({"test": "thick-active", "grid": {"n_time": 2}}, "problem.grid.n_time"),
    ({"test": "thick-active", "grid": {"nx": 9}}, "problem.grid.nx"),
    ({"test": "thick-active", "params": {"bogus": 1.0}}, "problem.params.bogus"),
    ({"test": "thick-active", "params": {"height": "tall"}}, "problem.params.height"),
    ({"test": "no-such-test"}, "problem.test"),
])
def test_document_errors_name_the_field(doc, path):
    with pytest.raises(ConfigInvalid) as exc:
        validate_problem_document(doc)
    assert exc.value.path == path


def test_document_file_errors(tmp_path):
    with pytest.raises(ConfigInvalid) as exc:
        load_problem_document(tmp_path / "missing.json")
    assert exc.value.path == "config"

    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigInvalid) as exc:
        load_problem_document(bad)
    assert exc.value.path == "config"


def test_precedence(tmp_path):
    doc = tmp_path / "problem.json"
    doc.write_text(json.dumps({
        "test": "thick-active",
        "eps": 0.01,
        "grid": {"n_space": 33, "n_time": 9},
        "jobs": 2,
        "params": {"height": 0.2},
    }))
    env = {"OBSTACLE_LAB_JOBS": "3", "OBSTACLE_LAB_OUT": str(tmp_path / "env-out")}

    with patch.dict(os.environ, env, clear=True):
        config = resolve_config("solve", config_path=str(doc), eps="0.005")
        flagged = resolve_config("solve", config_path=str(doc), grid="17,5", jobs=5, out_dir="cli-out")

    assert config.test == "thick-active"
    assert config.eps == 0.005
    assert (config.n_space, config.n_time) == (33, 9)
    assert config.jobs == 2
    assert config.out_dir == str(tmp_path / "env-out")
    assert config.overrides == {"params": {"height": 0.2}}

    assert flagged.eps == 0.01
    assert (flagged.n_space, flagged.n_time) == (17, 5)
    assert (flagged.jobs, flagged.out_dir) == (5, "cli-out")


def test_command_rules():
    with pytest.raises(ConfigInvalid) as exc:
        resolve_config("plot", test="thick-active")
    assert exc.value.path == "command"
    with pytest.raises(ConfigInvalid) as exc:
        resolve_config("solve")
    assert exc.value.path == "problem.test"
    with pytest.raises(ConfigInvalid) as exc:
        resolve_config("solve", test="thick-active", eps="0.1,0.01")
    assert exc.value.path == "eps"
    with pytest.raises(ConfigInvalid) as exc:
        resolve_config("sweep", test="thick-active", eps="0.01,0.1,0.001")
    assert exc.value.path == "eps_list"

    assert resolve_config("sweep", test="thick-active").eps_list == DEFAULT_SWEEP_EPS
    assert resolve_config("verify", only="A, B").only == ("A", "B")


def test_build_problem_applies_overrides():
    config = resolve_config("solve", test="thick-active", grid="33,9", eps="0.01")
    spec, grid = build_problem(config)

    assert grid.shape == (9, 33)
    assert spec.eps.eps == 0.01
    assert spec.name == "thick-active"
    assert config.to_dict()["eps_list"] == [0.01]
