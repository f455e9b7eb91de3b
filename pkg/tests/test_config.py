import dataclasses

import pytest

from hysim import (
    CANONICAL_COEFFICIENTS,
    Box,
    Mode,
    PhysicalParameters,
    RunConfig,
    State,
    load_config,
    merge_flags,
    reduce_physical,
)


def test_defaults():
    cfg = RunConfig()
    assert cfg.coefficients == CANONICAL_COEFFICIENTS
    assert cfg.physical is None
    assert cfg.box == Box(0.0, 5.0)
    assert cfg.initial_state == State(2.5, 2.5, 5.0)
    assert cfg.initial_mode == Mode(0, 0)
    assert cfg.horizon == 1e6 and cfg.dt == 0.1 and cfg.eps == 0.1
    assert cfg.n_traj == 10 and cfg.seed == 0
    assert cfg.eps_list == (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
    assert cfg.scheme == "independent" and cfg.plane == "t1t2"
    assert cfg.out is None and cfg.detect_period is False


@pytest.mark.parametrize("bad", [
    {"horizon": 0.0},
    {"horizon": -5.0},
    {"dt": 0.0},
    {"n_traj": 0},
    {"eps_list": ()},
    {"plane": "pt1"},
    {"scheme": "correlated"},
    {"bin_width": 0.0},
])
def test_validation_rejects(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_json_round_trip():
    cfg = RunConfig(horizon=1234.5, dt=0.05, eps=0.02, n_traj=4, seed=11,
                    eps_list=(0.1, 0.3), plane="t1p", bin_width=0.1,
                    grid_bounds=((-1.0, 6.0), (0.0, 20.0)),
                    interval=(100.0, 1000.0), dt_sync=0.5, p_ref=15.0,
                    p_tol=0.25, detect_period=True, scheme="summed",
                    out="somewhere", initial_state=State(1.0, 4.0, 5.0),
                    initial_mode=Mode(1, 0), box=Box(-1.0, 4.0))
    assert RunConfig.from_json(cfg.to_json()) == cfg
    # defaults survive too, including the None-valued optionals
    assert RunConfig.from_json(RunConfig().to_json()) == RunConfig()


def test_from_file_and_load(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(RunConfig(horizon=500.0).to_json())
    assert RunConfig.from_file(path).horizon == 500.0
    assert load_config(path).horizon == 500.0
    assert load_config(None) == RunConfig()


def test_unknown_keys_rejected_except_command_stamp():
    with pytest.raises(ValueError, match="horizont"):
        RunConfig.from_dict({"horizont": 100.0})
    # the CLI stamps "command" into its echo files; those must load back
    cfg = RunConfig.from_dict({"horizon": 100.0, "command": "deterministic"})
    assert cfg.horizon == 100.0


def test_partial_dict_keeps_defaults():
    cfg = RunConfig.from_dict({"seed": 3, "eps_list": [0.2]})
    assert cfg.seed == 3 and cfg.eps_list == (0.2,)
    assert cfg.horizon == RunConfig().horizon


def test_physical_table_without_coefficients_is_reduced():
    doc = {"physical": {"m_dot_valve": 0.9}}
    cfg = RunConfig.from_dict(doc)
    assert cfg.physical == PhysicalParameters(m_dot_valve=0.9)
    assert cfg.coefficients == reduce_physical(cfg.physical)
    assert cfg.coefficients != CANONICAL_COEFFICIENTS


def test_explicit_coefficients_beat_physical_table():
    doc = {
        "physical": {"m_dot_valve": 0.9},
        "coefficients": CANONICAL_COEFFICIENTS.to_dict(),
    }
    cfg = RunConfig.from_dict(doc)
    assert cfg.coefficients == CANONICAL_COEFFICIENTS


def test_merge_flags_precedence():
    cfg = RunConfig(horizon=800.0, seed=5)
    merged = merge_flags(cfg, horizon=400.0, seed=None, dt=None)
    assert merged.horizon == 400.0  # flag wins over config value
    assert merged.seed == 5        # None flags leave the config untouched
    assert merge_flags(cfg) is cfg
    with pytest.raises(ValueError):
        merge_flags(cfg, n_traj=0)  # merged result is re-validated


def test_config_is_immutable():
    cfg = RunConfig()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.horizon = 5.0  # type: ignore[misc]
