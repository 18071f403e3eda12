import json
import logging

import pytest

from entropynet import config, structs
from fixtures import testcases


def test_defaults_follow_benchmark_presets():
  tests = [
    {
      "name": "standing shock",
      "raw": {"benchmark": "standing_shock"},
      "widths": [2, 64, 64, 64, 64, 1], "clip": 4.0, "n_cells_x": (128,), "n_cells_t": 64, "n_strips": 1,
    },
    {
      "name": "moving shock",
      "raw": {"benchmark": "moving_shock"},
      "widths": [2, 64, 64, 64, 64, 1], "clip": 6.0, "n_cells_x": (128,), "n_cells_t": 64, "n_strips": 2,
    },
    {
      "name": "Burgers 2D",
      "raw": {"benchmark": "burgers2d"},
      "widths": [3, 64, 64, 64, 64, 1], "clip": 6.0, "n_cells_x": (40, 40), "n_cells_t": 20, "n_strips": 3,
    },
    {
      "name": "single spatial count broadcast to every axis",
      "raw": {"benchmark": "burgers2d", "mesh": {"n_cells_x": 8}, "net": {"widths": [3, 4, 1]}},
      "widths": [3, 4, 1], "clip": 6.0, "n_cells_x": (8, 8), "n_cells_t": 20, "n_strips": 3,
    },
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    cfg = config.resolve_config(test["raw"])
    for key in ("widths", "clip", "n_cells_x", "n_cells_t", "n_strips"):
      assert getattr(cfg, key) == test[key], "Expected {} = {}, received {}".format(key, test[key], getattr(cfg, key))
    assert cfg.b == 5.0 and cfg.learning_rate == 1e-3
    assert cfg.augment_constants and not cfg.shared_across_cells


def test_validation_errors():
  tests = [
    {"name": "missing benchmark", "raw": {"net": {"clip": 4.0}}, "path": "benchmark"},
    {"name": "unknown benchmark", "raw": {"benchmark": "euler"}, "path": "benchmark"},
    {"name": "unknown section", "raw": {"benchmark": "standing_shock", "optimizer": {}}, "path": "optimizer"},
    {"name": "unknown key", "raw": {"benchmark": "standing_shock", "net": {"depth": 4}}, "path": "net.depth"},
    {"name": "negative clip", "raw": {"benchmark": "standing_shock", "net": {"clip": -1.0}}, "path": "net.clip"},
    {"name": "bool for an integer", "raw": {"benchmark": "standing_shock", "train": {"n_train": True}}, "path": "train.n_train"},
    {"name": "bad width entry", "raw": {"benchmark": "standing_shock", "net": {"widths": [2, "wide", 1]}}, "path": "net.widths[1]"},
    {"name": "wrong input width", "raw": {"benchmark": "standing_shock", "net": {"widths": [3, 8, 1]}}, "path": "net.widths[0]"},
    {"name": "vector output", "raw": {"benchmark": "standing_shock", "net": {"widths": [2, 8, 2]}}, "path": "net.widths[2]"},
    {
      "name": "more strips than time cells",
      "raw": {"benchmark": "standing_shock", "mesh": {"n_cells_t": 2}, "train": {"n_strips": 3}},
      "path": "train.n_strips",
    },
    {
      "name": "spatial counts for the wrong dimension",
      "raw": {"benchmark": "standing_shock", "mesh": {"n_cells_x": [8, 8]}},
      "path": "mesh.n_cells_x",
    },
    {"name": "single convergence level", "raw": {"benchmark": "standing_shock", "convergence": {"levels": [16]}}, "path": "convergence.levels"},
    {
      "name": "unknown level key",
      "raw": {"benchmark": "standing_shock", "convergence": {"levels": [16, {"lr": 1.0}]}},
      "path": "convergence.levels[1].lr",
    },
    {
      "name": "domain moved off the benchmark box",
      "raw": {"benchmark": "standing_shock", "domain": {"lo": [-2.0], "hi": [1.0]}},
      "path": "domain.lo",
    },
    {
      "name": "domain with the wrong dimension",
      "raw": {"benchmark": "burgers2d", "domain": {"hi": [1.0]}},
      "path": "domain.hi",
    },
    {"name": "longer final time", "raw": {"benchmark": "moving_shock", "domain": {"t_final": 1.0}}, "path": "domain.t_final"},
    {"name": "non-positive final time", "raw": {"benchmark": "moving_shock", "domain": {"t_final": 0.0}}, "path": "domain.t_final"},
    {"name": "text bound", "raw": {"benchmark": "moving_shock", "domain": {"lo": ["left"]}}, "path": "domain.lo[0]"},
    {"name": "unknown domain key", "raw": {"benchmark": "moving_shock", "domain": {"periodic": True}}, "path": "domain.periodic"},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    with pytest.raises(structs.ConfigError) as e:
      config.resolve_config(test["raw"])
    assert e.value.path == test["path"], "Expected error at {}, received {}".format(test["path"], e.value.path)
    assert e.value.exit_code == 1


def test_roundtrip_and_seed():
  raw = testcases.tiny_config("moving_shock", pert={"n_pert": 12, "b": 2.5}, train={"threads": 2})
  cfg = config.resolve_config(raw)
  again = config.resolve_config(json.loads(json.dumps(config.config_to_raw(cfg))))
  assert again == cfg, "Expected the resolved configuration to survive a JSON roundtrip"
  assert cfg.n_pert == 12 and cfg.b == 2.5 and cfg.threads == 2

  seeded = config.with_seed(raw, 7)
  assert seeded["net"]["init_seed"] == 7 and seeded["pert"]["seed"] == 7
  assert "init_seed" not in raw["net"], "Expected with_seed to leave its input alone"

  values = config.resolve_values(dict(raw, convergence={"levels": [8, 16]}))
  assert values["convergence.levels"] == [8, 16]
  assert values["eval.refine"] == 4


def test_load_config(tmp_path):
  path = tmp_path / "config.json"
  path.write_text(json.dumps(testcases.tiny_config()))
  raw = config.load_config(str(path))
  assert raw["benchmark"] == "standing_shock"

  broken = tmp_path / "broken.json"
  broken.write_text("{\"benchmark\": ")
  with pytest.raises(structs.ConfigError):
    config.load_config(str(broken))


def test_low_clip_warns(caplog):
  with caplog.at_level(logging.WARNING, logger="entropynet.config"):
    cfg = config.resolve_config(testcases.tiny_config(net={"clip": 2.0}))
  assert cfg.clip == 2.0
  assert any("does not exceed twice the data bound" in r.getMessage() for r in caplog.records)


def test_domain_section():
  tests = [
    {"name": "full box", "raw": {"benchmark": "standing_shock", "domain": {"lo": [-1.0], "hi": [1.0], "t_final": 0.5}}},
    {"name": "scalar bounds in 1D", "raw": {"benchmark": "standing_shock", "domain": {"lo": -1, "hi": 1}}},
    {"name": "final time only", "raw": {"benchmark": "sine_wave", "domain": {"t_final": 1.0}}},
    {"name": "2D box", "raw": {"benchmark": "burgers2d", "domain": {"lo": [0.0, 0.0], "hi": [1.0, 1.0], "t_final": 0.3}}},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    assert config.validate_config(test["raw"]) is test["raw"]
    cfg = config.resolve_config(test["raw"])
    assert cfg.benchmark == test["raw"]["benchmark"]
