import json
import os

import numpy as np

from entropynet import cli, network
from fixtures import testcases


def _write_config(tmp_path, **sections):
  path = tmp_path / "config.json"
  path.write_text(json.dumps(testcases.tiny_config(**sections)))
  return str(path)


def test_train_and_eval(tmp_path):
  out = str(tmp_path / "run")
  code = cli.run(["train", "--config", _write_config(tmp_path), "--out", out, "--threads", "2"])
  assert code == 0

  for name in ("history.csv", "strip_0.json", "report.json"):
    assert os.path.exists(os.path.join(out, name)), "Expected {} in the output directory".format(name)

  with open(os.path.join(out, "history.csv")) as f:
    first = f.readline()
  assert first.startswith("# entropynet ")
  history = cli.read_csv(os.path.join(out, "history.csv"))
  assert list(history["iteration"]) == [1, 2, 3, 4, 5]

  with open(os.path.join(out, "report.json")) as f:
    report = json.load(f)
  assert report["config"]["train"]["threads"] == 2
  assert report["best_iterations"] == [5]
  assert report["errors"]["reference_kind"] == "exact"
  assert 0.0 < report["errors"]["e_r_spacetime"]

  net = network.load_checkpoint(os.path.join(out, "strip_0.json"))
  assert net.widths == [2, 6, 6, 1]

  eval_out = str(tmp_path / "eval")
  assert cli.run(["eval", "--checkpoint", os.path.join(out, "strip_0.json"), "--out", eval_out]) == 0
  with open(os.path.join(eval_out, "eval.json")) as f:
    evaluated = json.load(f)
  assert evaluated["errors"] == report["errors"], "Expected the checkpoint to reproduce the training report"


def test_train_reruns_are_byte_identical(tmp_path):
  config_path = _write_config(tmp_path)
  outputs = []
  for name in ("a", "b"):
    out = str(tmp_path / name)
    assert cli.run(["train", "--config", config_path, "--out", out]) == 0
    with open(os.path.join(out, "history.csv"), "rb") as f:
      outputs.append(f.read())
  assert outputs[0] == outputs[1]


def test_reference_command(tmp_path):
  out = str(tmp_path / "ref")
  code = cli.run(["reference", "--benchmark", "standing_shock", "--cells", "32", "--times", "0.0", "0.5", "--out", out])
  assert code == 0

  df = cli.read_csv(os.path.join(out, "reference_standing_shock.csv"))
  assert list(df.columns) == ["t", "x", "u", "exact"]
  assert len(df) == 64
  assert sorted(df["t"].unique()) == [0.0, 0.5]
  initial = df[df["t"] == 0.0]
  assert np.array_equal(initial["u"].values, initial["exact"].values)


def test_cpwl_verify_command(tmp_path):
  out = str(tmp_path / "cpwl")
  code = cli.run(["cpwl-verify", "--h", "0.25", "0.125", "--tol", "1e-2", "--n-pert", "8", "--out", out])
  assert code == 0

  trace = cli.read_csv(os.path.join(out, "cpwl_trace.csv"))
  assert list(trace.columns) == ["tau", "sup_error", "w11_error"]
  assert trace["sup_error"].iloc[-1] <= 1e-2

  table = cli.read_csv(os.path.join(out, "cpwl_competitor.csv"))
  assert list(table["h"]) == [0.25, 0.125]
  assert np.allclose(table["total"], table["h"], atol=1e-6)
  assert abs(table["slope"].iloc[0] - 1.0) < 1e-3


def test_convergence_command(tmp_path):
  out = str(tmp_path / "conv")
  code = cli.run(["convergence", "--config", _write_config(tmp_path), "--levels", "8", "16", "--out", out])
  assert code == 0
  table = cli.read_csv(os.path.join(out, "convergence.csv"))
  assert list(table["n_cells_x"]) == [8, 16]
  assert list(table["status"]) == ["ok", "ok"]
  assert "slope" in table.columns


def test_exit_codes(tmp_path, capsys):
  out = str(tmp_path / "err")
  broken = tmp_path / "broken.json"
  broken.write_text("{not json")
  bare = tmp_path / "bare.json"
  network.save_checkpoint(network.init_network([2, 3, 1], 2.0, 0), str(bare))
  tests = [
    {"name": "no command", "argv": [], "code": 1},
    {"name": "no configuration", "argv": ["train", "--out", out], "code": 1},
    {"name": "unknown benchmark", "argv": ["train", "--benchmark", "euler", "--out", out], "code": 1},
    {"name": "convergence without levels", "argv": ["convergence", "--config", _write_config(tmp_path), "--out", out], "code": 1},
    {"name": "competitor shift out of range", "argv": ["cpwl-verify", "--h", "0.25", "--shift", "1.5", "--out", out], "code": 2},
    {"name": "no finite volume reference in 2D", "argv": ["reference", "--benchmark", "burgers2d", "--out", out], "code": 2},
    {"name": "unknown case", "argv": ["cpwl-verify", "--case", "rarefaction", "--out", out], "code": 1},
    {"name": "non-integer retry count", "argv": ["train", "--benchmark", "standing_shock", "--retry", "x", "--out", out], "code": 1},
    {"name": "unknown flag", "argv": ["reference", "--benchmark", "cubic", "--colour", "--out", out], "code": 1},
    {"name": "unknown subcommand", "argv": ["serve"], "code": 1},
    {"name": "missing config file", "argv": ["train", "--config", str(tmp_path / "absent.json"), "--out", out], "code": 1},
    {"name": "missing checkpoint", "argv": ["eval", "--benchmark", "standing_shock", "--checkpoint", str(tmp_path / "absent.json"), "--out", out], "code": 1},
    {"name": "checkpoint is not JSON", "argv": ["eval", "--benchmark", "standing_shock", "--checkpoint", str(broken), "--out", out], "code": 1},
    {"name": "checkpoint without configuration", "argv": ["eval", "--checkpoint", str(bare), "--out", out], "code": 1},
    {"name": "output path is a file", "argv": ["reference", "--benchmark", "standing_shock", "--cells", "16", "--times", "0.0", "--out", str(broken)], "code": 2},
  ]

  for test in tests:
    print("Running test '" + test['name'] + "'")
    code = cli.run(test["argv"])
    assert code == test["code"], "Expected exit code {}, received {}".format(test["code"], code)

