import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from subspace_lab.cli import main, thread_count
from subspace_lab.config import load_config, parse_dims
from subspace_lab.dataset import write_pgm
from subspace_lab.errors import ConfigError

BLOBS = """\
dataset.kind = synthetic
dataset.classes = 4
dataset.per_class = 6
dataset.dim = 6
method.name = glpp
method.beta = 10000
protocol.scheme = leave-one-out
protocol.dims = 1..3
output = out
"""


def write_conf(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", "--config", write_conf(tmp_path, BLOBS)]) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    assert report["ara"] == 1.0
    assert set(report) == {"method", "scheme", "beta", "folds", "ara", "std", "top_rate",
                           "best_dim", "curves"}
    assert len(json.loads((out / "splits.json").read_text())["folds"]) == 24
    assert read_csv(out / "curves.csv")[0] == ["dim", "accuracy"]
    model = json.loads((out / "model.json").read_text())
    assert model["method"] == "glpp" and "pre_chain" in model
    echo = json.loads((out / "config.echo.json").read_text())
    assert echo["method"]["beta"] == 10000.0
    assert "ARA 100.00" in capsys.readouterr().out


def test_run_deterministic(tmp_path):
    conf = write_conf(tmp_path, BLOBS)
    main(["run", "--config", conf])
    first = (tmp_path / "out" / "report.json").read_bytes()
    main(["run", "--config", conf])
    assert (tmp_path / "out" / "report.json").read_bytes() == first


def test_missing_dataset_path(tmp_path, capsys):
    conf = write_conf(tmp_path, "dataset.kind = csv\ndataset.path = nope.csv\n")
    assert main(["run", "--config", conf]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.conf")]) == 1


def test_fit_failure_exit_code(tmp_path):
    (tmp_path / "d.csv").write_text("1,1,1\n1,1,1\n2,1,1\n2,1,1\n")
    conf = write_conf(tmp_path, "dataset.kind = csv\ndataset.path = d.csv\nmethod.name = glpp\n"
                                "protocol.scheme = two-fold\nprotocol.dims = 1\n")
    assert main(["run", "--config", conf]) == 2


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    conf = write_conf(tmp_path, BLOBS.replace("output = out", "output = blocker/sub"))
    assert main(["run", "--config", conf]) == 3


def test_sweep_dim_axis(tmp_path):
    conf = write_conf(tmp_path, BLOBS.replace("dataset.dim = 6", "dataset.dim = 12"))
    assert main(["sweep", "--config", conf, "--axis", "dim", "--grid", "1..10"]) == 0
    rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert rows[0] == ["value", "ara", "std", "top_rate"]
    assert len(rows) == 11


def test_sweep_beta_default_grid(tmp_path):
    conf = write_conf(tmp_path, BLOBS.replace("leave-one-out", "two-fold"))
    assert main(["sweep", "--config", conf, "--axis", "beta"]) == 0
    assert len(read_csv(tmp_path / "out" / "sweep.csv")) == 9


def test_sweep_beta_non_glpp(tmp_path):
    conf = write_conf(tmp_path, BLOBS.replace("method.name = glpp", "method.name = lpp"))
    assert main(["sweep", "--config", conf, "--axis", "beta"]) == 1


def test_features_csv(tmp_path):
    for cls in ("a", "b"):
        (tmp_path / "imgs" / cls).mkdir(parents=True)
        for k in range(2):
            write_pgm(tmp_path / "imgs" / cls / f"{k}.pgm", np.random.default_rng(k).random((20, 20)))
    conf = write_conf(tmp_path, "dataset.kind = image-tree\ndataset.path = imgs\n"
                                "features.kind = lbp\nfeatures.block = 8\nfeatures.overlap = 0.5\n")
    out = tmp_path / "f.csv"
    assert main(["features", "--config", conf, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 5 and len(rows[1]) == 1 + 59 * 4 * 4
    assert [r[0] for r in rows[1:]] == ["1", "1", "2", "2"]


def test_two_d_run(tmp_path):
    conf = write_conf(tmp_path, "dataset.kind = synthetic-images\nmethod.name = glpp2d\n"
                                "protocol.scheme = two-fold\nprotocol.dims = 1..3\n")
    assert main(["run", "--config", conf]) == 0
    assert json.loads((tmp_path / "out" / "model.json").read_text())["two_d"] is True


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        load_config(write_conf(tmp_path, "method.nam = glpp\n"))
    with pytest.raises(ConfigError):
        load_config(write_conf(tmp_path, "method.name = ica\n"))
    with pytest.raises(ConfigError, match="protocol.k"):
        load_config(write_conf(tmp_path, "protocol.scheme = k-fold\n"))
    with pytest.raises(ConfigError, match="image"):
        load_config(write_conf(tmp_path, "features.kind = lbp\n"))
    with pytest.raises(ConfigError):
        load_config(write_conf(tmp_path, "method.name = glpp2d\n"))


def test_parse_dims():
    assert parse_dims("1..4") == (1, 2, 3, 4)
    assert parse_dims("5..20..5") == (5, 10, 15, 20)
    assert parse_dims("1, 3,7") == (1, 3, 7)
    with pytest.raises(ConfigError):
        parse_dims("0..3")


def test_thread_env(monkeypatch):
    monkeypatch.delenv("SUBSPACE_LAB_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("SUBSPACE_LAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("SUBSPACE_LAB_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_count()


def test_bundled_config_via_entry_point(tmp_path):
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    text = open(os.path.join(root, "configs", "blobs_glpp.conf")).read()
    conf = write_conf(tmp_path, text.replace("../out/blobs_glpp", "out"))
    proc = subprocess.run([sys.executable, "-m", "subspace_lab.cli", "run", "--config", conf],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "out" / "report.json").read_text())["ara"] == 1.0
