import io
import math
import subprocess
import sys

import numpy as np
import pytest

from distreg.base_kernels import GaussianKernel
from distreg.cli import COMMANDS, main
from distreg.dist_kernels import DistKernel
from distreg.experiments import load_bag_csv, synthetic_aerosol_like, write_bag_csv
from distreg.merr import fit


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


@pytest.fixture
def data(tmp_path):
    bags = synthetic_aerosol_like(0, l=20, N=15, dim=2)
    train = tmp_path / "train.csv"
    write_bag_csv(train, bags)
    for b in bags:
        b.label = None
    test = tmp_path / "test.csv"
    write_bag_csv(test, bags[:4])
    return tmp_path, train, test


@pytest.mark.parametrize("cmd", sorted(COMMANDS))
def test_help_everywhere(cmd, capsys):
    assert run(cmd, "--help")[0] == 0
    assert "usage" in capsys.readouterr().out


def test_rates_row1_exponent():
    code, out, _ = run("rates", "--a", "0.4", "--b", "1e6", "--c", "2", "--h", "1")
    assert code == 0
    rows = body(out)
    assert rows[0].startswith("row,convergence")
    fields = rows[1].split(",")
    assert fields[0] == "1" and float(fields[4]) == pytest.approx(0.4, abs=1e-6)
    assert rows[4].split(",")[3] == "never" and rows[6].split(",")[3] == "never"


def test_provenance_header():
    _, out, _ = run("rates", "--a", "0.4", "--b", "2", "--c", "2", "--h", "1")
    first = out.splitlines()[0]
    assert first.startswith("# distreg ") and "config_hash=" in first and "seed=" in first


def test_bound_csv(tmp_path):
    path = tmp_path / "bound.csv"
    code, out, _ = run("bound", "--l", "500", "--N", "100000", "--lam", "0.05", "--out", str(path))
    assert code == 0
    assert path.read_text() == out
    rows = body(out)
    names = [r.split(",")[0] for r in rows[1:9]]
    assert names == [
        "embedding", "embedding_outer", "residual", "reconstruction",
        "residual_cross", "noise", "effective_dim", "total",
    ]
    total = float(rows[8].split(",")[1])
    assert total == pytest.approx(5 * sum(float(r.split(",")[1]) for r in rows[1:8]), rel=1e-12)
    assert any(r.startswith("lambda_le_T_norm") and r.endswith("proxy") for r in rows)


def test_bound_explicit_terms():
    code, out, _ = run("bound", "--A", "0", "--B", "0", "--Ndim", "0", "--L", "0")
    assert code == 0
    total = [r for r in body(out) if r.startswith("total")][0]
    assert float(total.split(",")[1]) == pytest.approx(5 * 32 * math.log(12) ** 2 / 100**2 / 0.1)


@pytest.mark.parametrize(
    "argv",
    [
        ("bound", "--eta", "1.5"),
        ("bound", "--h", "0"),
        ("rates", "--a", "0.4", "--b", "0.5", "--c", "2", "--h", "1"),
        ("rates", "--a", "0.4"),
        ("nonsense",),
        ("bound", "--lam", "abc"),
    ],
)
def test_usage_errors(argv):
    code, _, err = run(*argv)
    assert code == 1
    assert err


def test_invalid_parameter_names_field():
    _, _, err = run("bound", "--eta", "1.5")
    assert "eta" in err


def test_fit_predict(data):
    tmp, train, test = data
    model = tmp / "m.json"
    code, out, _ = run("fit", "--data", str(train), "--model", str(model), "--lam-grid", "1e-3,1e-2")
    assert code == 0 and model.exists()
    assert body(out)[-1].startswith("selected,")
    code, out, _ = run("predict", "--model", str(model), "--data", str(test))
    rows = body(out)
    assert code == 0 and rows[0] == "bag_id,prediction" and len(rows) == 5
    assert rows[1].split(",")[0] == "bag0"


def test_fit_predict_matches_in_process(data):
    tmp, train, _ = data
    model = tmp / "m.json"
    assert run("fit", "--data", str(train), "--model", str(model), "--lam", "0.01", "--bandwidth", "0.8")[0] == 0
    code, out, _ = run("predict", "--model", str(model), "--data", str(train))
    assert code == 0
    got = np.array([float(r.split(",")[1]) for r in body(out)[1:]])
    bags = load_bag_csv(train)
    direct = fit(bags, GaussianKernel(0.8), DistKernel.linear(1.0), 0.01).predict(bags)
    np.testing.assert_array_equal(got, direct)


def test_config_file_and_override(data):
    tmp, train, _ = data
    cfg = tmp / "run.cfg"
    cfg.write_text("# defaults\nlam = 0.01\nbandwidth=0.5\n")
    model = tmp / "m.json"
    _, out, _ = run("fit", "--config", str(cfg), "--data", str(train), "--model", str(model))
    assert "bandwidth=0.5" in out and "lam=0.01" in out
    _, out, _ = run("fit", "--config", str(cfg), "--data", str(train), "--model", str(model), "--lam", "0.2")
    assert "lam=0.2" in out and "bandwidth=0.5" in out


def test_config_unknown_key(data):
    tmp, train, _ = data
    cfg = tmp / "bad.cfg"
    cfg.write_text("lamda=0.1\n")
    code, _, err = run("fit", "--config", str(cfg), "--data", str(train), "--model", "x.json")
    assert code == 1 and "lamda" in err


def test_data_errors(tmp_path):
    assert run("predict", "--model", str(tmp_path / "nope.json"), "--data", "x.csv")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("bag_id,label,f1\nx,1,0.1\nx,2,0.2\n")
    code, _, err = run("fit", "--data", str(bad), "--model", str(tmp_path / "m.json"), "--lam", "0.1")
    assert code == 2 and "x" in err
    junk = tmp_path / "m.json"
    junk.write_text("{not json")
    assert run("predict", "--model", str(junk), "--data", str(bad))[0] == 2


def test_missing_schedule_is_numeric_failure():
    code, _, err = run("rate-exp", "--b", "1e6", "--N-grid", "20,40,80,160", "--reps", "1")
    assert code == 3 and "row 1" in err


def test_concentration_reproducible():
    args = ("concentration", "--trials", "300", "--N", "50", "--seed", "4")
    a, b = run(*args), run(*args)
    assert a == b and a[0] == 0
    assert run("concentration", "--trials", "300", "--N", "50", "--seed", "5")[1] != a[1]


def test_rate_exp_small():
    code, out, _ = run("rate-exp", "--N-grid", "20,40,80,160", "--n-test", "30", "--reps", "1")
    rows = body(out)
    assert code == 0 and rows[0] == "N,l,lambda,test_mse,excess_proxy" and len(rows) == 7


def test_entropy_demo_small():
    code, out, _ = run("entropy-demo", "--dim", "1", "--l-train", "30", "--l-test", "10", "--N", "40")
    assert code == 0
    assert body(out)[0] == "lambda,train_rmse,test_rmse,baseline_rmse"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "distreg", "rates", "--a", "0.25", "--b", "1e6", "--c", "1", "--h", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "row,convergence" in proc.stdout
