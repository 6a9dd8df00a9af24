import csv
import io
import json

import numpy as np
import pytest

from infocorr.cli import EXIT_CAP, EXIT_INPUT, EXIT_OK, EXIT_OPTIMIZER, CURVE_COLUMNS, InputError, main, parse_grid
from infocorr.common_info import dsbs_decomposition
from infocorr.probability import JointPmf, dsbs, save


@pytest.fixture
def dsbs_file(tmp_path):
    path = tmp_path / "dsbs.json"
    save(dsbs(0.1), path)
    return path


def _run(capsys, argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_measure_maxcorr(capsys, dsbs_file, tmp_path):
    out_path = tmp_path / "rec.json"
    code, out, _ = _run(capsys, ["measure", "--input", dsbs_file, "--quantity", "maxcorr", "--out", out_path])
    assert code == EXIT_OK
    first, second = out.splitlines()
    assert float(first) == pytest.approx(0.8, abs=1e-12)
    rec = json.loads(second)
    assert rec["quantity"] == "maxcorr" and rec == json.loads(out_path.read_text())


@pytest.mark.parametrize("quantity, expected", [("pearson", 0.8), ("theta", 0.8), ("gk", 0.0), ("entropy", 1.4689955935892812)])
def test_measure_closed_quantities(capsys, dsbs_file, quantity, expected):
    code, out, _ = _run(capsys, ["measure", "--input", dsbs_file, "--quantity", quantity])
    assert code == EXIT_OK
    assert float(out.splitlines()[0]) == pytest.approx(expected, abs=1e-12)


def test_measure_cond_maxcorr(capsys, tmp_path):
    path = tmp_path / "cj.json"
    save(dsbs_decomposition(0.1, 0.4), path)
    code, out, _ = _run(capsys, ["measure", "--input", path, "--quantity", "cond-maxcorr"])
    assert code == EXIT_OK and float(out.splitlines()[0]) == pytest.approx(0.4, abs=1e-12)
    code, out, _ = _run(capsys, ["measure", "--input", path, "--quantity", "mi"])
    assert code == EXIT_OK and float(out.splitlines()[0]) > 0


def test_measure_cbeta(capsys, dsbs_file):
    code, out, _ = _run(capsys, ["measure", "--input", dsbs_file, "--quantity", "cbeta", "--beta", "0.9", "--restarts", "2"])
    assert code == EXIT_OK
    rec = json.loads(out.splitlines()[1])
    assert rec["value"] == 0.0 and rec["meta"]["certificate"] == "Exact"


def test_input_errors(capsys, tmp_path, dsbs_file):
    bad = tmp_path / "bad.json"
    bad.write_text('{"probs": [[0.5, 0.6]]}')
    assert _run(capsys, ["measure", "--input", bad, "--quantity", "maxcorr"])[0] == EXIT_INPUT
    nan = tmp_path / "nan.json"
    nan.write_text('{"probs": [[NaN, 0.5]]}')
    assert _run(capsys, ["measure", "--input", nan, "--quantity", "maxcorr"])[0] == EXIT_INPUT
    assert _run(capsys, ["measure", "--input", tmp_path / "missing.json", "--quantity", "maxcorr"])[0] == EXIT_INPUT
    assert _run(capsys, ["measure", "--input", dsbs_file, "--quantity", "cbeta"])[0] == EXIT_INPUT
    assert _run(capsys, ["measure", "--input", dsbs_file, "--quantity", "nope"])[0] == EXIT_INPUT
    assert _run(capsys, ["measure", "--input", dsbs_file, "--quantity", "cond-maxcorr"])[0] == EXIT_INPUT
    assert _run(capsys, ["curve", "--gaussian", "0.9", "--grid", "0.5:0.1:0.2"])[0] == EXIT_INPUT
    assert _run(capsys, ["curve", "--gaussian", "1.0", "--grid", "0:0.1:0.5"])[0] == EXIT_INPUT
    assert _run(capsys, ["curve", "--grid", "0:0.1:0.5"])[0] == EXIT_INPUT


def test_parse_grid():
    assert parse_grid("0:0.1:0.9") == [round(0.1 * i, 12) for i in range(10)]
    assert parse_grid("0.2:0.5:0.2") == [0.2]
    for bad in ("0:0:1", "0:0.1", "a:0.1:1", "0:0.5:1.5", "1:0.1:0"):
        with pytest.raises(InputError):
            parse_grid(bad)


def test_gaussian_curve_csv(capsys, tmp_path):
    out_path = tmp_path / "curve.csv"
    assert _run(capsys, ["curve", "--gaussian", "0.9", "--grid", "0:0.1:0.9", "--out", out_path])[0] == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out_path.read_text())))
    assert tuple(rows[0]) == CURVE_COLUMNS
    assert len(rows) == 10
    assert float(rows[0]["c_beta"]) == pytest.approx(2.1240, abs=1e-4)
    assert float(rows[-1]["c_beta"]) == 0.0
    assert all(r["certificate"] == "ClosedForm" for r in rows)


def test_finite_curve_is_deterministic(capsys, dsbs_file):
    argv = ["curve", "--input", dsbs_file, "--grid", "0.5:0.2:0.9", "--restarts", "2"]
    code, first, _ = _run(capsys, argv)
    assert code == EXIT_OK
    assert _run(capsys, argv)[1] == first
    rows = list(csv.DictReader(io.StringIO(first)))
    assert [float(r["beta"]) for r in rows] == [0.5, 0.7, 0.9]
    assert float(rows[-1]["c_beta"]) == 0.0


def test_optimizer_exit_code(capsys, tmp_path):
    # a budget too small to converge surfaces as exit 3 in the CLI's strict mode
    path = tmp_path / "p.json"
    save(JointPmf(np.random.default_rng(3).dirichlet(np.ones(9)).reshape(3, 3)), path)
    from infocorr import cli, common_info

    orig = cli._solver_config
    cli._solver_config = lambda args: common_info.SolverConfig(
        restarts=1, inner_iter=1, polish_iter=1, lambda_stop=10.0, certify=False, strict=True)
    try:
        code, _, err = _run(capsys, ["measure", "--input", path, "--quantity", "cbeta", "--beta", "0.05"])
    finally:
        cli._solver_config = orig
    assert code == EXIT_OPTIMIZER and "best found" in err


def _write_config(tmp_path, **cfg):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate(capsys, tmp_path):
    cfg = _write_config(tmp_path, base={"dsbs": {"p0": 0.1, "beta": 0.2}}, n=[1, 2, 3], seeds=[0, 1, 2], rate_excess=0.2)
    out_path = tmp_path / "report.json"
    assert _run(capsys, ["simulate", "--input", cfg, "--out", out_path])[0] == EXIT_OK
    report = json.loads(out_path.read_text())
    assert report["summary"]["runs"] == 9
    assert set(report["summary"]["median_tv_to_target"]) == {"1", "2", "3"}
    assert all(r["cond_maxcorr"] <= 0.2 + 1e-9 for r in report["records"])
    # byte-identical reruns
    again = tmp_path / "again.json"
    main(["simulate", "--input", str(cfg), "--out", str(again)])
    assert again.read_bytes() == out_path.read_bytes()


def test_simulate_from_file_and_cap(capsys, tmp_path):
    save(dsbs_decomposition(0.1, 0.4), tmp_path / "base.json")
    cfg = _write_config(tmp_path, base={"file": "base.json"}, n=2, rate=1.0)
    code, out, _ = _run(capsys, ["simulate", "--input", cfg])
    assert code == EXIT_OK and json.loads(out)["summary"]["runs"] == 1
    cfg = _write_config(tmp_path, base={"dsbs": {"p0": 0.1, "beta": 0.2}}, n=20, rate=1.0)
    assert _run(capsys, ["simulate", "--input", cfg])[0] == EXIT_CAP
    assert _run(capsys, ["simulate", "--input", cfg, "--cap", "10"])[0] == EXIT_CAP


def test_simulate_config_errors(capsys, tmp_path):
    base = {"dsbs": {"p0": 0.1, "beta": 0.2}}
    for cfg in (dict(base=base, n=2), dict(base=base, n=2, rate=1.0, rate_excess=0.1),
                dict(base=base, n=0, rate=1.0), dict(base=base, n=2, rate=1.0, seeds=[]),
                dict(base={"dsbs": {"p0": 0.1}}, n=2, rate=1.0), dict(base=[1], n=2, rate=1.0)):
        path = _write_config(tmp_path, **cfg)
        assert _run(capsys, ["simulate", "--input", path])[0] == EXIT_INPUT
    raw = tmp_path / "inf.json"
    raw.write_text('{"base": {"dsbs": {"p0": 0.1, "beta": 0.2}}, "n": 2, "rate": Infinity}')
    assert _run(capsys, ["simulate", "--input", raw])[0] == EXIT_INPUT
