import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from feesetting import cli
from feesetting.cli import main
from feesetting.dist import Uniform
from feesetting.errors import AccuracyError
from feesetting.evaluation import CSV_HEADER, Quadrature
from feesetting.verify import best_proper_schedule


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_eval_uniform(capsys):
    code, out, _ = run(capsys, "eval", "--buyer", "uniform:0,1", "--seller", "uniform:0,1",
                       "--schedule", "affine:2,1", "--method", "quad")
    assert code == 0
    assert "rev_apx 0.0208333333" in out and "ratio_surplus 8" in out


def test_eval_thm1_resolves_to_constant(capsys):
    code, out, _ = run(capsys, "eval", "--buyer", "exp:1", "--seller", "uniform:0,1", "--schedule", "thm1")
    assert code == 0
    assert "| constant:1 |" in out


@pytest.mark.parametrize("argv", [
    ["eval", "--schedule", "affine:2"],
    ["eval", "--buyer", "nope:1"],
    ["eval", "--buyer", "uniform:0,x"],
    ["eval", "--method", "bogus"],
    ["eval", "--samples", "10", "--method", "mc"],
    ["sweep", "--steps", "1"],
    ["sweep", "--alpha-range", "2,1"],
    ["verify", "nosuchtheorem"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_numerical_failure_exits_3(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise AccuracyError("quadrature did not converge")

    monkeypatch.setattr(cli, "ratio_report", boom)
    code, _, err = run(capsys, "eval", "--schedule", "affine:1,0")
    assert code == 3 and "numerical failure" in err


def test_eval_writes_csv_and_json(tmp_path, capsys):
    out = tmp_path / "r.csv"
    for _ in range(2):
        assert run(capsys, "eval", "--schedule", "affine:2,1", "--out", str(out))[0] == 0
    r = rows(out)
    assert r[0] == CSV_HEADER and len(r) == 3 and r[1] == r[2]
    assert r[1][:4] == ["uniform:0,1", "uniform:0,1", "affine:2,1", "quad"]
    js = tmp_path / "r.jsonl"
    assert run(capsys, "eval", "--schedule", "affine:2,1", "--out", str(js))[0] == 0
    d = json.loads(js.read_text().strip())
    assert d["ratio_rev"] == pytest.approx(2.0)


def test_sweep_rows_and_cell(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, text, _ = run(capsys, "sweep", "--alpha-range", "0,2", "--beta-range", "0,1", "--steps", "11",
                        "--out", str(out))
    assert code == 0 and "11x11 cells" in text
    r = rows(out)
    assert len(r) == 122
    cell = [x for x in r[1:] if x[2] == "affine:2,1"][0]
    assert float(cell[4]) == pytest.approx(1 / 48, abs=1e-9)


def test_sweep_proper_region_matches_search_grid(tmp_path, capsys):
    out = tmp_path / "p.csv"
    run(capsys, "sweep", "--alpha-range", "0,1", "--beta-range", "0,1", "--steps", "21", "--out", str(out))
    best = max(float(x[4]) for x in rows(out)[1:])
    res = best_proper_schedule(Uniform(0, 1), Uniform(0, 1), (21, 21), Quadrature(1e-8))
    assert best == pytest.approx(res.grid_revenue, abs=1e-9)


def test_verify_examples(capsys):
    code, out, _ = run(capsys, "verify", "exact8", "--seller", "gdelta:0.01")
    assert code == 0 and out.count("PASS") == 3
    code, out, _ = run(capsys, "verify", "unif3", "--seller", "uniform:0,1")
    assert code == 0 and "observed 0.03515625 >= bound 0.0138888889" in out
    code, out, _ = run(capsys, "verify", "gdelta", "--deltas", "0.1,0.01,0.001")
    assert code == 0 and out.splitlines()[0].startswith("delta max_surplus")
    assert "PASS gdelta_sg_growth" in out


@pytest.mark.parametrize("theorem, extra", [
    ("main1", []), ("mhr", []), ("optfee", []), ("ln13", ["--seller", "rgpd:-1,1,1"]),
    ("maxiid", ["--n-list", "1,2,3"]),
])
def test_verify_passes(capsys, theorem, extra):
    assert run(capsys, "verify", theorem, *extra)[0] == 0


def test_verify_failure_exits_1(capsys):
    code, out, _ = run(capsys, "verify", "ln13", "--buyer", "exp:1", "--seller", "rgpd:-1,1,1")
    assert code == 1 and "FAIL ln13" in out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[DEFAULT]\nbuyer = uniform:0,1\n\n[eval]\nseller = uniform:0,1\nschedule = constant:0.25\n")
    code, out, _ = run(capsys, "eval", "--config", str(cfg))
    assert code == 0 and "rev_apx 0.03515625" in out
    code, out, _ = run(capsys, "eval", "--config", str(cfg), "--schedule", "affine:2,1")
    assert "rev_apx 0.0208333333" in out
    assert run(capsys, "eval", "--config", str(tmp_path / "missing.ini"))[0] == 2


def test_worstcase_command(tmp_path, capsys):
    out = tmp_path / "w.csv"
    code, text, _ = run(capsys, "worstcase", "--deltas", "0.1,0.01", "--out", str(out))
    assert code == 0
    r = rows(out)
    assert r[0][0] == "delta" and len(r) == 3
    assert float(r[1][1]) == pytest.approx(0.1 / 1.8 * np.log(10), abs=1e-5)


def test_mc_sweep_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"mc{k}.csv"
        subprocess.run([sys.executable, "-m", "feesetting.cli", "sweep", "--method", "mc", "--samples", "20000",
                        "--seed", "11", "--steps", "4", "--out", str(p)], check=True, capture_output=True)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    other = tmp_path / "mc_other.csv"
    subprocess.run([sys.executable, "-m", "feesetting.cli", "sweep", "--method", "mc", "--samples", "20000",
                    "--seed", "12", "--steps", "4", "--out", str(other)], check=True, capture_output=True)
    assert other.read_bytes() != outs[0]
