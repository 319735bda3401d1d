import csv
import json

import numpy as np
import pytest

from dancing.cli import main, write_samples
from dancing.conics import NON_PULLBACK_EXAMPLE
from dancing.errors import InvalidParams, UnknownSuite
from dancing.render import plot
from dancing.suites import REPORT_KEYS, run_verify, sample_rng


def test_rng_is_counter_based():
    a = sample_rng(5, 3).standard_normal(4)
    b = sample_rng(5, 3).standard_normal(4)
    c = sample_rng(5, 4).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_unknown_suite():
    with pytest.raises(UnknownSuite):
        run_verify("nope", 0, 1, 1e-8)
    assert main(["verify", "nope"]) == 2


def test_bad_sample_count():
    with pytest.raises(ValueError):
        run_verify("flat-metric", 0, 0, 1e-8)


def test_verify_json_schema_and_exit(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["verify", "flat-metric", "--seed", "42", "--samples", "20", "--json", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    assert tuple(data) == REPORT_KEYS
    assert data["suite"] == "flat-metric" and data["seed"] == 42 and data["samples"] == 20
    assert data["failures"] == [] and data["maxResidual"] < 1e-8
    assert data["measuredConstants"]["einsteinLambda"] == pytest.approx(6.0)
    assert "PASS" in capsys.readouterr().err


def test_failures_give_exit_one(tmp_path):
    out = tmp_path / "r.json"
    # a tolerance no float computation meets forces failures
    code = main(["verify", "flat-metric", "--samples", "3", "--tol", "-1", "--json", str(out)])
    assert code == 1
    failures = json.loads(out.read_text())["failures"]
    assert failures and {"check", "index", "inputs", "residual"} <= set(failures[0])


def test_verify_is_byte_identical(tmp_path):
    paths = [tmp_path / f"{k}.json" for k in range(2)]
    for p in paths:
        main(["verify", "conics", "--seed", "3", "--samples", "9", "--json", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_conics_report_echoes_counterexample():
    rep = run_verify("conics", 1, 6, 1e-8)
    assert rep.ok
    mc = rep.measured_constants
    assert mc["nonPullbackMResidual"] == pytest.approx(6 * np.sqrt(2) - 6.5, abs=1e-12)
    assert mc["expansionFactor"] == 2.0


def test_floats_round_trip(tmp_path):
    rep = run_verify("flat-metric", 1, 5, 1e-8)
    back = json.loads(rep.to_json())
    assert back["maxResidual"] == rep.max_residual
    assert rep.to_json().endswith("\n")


@pytest.mark.parametrize("kind", ["flat-pairs", "conic-pairs", "ellipse-states", "trajectory"])
def test_samples_deterministic(tmp_path, kind):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sample", kind, "--seed", "3", "--count", "10", "--out", str(a)]) == 0
    write_samples(kind, 3, 10, b)
    assert a.read_bytes() == b.read_bytes()


def _rows(path):
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(fh)]


def test_flat_pairs_non_incident(tmp_path):
    out = tmp_path / "f.csv"
    write_samples("flat-pairs", 3, 10, out)
    rows = _rows(out)
    assert len(rows) == 10
    for r in rows:
        P = np.array([r["P0"], r["P1"], r["P2"]])
        L = np.array([r["L0"], r["L1"], r["L2"]])
        assert abs(P @ L) > 1e-3


def test_conic_pairs_valid(tmp_path):
    out = tmp_path / "c.csv"
    write_samples("conic-pairs", 3, 10, out)
    for r in _rows(out):
        a = np.array([r["a0"], r["a1"], r["a2"]])
        A = np.array([[r["A11"], r["A12"], r["A13"]], [r["A12"], r["A22"], r["A23"]],
                      [r["A13"], r["A23"], r["A33"]]])
        assert abs(a @ A @ a) > 1e-3 and abs(np.linalg.det(A)) > 1e-3


def test_unknown_sample_kind(tmp_path):
    assert main(["sample", "nope", "--out", str(tmp_path / "x.csv")]) == 2


def test_plot_dancing_pair(tmp_path):
    svg = plot("dancing-pair", {}, tmp_path / "p.svg").read_text()
    assert svg.startswith("<?xml") or svg.startswith("<svg")
    assert "<script" not in svg
    assert svg.count("<line") == 3 and svg.count("<circle") == 3


def test_plot_conic_dance(tmp_path):
    svg = plot("conic-dance", {}, tmp_path / "c.svg").read_text()
    assert svg.count("<circle") == 6
    assert svg.count("<polyline") >= 3


def test_plot_conic_dance_from_pair_file(tmp_path):
    a, A, b, B = NON_PULLBACK_EXAMPLE
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"a": a.tolist(), "A": A.tolist(), "b": b.tolist(), "B": B.tolist()}))
    out = tmp_path / "c.svg"
    assert main(["plot", "conic-dance", "--pair-file", str(pair), "--out", str(out)]) == 0
    assert "<polyline" in out.read_text()


def test_plot_ellipse_dance_with_trajectory(tmp_path):
    traj = tmp_path / "t.csv"
    write_samples("trajectory", 1, 50, traj)
    out = tmp_path / "e.svg"
    assert main(["plot", "ellipse-dance", "--b", "2", "--trajectory", str(traj),
                 "--out", str(out)]) == 0
    svg = out.read_text()
    assert svg.count("<polyline") == 3
    assert svg.count("<circle") >= 3


def test_plot_alpha_surface(tmp_path):
    svg = plot("alpha-surface", {}, tmp_path / "a.svg").read_text()
    assert svg.count("<line") == 4


def test_plot_invalid(tmp_path):
    with pytest.raises(InvalidParams):
        plot("nope", {}, tmp_path / "x.svg")
    with pytest.raises(InvalidParams):
        plot("ellipse-dance", {"b": 1.0}, tmp_path / "x.svg")
    with pytest.raises(InvalidParams):
        plot("dancing-pair", {"P": [1, 0, 0]}, tmp_path / "x.svg")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["plot", "conic-dance", "--pair-file", str(bad), "--out", str(tmp_path / "y.svg")]) == 2
