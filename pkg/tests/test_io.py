import json
import math
import os

import numpy as np
import pytest

from highconc import io
from highconc.angular import RotSymModel
from highconc.dataset import Dataset
from highconc.rng import SeededStream
from highconc.sampling import sample

DATA = os.path.join(os.path.dirname(__file__), "..", "data", "synthetic_decinc.csv")


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_decinc_mapping():
    np.testing.assert_allclose(io.decinc_to_cartesian(0.0, 90.0), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(io.decinc_to_cartesian(90.0, 0.0), [0, 1, 0], atol=1e-15)
    dec, inc = io.cartesian_to_decinc(io.decinc_to_cartesian([10.0, 200.0], [-30.0, 45.0]))
    np.testing.assert_allclose(dec, [10, 200])
    np.testing.assert_allclose(inc, [-30, 45])


def test_ingest_cartesian(tmp_path):
    d = io.ingest(_write(tmp_path, "# x,y,z\n0.6,0.8,0\n\n0,0,1.0005\n"))
    np.testing.assert_array_equal(d.rows[0], [0.6, 0.8, 0.0])
    assert d.n == 2
    with pytest.raises(io.IngestError, match="line 2"):
        io.ingest(_write(tmp_path, "1,0,0\n0.6,0.8,0.1\n"))
    with pytest.raises(io.IngestError, match="line 1"):
        io.ingest(_write(tmp_path, "0,0,0\n"))
    d = io.ingest(_write(tmp_path, "0.6,0.8,0.1\n"), norm_tol=0.01)
    assert abs(np.linalg.norm(d.rows[0]) - 1) < 1e-15


def test_ingest_errors(tmp_path):
    with pytest.raises(io.IngestError, match="line 3"):
        io.ingest(_write(tmp_path, "#h\n1,0,0\n1,0\n"))
    with pytest.raises(io.IngestError, match="line 2"):
        io.ingest(_write(tmp_path, "1,0\nfoo,1\n"))
    with pytest.raises(io.IngestError):
        io.ingest(_write(tmp_path, "# only a header\n"))
    with pytest.raises(io.IngestError):
        io.ingest(_write(tmp_path, "1,2,3\n"), "decinc-csv")
    with pytest.raises(ValueError):
        io.ingest(_write(tmp_path, "1,0\n"), "json")


def test_ingest_decinc(tmp_path):
    d = io.ingest(_write(tmp_path, "# dec,inc\n0,90\n90,0\n"), "decinc-csv")
    np.testing.assert_allclose(d.rows, [[0, 0, 1], [0, 1, 0]], atol=1e-15)


def test_round_trip(tmp_path):
    x = sample(RotSymModel([0.2, 0.1, 0.97], 30.0), 50, SeededStream(1)).rows
    path = str(tmp_path / "s.csv")
    io.write_dataset_csv(path, x, "sample")
    y = io.ingest(path)
    np.testing.assert_allclose(y.rows, x, atol=1e-15)


def test_atomic_write_leaves_no_temp(tmp_path):
    path = str(tmp_path / "out" / "r.json")
    io.write_report(path, {"a": 1.5, "b": np.float64(2.0), "c": [np.nan]}, "demo")
    doc = io.read_report(path)
    assert doc["schema"] == 1 and doc["kind"] == "demo"
    assert doc["result"] == {"a": 1.5, "b": 2.0, "c": [None]}
    assert os.listdir(tmp_path / "out") == ["r.json"]


def test_report_float_precision():
    v = 0.1 + 0.2
    doc = json.loads(io.report_json({"v": v}, "x", timestamp=False))
    assert doc["result"]["v"] == v
    assert "timestamp" not in doc


def test_analyze_examples():
    rep = io.analyze(np.tile([0, 0, 1.0], (10, 1)))
    np.testing.assert_allclose(rep.spherical_mean, [0, 0, 1])
    assert rep.caps[0]["threshold"] == 1.0 and rep.caps[0]["degenerate"]
    assert rep.kappa_hat is None and rep.error is None
    x = sample(RotSymModel([0, 0.6, 0.8], 40.0), 30, SeededStream(2))
    th = io.analyze(x).spherical_mean
    rep = io.analyze(x, (0.9, 0.95), theta0=th)
    assert len(rep.caps) == 2
    assert rep.tests[0]["statistic"] == pytest.approx(0.0, abs=1e-12)
    assert rep.tests[0]["p_value"] == 1.0
    bad = io.analyze([[1, 0, 0], [-1, 0, 0]])
    assert bad.error is not None


def test_analysis_report_round_trip():
    x = sample(RotSymModel([0, 0.6, 0.8], 40.0), 30, SeededStream(3))
    rep = io.analyze(x, theta0=[0, 0, 1])
    doc = json.loads(io.report_json(rep.to_dict(), "analysis"))
    back = io.AnalysisReport.from_dict(doc["result"])
    assert back == rep
    assert abs(np.linalg.norm(back.spherical_mean) - 1) < 1e-15


def test_leave_one_out():
    x = np.tile([0.0, 0.0, 1.0], (5, 1))
    x[:, :] = [0.6, 0.0, 0.8]
    rep = io.leave_one_out(Dataset(x))
    assert len(rep.entries) == 5 and rep.degenerate == 0
    means = {tuple(e["spherical_mean"]) for e in rep.entries}
    assert len(means) == 1
    with pytest.raises(ValueError):
        io.leave_one_out(x[:2])


def test_synthetic_standin():
    d = io.ingest(DATA, "decinc-csv")
    assert d.n == 62 and d.p == 3
    rep = io.leave_one_out(d)
    assert len(rep.entries) == 62 and rep.degenerate == 0
    assert rep.max_angle_deg < 1.0


def test_histogram_and_power_csv(tmp_path):
    h = {"bin_left": [0.0, 1.0], "bin_right": [1.0, 2.0], "count": [3, 1],
         "density": [0.75, 0.25], "chi2_density": [0.5, 0.3]}
    p = tmp_path / "h.csv"
    io.atomic_write(str(p), io.histogram_csv(h))
    rows = io.read_csv_table(str(p))
    assert list(rows[0]) == list(io.HIST_COLUMNS) and rows[1]["count"] == "1"
    text = io.power_csv([{"ell": 0.0, "freq_watson": 0.05, "freq_wald": 0.04,
                          "theoretical_power": 0.05}])
    assert text.splitlines()[0] == "ell,freq_watson,freq_wald,theoretical_power"
