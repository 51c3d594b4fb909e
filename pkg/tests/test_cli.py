import csv
import json

import pytest

from lyapwander.cli import main


def _json(path):
    doc = json.loads(path.read_text())
    doc.pop("timestamps")
    return doc


def _csv(path):
    lines = path.read_text().splitlines()
    meta = json.loads(lines[0][2:])
    return meta, list(csv.reader(lines[1:]))


def test_trace_outputs_and_reproducibility(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["trace", "--out", str(a)]) == 0
    assert main(["trace", "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert _json(a / "omega.json") == _json(b / "omega.json")
    meta, rows = _csv(a / "trace.csv")
    assert meta["params"] == {"r": 1, "gamma": 3, "eps1": 0.025, "eps2": 0.02} and meta["M"] == 3
    assert rows[0] == ["n", "a_n", "epoch", "block_phase"] and len(rows) == 29484 + 1
    om = _json(a / "omega.json")
    assert abs(om["lo"] - 0.0225) < 5e-3 and abs(om["hi"] - 0.02375) < 5e-3
    assert "omega estimate" in capsys.readouterr().out


def test_sweep(tmp_path):
    assert main(["sweep", "--sigma", "0.4,0.1", "--nmax", "30000", "--out", str(tmp_path)]) == 0
    _, rows = _csv(tmp_path / "sweep.csv")
    assert [r[0] for r in rows[1:]] == ["0.4", "0.1"]
    assert main(["sweep", "--sigma", "1.0", "--out", str(tmp_path)]) == 2


def test_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL inequalities" in out and "PASS recurrences" in out
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["M"] == 3 and not rep["ok"]
    assert main(["verify", "--wandering-only", "--out", str(tmp_path)]) == 0


def test_config_errors(tmp_path, capsys):
    missing = tmp_path / "none.json"
    assert main(["verify", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"r": 1, "gamma": 3, "eps1": 0.03, "eps2": 0.02}')
    assert main(["trace", "--config", str(bad), "--out", str(tmp_path)]) == 2
    good = tmp_path / "good.json"
    good.write_text('{"r": 1, "gamma": 3, "eps1": 0.012, "eps2": 0.0096}')
    assert main(["verify", "--config", str(good), "--out", str(tmp_path)]) == 0
    with pytest.raises(SystemExit):
        main(["dump-sequences", "--m-range", "5:2"])


def test_wander(tmp_path):
    assert main(["wander", "--out", str(tmp_path)]) == 0
    body = _json(tmp_path / "wander.json")
    assert body["disjoint"]
    _, rows = _csv(tmp_path / "birkhoff.csv")
    fr = [float(r[1]) for r in rows[1:]]
    assert fr == sorted(fr) and fr[-1] > 0.9


def test_spectrum_small(tmp_path):
    assert main(["spectrum", "--grid", "24", "--hit-samples", "500", "--horizon", "300",
                 "--count", "3", "--out", str(tmp_path)]) == 0
    body = _json(tmp_path / "spectrum.json")
    assert abs(body["eigenvalues"][0]["abs"] - 1) < 1e-10
    assert body["steps_per_operator"] == 35 and body["q_hat"] >= 1


def test_dump_sequences(tmp_path):
    assert main(["dump-sequences", "--m-range", "4:5", "--out", str(tmp_path)]) == 0
    _, rows = _csv(tmp_path / "sequences.csv")
    assert len(rows) == 1 + 81 + 243
