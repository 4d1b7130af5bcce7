import csv
import json

import numpy as np
import pytest

from roughness import fbm_path
from roughness.cli import EXIT_DEGENERATE, EXIT_INPUT, EXIT_OK, EXIT_USAGE, main


@pytest.fixture
def series_csv(tmp_path):
    values = fbm_path(0.45, 9, seed=31).values
    p = tmp_path / "series.csv"
    with open(p, "w") as fh:
        fh.write("ts,value\n")
        for i, v in enumerate(values):
            fh.write(f"t{i},{float(v)!r}\n")
    return str(p)


def run(args):
    return main(args)


class TestExitCodes:
    def test_success(self, series_csv, tmp_path):
        out = tmp_path / "out.json"
        rc = run(["estimate", "--kind", "terminal", "--input", series_csv,
                  "--value-col", "value", "--json", str(out)])
        assert rc == EXIT_OK

    def test_input_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("v\n1\n2\nNA\n4\n")
        rc = run(["estimate", "--input", str(bad), "--value-col", "v", "--json", "-"])
        assert rc == EXIT_INPUT

    def test_missing_file(self, tmp_path):
        rc = run(["estimate", "--input", str(tmp_path / "nope.csv"), "--json", "-"])
        assert rc == EXIT_INPUT

    def test_degenerate(self, tmp_path):
        flat = tmp_path / "flat.csv"
        flat.write_text("\n".join(["5.0"] * 9) + "\n")
        rc = run(["estimate", "--kind", "gladyshev", "--input", str(flat),
                  "--value-col", "0", "--json", "-"])
        assert rc == EXIT_DEGENERATE

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run(["estimate", "--no-such-flag"])
        assert exc.value.code == EXIT_USAGE

    def test_non_dyadic_without_policy(self, tmp_path):
        p = tmp_path / "odd.csv"
        values = np.sin(np.arange(100, dtype=float))  # non-degenerate shape
        p.write_text("\n".join(repr(v) for v in values.tolist()) + "\n")
        rc = run(["estimate", "--input", str(p), "--value-col", "0", "--json", "-"])
        assert rc == EXIT_INPUT
        rc = run(["estimate", "--input", str(p), "--value-col", "0",
                  "--length-policy", "truncate-head", "--json", "-"])
        assert rc == EXIT_OK


class TestEstimate:
    def test_json_contents(self, series_csv, tmp_path):
        out = tmp_path / "est.json"
        rc = run(["estimate", "--kind", "terminal", "--n", "9", "--m", "1",
                  "--alpha", "geometric:0.5", "--input", series_csv,
                  "--value-col", "value", "--json", str(out)])
        assert rc == EXIT_OK
        body = json.loads(out.read_text())
        assert body["command"] == "estimate"
        res = body["results"][0]
        assert {"H", "log2_lambda", "weights"} <= set(res)
        assert body["config"]["input"]["path"] == series_csv
        assert body["config"]["alpha"] == [1.0, 0.5]

    def test_explicit_alpha_list(self, series_csv, tmp_path):
        out = tmp_path / "est.json"
        rc = run(["estimate", "--kind", "sequential", "--m", "2", "--alpha", "1,0.5,0.2",
                  "--input", series_csv, "--value-col", "value", "--json", str(out)])
        assert rc == EXIT_OK
        assert json.loads(out.read_text())["config"]["alpha"] == [1.0, 0.5, 0.2]

    def test_golden_bytes_stable(self, series_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["estimate", "--kind", "regression", "--m", "2", "--alpha", "uniform",
                "--input", series_csv, "--value-col", "value"]
        assert run(args + ["--json", str(a)]) == EXIT_OK
        assert run(args + ["--json", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestSimulate:
    def test_table_shape_and_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "--estimator", "gladyshev", "--n", "8",
                "--H", "0.3..0.5:0.2", "--paths", "6", "--seed", "1", "--json", "-"]
        # capture stdout json to /dev/null by writing csv only
        assert run(args[:-2] + ["--json", str(tmp_path / "a.json"), "--csv", str(a)]) == EXIT_OK
        assert run(args[:-2] + ["--json", str(tmp_path / "b.json"), "--csv", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.DictReader(open(a)))
        assert [r["H_true"] for r in rows] == ["0.3", "0.5"]
        assert set(rows[0]) == {"H_true", "mean", "sd", "max", "min", "paths", "failures"}

    def test_seed_in_envelope(self, tmp_path):
        out = tmp_path / "sim.json"
        run(["simulate", "--estimator", "terminal", "--n", "9", "--m", "1",
             "--alpha", "geometric:0.5", "--H", "0.5", "--paths", "4",
             "--seed", "42", "--json", str(out)])
        body = json.loads(out.read_text())
        assert body["seed"] == 42
        assert body["config"]["estimator"] == "terminal"


class TestRoll:
    def test_csv_rows_with_timestamps(self, tmp_path):
        values = fbm_path(0.5, 11, seed=8).values
        src = tmp_path / "long.csv"
        with open(src, "w") as fh:
            fh.write("ts,v\n")
            for i, v in enumerate(values):
                fh.write(f"t{i},{float(v)!r}\n")
        out_csv = tmp_path / "roll.csv"
        rc = run(["roll", "--n", "9", "--stride", "256", "--input", str(src),
                  "--value-col", "v", "--time-col", "ts",
                  "--json", str(tmp_path / "roll.json"), "--csv", str(out_csv)])
        assert rc == EXIT_OK
        rows = list(csv.DictReader(open(out_csv)))
        assert rows[0]["offset"] == "0" and rows[0]["timestamp"] == "t0"
        assert rows[1]["offset"] == "256" and rows[1]["timestamp"] == "t256"
        body = json.loads((tmp_path / "roll.json").read_text())
        assert body["config"]["windows"] == len(rows)


class TestAnalyzeAndDiagnose:
    def test_analyze_csv_levels_table(self, series_csv, tmp_path):
        out_csv = tmp_path / "levels.csv"
        rc = run(["analyze", "--input", series_csv, "--value-col", "value",
                  "--json", str(tmp_path / "an.json"), "--csv", str(out_csv)])
        assert rc == EXIT_OK
        rows = list(csv.DictReader(open(out_csv)))
        assert len(rows) == 9  # one per level
        assert float(rows[-1]["s"]) > 0

    def test_diagnose_runs(self, series_csv, tmp_path):
        out = tmp_path / "diag.json"
        rc = run(["diagnose", "--input", series_csv, "--value-col", "value",
                  "--p", "2,4", "--nu", "2", "--H-candidate", "0.45",
                  "--json", str(out)])
        assert rc == EXIT_OK
        body = json.loads(out.read_text())
        sections = {s["section"] for s in body["results"]}
        assert "reverse_jensen" in sections and "bias" in sections


class TestConfigFile:
    def test_defaults_from_config(self, series_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "sequential", "m": 2, "alpha": "uniform"}))
        out = tmp_path / "out.json"
        rc = run(["estimate", "--input", series_csv, "--value-col", "value",
                  "--config", str(cfg), "--json", str(out)])
        assert rc == EXIT_OK
        body = json.loads(out.read_text())
        assert body["config"]["kind"] == "sequential"
        assert body["config"]["m"] == 2

    def test_flags_override_config(self, series_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "sequential"}))
        out = tmp_path / "out.json"
        rc = run(["estimate", "--kind", "terminal", "--input", series_csv,
                  "--value-col", "value", "--config", str(cfg), "--json", str(out)])
        assert rc == EXIT_OK
        assert json.loads(out.read_text())["config"]["kind"] == "terminal"

    def test_bad_config_is_input_error(self, series_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("not json")
        rc = run(["estimate", "--input", series_csv, "--value-col", "value",
                  "--config", str(cfg), "--json", "-"])
        assert rc == EXIT_INPUT


class TestServerDispatch:
    def test_posts_to_server(self, series_csv, tmp_path, monkeypatch):
        from fastapi.testclient import TestClient

        from roughness.service.app import app

        tc = TestClient(app)
        seen = {}

        def fake_post(url, json=None, timeout=None):
            seen["url"] = url
            return tc.post(url.replace("http://unit.test", ""), json=json)

        import httpx

        monkeypatch.setattr(httpx, "post", fake_post)
        out = tmp_path / "remote.json"
        rc = run(["estimate", "--kind", "terminal", "--input", series_csv,
                  "--value-col", "value", "--server", "http://unit.test",
                  "--json", str(out)])
        assert rc == EXIT_OK
        assert seen["url"] == "http://unit.test/estimate"
        body = json.loads(out.read_text())
        assert body["command"] == "estimate"

    def test_remote_degeneracy_maps_to_exit_3(self, tmp_path, monkeypatch):
        from fastapi.testclient import TestClient

        from roughness.service.app import app

        tc = TestClient(app)

        def fake_post(url, json=None, timeout=None):
            return tc.post(url.replace("http://unit.test", ""), json=json)

        import httpx

        monkeypatch.setattr(httpx, "post", fake_post)
        flat = tmp_path / "flat.csv"
        flat.write_text("\n".join(["1.0"] * 9) + "\n")
        rc = run(["estimate", "--kind", "gladyshev", "--input", str(flat),
                  "--value-col", "0", "--server", "http://unit.test", "--json", "-"])
        assert rc == EXIT_DEGENERATE
