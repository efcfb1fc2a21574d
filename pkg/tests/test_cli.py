import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ratio_rmt import cli
from ratio_rmt.cli import main, read_ratios_file, write_ratios_file
from ratio_rmt.ensemble import SampleMeta, RatioSample


def run_cli(*args):
    return main(list(args))


class TestRatiosFileFormat:
    def test_roundtrip(self):
        sample = RatioSample(
            ratios=np.array([0.25, 1.5, 3.141592653589793]),
            meta=SampleMeta(beta=2, k=0.5, source="simulated", seed=7,
                            n_requested=3, n_discarded=1))
        buf = io.StringIO()
        write_ratios_file(sample, buf)
        back = read_ratios_file(io.StringIO(buf.getvalue()))
        assert np.array_equal(back.ratios, sample.ratios)
        assert back.meta.beta == 2 and back.meta.k == 0.5
        assert back.meta.seed == 7 and back.meta.n_discarded == 1

    def test_optional_fields_omitted(self):
        sample = RatioSample(
            ratios=np.array([2.0]),
            meta=SampleMeta(beta=None, k=None, source="levels", seed=None,
                            n_requested=1, n_discarded=0, mode="centered"))
        buf = io.StringIO()
        write_ratios_file(sample, buf)
        text = buf.getvalue()
        assert "beta" not in text and "seed" not in text
        back = read_ratios_file(io.StringIO(text))
        assert back.meta.beta is None and back.meta.mode == "centered"


class TestSimulate:
    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a.ratios"
        b = tmp_path / "b.ratios"
        assert run_cli("simulate", "--beta", "1", "--k", "1", "--n", "1000",
                       "--seed", "7", "--out", str(a)) == 0
        assert run_cli("simulate", "--beta", "1", "--k", "1", "--n", "1000",
                       "--seed", "7", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_deterministic_across_thread_env(self, tmp_path):
        files = []
        for threads in ("1", "4"):
            out = tmp_path / f"t{threads}.ratios"
            env = dict(os.environ, RATIO_RMT_THREADS=threads)
            code = subprocess.run(
                [sys.executable, "-m", "ratio_rmt.cli", "simulate", "--beta", "2",
                 "--k", "0.3", "--n", "70000", "--seed", "11", "--out", str(out)],
                env=env, capture_output=True).returncode
            assert code == 0
            files.append(out.read_bytes())
        assert files[0] == files[1]

    def test_beyond_analytic_range_allowed_with_note(self, tmp_path, capsys):
        out = tmp_path / "k13.ratios"
        assert run_cli("simulate", "--beta", "1", "--k", "1.3", "--n", "50",
                       "--seed", "1", "--out", str(out)) == 0
        assert "outside the analytic-fit regime" in capsys.readouterr().err

    def test_sampler_domain_rejected(self, tmp_path):
        assert run_cli("simulate", "--beta", "1", "--k", "1.5", "--n", "10",
                       "--seed", "1", "--out", str(tmp_path / "x")) == 2


class TestPdf:
    def test_known_rows_csv(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run_cli("pdf", "--beta", "2", "--k", "0", "--r-min", "0",
                       "--r-max", "2", "--points", "5", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        rows = [l for l in lines if l and not l.startswith("#") and "," in l]
        header, *data = rows
        assert header == "r,pdf"
        r1 = dict(tuple(row.split(",")) for row in data)["1"]
        assert float(r1) == pytest.approx(0.34377467707849396, abs=1e-12)
        assert any(l.startswith("# normalization:") for l in lines)

    def test_surmise_row(self, tmp_path):
        out = tmp_path / "s.json"
        assert run_cli("pdf", "--beta", "1", "--k", "1", "--r-min", "1",
                       "--r-max", "1", "--points", "1", "--format", "json",
                       "--out", str(out)) == 0
        doc = json.loads(out.read_text())
        assert doc["rows"] == [[1.0, pytest.approx(0.4330127018922193, abs=1e-12)]]
        assert doc["normalization"] == pytest.approx(1.0, abs=1e-5)

    def test_single_point_grid_validation(self, tmp_path):
        assert run_cli("pdf", "--beta", "2", "--k", "0.5", "--r-min", "1",
                       "--r-max", "2", "--points", "1",
                       "--out", str(tmp_path / "x")) == 2

    def test_k_out_of_range_rejected(self, tmp_path):
        assert run_cli("pdf", "--beta", "2", "--k", "1.5",
                       "--out", str(tmp_path / "x")) == 2

    def test_byte_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert run_cli("pdf", "--beta", "2", "--k", "0.35", "--r-min", "0.1",
                           "--r-max", "5", "--points", "20", "--grid", "log",
                           "--out", str(path)) == 0
        assert a.read_bytes() == b.read_bytes()


class TestFit:
    def _simulate(self, tmp_path, beta="2", k="0.3", n="20000", seed="9"):
        path = tmp_path / "sample.ratios"
        assert run_cli("simulate", "--beta", beta, "--k", k, "--n", n,
                       "--seed", seed, "--out", str(path)) == 0
        return path

    def test_recovers_k(self, tmp_path):
        src = self._simulate(tmp_path)
        out = tmp_path / "fit.json"
        assert run_cli("fit", str(src), "--beta", "2", "--bootstrap", "50",
                       "--out", str(out)) == 0
        doc = json.loads(out.read_text())
        assert abs(doc["result"]["k_hat"] - 0.3) < 0.03
        assert doc["result"]["ci_low"] <= doc["result"]["k_hat"] <= doc["result"]["ci_high"]

    def test_small_sample_warning_flag(self, tmp_path):
        src = self._simulate(tmp_path, n="10")
        out = tmp_path / "fit.json"
        assert run_cli("fit", str(src), "--beta", "2", "--bootstrap", "0",
                       "--out", str(out)) == 0
        assert json.loads(out.read_text())["result"]["small_sample_warning"] is True

    def test_empty_file_exit_2(self, tmp_path):
        empty = tmp_path / "empty.ratios"
        empty.write_text("# ratio-rmt ratios v1\n")
        assert run_cli("fit", str(empty), "--beta", "2") == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert run_cli("fit", str(tmp_path / "nope.ratios"), "--beta", "2") == 2

    def test_histogram_method(self, tmp_path):
        src = self._simulate(tmp_path)
        out = tmp_path / "fit.json"
        assert run_cli("fit", str(src), "--beta", "2", "--method",
                       "histogram-ls", "--out", str(out)) == 0
        doc = json.loads(out.read_text())
        assert doc["result"]["method"] == "histogram-least-squares"
        assert abs(doc["result"]["k_hat"] - 0.3) < 0.06


class TestIngest:
    LEVELS = "energy,entropy\n0.0,6.1\n1.0,5.0\n3.0,6.3\n4.0,6.0\n"

    def test_all_adjacent(self, tmp_path):
        src = tmp_path / "levels.csv"
        src.write_text(self.LEVELS)
        out = tmp_path / "out.ratios"
        assert run_cli("ingest", str(src), "--entropy-threshold", "5.5",
                       "--out", str(out)) == 0
        back = read_ratios_file(io.StringIO(out.read_text()))
        assert list(back.ratios) == [2.0, 0.5]
        assert back.meta.entropy_threshold == 5.5

    def test_centered_mode(self, tmp_path):
        src = tmp_path / "levels.csv"
        src.write_text(self.LEVELS)
        out = tmp_path / "out.ratios"
        assert run_cli("ingest", str(src), "--entropy-threshold", "5.5",
                       "--mode", "centered", "--out", str(out)) == 0
        back = read_ratios_file(io.StringIO(out.read_text()))
        assert list(back.ratios) == [2.0]

    def test_flag_column_without_threshold(self, tmp_path):
        src = tmp_path / "levels.csv"
        src.write_text("energy,localized\n0.0,0\n1.0,1\n3.0,0\n")
        out = tmp_path / "out.ratios"
        assert run_cli("ingest", str(src), "--out", str(out)) == 0
        back = read_ratios_file(io.StringIO(out.read_text()))
        assert list(back.ratios) == [2.0]

    def test_no_localized_warns_but_succeeds(self, tmp_path, capsys):
        src = tmp_path / "levels.csv"
        src.write_text("energy,localized\n0.0,0\n1.0,0\n3.0,0\n")
        out = tmp_path / "out.ratios"
        assert run_cli("ingest", str(src), "--out", str(out)) == 0
        assert "no ratios extracted" in capsys.readouterr().err
        assert len(read_ratios_file(io.StringIO(out.read_text()))) == 0

    def test_parse_error_exit_2(self, tmp_path):
        src = tmp_path / "levels.csv"
        src.write_text("energy\n1.0\nbogus\n")
        assert run_cli("ingest", str(src), "--out", str(tmp_path / "x")) == 2

    def test_gg_flag(self, tmp_path):
        src = tmp_path / "levels.csv"
        src.write_text("energy,localized\n0.0,1\n1.0,0\n3.0,1\n4.0,1\n")
        out = tmp_path / "out.ratios"
        assert run_cli("ingest", str(src), "--gg", "--mode", "centered",
                       "--out", str(out)) == 0
        back = read_ratios_file(io.StringIO(out.read_text()))
        assert list(back.ratios) == [2.0]


class TestValidate:
    def test_quick_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert run_cli("validate", "--suite", "quick", "--out", str(out)) == 0
        doc = json.loads(out.read_text())
        assert doc["failures"] == 0
        assert all(c["ok"] for c in doc["checks"])
        assert "checks passed" in capsys.readouterr().out

    def test_tampered_fixture_exit_1(self, tmp_path):
        from ratio_rmt.oracle import load_fixtures, save_fixtures
        records = load_fixtures()
        records = json.loads(json.dumps(records))
        records[3]["value"] += 5e-4
        bad = tmp_path / "bad.json"
        save_fixtures(records, bad)
        assert run_cli("validate", "--suite", "quick", "--fixtures", str(bad)) == 1


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["pdf", "--beta", "3", "--k", "0.5"])
    assert exc.value.code == 2
