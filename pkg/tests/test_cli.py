"""CLI behavior: exit codes, output contracts, CSV format."""

import json

import numpy as np
import pytest

from qjn.cli import main

from conftest import make_doc


@pytest.fixture
def split_path(tmp_path):
    doc = make_doc(nodes=[("i1", 3.0), ("i2", 2.0), ("i3", 2.0)],
                   sources=[("s1", 1.0, {"i1": 1.0})],
                   routing={"i1": {"i2": 0.4, "i3": 0.6}, "i2": {}, "i3": {}})
    path = tmp_path / "split.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def cyclic_path(tmp_path):
    doc = make_doc(nodes=[("i1", 2.0), ("i2", 2.0)],
                   sources=[("s1", 0.5, {"i1": 1.0})],
                   routing={"i1": {"i2": 0.5}, "i2": {"i1": 0.5}})
    path = tmp_path / "cyclic.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def unstable_path(tmp_path):
    doc = make_doc(nodes=[("i1", 1.0)], sources=[("s1", 1.2, {"i1": 1.0})],
                   routing={"i1": {}})
    path = tmp_path / "unstable.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestValidate:
    def test_ok(self, split_path, capsys):
        assert main(["validate", split_path]) == 0
        out = capsys.readouterr().out
        assert "feed_forward" in out
        assert "ok" in out

    def test_unstable_exit_2(self, unstable_path, capsys):
        assert main(["validate", unstable_path]) == 2
        assert "i1" in capsys.readouterr().out

    def test_cyclic_exit_2(self, cyclic_path, capsys):
        assert main(["validate", cyclic_path]) == 2
        assert "loop-back" in capsys.readouterr().out

    def test_malformed_exit_1(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        assert main(["validate", str(p)]) == 1

    def test_missing_file_exit_1(self):
        assert main(["validate", "/no/such/file.json"]) == 1

    def test_usage_error_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["validate"])
        assert exc.value.code == 1


class TestAnalyze:
    def test_split_value(self, split_path, capsys):
        assert main(["analyze", split_path]) == 0
        out = capsys.readouterr().out
        assert "0.397436" in out
        assert "s1->i1->i2->d" in out and "s1->i1->i3->d" in out

    def test_cyclic_exit_2(self, cyclic_path):
        assert main(["analyze", cyclic_path]) == 2

    def test_unstable_exit_2(self, unstable_path):
        assert main(["analyze", unstable_path]) == 2

    def test_csv(self, split_path, tmp_path, capsys):
        csv = tmp_path / "routes.csv"
        assert main(["analyze", split_path, "--csv", str(csv)]) == 0
        lines = csv.read_text().splitlines()
        assert lines[0].startswith("# qjn v1, seed=0, spec_hash=")
        assert lines[1] == "source,route,probability,survival,contribution,source_capacity"
        assert len(lines) == 4


class TestSimulate:
    def test_reports_and_covers(self, split_path, capsys):
        rc = main(["simulate", split_path, "--emissions", "50000", "--seed", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "0.397436" in out  # analytical column

    def test_csv_deterministic(self, split_path, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["simulate", split_path, "--emissions", "20000",
                         "--seed", "9", "--csv", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_replications_pool(self, split_path, capsys):
        rc = main(["simulate", split_path, "--emissions", "20000", "--seed", "1",
                   "--replications", "3"])
        assert rc == 0
        assert "batches pooled: 60" in capsys.readouterr().out

    def test_cyclic_runs_with_na_column(self, cyclic_path, capsys):
        rc = main(["simulate", cyclic_path, "--emissions", "5000", "--seed", "0"])
        assert rc == 0
        assert "n/a (loop-back)" in capsys.readouterr().out

    def test_trace_export(self, split_path, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        rc = main(["simulate", split_path, "--emissions", "500", "--seed", "0",
                   "--trace-csv", str(trace)])
        assert rc == 0
        assert len(trace.read_text().splitlines()) == 501


class TestOptimize:
    def test_tandem(self, capsys):
        assert main(["optimize", "--topology", "tandem", "--m", "2", "--kappa", "1"]) == 0
        assert "0.438447" in capsys.readouterr().out

    def test_homogeneous_parallel(self, capsys):
        assert main(["optimize", "--topology", "parallel", "--mu", "1", "--kappa", "1"]) == 0
        out = capsys.readouterr().out
        assert "1.17157" in out and "0.5" in out

    def test_heterogeneous_split(self, capsys):
        rc = main(["optimize", "--topology", "parallel", "--mu1", "2", "--mu2", "3",
                   "--kappa", "1", "--lambda", "1.9"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "golden_section" in out
        assert "closed_form_delta" in out

    def test_spec_path(self, split_path, capsys):
        assert main(["optimize", split_path]) == 0
        assert "grid_refine" in capsys.readouterr().out

    def test_missing_args_exit_1(self, capsys):
        assert main(["optimize", "--topology", "tandem"]) == 1

    def test_infeasible_exit_2(self, capsys):
        rc = main(["optimize", "--topology", "parallel", "--mu1", "2", "--mu2", "3",
                   "--kappa", "1", "--lambda", "6"])
        assert rc == 2


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# qjn v1, seed=")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return header, rows


class TestSweep:
    def test_preset_fig3_stdout(self, capsys):
        assert main(["sweep", "--preset", "fig3"]) == 0
        header, rows = read_csv(capsys.readouterr().out)
        assert header == ["lambda", "capacity_kappa_1", "capacity_kappa_0.5"]
        assert len(rows) == 100
        lam = np.array([float(r[0]) for r in rows])
        c1 = np.array([float(r[1]) for r in rows])
        want = lam * (1 - lam) ** 2 / (2 - lam) ** 2
        assert np.max(np.abs(c1 - want)) < 1e-12

    def test_preset_fig5(self, capsys):
        assert main(["sweep", "--preset", "fig5"]) == 0
        header, rows = read_csv(capsys.readouterr().out)
        assert header == ["delta", "capacity_lambda_1", "capacity_lambda_1.9"]
        assert len(rows) == 101

    def test_generic_lambda_sweep_flags_infeasible(self, split_path, capsys):
        # nodes i2/i3 saturate at lambda = 2/0.4 = 5 and 2/0.6 = 3.33
        rc = main(["sweep", split_path, "--param", "lambda", "--from", "0.5",
                   "--to", "4.0", "--steps", "8"])
        assert rc == 0
        header, rows = read_csv(capsys.readouterr().out)
        assert header[:2] == ["lambda", "feasible"]
        flags = [r[1] for r in rows]
        assert "yes" in flags and "no" in flags
        for r in rows:
            if r[1] == "no":
                assert r[2] == ""

    def test_generic_sweep_simulated_columns(self, split_path, capsys):
        rc = main(["sweep", split_path, "--param", "kappa", "--from", "0.5",
                   "--to", "1.5", "--steps", "3", "--simulate",
                   "--emissions", "5000", "--seed", "1"])
        assert rc == 0
        header, rows = read_csv(capsys.readouterr().out)
        assert header == ["kappa", "feasible", "capacity_s1", "estimate_s1", "ci_s1"]
        for r in rows:
            assert float(r[4]) > 0.0

    def test_delta_sweep(self, tmp_path, capsys):
        doc = make_doc(nodes=[("i1", 2.0), ("i2", 3.0)],
                       sources=[("s1", 1.0, {"i1": 0.5, "i2": 0.5})],
                       routing={"i1": {}, "i2": {}})
        p = tmp_path / "par.json"
        p.write_text(json.dumps(doc))
        rc = main(["sweep", str(p), "--param", "delta", "--from", "0.0",
                   "--to", "1.0", "--steps", "11"])
        assert rc == 0
        header, rows = read_csv(capsys.readouterr().out)
        got = [float(r[2]) for r in rows]
        # delta=0.5 row must match the worked closed-form example
        assert got[5] == pytest.approx(0.657142857142857, abs=1e-12)

    def test_sweep_bad_range_exit_1(self, split_path):
        assert main(["sweep", split_path, "--param", "lambda", "--from", "2.0",
                     "--to", "1.0", "--steps", "5"]) == 1

    def test_sweep_cyclic_exit_2(self, cyclic_path):
        assert main(["sweep", cyclic_path, "--param", "lambda", "--from", "0.1",
                     "--to", "0.5", "--steps", "3"]) == 2

    def test_csv_determinism_with_simulation(self, split_path, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["sweep", split_path, "--param", "lambda", "--from", "0.2",
                         "--to", "0.8", "--steps", "3", "--simulate",
                         "--emissions", "2000", "--seed", "5", "--csv", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unicode_param_alias(self, split_path, capsys):
        rc = main(["sweep", split_path, "--param", "λ", "--from", "0.2",
                   "--to", "0.8", "--steps", "3"])
        assert rc == 0
