import json
import math

import numpy as np
import pytest

from wqc_optim import cli, lqr
from wqc_optim.exceptions import InvalidInputError
from wqc_optim.harness import (SCHEMA_VERSION, EnvelopeReport, ExperimentConfig,
                               compare_algorithms, load_config, run_experiment,
                               run_experiment_full, thread_count)

DIAG_1_100 = ((1.0, 0.0), (0.0, 100.0))


class TestEnvelopeReport:
    def test_dominance_tolerance(self):
        rep = EnvelopeReport.build("f_gap", [1.0, 1.0 + 5e-10, 1.0 + 2e-9], [1.0, 1.0, 1.0])
        assert [r[3] for r in rep.rows] == [True, True, False]
        assert rep.first_violation == 2
        assert rep.max_ratio == pytest.approx(1.0 + 2e-9)

    def test_zero_envelope(self):
        assert EnvelopeReport.build("f", [0.0], [0.0]).ok
        assert math.isinf(EnvelopeReport.build("f", [1e-300], [0.0]).max_ratio)


class TestRunExperiment:
    def test_agd1_quad_defaults(self):
        traj, env = run_experiment(ExperimentConfig("quad", "agd1"))
        assert env.first_violation is None
        assert len(env.rows) == len(traj) == 501

    def test_flat_quartic_envelope_column(self):
        traj, env = run_experiment(ExperimentConfig("flat_quartic", "agd1", max_iter=100))
        L = 12.0
        r0sq = 1.0
        for k, (_, _, e, dominated) in enumerate(env.rows):
            assert e == pytest.approx(4 * L * r0sq / (2 + k) ** 2, rel=1e-14)
            assert dominated
        assert [r.envelope for r in traj] == [row[2] for row in env.rows]

    def test_gd_records_alternative_indexing(self):
        _, env = run_experiment(ExperimentConfig("quad", "gd", stepsize_rule="gamma_over_L"))
        assert env.ok
        # Shifting the index by one bounds the starting point below its own distance.
        assert env.indexing["alternative_first_violation"] == 0
        assert "indexing" in env.to_dict(include_rows=False)

    def test_outputs(self, tmp_path):
        prefix = str(tmp_path / "out" / "run")
        traj, _ = run_experiment(ExperimentConfig("sinsq", "agd2", output_prefix=prefix))
        csv_lines = (tmp_path / "out" / "run.csv").read_text().splitlines()
        assert csv_lines[0] == "k,f,grad_norm,envelope,wall_nanos"
        assert len(csv_lines) == len(traj) + 1
        report = json.loads((tmp_path / "out" / "run.json").read_text())
        assert report["schema_version"] == SCHEMA_VERSION
        assert report["envelope"]["first_violation"] is None
        assert report["params_source"] == "catalogue"

    def test_deterministic_bytes(self, tmp_path):
        cfg = {"objective": "quad", "algorithm": "oqa", "output_prefix": "res"}
        (tmp_path / "cfg.json").write_text(json.dumps(cfg))
        written = []
        for _ in range(2):
            run_experiment_full(load_config(tmp_path / "cfg.json"))
            written.append([(tmp_path / f"res.{ext}").read_bytes() for ext in ("csv", "json")])
        assert written[0] == written[1]

    def test_estimate_embeds_constants(self):
        res = run_experiment_full(ExperimentConfig("sinsq", "gd", params="estimate"))
        assert res.params_source == "estimated"
        assert res.report["params"]["gamma"] == pytest.approx(0.496, abs=1e-3)
        assert res.envelope.ok

    def test_estimate_growth_constants_for_agd2(self):
        res = run_experiment_full(ExperimentConfig("sinsq", "agd2", params="estimate"))
        assert res.params.mu == pytest.approx(2.0, rel=1e-5)

    def test_unstable_lqr_start(self, tmp_path):
        data = {"A": [[1.5]], "B": [[1.0]], "Q": [[1.0]], "R": [[1.0]], "Sigma0": [[1.0]],
                "K0": [[0.0]]}
        path = tmp_path / "unstable.json"
        path.write_text(json.dumps(data))
        with pytest.raises(InvalidInputError, match="K0"):
            run_experiment(ExperimentConfig(str(path), "gd"))

    def test_lqr_builtin(self):
        _, env = run_experiment(ExperimentConfig("lqr:scalar", "agd1", max_iter=200,
                                                 gap_tol=1e-10))
        assert env.ok

    @pytest.mark.parametrize("kwargs", [
        dict(algorithm="newton"),
        dict(params="guess"),
        dict(algorithm="oqa", params={"L": 8.0, "gamma": 0.5, "mu": 0.0}),
        dict(algorithm="gd", stepsize_rule="fixed"),
        dict(algorithm="agd1", stepsize_rule="one_over_L"),
        dict(max_iter=0),
        dict(x0="origin"),
    ])
    def test_invalid_configs(self, kwargs):
        base = dict(objective="sinsq", algorithm="gd")
        base.update(kwargs)
        with pytest.raises(InvalidInputError):
            ExperimentConfig(**base)

    def test_unknown_objective(self):
        with pytest.raises(InvalidInputError, match="neither"):
            run_experiment(ExperimentConfig("nope.json", "gd"))

    def test_config_unknown_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"objective": "quad", "algorithm": "gd", "lr": 0.1}))
        with pytest.raises(InvalidInputError, match="lr"):
            load_config(path)

    def test_relative_problem_path(self, tmp_path):
        (tmp_path / "p.json").write_text(json.dumps(lqr.SCALAR_PROBLEM))
        (tmp_path / "c.json").write_text(json.dumps(
            {"objective": "p.json", "algorithm": "agd1", "max_iter": 50, "gap_tol": 1e-10}))
        _, env = run_experiment(load_config(tmp_path / "c.json"))
        assert env.ok


class TestCompare:
    def test_agd_beats_gd_at_condition_100(self):
        table = compare_algorithms([
            ExperimentConfig("quad", "agd1", H=DIAG_1_100, max_iter=2000),
            ExperimentConfig("quad", "gd", H=DIAG_1_100, max_iter=5000,
                             stepsize_rule="gamma_over_L"),
        ])
        agd, gd = (row["iterations"]["1e-06"] for row in table.rows)
        L, mu, r0sq = 100.0, 1.0, 18.0
        agd_bound = math.ceil(math.sqrt(L / mu) * math.log(L * r0sq / 1e-6)) + 1
        gd_bound = math.ceil(math.log(L * r0sq / (2 * 1e-6)) / -math.log(1 - mu / L))
        assert agd <= agd_bound and gd <= gd_bound
        assert agd < gd
        assert "eps=1e-06" in table.to_text()

    def test_single_row(self):
        table = compare_algorithms([ExperimentConfig("quad", "agd1")])
        assert len(table.rows) == 1
        assert table.to_dict()["schema_version"] == SCHEMA_VERSION

    def test_sinsq_all_reach_1e4(self):
        from wqc_optim.objectives import make_nonconvex_test_objective
        wq = make_nonconvex_test_objective("sinsq").info.wq_params
        # Quadratic averaging runs on the W-class constants the growth constants embed into
        # at a = mu (gamma halves).
        w_embedded = {"L": wq.L, "gamma": wq.gamma / 2, "mu": wq.mu}
        table = compare_algorithms([
            ExperimentConfig("sinsq", "gd", x0=[4.0]),
            ExperimentConfig("sinsq", "agd1", x0=[4.0]),
            ExperimentConfig("sinsq", "agd2", x0=[4.0]),
            ExperimentConfig("sinsq", "oqa", x0=[4.0], params=w_embedded),
        ])
        counts = {row["label"]: row["iterations"]["0.0001"] for row in table.rows}
        assert all(v is not None for v in counts.values())
        # Regression record of the counts at the time of writing.
        assert counts == {"gd(default)": 23, "agd1": 6, "agd2": 8, "oqa": 1}

    def test_mismatched(self):
        with pytest.raises(InvalidInputError):
            compare_algorithms([ExperimentConfig("quad", "agd1"),
                                ExperimentConfig("sinsq", "agd1")])
        with pytest.raises(InvalidInputError):
            compare_algorithms([ExperimentConfig("sinsq", "agd1", x0=[1.0]),
                                ExperimentConfig("sinsq", "agd1", x0=[2.0])])


@pytest.mark.parametrize("value,expected", [("3", 3), ("1", 1), ("", None), ("0", None)])
def test_thread_count(monkeypatch, value, expected):
    monkeypatch.setenv("WQC_OPTIM_THREADS", value)
    n = thread_count()
    assert n == expected if expected else n >= 1


@pytest.mark.parametrize("value", ["-1", "two"])
def test_thread_count_invalid(monkeypatch, value):
    monkeypatch.setenv("WQC_OPTIM_THREADS", value)
    with pytest.raises(InvalidInputError):
        thread_count()


class TestCli:
    def test_verify_quad(self, capsys):
        assert cli.main(["verify", "--objective", "quad", "--box", "-2", "2", "--grid", "101"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["gamma"] == 1.0 and out["violations"] == 0
        assert out["report"]["class_kind"] == "WQSC" and out["report"]["violations"] == []
        assert out["mu"] == pytest.approx(1.0, abs=1e-9)

    def test_run_missing_config(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2

    @pytest.mark.parametrize("argv", [["run", "--config", "x", "--bogus"], ["frobnicate"], [],
                                      ["bench", "--suite", "huge"]])
    def test_usage_errors(self, argv, capsys):
        assert cli.main(argv) == 2
        assert "usage" in capsys.readouterr().err

    def test_run_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"objective": "flat_quartic", "algorithm": "agd1", "dim": 2,
                                   "max_iter": 50, "output_prefix": "out/r"}))
        assert cli.main(["run", "--config", str(cfg)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["envelope"]["first_violation"] is None
        assert (tmp_path / "out" / "r.csv").exists()

    def test_run_invalid_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"objective": "quad"}))
        assert cli.main(["run", "--config", str(cfg)]) == 2
        assert "algorithm" in capsys.readouterr().err

    def test_lqr_pipeline(self, tmp_path, capsys):
        path = tmp_path / "p.json"
        path.write_text(json.dumps(lqr.TWO_STATE_PROBLEM))
        assert cli.main(["lqr", "--problem", str(path), "--algorithm", "agd1",
                         "--out", str(tmp_path / "lqr")]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["wqsc_check"]["ok"]
        assert out["final"]["f_gap"] <= 1e-10
        assert (tmp_path / "lqr.json").exists()

    def test_lqr_missing_file(self, tmp_path):
        assert cli.main(["lqr", "--problem", str(tmp_path / "x.json"), "--algorithm", "gd"]) == 2
