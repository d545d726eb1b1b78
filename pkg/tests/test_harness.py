import json
from pathlib import Path

import numpy as np
import pytest

from coneiter import (ComparisonTable, ConfigurationError, ExperimentConfig,
                      PreconditionError, builtin_scalar_p, experiment,
                      load_config, run_experiment)
from coneiter.cli import main

import oracles


def minimal_config(**overrides):
    data = {
        "schema_version": "1",
        "name": "mini",
        "space": {"kind": "scalar_p", "p": 1.0},
        "operator": {"kind": "saturating"},
        "schemes": [{"scheme": "multi_inertial", "label": "mi",
                     "alpha": 0.2, "beta": 0.2, "gamma": 0.2,
                     "lambda": 0.6, "delta": 0.1,
                     "x0": 1.0, "x1": 0.5, "max_iter": 6}],
        "output": {"csv": True, "json": True, "svg": False, "decimals": 4},
    }
    data.update(overrides)
    return data


class TestConfigValidation:
    def test_minimal_parses(self):
        cfg = ExperimentConfig.from_dict(minimal_config())
        assert cfg.name == "mini" and cfg.decimals == 4

    def test_missing_space(self):
        bad = minimal_config()
        del bad["space"]
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict(bad)

    def test_empty_schemes(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict(minimal_config(schemes=[]))

    def test_unknown_scheme(self):
        bad = minimal_config()
        bad["schemes"][0]["scheme"] = "simulated_annealing"
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict(bad)

    def test_duplicate_labels(self):
        bad = minimal_config()
        bad["schemes"] = [bad["schemes"][0], dict(bad["schemes"][0])]
        with pytest.raises(ConfigurationError, match="duplicate"):
            ExperimentConfig.from_dict(bad)

    def test_unknown_builtins(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict(minimal_config(space={"kind": "banach"}))
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict(
                minimal_config(operator={"kind": "unknown_map"}))

    def test_coincidence_needs_pair(self):
        bad = minimal_config()
        bad["schemes"] = [{"scheme": "coincidence", "x0": [1.0, 1.0]}]
        del bad["operator"]
        with pytest.raises(ConfigurationError, match="pair"):
            ExperimentConfig.from_dict(bad)

    def test_schema_version_guard(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict(minimal_config(schema_version="2"))

    def test_load_config_errors(self, tmp_path):
        missing = tmp_path / "nope.json"
        with pytest.raises(ConfigurationError):
            load_config(missing)
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(bad)


class TestRunExperiment:
    def test_minimal_run_matches_reference_head(self):
        result = run_experiment(ExperimentConfig.from_dict(minimal_config()))
        col = result.comparison.column("mi")
        for got, want in zip(col, oracles.PUBLISHED_EX4_MULTI):
            assert got == pytest.approx(want, abs=5e-5)

    def test_precondition_gate(self):
        bad = minimal_config()
        bad["schemes"][0]["alpha"] = 1.2
        cfg = ExperimentConfig.from_dict(bad)
        with pytest.raises(PreconditionError, match="kappa_b_alpha"):
            run_experiment(cfg)
        result = run_experiment(cfg, force=True)  # forced runs still report
        assert not result.preconditions["mi"].passed

    def test_comparison_alignment_with_offset(self):
        result = run_experiment(experiment("ex2"))
        col = result.comparison.column("pure_map")
        assert col[0] is None          # starts at subscript 1
        assert col[1] == pytest.approx(0.5, abs=1e-12)
        assert col[2] == pytest.approx(0.4, abs=1e-12)

    def test_outputs_written(self, tmp_path):
        result = run_experiment(experiment("ex4"))
        written = result.write(tmp_path, svg=True)
        names = {p.name for p in written}
        assert {"ex4.km_lam05.csv", "ex4.km_lam06.csv", "ex4.inertial_km.csv",
                "ex4.multi_inertial.csv", "ex4.comparison.csv", "ex4.json",
                "ex4.svg"} <= names
        data = json.loads((tmp_path / "ex4.json").read_text())
        assert data["schema_version"] == "1"
        assert set(data["traces"]) == {"km_lam05", "km_lam06",
                                       "inertial_km", "multi_inertial"}

    def test_comparison_csv_reproduces_reference(self, tmp_path):
        run_experiment(experiment("ex4")).write(tmp_path)
        lines = (tmp_path / "ex4.comparison.csv").read_text().splitlines()
        header = lines[0].split(",")
        rows = [line.split(",") for line in lines[1:]]
        km_idx = header.index("km_lam05")
        got = [float(r[km_idx]) for r in rows]
        for value, want in zip(got, oracles.PUBLISHED_EX4_KM):
            assert value == pytest.approx(want, abs=5e-5)

    def test_blank_cells_for_missing_range(self, tmp_path):
        run_experiment(experiment("ex2")).write(tmp_path)
        lines = (tmp_path / "ex2.comparison.csv").read_text().splitlines()
        header = lines[0].split(",")
        first = lines[1].split(",")
        assert first[header.index("pure_map")] == ""

    def test_summary_mentions_notes(self):
        result = run_experiment(experiment("ex4"))
        text = result.summary()
        assert "0.5" in text and "0.6" in text and "reference row" in text

    def test_ex3_probe_and_r2_trace_roundtrip(self, tmp_path):
        from coneiter import trace_from_json, trace_to_csv, trace_to_json
        result = run_experiment(experiment("ex3"))
        assert result.probe_reports
        assert result.probe_reports[0].violation_count > 0
        assert result.certificates["coincidence"].verdict == "certified"
        result.write(tmp_path)
        data = json.loads((tmp_path / "ex3.json").read_text())
        assert data["traces"]["coincidence"]["space"]["kind"] == "r2_matrix"
        trace = result.traces["coincidence"]
        reloaded = trace_from_json(trace_to_json(trace))
        assert trace_to_csv(reloaded) == trace_to_csv(trace)


class TestFormatting:
    def test_round_half_even(self):
        # 0.03125 is exactly representable and ties at the fourth decimal
        assert f"{0.03125:.4f}" == "0.0312"
        assert f"{2.5:.0f}" == "2" and f"{3.5:.0f}" == "4"

    def test_numeric_not_string_comparison(self):
        # parse back and compare numerically, tolerating formatting
        table = ComparisonTable(n_values=[0], columns={"a": [0.123449999]},
                                reference=[0.0])
        cell = table.to_csv(decimals=4).splitlines()[1].split(",")[1]
        assert float(cell) == pytest.approx(0.123449999, abs=5e-5)


class TestFigureOutput:
    def test_svg_deterministic_and_self_contained(self, tmp_path):
        result = run_experiment(experiment("ex4"))
        from coneiter.figures import render_comparison_svg
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_comparison_svg(result.comparison, a, title="ex4")
        render_comparison_svg(result.comparison, b, title="ex4")
        blob_a, blob_b = a.read_bytes(), b.read_bytes()
        assert blob_a == blob_b
        text = blob_a.decode("utf-8")
        assert 'href="http' not in text and "url(http" not in text
        assert "@import" not in text


class TestCLI:
    def test_run_success(self, tmp_path, capsys):
        cfg = tmp_path / "mini.json"
        cfg.write_text(json.dumps(minimal_config()), encoding="utf-8")
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "experiment: mini" in out
        assert (tmp_path / "out" / "mini.mi.csv").exists()

    def test_run_reads_trace_csv_for_reference_values(self, tmp_path):
        cfg = tmp_path / "mini.json"
        cfg.write_text(json.dumps(minimal_config()), encoding="utf-8")
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "mini.comparison.csv").read_text().splitlines()
        values = [float(line.split(",")[1]) for line in lines[1:]]
        for got, want in zip(values, oracles.PUBLISHED_EX4_MULTI):
            assert got == pytest.approx(want, abs=5e-5)

    def test_run_bad_config_exit_1(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{oops", encoding="utf-8")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        cfg.write_text(json.dumps(minimal_config(space={"kind": "nope"})),
                       encoding="utf-8")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1

    def test_run_precondition_exit_2_and_force(self, tmp_path, capsys):
        data = minimal_config()
        data["schemes"][0]["alpha"] = 1.2
        data["schemes"][0]["max_iter"] = 3
        cfg = tmp_path / "steep.json"
        cfg.write_text(json.dumps(data), encoding="utf-8")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "kappa_b_alpha" in capsys.readouterr().err  # failing check named
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path),
                     "--force"]) == 0

    def test_run_divergence_exit_3(self, tmp_path):
        data = minimal_config(operator={"kind": "linear", "q": 2.0})
        data["schemes"][0]["lambda"] = 0.9
        data["schemes"][0]["max_iter"] = 500
        cfg = tmp_path / "divergent.json"
        cfg.write_text(json.dumps(data), encoding="utf-8")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path),
                     "--force"]) == 3

    def test_example_subcommand(self, tmp_path, capsys):
        code = main(["example", "ex2", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "pure map" in out
        assert (tmp_path / "ex2.comparison.csv").exists()

    def test_check_space_clean(self, capsys):
        assert main(["check", "--space", "scalar_p:0.5",
                     "--samples", "2000", "--seed", "7"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert all(c["failures"] == 0 for c in data["axioms"])

    def test_check_operator_clean(self):
        assert main(["check", "--op", "saturating", "--class", "qne",
                     "--samples", "2000", "--seed", "1"]) == 0

    def test_check_pair_violations_exit_4(self, capsys):
        code = main(["check", "--pair", "S=T=linear:0.8", "--samples", "200",
                     "--seed", "2"])
        assert code == 4
        data = json.loads(capsys.readouterr().out)
        assert data["violation_count"] > 0

    def test_check_identity_pair_clean(self):
        assert main(["check", "--pair", "S=identity,T=linear:0.8",
                     "--samples", "500", "--seed", "3"]) == 0

    def test_check_bad_spec_exit_1(self):
        assert main(["check", "--space", "hilbert:2"]) == 1
        assert main(["check", "--op", "linear:0.8", "--class", "contraction"]) == 1
        assert main(["check"]) == 1
