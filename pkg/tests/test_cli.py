import json

import pytest

from sdlab.cli import RunConfig, parse_args, run
from sdlab.experiment import METHOD_NAMES


class TestParseArgs:
    def test_toy_echo(self):
        config = parse_args(["toy", "--x", "1.0", "--iters", "100000", "--seed", "7"])
        assert config.command == "toy"
        assert config.x == 1.0 and config.iters == 100000 and config.seed == 7
        assert config.burnin == 10000  # default: one tenth of the chain

    def test_default_burnin_at_default_length(self):
        assert parse_args(["probit"]).burnin == 2000

    def test_probit_defaults(self):
        config = parse_args(["probit"])
        assert config.command == "probit"
        assert config.data is None  # bundled file
        assert config.iters == 20000 and config.replicas == 100 and config.seed == 42
        assert config.methods == METHOD_NAMES and config.format == "csv"

    def test_zero_iters_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            parse_args(["probit", "--iters", "0"])
        assert exc.value.code != 0

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            parse_args(["toy", "--bogus", "1"])
        assert exc.value.code != 0

    def test_unknown_method(self):
        with pytest.raises(SystemExit):
            parse_args(["probit", "--methods", "mr,nuts"])

    def test_empty_methods(self):
        with pytest.raises(SystemExit):
            parse_args(["probit", "--methods", ","])

    def test_burnin_must_be_below_iters(self):
        with pytest.raises(SystemExit):
            parse_args(["probit", "--iters", "100", "--burnin", "100"])

    def test_methods_parsed(self):
        config = parse_args(["probit", "--methods", "mr,vw"])
        assert config.methods == ("mr", "vw")

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"iters": 500, "seed": 9, "methods": ["mr", "chib"]}))
        config = parse_args(["probit", "--config", str(cfg)])
        assert config.iters == 500 and config.seed == 9
        assert config.methods == ("mr", "chib")

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"iters": 500, "seed": 9}))
        config = parse_args(["probit", "--config", str(cfg), "--seed", "77"])
        assert config.iters == 500 and config.seed == 77

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"itters": 500}))
        with pytest.raises(SystemExit):
            parse_args(["probit", "--config", str(cfg)])

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(SystemExit):
            parse_args(["probit", "--config", str(tmp_path / "none.json")])


class TestToyCommand:
    def test_output_contains_closed_form(self, capsys):
        code = run(RunConfig(command="toy", x=0.0, iters=2000, burnin=200, seed=1))
        out = capsys.readouterr().out
        assert code == 0
        assert "1.1283791" in out
        assert "coherence statistic" in out

    def test_json_format(self, capsys):
        code = run(RunConfig(command="toy", x=1.0, iters=2000, burnin=200, seed=1, format="json"))
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert payload["bf_closed"] == pytest.approx(1.2281359899638933, rel=1e-12)
        assert payload["mr"]["estimate"] > 0 and payload["vw"]["estimate"] > 0

    def test_output_file(self, tmp_path):
        out = tmp_path / "toy.txt"
        code = run(RunConfig(command="toy", x=0.0, iters=1500, burnin=100, seed=3, out=str(out)))
        assert code == 0 and "closed-form" in out.read_text()


class TestProbitCommand:
    def test_csv_shape(self, tmp_path, capsys):
        out = tmp_path / "cells.csv"
        config = RunConfig(
            command="probit", iters=250, burnin=25, replicas=2, seed=4,
            methods=("mr", "vw"), out=str(out),
        )
        assert run(config) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("method,replica,")
        assert len(lines) == 1 + 2 * 2  # two rows per method

    def test_stdout_and_json(self, capsys):
        config = RunConfig(
            command="probit", iters=200, burnin=20, replicas=1, seed=4,
            methods=("chib",), format="json",
        )
        assert run(config) == 0
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 1 and rows[0]["method"] == "chib"
        assert rows[0]["elapsed_ms"] is None

    def test_missing_data_file_exit_2(self, capsys, tmp_path):
        config = RunConfig(command="probit", data=str(tmp_path / "gone.csv"), replicas=1, iters=100, burnin=10)
        assert run(config) == 2
        assert "error" in capsys.readouterr().err

    def test_repeat_run_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            config = RunConfig(
                command="probit", iters=200, burnin=20, replicas=2, seed=12,
                methods=("vw",), out=str(path),
            )
            assert run(config) == 0
        assert a.read_bytes() == b.read_bytes()


class TestValidateCommand:
    def test_validate_passes(self, capsys):
        assert run(RunConfig(command="validate", seed=42)) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL " not in out
        assert out.strip().endswith("OK: all checks passed")
