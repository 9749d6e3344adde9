"""CLI subcommands, file formats, and exit codes."""

import json
import math

import pytest

from grouptest.cli import main
from grouptest.model import design_from_json, gen_exact_constant


@pytest.fixture
def hand_design(tmp_path):
    """The two-test worked design: t0={0,1}, t1={1,2}."""
    path = tmp_path / "hand.json"
    path.write_text(
        json.dumps(
            {
                "kind": "near_constant",
                "N": 3,
                "T": 2,
                "params": {"L": 2, "nu": None},
                "seed": 0,
                "columns": [[0], [0, 1], [1]],
            }
        )
    )
    return path


class TestDesignCommand:
    def test_round_trip(self, tmp_path):
        out = tmp_path / "d.json"
        rc = main(
            ["design", "--kind", "ccw", "--N", "5", "--T", "7", "--L", "2",
             "--seed", "9", "--out", str(out)]
        )
        assert rc == 0
        assert design_from_json(out.read_text()) == gen_exact_constant(5, 7, 2, 9)

    def test_nu_requires_k(self):
        assert main(["design", "--kind", "ncc", "--N", "5", "--T", "7", "--nu", "0.7"]) == 1

    def test_nu_with_k(self, tmp_path, capsys):
        out = tmp_path / "d.json"
        rc = main(
            ["design", "--kind", "bernoulli", "--N", "50", "--T", "30",
             "--nu", str(math.log(2)), "--K", "5", "--seed", "1", "--out", str(out)]
        )
        assert rc == 0
        obj = json.loads(out.read_text())
        assert abs(obj["params"]["p"] - math.log(2) / 5) < 1e-12
        assert abs(obj["params"]["nu"] - math.log(2)) < 1e-12

    def test_requires_exactly_one_parameterization(self):
        assert main(["design", "--kind", "ncc", "--N", "5", "--T", "7"]) == 1
        assert (
            main(["design", "--kind", "ncc", "--N", "5", "--T", "7", "--L", "2", "--p", "0.5"])
            == 1
        )

    def test_p_only_for_bernoulli(self):
        assert main(["design", "--kind", "ncc", "--N", "5", "--T", "7", "--p", "0.5"]) == 1

    def test_io_error_exit_code(self):
        rc = main(
            ["design", "--kind", "ncc", "--N", "3", "--T", "3", "--L", "1",
             "--out", "/nonexistent/dir/x.json"]
        )
        assert rc == 3


class TestDecodeCommand:
    def test_worked_example(self, hand_design, tmp_path):
        out = tmp_path / "r.json"
        rc = main(
            ["decode", "--design", str(hand_design), "--outcome", "10",
             "--alg", "comp", "--out", str(out)]
        )
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["status"] == "ok"
        assert payload["estimate"] == [0]
        assert payload["pd_set"] == [0]

    @pytest.mark.parametrize("alg,want", [("dd", [0]), ("scomp", [0]), ("sss", [0])])
    def test_other_algorithms(self, hand_design, tmp_path, alg, want):
        out = tmp_path / "r.json"
        rc = main(
            ["decode", "--design", str(hand_design), "--outcome", "10",
             "--alg", alg, "--out", str(out)]
        )
        assert rc == 0
        assert json.loads(out.read_text())["estimate"] == want

    def test_bad_outcome_length(self, hand_design):
        rc = main(["decode", "--design", str(hand_design), "--outcome", "101", "--alg", "comp"])
        assert rc == 1

    def test_malformed_json_reports_position(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"kind": "ncc",\n  broken}')
        rc = main(["decode", "--design", str(bad), "--outcome", "1", "--alg", "comp"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "line 2" in err and "column" in err

    def test_missing_design_file(self, tmp_path):
        rc = main(["decode", "--design", str(tmp_path / "none.json"), "--outcome", "1", "--alg", "comp"])
        assert rc == 3


class TestSimulateCommand:
    def _config(self, tmp_path, **overrides):
        obj = {
            "n_items": 20,
            "k": 2,
            "t_grid": [5, 10],
            "designs": [{"kind": "ncc", "nu": 0.6931471805599453}],
            "decoders": ["comp", "dd"],
            "trials": 25,
            "master_seed": 4,
        }
        obj.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(obj))
        return path

    def test_writes_csv(self, tmp_path):
        cfg = self._config(tmp_path)
        out = tmp_path / "out.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("design,decoder,nu,N,K,T")
        assert len(lines) == 1 + 2 * 2

    def test_zero_trials_invalid(self, tmp_path):
        cfg = self._config(tmp_path, trials=0)
        assert main(["simulate", "--config", str(cfg)]) == 1

    def test_override_wins(self, tmp_path):
        cfg = self._config(tmp_path, trials=0)
        out = tmp_path / "out.csv"
        rc = main(["simulate", "--config", str(cfg), "--set", "trials=5", "--out", str(out)])
        assert rc == 0
        assert ",5," in out.read_text().splitlines()[1]

    def test_unknown_override_key_invalid(self, tmp_path):
        cfg = self._config(tmp_path)
        assert main(["simulate", "--config", str(cfg), "--set", "typo=5"]) == 1

    def test_unsatisfiable_grid_invalid(self, tmp_path):
        cfg = self._config(tmp_path, t_grid=[10, 5])
        assert main(["simulate", "--config", str(cfg)]) == 1


class TestRatesCommand:
    def test_default_grid_contains_worked_row(self, tmp_path):
        out = tmp_path / "rates.csv"
        assert main(["rates", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "theta,curve,rate"
        assert "0.50,ncc_dd,0.693147" in lines
        # 99 thetas x 7 curves
        assert len(lines) == 1 + 99 * 7

    def test_custom_grid(self, tmp_path):
        out = tmp_path / "rates.csv"
        assert main(["rates", "--theta-min", "0.4", "--theta-max", "0.6", "--step", "0.1",
                     "--out", str(out)]) == 0
        body = out.read_text()
        assert "0.40," in body and "0.50," in body and "0.60," in body

    def test_rejects_bad_grid(self):
        assert main(["rates", "--theta-min", "0.0"]) == 1
        assert main(["rates", "--step", "-1"]) == 1


class TestVerifyCommand:
    def test_quick_suite_passes(self, capsys):
        assert main(["verify", "--quick"]) == 0
        out = capsys.readouterr().out
        assert "checks passed" in out
        assert "FAIL" not in out


def test_unknown_subcommand_is_config_error():
    assert main(["frobnicate"]) == 1


def test_missing_subcommand_is_config_error():
    assert main([]) == 1
