"""Run files, registries, exit codes and the command surface."""

import json
from pathlib import Path

import pytest

import main
from forge.core.config import get_settings
from forge.core.errors import ConfigError, DomainError, InvariantError, NumericalAbort
from forge.core.runconfig import load_run_config, parse_run_text
from forge.core.storage import LocalStorage
from forge.harness.base import CommandResult, CommandStatus, status_for
from forge.harness.compare import DEGENERATE, GAP, NO_GAP, build_report
from forge.harness.registry import get_command_handler, get_command_names, init_commands
from forge.ledger.constraints import check_constraints
from forge.ledger.search import find_min_a, golden_rows

GOLDEN_LEDGER = Path(__file__).parent / "golden" / "ledger_golden.csv"


def _write(tmp_path, text: str):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


class TestRunConfig:
    def test_defaults(self):
        config = load_run_config(None)
        assert config.n == 24
        assert config.lam == (5,)
        assert config.n_stages == 1

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown configuration key"):
            load_run_config(_write(tmp_path, "N = 16\nwarp = 9\n"))

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_run_text("N = 16\nN = 24\n")

    @pytest.mark.parametrize("text", ["N 16", " = 3"])
    def test_malformed_lines(self, text):
        with pytest.raises(ConfigError):
            parse_run_text(text)

    def test_comments_and_lists(self, tmp_path):
        path = _write(tmp_path, "# header\nlambda = 5, 10   # two stages\nnoise_support = 1:0:0, 0:1:1\n")
        config = load_run_config(path)
        assert config.lam == (5, 10)
        assert config.noise_support == ((1, 0, 0), (0, 1, 1))
        assert config.n_stages == 2

    def test_bad_support_vector(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(_write(tmp_path, "noise_support = 1:0\n"))

    def test_invalid_value(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(_write(tmp_path, "L = 0.5\n"))

    def test_stage_lists_disagree(self, tmp_path):
        config = load_run_config(_write(tmp_path, "lambda = 5, 10\nmu = 40, 50, 60\n"))
        with pytest.raises(ConfigError, match="disagree"):
            _ = config.n_stages

    def test_seed_override(self, tmp_path):
        config = load_run_config(_write(tmp_path, "seed = 3\n"), seed=11)
        assert config.seed == 11

    def test_resolved_text(self):
        text = load_run_config(None, seed=2).resolved_text()
        assert "N = 24" in text
        assert "lambda = 5" in text
        assert "seed = 2" in text
        assert "noise_support" not in text

    def test_resolved_text_parses_back(self, tmp_path):
        original = load_run_config(_write(tmp_path, "lambda = 5, 10\nnoise_support = 1:0:0\n"))
        reread = load_run_config(_write(tmp_path, original.resolved_text()))
        assert reread == original

    def test_builders(self):
        config = load_run_config(None)
        assert config.spectrum().amplitude == config.noise_amplitude
        assert len(config.iteration_config().stages) == 1
        assert config.galerkin_config().cutoff == config.galerkin_cutoff


class TestStatus:
    @pytest.mark.parametrize(
        "exc, status",
        [
            (ConfigError("x"), CommandStatus.CONFIG_ERROR),
            (InvariantError("x", 1.0, 0.0), CommandStatus.INVARIANT_FAILURE),
            (NumericalAbort("x"), CommandStatus.NUMERICAL_ABORT),
            (DomainError(1.0, 0.1), CommandStatus.CONFIG_ERROR),
            (FloatingPointError("x"), CommandStatus.NUMERICAL_ABORT),
        ],
    )
    def test_status_for(self, exc, status):
        assert status_for(exc) is status

    @pytest.mark.parametrize(
        "status, code",
        [
            (CommandStatus.OK, 0),
            (CommandStatus.INVARIANT_FAILURE, 1),
            (CommandStatus.CONFIG_ERROR, 2),
            (CommandStatus.NUMERICAL_ABORT, 3),
        ],
    )
    def test_exit_codes(self, status, code):
        assert status.exit_code == code

    def test_fail(self):
        result = CommandResult("x").fail("broken")
        assert result.exit_code == 1
        assert result.message == "broken"


class TestRegistry:
    def test_commands_registered(self):
        init_commands()
        assert set(get_command_names()) >= {"ou", "iterate", "ledger", "galerkin", "compare", "selftest"}
        assert callable(get_command_handler("ledger"))
        assert get_command_handler("nope") is None

    def test_init_is_idempotent(self):
        init_commands()
        before = get_command_names()
        init_commands()
        assert get_command_names() == before


class TestComparisonReport:
    def _report(self, T=0.05, u_energy=10.0, galerkin_energy=1.0):
        return build_report(
            T=T, K=4.0, T_L=1.0, trace=2.0, u_energy=u_energy, u0_energy=1.0,
            galerkin_energy=galerkin_energy, galerkin_se=0.01, x0_energy=1.0,
        )

    def test_threshold_and_bound(self):
        report = self._report()
        assert report.threshold == pytest.approx(4.0 * (1.0 + 0.05 * 2.0))
        assert report.galerkin_bound == pytest.approx(1.1)

    def test_degenerate_horizon(self):
        assert self._report(T=0.0).verdicts[0] == DEGENERATE

    def test_gap(self):
        assert self._report(u_energy=10.0).verdicts[0] == GAP

    def test_no_gap(self):
        assert self._report(u_energy=1.0).verdicts[0] == NO_GAP

    def test_inequality_lines(self):
        assert "galerkin energy inequality holds" in self._report().verdicts
        assert "galerkin energy inequality violated" in self._report(galerkin_energy=2.0).verdicts


class TestSelftest:
    def test_ledger_suite(self):
        from forge.harness.selftest import run_suites

        init_commands()
        rows = run_suites(module="ledger")
        assert len(rows) == 1
        assert rows[0]["status"] == "ok"
        assert rows[0]["measured"]["log2_min_a"] > 0

    def test_cheap_suites(self):
        from forge.harness.selftest import run_suites

        init_commands()
        for module in ("spectral", "stochastic", "waves"):
            rows = run_suites(module=module)
            assert rows and all(r["status"] == "ok" for r in rows), rows


class TestMain:
    def test_unknown_key_exits_2(self, tmp_path):
        cfg = _write(tmp_path, "warp = 9\n")
        assert main.run(["ledger", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2

    def test_bad_value_exits_2(self, tmp_path):
        cfg = _write(tmp_path, "family1 = seven\n")
        assert main.run(["ou", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 2

    def test_ledger_run(self, tmp_path):
        cfg = _write(tmp_path, "q_max = 1\n")
        out = tmp_path / "out"
        assert main.run(["ledger", "--config", str(cfg), "--out", str(out)]) == 0
        for name in ("resolved_config.cfg", "ledger.json", "ledger_golden.csv", "scales.csv", "min_a.json", "waves.json"):
            assert (out / name).exists(), name
        payload = json.loads((out / "ledger.json").read_text())
        assert payload["pass"] is True
        assert "q_max = 1" in (out / "resolved_config.cfg").read_text()
        waves = json.loads((out / "waves.json").read_text())
        for key in ("family0", "family1"):
            assert waves[key]["D_sampled"] <= waves[key]["D"] * (1 + 1e-9)

    def test_ledger_matches_golden_file(self, tmp_path):
        cfg = _write(tmp_path, "b = 6\nalpha = 0.25\nmargin = 1000\nc0 = 1000\nq_max = 10\n")
        runs = []
        for name in ("first", "second"):
            out = tmp_path / name
            assert main.run(["ledger", "--config", str(cfg), "--out", str(out)]) == 0
            runs.append((out / "ledger_golden.csv").read_bytes())
        assert runs[0] == runs[1]

        config = load_run_config(cfg)
        found = find_min_a(config.parameter_set(), config.q_max)
        report = check_constraints(config.parameter_set().with_a(found.log2_a, found.a), config.q_max)
        expected = LocalStorage(tmp_path / "rendered").write_csv(
            "ledger_golden.csv", ["name", "q", "relation", "log_slack", "pass"], golden_rows(report),
        )
        assert runs[0] == expected.read_bytes()

        if not GOLDEN_LEDGER.exists():
            GOLDEN_LEDGER.parent.mkdir(parents=True, exist_ok=True)
            GOLDEN_LEDGER.write_bytes(runs[0])
            pytest.skip(f"wrote {GOLDEN_LEDGER}; commit it")
        assert runs[0] == GOLDEN_LEDGER.read_bytes()

    def test_ou_run(self, tmp_path):
        cfg = _write(tmp_path, "N = 8\nL = 1.5\ndt = 0.05\nhorizon = 0.05\nnoise_support = 1:0:0, 0:1:1\n")
        out = tmp_path / "out"
        assert main.run(["ou", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
        stopping = json.loads((out / "stopping.json").read_text())
        assert stopping["seed"] == 4
        assert {"martingale_gap", "sign_flag"} <= stopping.keys()
        assert 0.0 < stopping["T_L"] <= 1.5
        lines = (out / "ou_norms.csv").read_text().splitlines()
        assert lines[0].startswith("t,")
        assert len(lines) == 1 + 31

    def test_compare_is_identical_across_thread_counts(self, tmp_path, monkeypatch):
        cfg = _write(tmp_path, "N = 16\nstages = 0\nhorizon = 0.0125\nensemble = 8\ngalerkin_cutoff = 2\n")
        outputs = {}
        for threads in ("1", "8"):
            monkeypatch.setenv("FORGE_THREADS", threads)
            get_settings.cache_clear()
            out = tmp_path / f"threads_{threads}"
            assert main.run(["compare", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
            outputs[threads] = out
        for name in ("comparison.json", "energy.csv", "galerkin_stats.csv"):
            assert (outputs["1"] / name).read_bytes() == (outputs["8"] / name).read_bytes(), name
