import json
import os
from pathlib import Path

import pytest

from focusing_gibbs.cli_runner import (
    EXIT_ERROR,
    EXIT_INCONCLUSIVE,
    EXIT_SUCCESS,
    ConfigError,
    OutputDir,
    config_from_mapping,
    load_config,
    parse_config,
    read_csv,
    run_experiment,
)
from focusing_gibbs.cli_runner.cli import main
from focusing_gibbs.cli_runner.output import sha256_file

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "covariance": "run.kind = covariance\nsampling.samples = 400\ngrid.modes = 8\ncovariance.max_mode = 4\n",
    "partition_ladder": ("run.kind = partition_ladder\nmodel.p = 4\nmodel.K = 1.0\nrun.convention = plain\n"
                         "sampling.samples = 3000\nsampling.ladder = 4, 8, 16\n"),
    "ou_rates": ("run.kind = ou_rates\nrun.convention = plain\nrates.M_ladder = 2, 4, 8, 16\n"
                 "rates.time_steps = 16\nsampling.samples = 200\n"),
    "threshold_scan": ("run.kind = threshold_scan\nscan.K_over_mass = 0.5, 1.5\nsampling.samples = 500\n"
                       "sampling.ladder = 4, 8, 16\n"),
    "drift_divergence": ("run.kind = drift_divergence\nrun.convention = plain\nmodel.p = 8\nmodel.K = 3.0\n"
                         "drift.alpha = 1.1767\ndrift.rho_inv = 2, 4, 8, 16\nrates.time_steps = 16\n"
                         "sampling.samples = 50\n"),
    "gns_verify": "run.kind = gns_verify\nmodel.p = 6\nsampling.samples = 20\n",
    "ground_state": "run.kind = ground_state\nmodel.p = 4\n",
}


def run_text(text, out, **overrides):
    cfg = parse_config(text).with_overrides(**overrides)
    return run_experiment(cfg, out)


def directory_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir()) if p.name != "manifest.json"}


class TestConfig:
    def test_defaults_recorded(self):
        cfg = parse_config("run.kind = partition_ladder\nmodel.p = 4\nmodel.K = 1\n")
        assert cfg["sampling.samples"] == 100_000
        assert cfg["sampling.ladder"] == (16, 32, 64, 128)
        assert "sampling.samples" in cfg.defaults and "model.p" not in cfg.defaults

    def test_misspelled_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("run.kind = covariance\nsampling.smaples = 100\n")
        assert "sampling.smaples" in str(err.value) and "line 2" in str(err.value)

    def test_p_not_above_two(self):
        with pytest.raises(ConfigError, match="p > 2"):
            parse_config("run.kind = ground_state\nmodel.p = 2\n")

    @pytest.mark.parametrize("text,key", [
        ("run.kind = covariance\nrun.seed = 1\nrun.seed = 2\n", "run.seed"),
        ("run.kind = covariance\nmodel.K = 1\n", "model.K"),
        ("run.kind = covariance\nrun.seed = -3\n", "run.seed"),
        ("run.kind = covariance\nrun.seed = banana\n", "run.seed"),
        ("run.kind = covariance\nrun.convention = radians\n", "run.convention"),
        ("run.kind = ou_rates\nrates.M_ladder = 16, 24, 32, 64\n", "rates.M_ladder"),
        ("run.kind = ou_rates\nrates.M_ladder = 16, 32, 64\n", "rates.M_ladder"),
        ("run.kind = ou_rates\nmodel.s = 0.5\n", "model.s"),
        ("run.kind = partition_ladder\nmodel.p = 4\nmodel.K = 1\nsampling.ladder = 32, 16, 64\n", "sampling.ladder"),
        ("run.kind = partition_ladder\nmodel.p = 4\nmodel.K = 0\n", "model.K"),
        ("run.kind = threshold_scan\nmodel.p = 8\nscan.K = 1, 2\n", "model.p"),
        ("run.kind = threshold_scan\nscan.K = 1, 2\nscan.K_over_mass = 1\n", "scan.K"),
        ("run.kind = threshold_scan\n", "scan.K"),
        ("run.kind = covariance\nsampling.samples = 50\n", "sampling.samples"),
        ("run.kind = drift_divergence\nmodel.p = 4\nmodel.K = 1\n", "model.p"),
        ("run.kind = ground_state\nmodel.d = 3\nmodel.s = 0.5\nmodel.p = 3.5\n", "model.p"),
        ("run.kind = covariance\nthis line has no equals sign\n", None),
        ("model.p = 4\n", "run.kind"),
    ])
    def test_rejections(self, text, key):
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        if key is not None:
            assert err.value.key == key

    def test_kind_mismatch(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text(SMALL["covariance"])
        with pytest.raises(ConfigError):
            load_config(path, "ou_rates")

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# heading\n\nrun.kind = covariance  # inline\nrun.seed = 5\n")
        assert cfg.seed == 5

    def test_digest_ignores_workers_and_output(self):
        cfg = parse_config(SMALL["covariance"])
        assert cfg.digest() == cfg.with_overrides(workers=4, out="elsewhere").digest()
        assert cfg.digest() != cfg.with_overrides(seed=9).digest()

    def test_mapping_equals_text(self):
        a = parse_config("run.kind = covariance\nsampling.samples = 400\n")
        b = config_from_mapping({"run.kind": "covariance", "sampling.samples": 400})
        assert a.digest() == b.digest()

    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.name)
    def test_shipped_configs_load(self, path):
        load_config(path)


class TestRuns:
    @pytest.mark.parametrize("kind", sorted(SMALL))
    def test_bit_exact_rerun_and_worker_counts(self, kind, tmp_path):
        first = run_text(SMALL[kind], tmp_path / "a", workers=1)
        second = run_text(SMALL[kind], tmp_path / "b", workers=1)
        third = run_text(SMALL[kind], tmp_path / "c", workers=3)
        assert first.exit_code != EXIT_ERROR, first.error
        assert directory_bytes(tmp_path / "a") == directory_bytes(tmp_path / "b") == directory_bytes(tmp_path / "c")
        assert first.files == second.files == third.files

    def test_manifest_checksums(self, tmp_path):
        m = run_text(SMALL["covariance"], tmp_path)
        data = json.loads((tmp_path / "manifest.json").read_text())
        assert data["status"] == "complete" and data["exit_code"] == m.exit_code
        assert data["resolved_config"]["sampling.samples"] == 400
        assert "run.seed" not in data["defaults"] or data["resolved_config"]["run.seed"] == 0
        for name, digest in data["files"].items():
            assert sha256_file(tmp_path / name) == digest

    def test_seed_changes_results(self, tmp_path):
        run_text(SMALL["covariance"], tmp_path / "a")
        run_text(SMALL["covariance"], tmp_path / "b", seed=1)
        assert directory_bytes(tmp_path / "a") != directory_bytes(tmp_path / "b")

    def test_tables_round_trip(self, tmp_path):
        run_text(SMALL["ou_rates"], tmp_path)
        rows = read_csv(tmp_path / "rates.csv")
        assert [r["M"] for r in rows] == [2, 4, 8, 16]
        assert all(isinstance(r["l2_error"], float) for r in rows)

    def test_inconclusive_exit_code(self, tmp_path):
        # a three-level ladder at tiny samples near the threshold cannot be bracketed
        m = run_text("run.kind = threshold_scan\nscan.K_over_mass = 0.9, 1.1\nsampling.samples = 50\n"
                     "sampling.ladder = 4, 8, 16\n", tmp_path)
        assert m.exit_code in (EXIT_SUCCESS, EXIT_INCONCLUSIVE)
        if m.summary["bracket"] != "within grid":
            assert m.exit_code == EXIT_INCONCLUSIVE and m.outcome == "inconclusive"

    def test_module_error_is_recorded(self, tmp_path):
        # the drift core is under-resolved with two modes per unit of 1/rho
        text = SMALL["drift_divergence"] + "drift.modes_per_inv_rho = 2\n"
        m = run_text(text, tmp_path)
        assert m.exit_code == EXIT_ERROR and m.status == "incomplete"
        assert "under-resolved" in m.error
        assert json.loads((tmp_path / "manifest.json").read_text())["outcome"] == "error"

    def test_output_root_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FGIBBS_OUTPUT_ROOT", str(tmp_path))
        m = run_experiment(parse_config(SMALL["ground_state"]))
        assert Path(m.output_dir).parent == tmp_path
        assert (Path(m.output_dir) / "constants.csv").exists()

    def test_no_writes_outside_root(self, tmp_path):
        out = OutputDir(tmp_path / "box")
        with pytest.raises(ValueError):
            out.write_json("../escape.json", {})
        assert not (tmp_path / "escape.json").exists()


class TestCli:
    def test_main_success(self, tmp_path, capsys):
        cfg = tmp_path / "g.cfg"
        cfg.write_text(SMALL["ground_state"])
        code = main(["ground_state", "--config", str(cfg), "--out", str(tmp_path / "out"), "--convention", "plain"])
        assert code == EXIT_SUCCESS
        row = read_csv(tmp_path / "out" / "constants.csv")[0]
        assert row["convention"] == "plain"
        assert "success" in capsys.readouterr().out

    def test_main_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("run.kind = covariance\nsampling.smaples = 10\n")
        assert main(["covariance", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_ERROR
        assert "smaples" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    def test_seed_override(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(SMALL["covariance"])
        main(["covariance", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "7"])
        data = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert data["seed"] == 7

    def test_bad_flags(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["covariance", "--config", "x.cfg", "--workers", "0"])
        with pytest.raises(SystemExit):
            main(["covariance", "--config", "x.cfg", "--seed", "-1"])
        with pytest.raises(SystemExit):
            main(["nonsense", "--config", "x.cfg"])

    def test_module_entry_point(self, tmp_path):
        import subprocess
        import sys

        cfg = tmp_path / "g.cfg"
        cfg.write_text(SMALL["ground_state"])
        env = dict(os.environ, FGIBBS_OUTPUT_ROOT=str(tmp_path / "root"))
        res = subprocess.run([sys.executable, "-m", "focusing_gibbs", "ground_state", "--config", str(cfg)],
                             capture_output=True, text=True, env=env)
        assert res.returncode == 0, res.stderr
        assert any((tmp_path / "root").iterdir())
