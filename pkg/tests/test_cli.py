import json

import pytest

from beamsim import cli, sim

FAST_ARGS = [
    "--users",
    "2x4pam",
    "--antennas",
    "3",
    "--snr",
    "10:10:20",
    "--realizations",
    "4",
    "--symbols",
    "100",
    "--seed",
    "1",
]


class TestParsing:
    def test_snr_range(self):
        assert cli._parse_snr("0:5:20") == (0.0, 5.0, 10.0, 15.0, 20.0)

    def test_snr_list(self):
        assert cli._parse_snr("3,7.5,12") == (3.0, 7.5, 12.0)

    def test_snr_malformed(self):
        for bad in ("0:0:20", "abc", "5:1", "20:5:0"):
            with pytest.raises(cli.ConfigError):
                cli._parse_snr(bad)

    def test_users_spec(self):
        cs = cli._parse_users("4x8pam")
        assert len(cs) == 4
        assert all(c.order == 8 for c in cs)

    def test_users_malformed(self):
        for bad in ("4x8qam", "0x8pam", "8pam", "x8pam"):
            with pytest.raises(cli.ConfigError):
                cli._parse_users(bad)


class TestScenarioBuilding:
    def test_flags_override_defaults(self):
        ns = cli.make_parser().parse_args(
            ["sweep", *FAST_ARGS, "--methods", "ZF,MMSE", "--out", "/tmp/x"]
        )
        s = cli.build_scenario(ns)
        assert s.n_antennas == 3
        assert s.methods == (sim.ZF, sim.MMSE)
        assert s.snr_grid_db == (10.0, 20.0)

    def test_preset_then_flag_override(self):
        ns = cli.make_parser().parse_args(
            ["sweep", "--preset", "fig1", "--realizations", "7", "--out", "/tmp/x"]
        )
        s = cli.build_scenario(ns)
        assert s.n_realizations == 7
        assert s.n_antennas == 4

    def test_scenario_file(self, tmp_path):
        cfg = tmp_path / "scen.ini"
        cfg.write_text(
            "[scenario]\nantennas = 5\nusers = 2x4pam\nsnr = 0:10:20\n"
            "realizations = 3\nsymbols = 50\nseed = 2\nmethods = ZF\n"
        )
        ns = cli.make_parser().parse_args(
            ["sweep", "--scenario", str(cfg), "--out", "/tmp/x"]
        )
        s = cli.build_scenario(ns)
        assert s.n_antennas == 5
        assert s.n_realizations == 3
        assert s.methods == (sim.ZF,)

    def test_unknown_method_is_config_error(self):
        ns = cli.make_parser().parse_args(
            ["sweep", "--methods", "BOGUS", "--out", "/tmp/x"]
        )
        with pytest.raises(cli.ConfigError):
            cli.build_scenario(ns)

    def test_paper_scale_flag(self):
        ns = cli.make_parser().parse_args(
            ["sweep", "--paper-scale", "--out", "/tmp/x"]
        )
        s = cli.build_scenario(ns)
        assert s.n_realizations == 10_000
        assert s.n_symbols == 1000


class TestCommands:
    def test_sweep_writes_outputs(self, tmp_path):
        out = tmp_path / "run"
        rc = cli.main(
            ["sweep", *FAST_ARGS, "--methods", "ZF,MMSE", "--out", str(out)]
        )
        assert rc == 0
        csv_text = (out / "sweep.csv").read_text()
        assert csv_text.splitlines()[0].split(",") == list(sim.CSV_COLUMNS)
        doc = json.loads((out / "sweep.json").read_text())
        assert len(doc["rows"]) == 4
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 1
        assert len(manifest["scenario_digest"]) == 64

    def test_sweep_deterministic_across_runs(self, tmp_path):
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            cli.main(["sweep", *FAST_ARGS, "--methods", "ZF", "--out", str(out)])
            texts.append((out / "sweep.csv").read_text())
        assert texts[0] == texts[1]

    def test_rate_includes_qam_reference(self, tmp_path):
        out = tmp_path / "rate"
        rc = cli.main(["rate", *FAST_ARGS, "--methods", "ZF", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "sweep.json").read_text())
        methods = {r["method"] for r in doc["rows"]}
        assert "ZF-QAM" in methods

    def test_csi_emits_variance_column(self, tmp_path):
        out = tmp_path / "csi"
        rc = cli.main(
            ["csi", *FAST_ARGS, "--methods", "ZF,MMSE", "--symbols", "0", "--out", str(out)]
        )
        assert rc == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("csi_var,")
        variances = {line.split(",")[0] for line in lines[1:]}
        assert variances == {"0", "0.001", "0.01"}

    def test_check_quick(self, capsys):
        rc = cli.main(["check", "--quick"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS" in out
        assert "FAIL" not in out

    def test_config_error_exit_code(self, tmp_path, capsys):
        rc = cli.main(["sweep", "--snr", "bogus", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_threads_env_variable(self, monkeypatch):
        monkeypatch.setenv("BEAMSIM_THREADS", "1")
        ns = cli.make_parser().parse_args(["sweep", *FAST_ARGS, "--out", "/tmp/x"])
        assert cli._n_workers(ns) == 1

    def test_threads_flag_wins(self, monkeypatch):
        monkeypatch.setenv("BEAMSIM_THREADS", "8")
        ns = cli.make_parser().parse_args(
            ["sweep", "--threads", "2", *FAST_ARGS, "--out", "/tmp/x"]
        )
        assert cli._n_workers(ns) == 2
