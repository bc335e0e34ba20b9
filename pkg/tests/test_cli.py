import json
import math
import subprocess
import sys

import pytest

from wavetrap.cli import ConfigError, emit_svg, main, parse_config


def minimal_simulate(**overrides):
    doc = {
        "command": "simulate",
        "network": {"kind": "chain", "n": 8},
        "excitation": {"type": "site", "site": 2, "energy": 1.0},
        "t_final": 5.0,
    }
    doc.update(overrides)
    return doc


class TestParseConfig:
    def test_defaults_filled(self):
        config = parse_config(json.dumps(minimal_simulate()))
        assert config.seed == 0
        assert config.emit == {"csv": True, "json": True, "svg": True}
        assert config.params["gamma"] == 0.0
        assert config.params["record_stride"] == 1
        assert config.params["dt_factor"] == 0.05

    def test_unknown_key_names_path(self):
        doc = minimal_simulate()
        doc["network"]["cavty"] = {}
        with pytest.raises(ConfigError, match="network.cavty"):
            parse_config(json.dumps(doc))

    def test_unknown_top_level_key(self):
        doc = minimal_simulate(extra_knob=1)
        with pytest.raises(ConfigError, match="extra_knob"):
            parse_config(json.dumps(doc))

    def test_seed_recorded(self):
        config = parse_config(json.dumps(minimal_simulate(seed=99)))
        assert config.seed == 99

    def test_bad_json_reports_line(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("{\n  \"command\": simulate\n}")

    def test_unknown_command(self):
        with pytest.raises(ConfigError, match="command"):
            parse_config(json.dumps({"command": "explode"}))

    def test_missing_required_key(self):
        doc = minimal_simulate()
        del doc["t_final"]
        with pytest.raises(ConfigError, match="t_final"):
            parse_config(json.dumps(doc))

    def test_type_errors(self):
        with pytest.raises(ConfigError, match="must be a number"):
            parse_config(json.dumps(minimal_simulate(t_final="long")))

    def test_network_kinds(self):
        for kind in ({"kind": "ring", "n": 6}, {"kind": "fmo"},
                     {"kind": "custom", "masses": [1, 1],
                      "onsite_springs": [0, 0], "edges": [[0, 1, 1.0]]}):
            config = parse_config(json.dumps(minimal_simulate(
                network=kind, excitation={"type": "site", "site": 0})))
            assert config.command == "simulate"

    def test_fmo_cavity_defaults_to_target(self):
        doc = minimal_simulate(network={"kind": "fmo",
                                        "cavity": {"mass": 0.1,
                                                   "spring": 0.1}})
        config = parse_config(json.dumps(doc))
        assert config.params["network"].cavity.site == 2

    def test_raw_document_echoed(self):
        doc = minimal_simulate(seed=5)
        config = parse_config(json.dumps(doc))
        assert config.raw == doc


class TestEmitSvg:
    def test_empty_series_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            emit_svg([], {})

    def test_basic_plot_contains_series(self):
        svg = emit_svg([([0, 1, 2], [0.0, 1.0, 0.5], "demo")],
                       {"title": "t", "xlabel": "x", "ylabel": "y",
                        "vlines": [1.0]})
        assert svg.startswith("<svg")
        assert "polyline" in svg
        assert "demo" in svg
        assert "stroke-dasharray" in svg  # the vline


def run_cli(tmp_path, doc, out_name, extra=()):
    path = tmp_path / f"{out_name}.json"
    path.write_text(json.dumps(doc))
    out_dir = tmp_path / out_name
    code = main(["--config", str(path), "--out", str(out_dir), *extra])
    return code, out_dir


class TestExecute:
    def test_simulate_bundle(self, tmp_path):
        code, out = run_cli(tmp_path, minimal_simulate(), "sim")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["tool"] == "wavetrap"
        assert summary["version"]
        assert summary["config"]["network"]["kind"] == "chain"
        csv = (out / "simulate.csv").read_text().splitlines()
        assert csv[0].startswith("time,total,cavity_energy,site_0")

    def test_invalid_dt_exits_config_code(self, tmp_path, capsys):
        doc = minimal_simulate(dt=5.0)
        code, _ = run_cli(tmp_path, doc, "baddt")
        assert code == 2
        err = json.loads(capsys.readouterr().err.splitlines()[-1])
        assert "stability guard" in err["error"]["message"]

    def test_unknown_key_exits_config_code(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, minimal_simulate(grav=1), "badkey")
        assert code == 2
        err = json.loads(capsys.readouterr().err.splitlines()[-1])
        assert err["error"]["kind"] == "config"

    def test_missing_out_dir_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(minimal_simulate()))
        assert main(["--config", str(path)]) == 2

    def test_emit_flags_respected(self, tmp_path):
        doc = minimal_simulate(emit={"csv": True, "json": False,
                                     "svg": False})
        code, out = run_cli(tmp_path, doc, "flags")
        assert code == 0
        assert (out / "simulate.csv").exists()
        assert not (out / "summary.json").exists()
        assert not (out / "simulate.svg").exists()

    def test_schema_flag(self, capsys):
        assert main(["--schema"]) == 0
        text = capsys.readouterr().out
        for fragment in ("dispersion.csv", "scan.csv", "enumerate.csv"):
            assert fragment in text

    def test_seed_override(self, tmp_path):
        code, out = run_cli(tmp_path, minimal_simulate(seed=1), "seeded",
                            extra=("--seed", "42"))
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 42


class TestCommands:
    def test_dispersion(self, tmp_path):
        doc = {"command": "dispersion", "points": 16}
        code, out = run_cli(tmp_path, doc, "disp")
        assert code == 0
        lines = (out / "dispersion.csv").read_text().splitlines()
        assert lines[0] == "q,omega,group_velocity"
        assert len(lines) == 17

    def test_scattering(self, tmp_path):
        doc = {"command": "scattering", "cavity_spring": 1.0,
               "cavity_mass": 1.0, "points": 10}
        code, out = run_cli(tmp_path, doc, "scat")
        assert code == 0
        lines = (out / "scattering.csv").read_text().splitlines()
        assert lines[0] == "omega,re_r,im_r,re_s,im_s,flux_error"
        flux_errs = [float(l.split(",")[-1]) for l in lines[1:]]
        assert max(flux_errs) < 1e-9

    def test_scan_small(self, tmp_path):
        doc = {"command": "scan", "ring_n": 8, "cavity_mass": 0.05,
               "omega_min": 0.5, "omega_max": 1.8, "points": 7,
               "excitation": {"type": "site", "site": 4},
               "t_final": 300.0}
        code, out = run_cli(tmp_path, doc, "scan")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert "predicted_resonances" in summary["result"]
        assert (out / "scan.svg").exists()

    def test_scan_jobs_match_serial(self, tmp_path):
        doc = {"command": "scan", "ring_n": 8, "cavity_mass": 0.05,
               "omega_min": 0.5, "omega_max": 1.8, "points": 6,
               "excitation": {"type": "site", "site": 4},
               "t_final": 200.0}
        _, out1 = run_cli(tmp_path, doc, "scan1")
        _, out2 = run_cli(tmp_path, doc, "scan2", extra=("--jobs", "3"))
        assert (out1 / "scan.csv").read_text() == \
               (out2 / "scan.csv").read_text()

    def test_baseline_small(self, tmp_path):
        doc = {"command": "baseline", "chain_n": 96,
               "t_final_wave": 30.0, "t_start_wave": 2.5,
               "t_final_hop": 25.0, "t_start_hop": 2.0,
               "record_stride": 10,
               "sink_site": 70, "sink_rate": 1.0}
        code, out = run_cli(tmp_path, doc, "base")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["result"]["wave_exponent"] == pytest.approx(1.0,
                                                                   abs=0.15)
        assert summary["result"]["hopping_exponent"] == pytest.approx(
            0.5, abs=0.15)
        assert (out / "baseline_absorbed.csv").exists()

    def test_oracle_check_small(self, tmp_path):
        doc = {"command": "oracle-check", "chain_n": 64, "width": 4.0,
               "q0": math.pi / 3, "center": 34.0, "time_points": 7}
        code, out = run_cli(tmp_path, doc, "oracle")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["result"]["images_rms_max"] < 1e-9
        assert summary["result"]["fidelity_narrowband"] < -0.9
        assert summary["result"]["fidelity_free_end"] > 0.9

    def test_tune_small(self, tmp_path):
        doc = {"command": "tune",
               "network": {"kind": "ring", "n": 8,
                           "cavity": {"site": 0, "mass": 0.05,
                                      "spring": 0.05}},
               "excitation": {"type": "site", "site": 4},
               "t_final": 200.0, "grid": 5, "max_evals": 12}
        code, out = run_cli(tmp_path, doc, "tune")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["result"]["params"]) == {
            "cavity_omega", "cavity_mass", "cavity_spring"}
        lines = (out / "tune.csv").read_text().splitlines()
        assert lines[0] == "eval,cavity_omega,cavity_mass,value"

    def test_enumerate_small(self, tmp_path):
        doc = {"command": "enumerate", "n": 3, "t_final": 80.0,
               "grid": 4, "max_evals": 8}
        code, out = run_cli(tmp_path, doc, "enum")
        assert code == 0
        lines = (out / "enumerate.csv").read_text().splitlines()
        assert lines[0] == ("rank,edges,target,excite,eta,cavity_spring,"
                            "cavity_mass")
        assert len(lines) == 4  # 3 target orbits over 2 graphs

    def test_entry_point_subprocess(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(minimal_simulate()))
        proc = subprocess.run(
            [sys.executable, "-m", "wavetrap.cli", "--config", str(path),
             "--out", str(tmp_path / "sub")],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "artifacts" in proc.stdout
        assert "wall_clock_seconds" in proc.stderr
