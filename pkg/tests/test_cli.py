import json
import os

import pytest

from crystalspeed.cli import main, parse_config
from crystalspeed.errors import ConfigError


def cfg_text(**over):
    base = {
        "name": "t",
        "grid": {"half_width": 1.8, "dx": 0.05},
        "source": {"kind": "ball", "c": 1.0, "r0": 0.5},
        "run": {"t_final": 0.5, "snapshot_times": [0.5]},
        "output": {"formats": ["csv"]},
    }
    base.update(over)
    return json.dumps(base)


class TestParse:
    def test_minimal_valid(self):
        cfg = parse_config(cfg_text(), "simulate")
        assert cfg.sim.t_final == 0.5
        assert cfg.sim.mollify_k == pytest.approx(40.0)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(cfg_text(run={"t_final": 0.5, "tfinal": 1}), "simulate")
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(cfg_text(extra_section={}), "simulate")

    def test_r0_positive_named_error(self):
        with pytest.raises(ConfigError, match="R0 > 0 required"):
            parse_config(
                cfg_text(source={"kind": "ball", "c": 1.0, "r0": 0.0}), "simulate"
            )

    def test_tau_integrality_named_error(self):
        text = cfg_text(numerics={"tk_tau": 0.3})
        with pytest.raises(ConfigError, match="whole number"):
            parse_config(text, "simulate")

    def test_all_errors_collected(self):
        text = json.dumps(
            {
                "grid": {"dx": -1.0},
                "source": {"kind": "nope"},
                "run": {},
            }
        )
        with pytest.raises(ConfigError) as err:
            parse_config(text, "simulate")
        assert len(err.value.errors) >= 3

    def test_not_json(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_config("nx = 3", "simulate")

    def test_verify_unknown_case(self):
        with pytest.raises(ConfigError, match="unknown case"):
            parse_config(json.dumps({"verify": {"cases": ["nope"]}}), "verify")


class TestRun:
    def test_simulate_artifacts_and_determinism(self, tmp_path):
        cfgfile = tmp_path / "run.json"
        cfgfile.write_text(cfg_text(output={"formats": ["csv", "pgm"]}))
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert main(["simulate", "--config", str(cfgfile), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfgfile), "--out", str(out2)]) == 0
        d1 = out1 / "t"
        names = sorted(os.listdir(d1))
        assert "manifest.txt" in names and "scalar_log.csv" in names
        assert any(n.endswith(".pgm") for n in names)
        for n in names:
            if n.endswith(".csv"):
                assert (d1 / n).read_bytes() == (out2 / "t" / n).read_bytes()
        manifest = (d1 / "manifest.txt").read_text()
        assert "mollify_k" in manifest and "wall_seconds" in manifest

    def test_compare_csv(self, tmp_path):
        text = cfg_text(
            run={"t_final": 0.5}, compare={"taus": [0.25, 0.125]},
        )
        cfgfile = tmp_path / "cmp.json"
        cfgfile.write_text(text)
        assert main(["compare", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "t" / "compare.csv").read_text().strip().splitlines()
        assert rows[0] == "tau,gap"
        assert len(rows) == 3

    def test_radial_csv(self, tmp_path):
        text = json.dumps(
            {
                "radial": {
                    "n": 2,
                    "c": 1.0,
                    "r0": 0.5,
                    "profile": [[0.0, 0.5, 1.0, True, True]],
                    "radii": [0.25, 1.5],
                    "times": [1.0, 3.0],
                }
            }
        )
        cfgfile = tmp_path / "rad.json"
        cfgfile.write_text(text)
        assert main(["radial", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "rad" / "radial.csv").read_text().strip().splitlines()
        assert rows[0] == "r,t,u_exact,u_dp"
        assert len(rows) == 5

    def test_fronts_g1(self, tmp_path):
        text = json.dumps(
            {
                "source": {"kind": "ball", "c": 1.0, "r0": 2.0},
                "fronts": {"check": "g1", "margin": 0.05, "t_max": 0.5, "dx": 0.05},
            }
        )
        cfgfile = tmp_path / "fr.json"
        cfgfile.write_text(text)
        assert main(["fronts", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
        assert "survived" in (tmp_path / "fr" / "manifest.txt").read_text()

    def test_fronts_plain_logs(self, tmp_path):
        text = json.dumps(
            {
                "source": {"kind": "ball", "c": 1.0, "r0": 0.5},
                "fronts": {"check": "none", "duration": 0.05, "dx": 0.05},
            }
        )
        cfgfile = tmp_path / "fr2.json"
        cfgfile.write_text(text)
        assert main(["fronts", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
        log = (tmp_path / "fr2" / "front_log.csv").read_text().splitlines()
        assert log[0] == "t,area,min_ls,max_ls_in_target"
        assert len(log) > 10
        assert (tmp_path / "fr2" / "contour.csv").exists()

    def test_speed_report(self, tmp_path):
        text = cfg_text(
            run={"t_final": 0.5, "snapshot_times": [0.4, 0.5], "probes": [[0.0, 0.0]]},
            speed={"window": 0.5, "g1_t0": 0.4},
        )
        cfgfile = tmp_path / "sp.json"
        cfgfile.write_text(text)
        assert main(["speed", "--config", str(cfgfile), "--out", str(tmp_path)]) == 0
        assert "slope" in (tmp_path / "t" / "report.txt").read_text()
        assert (tmp_path / "t" / "slopes.csv").exists()

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfgfile = tmp_path / "bad.json"
        cfgfile.write_text(cfg_text(source={"kind": "ball", "c": 1.0, "r0": -1.0}))
        assert main(["simulate", "--config", str(cfgfile), "--out", str(tmp_path)]) == 1
        assert "R0 > 0" in capsys.readouterr().err

    def test_shipped_configs_parse(self):
        import glob

        mapping = {
            "ball_supercritical": "simulate",
            "ball_subcritical_speed": "speed",
            "splitting_compare": "compare",
            "radial_profile": "radial",
            "fronts_square_g1": "fronts",
            "two_balls_overlap": "simulate",
            "verify_fast": "verify",
        }
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        files = glob.glob(os.path.join(root, "*.json"))
        assert len(files) == len(mapping)
        for path in files:
            stem = os.path.splitext(os.path.basename(path))[0]
            with open(path) as fh:
                parse_config(fh.read(), mapping[stem], default_name=stem)
