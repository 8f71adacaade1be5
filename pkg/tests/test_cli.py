import json
import math
import subprocess
import sys

import pytest

from coupled_nls import __version__, cli
from coupled_nls.config import parse_config
from coupled_nls.output import read_csv


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main(["--out", str(out), *args])
    return code, out


def payload(path):
    return json.loads(path.read_text())["record"]


class TestExitCodes:
    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["solve", "--lambda", "-1", "--beta", "1"])
        assert info.value.code == 2

    def test_missing_command(self):
        with pytest.raises(SystemExit) as info:
            cli.main([])
        assert info.value.code == 2

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("r_max = 20\nnewton_tol = -1\n")
        code, _ = run(tmp_path, "--config", str(cfg), "groundstate")
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        code, _ = run(tmp_path, "--config", str(tmp_path / "nope.cfg"), "groundstate")
        assert code == 2

    def test_domain_error(self, tmp_path, capsys):
        code, out = run(tmp_path, "solve", "--lambda", "1", "--beta", "1.5", "--mu1", "2",
                        "--seed-from", "explicit")
        assert code == 4
        assert not out.exists()

    def test_nonconvergence(self, tmp_path):
        # Newton from the semitrivial state stays semitrivial: not a positive solution
        code, _ = run(tmp_path, "solve", "--lambda", "0.7", "--beta", "1.5",
                      "--seed-from", "semitrivial", "--family", "2")
        assert code == 3

    def test_solve_needs_file(self, tmp_path):
        code, _ = run(tmp_path, "solve", "--lambda", "1", "--beta", "3", "--seed-from", "file")
        assert code == 2

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "coupled_nls", "--help"],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0
        for cmd in ("groundstate", "tau", "curves", "solve", "continue", "normalize", "regions"):
            assert cmd in res.stdout


class TestOutputs:
    def test_groundstate(self, tmp_path):
        code, out = run(tmp_path, "groundstate")
        assert code == 0
        rec = payload(out / "groundstate.json")
        for key in ("central_value", "S", "mass", "residual"):
            assert key in rec
        assert rec["residual"] <= 1e-8
        header, rows = read_csv((out / "groundstate.csv").read_text())
        assert header == ["r", "U"] and len(rows) == 2000
        assert (out / "groundstate.config").exists()

    def test_every_file_has_provenance(self, tmp_path):
        code, out = run(tmp_path, "--seed", "9", "tau", "--s", "1")
        assert code == 0
        for path in out.iterdir():
            text = path.read_text()
            if path.suffix == ".json":
                doc = json.loads(text)
                assert list(doc)[0] == "provenance"
                prov = doc["provenance"]
                assert prov["version"] == __version__ and prov["seed"] == 9
                assert len(prov["config_sha256"]) == 64
            else:
                head = "\n".join(text.splitlines()[:8])
                assert text.startswith(("#", "<!--")), path
                assert __version__ in head and "config_sha256" in head, path
                assert "seed: 9" in head, path
        assert payload(out / "tau.json")["values"][0]["tau"] == pytest.approx(1.0, abs=1e-3)

    def test_format_filter(self, tmp_path):
        code, out = run(tmp_path, "--format", "json", "groundstate")
        assert code == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["groundstate.config", "groundstate.json"]

    def test_config_echo_parses(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("r_max = 25\nn = 2500\n")
        code, out = run(tmp_path, "--config", str(cfg), "--seed", "4", "groundstate")
        assert code == 0
        echo = parse_config((out / "groundstate.config").read_text())
        assert echo.r_max == 25.0 and echo.n == 2500 and echo.seed == 4
        assert payload(out / "groundstate.json")["grid"] == {"r_max": 25.0, "n": 2500}

    def test_solve_and_reseed_from_file(self, tmp_path):
        code, out = run(tmp_path, "solve", "--lambda", "1", "--beta", "3", "--mu1", "2",
                        "--seed-from", "explicit")
        assert code == 0
        rec = payload(out / "solve.json")
        assert rec["classification"] == "positive"
        assert abs(rec["diagnostics"]["rho"] - math.sqrt(2)) < 1e-8
        code, out2 = run(tmp_path, "solve", "--lambda", "1.1", "--beta", "3", "--mu1", "2",
                         "--seed-from", "file", "--file", str(out / "solve.csv"), name="again")
        assert code == 0
        assert payload(out2 / "solve.json")["lambda"] == 1.1

    def test_json_floats_round_trip(self, tmp_path):
        code, out = run(tmp_path, "--format", "json", "groundstate")
        text = (out / "groundstate.json").read_text()
        rec = json.loads(text)["record"]
        assert repr(rec["central_value"]) in text or format(rec["central_value"], ".17g") in text

    def test_continue_explicit(self, tmp_path):
        code, out = run(tmp_path, "continue", "--beta", "3", "--mu1", "2", "--family", "explicit",
                        "--lambda-min", "0.5", "--lambda-max", "2")
        assert code == 0
        header, rows = read_csv((out / "branch.csv").read_text())
        assert ",".join(header) == "lambda,arclength,mass_u,mass_v,rho,residual_inf,pohozaev_rel"
        lams = [r[0] for r in rows]
        assert min(lams) == pytest.approx(0.5) and max(lams) == pytest.approx(2.0)
        assert (out / "branch.svg").read_text().count("<svg") == 1

    def test_regions_frequency(self, tmp_path):
        code, out = run(tmp_path, "regions", "--plane", "frequency", "--beta", "0.1",
                        "--values", "0.5", "2", "--probes", "2")
        assert code == 0
        rec = payload(out / "regions.json")
        assert [c["verdict"] for c in rec["cells"]] == ["solution-found"] * 2
