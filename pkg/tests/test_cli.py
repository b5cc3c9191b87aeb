import json
import math
import subprocess
import sys

import pytest

from cylgrating import cli
from cylgrating.errors import ConfigError

BASE = """
[grating]
radius_a = 1.0e-3
spacing_d = 1.0e-2
eps_r = 2.0
mu_r = 1.0

[wave]
k0 = 50.0
theta_i = 45.0
psi_i = 200.0

[solver]
n_trunc = 8
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestConfig:
    def test_default_loads(self):
        cfg = cli.load_config(None)
        assert cfg.wave.theta_i == pytest.approx(math.pi / 4)
        assert cfg.solver["n_trunc"] == 12

    def test_degrees(self):
        cfg = cli.parse_config(BASE.replace("theta_i = 45.0", "theta_i = 90.0"))
        assert cfg.wave.theta_i == pytest.approx(math.pi / 2)
        assert cfg.wave.psi_i == pytest.approx(math.radians(200.0))

    @pytest.mark.parametrize("bad,needle", [
        ("[grating]\nradius_a = 1\nspacing_d = 3\n[wave]\nk0 = 1\ntheta_i = 10\n", "eps_r"),
        (BASE + "colour = red\n", "colour"),
        (BASE + "[plots]\nx = 1\n", "plots"),
        (BASE.replace("eps_r = 2.0", "eps_r = two"), "eps_r"),
        (BASE + "method = cg\n", "method"),
        (BASE.replace("radius_a = 1.0e-3", "radius_a = 6.0e-3"), "overlap"),
    ])
    def test_rejected(self, bad, needle):
        with pytest.raises(ConfigError, match=needle):
            cli.parse_config(bad)

    def test_float_format(self):
        assert cli.fmt(0.1) == "1.0000000000000001e-01"
        assert cli.fmt(-2) == "-2"
        assert cli.fmt(float("nan")) == "nan"


class TestRun:
    def test_missing_key_exit_1(self, tmp_path, capsys):
        path = write(tmp_path, "bad.ini", BASE.replace("eps_r = 2.0\n", ""))
        code, out, err = run(["coeffs-exact", "--config", path], capsys)
        assert code == 1
        assert "eps_r" in err
        assert out == ""

    def test_wood_anomaly_exit_2(self, tmp_path, capsys):
        # Delta (1 - sin psi) = 1 exactly at psi = 180 deg
        text = BASE.replace("k0 = 50.0", f"k0 = {2 * math.pi / 1e-2!r}").replace(
            "theta_i = 45.0", "theta_i = 90.0").replace("psi_i = 200.0", "psi_i = 180.0")
        code, _, err = run(["sums", "--config", write(tmp_path, "wood.ini", text)], capsys)
        assert code == 2
        assert "WoodAnomaly" in err

    def test_determinism(self, tmp_path, capsys):
        cfgp = write(tmp_path, "c.ini", BASE)
        for sub in ("coeffs-exact", "coeffs-asymptotic", "sums"):
            outs = []
            for k in range(2):
                target = str(tmp_path / f"{sub}{k}.csv")
                assert run([sub, "--config", cfgp, "--out", target], capsys)[0] == 0
                outs.append(open(target, "rb").read())
            assert outs[0] == outs[1]

    def test_coeffs_exact_schema(self, tmp_path, capsys):
        code, out, _ = run(["coeffs-exact", "--config", write(tmp_path, "c.ini", BASE)], capsys)
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "n,re_A,im_A,re_A_H,im_A_H,residual"
        assert len(lines) == 1 + 17
        assert all(float(r.split(",")[-1]) < 1e-10 for r in lines[1:])

    def test_sums_schema(self, tmp_path, capsys):
        code, out, _ = run(["sums", "--config", write(tmp_path, "c.ini", BASE)], capsys)
        rows = [r.split(",") for r in out.splitlines()]
        assert code == 0
        assert rows[0][0] == "n" and "dev_elementary_direct" in rows[0]
        k = rows[0].index("dev_elementary_direct")
        assert all(float(r[k]) < 1e-6 for r in rows[1:])

    def test_json_round_trip(self, tmp_path, capsys):
        cfgp = write(tmp_path, "c.ini", BASE)
        js = str(tmp_path / "cmp.json")
        assert run(["compare", "--config", cfgp, "--format", "json", "--out", js], capsys)[0] == 0
        doc = json.load(open(js))
        assert doc["subcommand"] == "compare" and "exact" in doc and "asymptotic" in doc
        direct = str(tmp_path / "direct.csv")
        again = str(tmp_path / "again.csv")
        assert run(["compare", "--config", cfgp, "--out", direct], capsys)[0] == 0
        assert run(["compare", "--from-json", js, "--out", again], capsys)[0] == 0
        assert open(direct).read() == open(again).read()

    def test_from_json_only_for_compare(self, tmp_path, capsys):
        code, _, err = run(["sums", "--from-json", "x.json"], capsys)
        assert code == 1 and "compare" in err

    def test_field_grid(self, tmp_path, capsys):
        text = BASE + "[grid]\nnx = 5\nny = 5\n"
        code, out, _ = run(["field-grid", "--config", write(tmp_path, "g.ini", text)], capsys)
        rows = [r.split(",") for r in out.splitlines()]
        assert code == 0
        assert rows[0] == ["x", "y", "re_E_z", "im_E_z", "re_H_z", "im_H_z"]
        assert len(rows) == 26
        centre = [r for r in rows[1:] if float(r[0]) == 0 and float(r[1]) == 0][0]
        assert centre[2] == "nan"
        assert any(r[2] != "nan" for r in rows[1:])

    def test_sweep(self, tmp_path, capsys):
        a = write(tmp_path, "a.ini", BASE)
        b = write(tmp_path, "b.ini", BASE.replace("eps_r = 2.0", "eps_r = 3.0"))
        outdir = tmp_path / "out"
        code, _, _ = run(["coeffs-exact", "--config", a, b, "--out", str(outdir), "--jobs", "2"], capsys)
        assert code == 0
        fa = (outdir / "a.coeffs-exact.csv").read_text()
        fb = (outdir / "b.coeffs-exact.csv").read_text()
        assert fa != fb
        assert fa == cli.run_one("coeffs-exact", a)[1]

    def test_sweep_needs_out(self, tmp_path, capsys):
        a = write(tmp_path, "a.ini", BASE)
        assert run(["sums", "--config", a, a], capsys)[0] == 1

    def test_selftest_default(self, capsys):
        code, out, _ = run(["selftest"], capsys)
        rows = [r.split(",") for r in out.splitlines()[1:]]
        assert code == 0
        assert len(rows) >= 10
        assert all(r[1] == "PASS" for r in rows)

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "cylgrating", "coeffs-asymptotic"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert proc.stdout.startswith("p,exponent,")
