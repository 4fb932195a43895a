import csv
import io
import json
import subprocess
import sys

import pytest

from vbscale import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, list(csv.DictReader(io.StringIO(out.out))), out.err


@pytest.fixture
def bell_file(tmp_path):
    p = tmp_path / "bell.json"
    p.write_text(json.dumps({"n": 2, "z_checks": ["11"], "syndrome": "0"}))
    return p


class TestCmiStabilizer:
    def test_bell_file(self, capsys, bell_file):
        code, rows, err = run(capsys, "cmi-stabilizer", str(bell_file))
        assert code == 0
        assert [float(r["cmi_bits"]) for r in rows] == [1.0, 1.0]
        assert {r["method"] for r in rows} == {"rank_formula", "brute_force"}
        assert err.startswith("manifest: ")

    def test_toric(self, capsys):
        code, rows, _ = run(capsys, "cmi-stabilizer", "--toric", "4", "--no-brute")
        assert code == 0 and float(rows[0]["cmi_bits"]) == 7

    def test_identity(self, capsys, tmp_path):
        p = tmp_path / "id.json"
        p.write_text(json.dumps({"n": 3, "z_checks": ["100", "010", "001"], "syndrome": "000"}))
        _, rows, _ = run(capsys, "cmi-stabilizer", str(p))
        assert all(float(r["cmi_bits"]) == 0 for r in rows)

    def test_infeasible(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"n": 2, "z_checks": ["10", "10"], "syndrome": "01"}))
        assert cli.main(["cmi-stabilizer", str(p)]) == cli.EXIT_INPUT

    def test_malformed(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert cli.main(["cmi-stabilizer", str(p)]) == cli.EXIT_INPUT

    def test_needs_one_source(self):
        assert cli.main(["cmi-stabilizer", "--toric", "3", "--checkerboard", "5"]) == cli.EXIT_INPUT

    def test_writes_manifest_sidecar(self, bell_file, tmp_path):
        out = tmp_path / "r.csv"
        assert cli.main(["cmi-stabilizer", str(bell_file), "--out", str(out)]) == 0
        man = json.loads((tmp_path / "r.csv.manifest.json").read_text())
        assert man["subcommand"] == "cmi-stabilizer"
        assert out.read_text().splitlines()[0] == "system,n,checks,method,cmi_bits"


class TestScalingCurve:
    def test_checkerboard(self, capsys):
        code, rows, err = run(capsys, "scaling-curve", "--family", "checkerboard", "--gamma", "1.0",
                              "--sizes", "10", "15", "20", "25", "30")
        assert code == 0
        assert list(rows[0]) == ["L", "gamma", "cmi_bits", "n_checks", "n_crossing"]
        man = json.loads(err.split("manifest: ", 1)[1])
        assert abs(man["results"]["slope"] - 1.0) <= 0.1

    def test_toric_linear(self, capsys):
        _, _, err = run(capsys, "scaling-curve", "--family", "toric", "--sizes", *map(str, range(3, 13)))
        slope = json.loads(err.split("manifest: ", 1)[1])["results"]["slope"]
        assert 0.8 < slope < 1.2

    def test_single_check_flat(self, capsys):
        _, rows, err = run(capsys, "scaling-curve", "--family", "single-check", "--sizes", "4", "6", "8")
        assert {r["cmi_bits"] for r in rows} == {"1.0"}
        assert abs(json.loads(err.split("manifest: ", 1)[1])["results"]["slope"]) < 1e-12

    def test_too_few_sizes(self):
        assert cli.main(["scaling-curve", "--family", "toric", "--sizes", "3", "4"]) == cli.EXIT_INPUT


class TestPhysics:
    def test_tfd_infinite_temperature(self, capsys):
        code, rows, _ = run(capsys, "tfd-cmi", "--n", "6", "--beta", "0", "--ordering", "separate", "--cut", "mid")
        assert code == 0 and float(rows[0]["cmi_bits"]) == pytest.approx(6.0, abs=1e-9)
        assert list(rows[0])[:5] == ["n", "beta", "ordering", "cmi_bits", "stderr"]

    def test_tfd_sampled(self, capsys):
        _, rows, _ = run(capsys, "tfd-cmi", "--n", "4", "--beta", "0.1", "--samples", "2000", "--seed", "1")
        assert float(rows[0]["stderr"]) > 0

    def test_tfim_limit(self, capsys):
        code, rows, _ = run(capsys, "tfim-cmi", "--n", "4", "--beta", "1e-6", "--method", "exact")
        assert code == 0 and float(rows[0]["cmi_bits"]) == pytest.approx(4.0, abs=1e-4)
        assert list(rows[0])[:7] == ["n", "beta", "j", "h", "method", "cmi_bits", "stderr"]

    def test_tfim_small_beta(self, capsys):
        _, rows, _ = run(capsys, "tfim-cmi", "--n", "4", "--beta", "0.02", "--method", "smallbeta")
        assert float(rows[0]["cmi_bits"]) < 4

    def test_negative_beta(self):
        assert cli.main(["tfim-cmi", "--n", "3", "--beta", "-1"]) == cli.EXIT_INPUT


class TestSweep:
    def test_delta(self, capsys):
        code, rows, err = run(capsys, "sweep", "--family", "delta", "--sizes", "4", "8", "--widths", "1", "2",
                              "--lr", "1e-2", "--max-epochs", "500", "--eval-every", "50")
        assert code == 0
        assert list(rows[0]) == ["size", "width", "seed", "final_fidelity", "epochs", "success"]
        man = json.loads(err.split("manifest: ", 1)[1])
        assert man["results"]["n_d_min"] == {"4": 1, "8": 1}

    def test_no_width(self, capsys):
        code = cli.main(["sweep", "--family", "bell", "--sizes", "4", "--widths", "1", "--seeds", "1",
                         "--max-epochs", "10", "--eval-every", "10", "--target-fid", "1.0"])
        capsys.readouterr()
        assert code == cli.EXIT_NO_WIDTH

    def test_bad_params(self):
        assert cli.main(["sweep", "--family", "tfd", "--params", "beta", "--sizes", "2"]) == cli.EXIT_INPUT

    def test_factories(self):
        for fam, size in (("checkerboard", 4), ("toric", 2), ("tfd", 2), ("bell", 4), ("delta", 3)):
            t = cli.sweep_target_factory(fam, {})(size)
            assert t.n_sites > 0


def test_deterministic_csv(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"o{k}.csv"
        cli.main(["tfim-cmi", "--n", "3", "--beta", "0.5", "--out", str(p)])
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "vbscale", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
