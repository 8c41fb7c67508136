import json
import subprocess
import sys

import numpy as np
import pytest

from cswarp.imageops import ImageBuffer, load_png, save_png


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "cswarp.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def gray_png(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "gray.png"
    save_png(ImageBuffer(rng.random((24, 32))), str(path))
    return str(path)


def write_identity_config(tmp_path, width=32, height=24, family="wendland31"):
    doc = {
        "grid": {"rows": 4, "cols": 4},
        "frame": {"width": width, "height": height, "normalized": True},
        "theta": [[0.0, 0.0]] * 16,
        "kernel": {"family": family},
    }
    path = tmp_path / "warp.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestKernelProfile:
    def test_wendland_values(self):
        p = run_cli(
            "kernel", "profile", "--family", "wendland31",
            "--alpha", "1", "--rmax", "1.5", "--steps", "4",
        )
        assert p.returncode == 0
        lines = p.stdout.strip().splitlines()
        assert lines[0] == "r,value,dvalue_dr,dvalue_dalpha"
        values = [float(line.split(",")[1]) for line in lines[1:]]
        assert values == [1.0, 0.1875, 0.0, 0.0]

    def test_tps_has_no_alpha_column(self):
        p = run_cli("kernel", "profile", "--family", "tps", "--rmax", "2", "--steps", "3")
        assert p.returncode == 0
        assert p.stdout.splitlines()[0] == "r,value,dvalue_dr"

    def test_invalid_family_exits_one(self):
        p = run_cli("kernel", "profile", "--family", "gauss", "--rmax", "1", "--steps", "2")
        assert p.returncode == 1
        assert "--family" in p.stderr

    def test_bad_steps_exits_one(self):
        p = run_cli("kernel", "profile", "--family", "tps", "--rmax", "1", "--steps", "0")
        assert p.returncode == 1

    def test_out_file(self, tmp_path):
        out = tmp_path / "prof.csv"
        p = run_cli(
            "kernel", "profile", "--family", "tps",
            "--rmax", "1", "--steps", "2", "--out", str(out),
        )
        assert p.returncode == 0
        assert out.read_text().startswith("r,value,dvalue_dr")


class TestWarp:
    def test_identity_round_trip(self, tmp_path, gray_png):
        cfg = write_identity_config(tmp_path)
        out = tmp_path / "out.png"
        p = run_cli("warp", cfg, gray_png, str(out))
        assert p.returncode == 0
        assert np.array_equal(load_png(str(out)).data, load_png(gray_png).data)

    def test_writes_field(self, tmp_path, gray_png):
        cfg = write_identity_config(tmp_path)
        out = tmp_path / "out.png"
        fld = tmp_path / "out.dfield"
        p = run_cli("warp", cfg, gray_png, str(out), "--field", str(fld))
        assert p.returncode == 0
        assert fld.read_bytes().startswith(b"DFIELD 32 24\n")

    def test_missing_image_exits_two(self, tmp_path):
        cfg = write_identity_config(tmp_path)
        p = run_cli("warp", cfg, str(tmp_path / "missing.png"), str(tmp_path / "o.png"))
        assert p.returncode == 2
        assert "error" in p.stderr

    def test_size_mismatch_exits_one(self, tmp_path, gray_png):
        cfg = write_identity_config(tmp_path, width=16, height=16)
        p = run_cli("warp", cfg, gray_png, str(tmp_path / "o.png"))
        assert p.returncode == 1

    def test_schema_violation_exits_one(self, tmp_path, gray_png):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"grid": {"rows": 4, "cols": 4}}))
        p = run_cli("warp", str(bad), gray_png, str(tmp_path / "o.png"))
        assert p.returncode == 1
        assert "invalid warp config" in p.stderr


class TestSynthAndRegister:
    def test_synth_deterministic(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        for d in (d1, d2):
            p = run_cli(
                "synth", "--width", "48", "--height", "48",
                "--seed", "3", "--out-dir", str(d),
            )
            assert p.returncode == 0
        assert (d1 / "source.png").read_bytes() == (d2 / "source.png").read_bytes()
        assert (d1 / "target.png").read_bytes() == (d2 / "target.png").read_bytes()
        assert (d1 / "truth.json").read_text() == (d2 / "truth.json").read_text()

    def test_register_outputs(self, tmp_path):
        synth = tmp_path / "s"
        run_cli("synth", "--width", "48", "--height", "48", "--seed", "1",
                "--theta-scale", "0.05", "--out-dir", str(synth))
        out = tmp_path / "r"
        p = run_cli(
            "register", str(synth / "source.png"), str(synth / "target.png"),
            "--iterations", "25", "--levels", "2", "--out-dir", str(out),
        )
        assert p.returncode == 0
        doc = json.loads((out / "result.json").read_text())
        assert doc["metrics"]["l1"] < 0.1
        assert doc["alpha"] >= doc["d"]
        curve = (out / "curve.csv").read_text().splitlines()
        assert curve[0] == "iter,loss_true_l1"
        assert len(curve) == doc["iterations_run"] + 1
        assert (out / "warped.png").exists()

    def test_register_missing_source_exits_two(self, tmp_path):
        p = run_cli("register", str(tmp_path / "no.png"), str(tmp_path / "no2.png"))
        assert p.returncode == 2


class TestCompositeAndMetrics:
    def test_composite_identity(self, tmp_path):
        rng = np.random.default_rng(5)
        w, r, m = tmp_path / "w.png", tmp_path / "r.png", tmp_path / "m.png"
        save_png(ImageBuffer(rng.random((16, 16, 3))), str(w))
        save_png(ImageBuffer(rng.random((16, 16, 3))), str(r))
        save_png(ImageBuffer(np.ones((16, 16))), str(m))
        out = tmp_path / "out.png"
        p = run_cli("composite", str(m), str(w), str(r), str(out))
        assert p.returncode == 0
        assert out.read_bytes() == w.read_bytes() or np.array_equal(
            load_png(str(out)).data, load_png(str(w)).data
        )

    def test_composite_rgb_mask_exits_one(self, tmp_path):
        rng = np.random.default_rng(6)
        w = tmp_path / "w.png"
        save_png(ImageBuffer(rng.random((8, 8, 3))), str(w))
        p = run_cli("composite", str(w), str(w), str(w), str(tmp_path / "o.png"))
        assert p.returncode == 1

    def test_metrics_self(self, tmp_path, gray_png):
        p = run_cli("metrics", gray_png, gray_png)
        assert p.returncode == 0
        doc = json.loads(p.stdout)
        assert doc["l1"] == 0.0
        assert doc["ssim"] == pytest.approx(1.0, abs=1e-12)

    def test_metrics_shape_mismatch_exits_one(self, tmp_path, gray_png):
        other = tmp_path / "other.png"
        save_png(ImageBuffer(np.zeros((16, 16))), str(other))
        p = run_cli("metrics", gray_png, str(other))
        assert p.returncode == 1


class TestHelp:
    @pytest.mark.parametrize(
        "cmd",
        [
            [],
            ["kernel", "profile"],
            ["warp"],
            ["register"],
            ["synth"],
            ["composite"],
            ["metrics"],
            ["compare"],
        ],
    )
    def test_help_exits_zero(self, cmd):
        p = run_cli(*cmd, "--help")
        assert p.returncode == 0
        assert "Usage" in p.stdout
