import json
import os
import subprocess
import sys

import numpy as np
import pytest

from polybilliards.cli import InputError, main, parse_vector

REG_POINT = "2*sqrt(2)/20,2*sqrt(2)/20,sqrt(2)/20"
REG_DIR = "--direction=0,-2/sqrt(5),-1/sqrt(5)"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParseVector:
    def test_expressions(self):
        np.testing.assert_allclose(parse_vector("sqrt(2)/4, -1, 2**3"), [2**0.5 / 4, -1, 8])

    @pytest.mark.parametrize("text", ["1,2", "1,2,x", "__import__('os')", "1,,2"])
    def test_rejects(self, text):
        with pytest.raises(InputError):
            parse_vector(text)


class TestFixtures:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "fixtures")
        assert code == 0
        assert [line.split(":")[0] for line in out.splitlines()] == [
            "acute-prism",
            "obtuse-tetrahedron",
            "regular-tetrahedron",
            "right-tetrahedron",
            "unit-cube",
        ]

    def test_dump_and_reload(self, capsys, tmp_path):
        code, _, _ = run(capsys, "fixtures", "--out-dir", str(tmp_path))
        assert code == 0
        text = (tmp_path / "unit-cube.json").read_text()
        assert json.loads(text)["note"].startswith("unit cube")
        code, out, _ = run(capsys, "periodic", str(tmp_path / "unit-cube.json"), "cc'")
        assert code == 0 and json.loads(out)["kind"] == "open_set"

    def test_unknown(self, capsys):
        code, _, err = run(capsys, "fixtures", "dodecahedron")
        assert code == 2 and "unknown fixture" in err


class TestSimulate:
    def test_cube_alternating(self, capsys):
        code, out, err = run(
            capsys, "simulate", "fixture:unit-cube", "--face", "c", "--point", "0.5,0.5,0",
            "--direction", "0,0,1", "-n", "4",
        )
        assert code == 0
        assert [json.loads(line)["face"] for line in out.splitlines()] == ["c", "c'", "c", "c'", "c"]
        assert "coding: c,c',c,c',c" in err

    def test_regular_witness_twice(self, capsys):
        code, out, err = run(
            capsys, "simulate", "fixture:regular-tetrahedron", "--face", "a", "--point", REG_POINT,
            REG_DIR, "-n", "8",
        )
        assert code == 0
        assert "coding: abcdabcda" in err
        closure = float(err.split("closure:")[1])
        assert closure <= 1e-9
        assert len(out.splitlines()) == 9

    def test_csv(self, capsys, tmp_path):
        target = tmp_path / "t.csv"
        code, out, _ = run(
            capsys, "simulate", "fixture:unit-cube", "--face", "c", "--point", "0.5,0.5,0",
            "--direction", "0,0,1", "-n", "2", "--format", "csv", "--out", str(target),
        )
        assert code == 0 and out == ""
        assert target.read_text().splitlines()[0] == "step,face,x,y,z,dx,dy,dz"

    def test_edge_hit_exit_code(self, capsys):
        code, out, err = run(
            capsys, "simulate", "fixture:unit-cube", "--face", "c", "--point", "0.5,0.5,0",
            "--direction", "0.5,0.5,1", "-n", "3",
        )
        assert code == 3
        assert "termination: hit_edge" in err
        assert len(out.splitlines()) == 1

    def test_malformed_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"vertices": [[0, 0, 0],')
        code, _, err = run(
            capsys, "simulate", str(bad), "--face", "a", "--point", "0,0,0", "--direction", "0,0,1",
        )
        assert code == 2
        assert "invalid JSON at line 1" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "periodic", str(tmp_path / "nope.json"), "abcd")
        assert code == 2 and "cannot read" in err

    def test_bad_face(self, capsys):
        code, _, err = run(
            capsys, "simulate", "fixture:unit-cube", "--face", "q", "--point", "0.5,0.5,0",
            "--direction", "0,0,1",
        )
        assert code == 2 and "error:" in err


class TestPeriodic:
    def test_regular(self, capsys):
        code, out, err = run(capsys, "periodic", "fixture:regular-tetrahedron", "abcd")
        data = json.loads(out)
        assert code == 0 and data["kind"] == "unique_point"
        np.testing.assert_allclose(data["point"], 2**0.5 / 20 * np.array([2, 2, 1]), atol=1e-12)
        assert err.startswith("abcd: unique_point")

    def test_obtuse_is_a_result(self, capsys):
        code, out, _ = run(capsys, "periodic", "fixture:obtuse-tetrahedron", "abcd")
        data = json.loads(out)
        assert code == 0 and data["kind"] == "nonexistent"
        np.testing.assert_allclose(data["details"]["axis_point"], [22 / 161, 6 / 23, -86 / 161], atol=1e-12)

    def test_cube(self, capsys):
        code, out, _ = run(capsys, "periodic", "fixture:unit-cube", "c,c'")
        assert code == 0 and json.loads(out)["kind"] == "open_set"

    def test_bad_word(self, capsys):
        code, _, _ = run(capsys, "periodic", "fixture:unit-cube", "cc")
        assert code == 2


class TestStability:
    def test_regular(self, capsys):
        code, out, err = run(
            capsys, "stability", "fixture:regular-tetrahedron", "abcd", "--samples", "3", "--delta", "0.01",
        )
        assert code == 0
        assert err.strip() == "rule=even_S_not_identity verdict=stable"
        assert len(json.loads(out)["samples"]) == 3

    def test_deterministic(self, capsys):
        argv = ["stability", "fixture:acute-prism", "abc", "--samples", "4", "--seed", "9"]
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second

    def test_not_periodic(self, capsys):
        code, _, err = run(capsys, "stability", "fixture:obtuse-tetrahedron", "abcd", "--samples", "1")
        assert code == 2 and "not periodic" in err


class TestScan:
    def test_around_regular(self, capsys):
        code, out, err = run(capsys, "scan", "--around-regular", "--delta", "0.01", "--resolution", "2")
        rows = out.splitlines()
        assert code == 0 and len(rows) == 9
        assert all(",unique_point," in r for r in rows[1:])
        assert err.strip() == "8 cells: unique_point=8"

    def test_vertices_range(self, capsys):
        code, out, _ = run(
            capsys, "scan", "--base", "fixture:obtuse-tetrahedron", "--vertices-range", "D.x=0:0",
            "--resolution", "1", "--format", "json",
        )
        data = json.loads(out)
        assert code == 0 and data["counts"] == {"nonexistent": 1}

    def test_zero_resolution(self, capsys):
        code, _, err = run(capsys, "scan", "--around-regular", "--resolution", "0")
        assert code == 2 and "resolution" in err

    def test_needs_a_grid(self, capsys):
        code, _, _ = run(capsys, "scan")
        assert code == 2


class TestReturnMap:
    def test_regular_basis(self, capsys, tmp_path):
        boundary = tmp_path / "b.csv"
        code, out, _ = run(
            capsys, "return-map", "fixture:regular-tetrahedron", "abcd", "--basis", "regular-a",
            "--boundary-csv", str(boundary), "--boundary-points", "16",
        )
        data = json.loads(out)
        assert code == 0
        np.testing.assert_allclose(81 * np.array(data["map"]["A"]).reshape(2, 2), [[-83, 28], [-12, -75]], atol=1e-9)
        assert data["det"] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(data["fixed_point"], 2**0.5 / 20 * np.array([-2, -1]), atol=1e-12)
        assert len(boundary.read_text().splitlines()) == 17

    def test_csv(self, capsys):
        code, out, _ = run(
            capsys, "return-map", "fixture:regular-tetrahedron", "abcd", "--format", "csv", "--boundary-points", "4",
        )
        assert code == 0 and out.splitlines()[0] == "x,y" and len(out.splitlines()) == 5

    def test_non_periodic(self, capsys):
        code, _, _ = run(capsys, "return-map", "fixture:obtuse-tetrahedron", "abcd")
        assert code == 2


def test_module_entry_point_and_eps_override(tmp_path):
    env = dict(os.environ, POLYBILLIARDS_EPS="1e-7")
    proc = subprocess.run(
        [sys.executable, "-m", "polybilliards", "periodic", "fixture:unit-cube", "cc'"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kind"] == "open_set"
    env["POLYBILLIARDS_EPS"] = "-1"
    proc = subprocess.run(
        [sys.executable, "-m", "polybilliards", "fixtures"], capture_output=True, text=True, env=env,
    )
    assert proc.returncode != 0
    assert "POLYBILLIARDS_EPS" in proc.stderr
