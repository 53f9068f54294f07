import json

import pytest

from splatstream import protocol
from splatstream.bench import generate_scene
from splatstream.cli import main
from splatstream.plyio import serialize_ply
from splatstream.server import SceneHub, ServerConfig


@pytest.fixture
def one_splat_ply(tmp_path):
    path = tmp_path / "one.ply"
    path.write_bytes(serialize_ply(generate_scene(1, seed=5)))
    return path


class TestInspect:
    def test_singular_summary(self, one_splat_ply, capsys):
        assert main(["inspect", str(one_splat_ply)]) == 0
        out = capsys.readouterr().out
        assert "1 splat, degree 0" in out
        assert "binary_little_endian" in out

    def test_json_schema(self, one_splat_ply, capsys):
        assert main(["inspect", str(one_splat_ply), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["splat_count"] == 1 and doc["sh_degree"] == 0
        assert doc["properties"][:3] == ["x", "y", "z"]
        assert doc["ignored_properties"] == []
        assert len(doc["bounds"]["min"]) == 3

    def test_truncated_file_exit_1(self, one_splat_ply, tmp_path, capsys):
        bad = tmp_path / "cut.ply"
        bad.write_bytes(one_splat_ply.read_bytes()[:-4])
        assert main(["inspect", str(bad)]) == 1
        assert "TruncatedBody" in capsys.readouterr().err

    def test_missing_file_exit_1(self, tmp_path, capsys):
        assert main(["inspect", str(tmp_path / "nope.ply")]) == 1
        assert "error:" in capsys.readouterr().err


class TestGen:
    def test_deterministic_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.ply", tmp_path / "b.ply"
        assert main(["gen", "--count", "200", "--seed", "9",
                     "--out", str(a)]) == 0
        assert main(["gen", "--count", "200", "--seed", "9",
                     "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_roundtrips_through_inspect(self, tmp_path, capsys):
        out = tmp_path / "g.ply"
        main(["gen", "--count", "50", "--seed", "1", "--sh-degree", "2",
              "--out", str(out), "--json"])
        gen_doc = json.loads(capsys.readouterr().out)
        assert gen_doc["splat_count"] == 50
        main(["inspect", str(out), "--json"])
        doc = json.loads(capsys.readouterr().out)
        assert doc["splat_count"] == 50 and doc["sh_degree"] == 2


class TestRender:
    def test_golden_determinism(self, tmp_path, capsys):
        scene_path = tmp_path / "s.ply"
        main(["gen", "--count", "300", "--seed", "3", "--out",
              str(scene_path)])
        a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
        args = ["render", str(scene_path), "--width", "64", "--height", "64",
                "--fx", "64"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b), "--parallel"]) == 0
        data = a.read_bytes()
        assert data.startswith(b"P6\n64 64\n255\n")
        assert len(data) == 13 + 64 * 64 * 3
        assert data == b.read_bytes()       # parallel path bit-identical

    def test_identity_wim_equals_none(self, tmp_path):
        scene_path = tmp_path / "s.ply"
        main(["gen", "--count", "100", "--seed", "4", "--out",
              str(scene_path)])
        plain, wim = tmp_path / "p.ppm", tmp_path / "w.ppm"
        base = ["render", str(scene_path), "--width", "48", "--height", "48",
                "--fx", "48"]
        main(base + ["--out", str(plain)])
        main(base + ["--out", str(wim), "--wim-translate", "0,0,0",
                     "--wim-yaw", "0"])
        assert plain.read_bytes() == wim.read_bytes()

    def test_layers_empty_hides_markers(self, tmp_path):
        scene_path = tmp_path / "s.ply"
        main(["gen", "--count", "20", "--seed", "4", "--out",
              str(scene_path)])
        pois_path = tmp_path / "pois.json"
        pois_path.write_text(json.dumps([
            {"id": "p1", "class": "Fire", "position": [0.0, 0.0, 0.0]}]))
        base = ["render", str(scene_path), "--width", "48", "--height", "48",
                "--fx", "48", "--pois", str(pois_path)]
        shown, hidden, plain = (tmp_path / n for n in
                                ("shown.ppm", "hidden.ppm", "plain.ppm"))
        main(base + ["--out", str(shown)])
        main(base + ["--out", str(hidden), "--layers", ""])
        main(["render", str(scene_path), "--width", "48", "--height", "48",
              "--fx", "48", "--out", str(plain)])
        assert hidden.read_bytes() == plain.read_bytes()
        assert shown.read_bytes() != plain.read_bytes()


class TestBench:
    def test_json_requires_seed(self, capsys):
        assert main(["bench", "--count", "10", "--runs", "1", "--json"]) == 2
        assert "--seed" in capsys.readouterr().err

    def test_json_schema(self, capsys):
        assert main(["bench", "--count", "50", "--seed", "1", "--runs", "1",
                     "--width", "32", "--height", "32", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["splat_count"] == 50
        assert set(doc["verdicts"]) == {"72", "30"}

    def test_table_output(self, capsys):
        assert main(["bench", "--count", "50", "--runs", "1",
                     "--width", "32", "--height", "32"]) == 0
        out = capsys.readouterr().out
        assert "Stage" in out and "composite" in out


class TestReplay:
    def _record_log(self, tmp_path, scenes):
        log = tmp_path / "frames.log"
        hub = SceneHub(ServerConfig(record_log=str(log)))
        for s in scenes:
            hub.ingest_ply(serialize_ply(s))
        return log, hub

    def test_verify_ok(self, tmp_path, capsys):
        scenes = [generate_scene(40, seed=i) for i in range(3)]
        log, hub = self._record_log(tmp_path, scenes)
        ref = tmp_path / "ref.ply"
        ref.write_bytes(serialize_ply(hub.scene))
        assert main(["replay", str(log), "--verify", str(ref)]) == 0
        assert "OK:" in capsys.readouterr().out

    def test_verify_mismatch_exit_1(self, tmp_path, capsys):
        log, hub = self._record_log(tmp_path, [generate_scene(10, seed=1)])
        ref = tmp_path / "ref.ply"
        ref.write_bytes(serialize_ply(generate_scene(10, seed=2)))
        assert main(["replay", str(log), "--verify", str(ref)]) == 1
        assert "differs" in capsys.readouterr().err

    def test_out_writes_reconstructed_ply(self, tmp_path, capsys):
        log, hub = self._record_log(tmp_path, [generate_scene(15, seed=7)])
        out = tmp_path / "recon.ply"
        assert main(["replay", str(log), "--out", str(out)]) == 0
        assert out.read_bytes() == serialize_ply(hub.scene)

    def test_empty_log_exit_1(self, tmp_path, capsys):
        log = tmp_path / "empty.log"
        log.write_bytes(b"")
        assert main(["replay", str(log)]) == 1
        assert "no frames" in capsys.readouterr().err

    def test_corrupt_frame_names_ordinal(self, tmp_path, capsys):
        log, _ = self._record_log(tmp_path, [generate_scene(10, seed=1)])
        data = bytearray(log.read_bytes())
        # flip a payload byte in the second frame (first chunk)
        frames = protocol.decode_stream(bytes(data))
        assert len(frames) >= 3
        offset = 24 + len(frames[0].payload)   # start of frame 1
        data[offset + 24] ^= 0xFF
        log.write_bytes(bytes(data))
        assert main(["replay", str(log)]) == 1
        err = capsys.readouterr().err
        assert "CrcMismatch" in err and "frame 1" in err


class TestUsage:
    def test_no_command_exit_2(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_unknown_command_exit_2(self):
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 2

    def test_bad_vec3_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            main(["render", "x.ply", "--out", "y.ppm",
                  "--wim-translate", "1,2"])
        assert e.value.code == 2
