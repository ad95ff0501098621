import subprocess
import sys

import numpy as np
import pytest

from vesseltrack import io as vio
from vesseltrack.cli import ConfigError, build_tracker_config, load_config, main

SYNTH_SMALL = ["synth", "--seed", "7", "--frames", "4", "--size", "192", "--branches", "2", "--noise", "0.04"]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("seq")
    assert main(SYNTH_SMALL + ["--out", str(d)]) == 0
    return d


def test_synth_outputs(synth_dir):
    assert sorted(p.name for p in synth_dir.glob("*.png")) == [f"frame{t:03d}.png" for t in range(4)]
    assert len(list(synth_dir.glob("*.ann"))) == 4
    assert (synth_dir / "manifest.txt").is_file()


def test_track_eval_overlay_flow(synth_dir, tmp_path):
    out = tmp_path / "trk"
    rc = main(["track", "--seq", str(synth_dir), "--ann", str(synth_dir / "frame000.ann"),
               "--out", str(out)])
    assert rc == 0
    anns = sorted(p.name for p in out.glob("*.ann"))
    assert anns == ["frame001.ann", "frame002.ann", "frame003.ann"]
    assert (out / "report.txt").is_file()

    table = tmp_path / "metrics.csv"
    rc = main(["eval", "--pred", str(out), "--gt", str(synth_dir), "--rho", "3",
               "--out", str(table)])
    assert rc == 0
    lines = table.read_text().strip().splitlines()
    assert lines[0] == "sequence,frame,prec,sens,f1"
    assert len([l for l in lines if l.startswith("trk,")]) == 3
    assert any(l.startswith("mean,") for l in lines)

    ovl = tmp_path / "ovl"
    rc = main(["render-overlay", "--seq", str(synth_dir), "--ann", str(out),
               "--gt", str(synth_dir), "--out", str(ovl)])
    assert rc == 0
    assert len(list(ovl.glob("overlay*.png"))) == 3


def test_track_stride(synth_dir, tmp_path):
    out = tmp_path / "strided"
    rc = main(["track", "--seq", str(synth_dir), "--ann", str(synth_dir / "frame000.ann"),
               "--out", str(out), "--stride", "2", "--sigma", "9"])
    assert rc == 0
    assert sorted(p.name for p in out.glob("*.ann")) == ["frame002.ann"]


def test_track_field_dir(synth_dir, tmp_path):
    from vesseltrack.register import DeformationField

    frames, _ = vio.load_sequence(synth_dir)
    fdir = tmp_path / "fields"
    fdir.mkdir()
    for k in range(3):
        vio.save_deformation_field(DeformationField.identity(frames[0].shape), fdir / f"field{k:03d}.dfield")
    out = tmp_path / "trk"
    rc = main(["track", "--seq", str(synth_dir), "--ann", str(synth_dir / "frame000.ann"),
               "--out", str(out), "--field-dir", str(fdir)])
    assert rc == 0
    assert len(list(out.glob("*.ann"))) == 3


def test_track_seg_dir(synth_dir, tmp_path):
    from PIL import Image

    frames, _ = vio.load_sequence(synth_dir)
    h, w = frames[0].shape
    sdir = tmp_path / "seg"
    sdir.mkdir()
    for t in range(1, 4):
        Image.fromarray(np.full((h, w), 255, dtype=np.uint8), mode="L").save(sdir / f"frame{t:03d}.png")
    out = tmp_path / "trk"
    rc = main(["track", "--seq", str(synth_dir), "--ann", str(synth_dir / "frame000.ann"),
               "--out", str(out), "--seg-dir", str(sdir)])
    assert rc == 0
    assert len(list(out.glob("*.ann"))) == 3


def test_track_survives_fallbacks(tmp_path):
    rng = np.random.default_rng(0)
    seq = tmp_path / "noise"
    seq.mkdir()
    for t in range(3):
        vio.save_frame(rng.random((96, 96)), seq / f"frame{t:03d}.png")
    from vesseltrack.core import VesselAnnotation

    ann = VesselAnnotation([np.array([[20.0, 48.0], [70.0, 50.0]])], 0)
    vio.save_annotation(ann, seq / "frame000.ann")
    out = tmp_path / "trk"
    rc = main(["track", "--seq", str(seq), "--ann", str(seq / "frame000.ann"), "--out", str(out)])
    assert rc == 0  # fallbacks recorded, never fatal
    report = (out / "report.txt").read_text()
    assert not report.strip().endswith("total_fallbacks,0")


def test_missing_file_one_line_error(tmp_path, capsys):
    rc = main(["track", "--seq", str(tmp_path / "nope"), "--ann", str(tmp_path / "x.ann"),
               "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and len(err.strip().splitlines()) == 1


def test_config_empty_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = build_tracker_config(load_config(p))
    assert cfg.sigma == 5.0 and cfg.n_nearest == 2 and cfg.rho == 3.0


def test_config_sigma_override(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("sigma = 25\n")
    cfg = build_tracker_config(load_config(p))
    assert cfg.sigma == 25.0


def test_config_invalid_sigma_rejected(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("sigma = -1\n")
    with pytest.raises(ValueError):
        build_tracker_config(load_config(p))


def test_config_unknown_key_named(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("sigma = 5\nwibble = 3\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert "wibble" in str(exc.value) and ":2:" in str(exc.value)


def test_config_type_mismatch_has_line_number(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nn = two\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert ":2:" in str(exc.value)


def test_flag_beats_config(synth_dir, tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("sigma = 3\nstride = 1\n")
    out = tmp_path / "t"
    rc = main(["track", "--seq", str(synth_dir), "--ann", str(synth_dir / "frame000.ann"),
               "--out", str(out), "--config", str(cfgfile), "--stride", "3"])
    assert rc == 0
    assert sorted(p.name for p in out.glob("*.ann")) == ["frame003.ann"]


def test_cli_entry_point_module():
    rc = subprocess.run([sys.executable, "-m", "vesseltrack.cli", "--help"],
                        capture_output=True, text=True)
    assert rc.returncode == 0
    for cmd in ("synth", "track", "eval", "render-overlay"):
        assert cmd in rc.stdout
