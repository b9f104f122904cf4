import numpy as np
import pytest

from tqdmotion.cli import DIRECTIONS_HEADER, main
from tqdmotion.config import ModelConfig
from tqdmotion.metrics import CSV_HEADER
from tqdmotion.stimulus import read_sequence

FRAMES = 420
EVAL = 410


@pytest.fixture(scope="module")
def seq(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "seq"
    assert main(["generate", "--size", "32x24", "--frames", str(FRAMES), "--dir", "down",
                 "--vel", "250", "--texture", "clutter", "--seed", "5", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def runs(seq):
    root = seq.parent
    for variant in ("classic", "improved"):
        assert main(["--threads", "1", "run", "--model", variant, "--in", str(seq),
                     "--out", str(root / variant), "--save-fields", f"{EVAL},{FRAMES - 1}"]) == 0
    return root


def test_generate_writes_a_readable_sequence(seq):
    s = read_sequence(seq)
    assert len(s) == FRAMES and s.shape == (24, 32)
    assert s.manifest["texture"] == "clutter-noise"


def test_run_outputs(runs):
    out = runs / "improved"
    lines = (out / "directions.csv").read_text().splitlines()
    assert lines[0] == DIRECTIONS_HEADER
    assert len(lines) == FRAMES + 1
    warm = lines[1].split(",")
    assert warm[0] == "0.0" and warm[-1] == "1"
    last = lines[-1].split(",")
    assert last[-1] == "0" and float(last[1]) == pytest.approx(3 * np.pi / 2)
    field = np.load(out / "fields" / f"frame_{EVAL:06d}.npy")
    assert field.shape == (4, 24, 32)
    assert ModelConfig.from_file(out / "config.cfg") == ModelConfig()
    assert "warmup_frames=" in (out / "run_manifest.txt").read_text()


def test_metrics_and_compare_agree(runs, seq):
    rep = runs / "rep"
    assert main(["metrics", "--runs", str(runs / "improved"), str(runs / "classic"),
                 "--frame", str(EVAL), "--out", str(rep)]) == 0
    assert main(["compare", "--in", str(seq), "--frame", str(EVAL), "--out", str(runs / "cmp")]) == 0
    a = (rep / "report.csv").read_text().splitlines()
    b = (runs / "cmp" / "report.csv").read_text().splitlines()
    assert a[0] == CSV_HEADER
    assert sorted(a) == sorted(b)
    assert (rep / "summary.txt").is_file()


def test_metrics_is_deterministic(runs):
    for name in ("r1", "r2"):
        main(["metrics", "--runs", str(runs / "improved"), "--frame", str(EVAL), "--out", str(runs / name)])
    assert (runs / "r1" / "report.csv").read_bytes() == (runs / "r2" / "report.csv").read_bytes()


def test_dump_stages(seq, tmp_path):
    assert main(["run", "--model", "improved", "--in", str(seq), "--out", str(tmp_path),
                 "--save-fields", "", "--dump-stages", "5"]) == 0
    stage = tmp_path / "stages" / "on_max_delayed"
    assert (stage / "frame_000005.pgm").is_file()
    assert (stage / "scales.csv").read_text().startswith("frame,offset,scale\n5,")


def error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return err[0]


def test_zero_size_is_a_usage_error(tmp_path, capsys):
    assert main(["generate", "--size", "0x10", "--frames", "3", "--out", str(tmp_path / "x")]) == 2
    assert error_line(capsys).startswith("error: usage:")


def test_warmup_frame_is_refused(runs, capsys):
    assert main(["metrics", "--runs", str(runs / "improved"), "--frame", "10", "--out",
                 str(runs / "bad")]) == 1
    assert error_line(capsys).startswith("error: warmup:")


def test_missing_input(tmp_path, capsys):
    assert main(["run", "--model", "classic", "--in", str(tmp_path / "none"), "--out", str(tmp_path)]) == 1
    assert error_line(capsys).startswith("error: format:")


def test_unknown_config_key(seq, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gain=2\n")
    assert main(["run", "--model", "classic", "--config", str(cfg), "--in", str(seq),
                 "--out", str(tmp_path / "o")]) == 1
    assert error_line(capsys) == "error: config: unknown config key: gain"


def test_rate_mismatch(seq, tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("dt=0.002\n")
    assert main(["compare", "--in", str(seq), "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert error_line(capsys).startswith("error: config:")


def test_missing_subcommand(capsys):
    assert main([]) == 2
    assert error_line(capsys).startswith("error: usage:")
