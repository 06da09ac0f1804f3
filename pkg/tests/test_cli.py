import subprocess
import sys

import numpy as np
import pytest

from sanet import activations as act
from sanet import data
from sanet.cli import run
from sanet.model import SanModel, init_model, load_checkpoint, save_checkpoint

SUBCOMMANDS = ["train", "sweep", "eval-classifier", "reconstruct", "export-kernels", "gradcheck"]


def artifacts(directory):
    """Relative path -> bytes for everything except the timestamped log."""
    return {
        p.relative_to(directory).as_posix(): p.read_bytes()
        for p in sorted(directory.rglob("*"))
        if p.is_file() and p.name != "sanet.log"
    }


def test_help_lists_subcommands():
    proc = subprocess.run([sys.executable, "-m", "sanet.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in SUBCOMMANDS:
        assert name in proc.stdout


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_subcommand_help(name, capsys):
    with pytest.raises(SystemExit) as info:
        run([name, "--help"])
    assert info.value.code == 0
    assert "--out" in capsys.readouterr().out


def test_unknown_flag(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(["gradcheck", "--bogus", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_gradcheck(tmp_path, capsys):
    assert run(["gradcheck", "--seed", "7", "--count", "5", "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    for tag in act.KINDS:
        assert tag in printed
    lines = (tmp_path / "gradcheck.csv").read_text().splitlines()
    assert lines[0] == "activation,rank,max_rel_error,stable,total,status"
    assert len(lines) == 1 + 9 and all(line.endswith("pass") for line in lines[1:])


def test_missing_config(tmp_path, capsys):
    status = run(["sweep", "--config", "missing.cfg", "--out", str(tmp_path)])
    assert status == 2
    err = capsys.readouterr().err
    assert "missing.cfg" in err and err.strip().splitlines()[-1].startswith("sanet: error:")


def test_data_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1\n2\nx\n")
    status = run(["train", "--signal", str(bad), "--kernel-size", "3", "--out", str(tmp_path / "o")])
    assert status == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "line 3" in err[0]


def test_reconstruct_identity(tmp_path):
    ckpt = tmp_path / "identity.txt"
    save_checkpoint(SanModel([np.array([1.0])], act.IDENTITY, [None]), ckpt)
    x = np.random.default_rng(0).standard_normal(300)
    signal = tmp_path / "x.csv"
    data.save_signal_csv(x, signal)
    out = tmp_path / "out"
    assert run(["reconstruct", "--checkpoint", str(ckpt), "--input", str(signal), "--out", str(out)]) == 0
    assert (out / "reconstruction.csv").read_text() == signal.read_text()
    assert (out / "activation_0.csv").exists() and (out / "report.csv").exists()


def test_reconstruct_2d(tmp_path):
    ckpt = tmp_path / "m.txt"
    model = init_model(2, 3, (8, 8), act.EXTREMA_POOL_INDICES, seed=1)
    save_checkpoint(model, ckpt)
    img = tmp_path / "img.csv"
    np.savetxt(img, np.random.default_rng(1).uniform(size=(8, 8)), delimiter=",")
    assert run(["reconstruct", "--checkpoint", str(ckpt), "--input", str(img), "--out", str(tmp_path / "o")]) == 0
    assert np.loadtxt(tmp_path / "o" / "reconstruction.csv", delimiter=",").shape == (8, 8)


def test_export_kernels(tmp_path):
    ckpt = tmp_path / "m.txt"
    model = init_model(2, 7, (100,), act.RELU, seed=3)
    save_checkpoint(model, ckpt)
    assert run(["export-kernels", "--checkpoint", str(ckpt), "--out", str(tmp_path)]) == 0
    for i, k in enumerate(model.kernels):
        assert np.loadtxt(tmp_path / f"kernel_{i}.csv").tobytes() == k.tobytes()


def test_train_idempotent(tmp_path):
    argv = ["train", "--kernel-size", "50", "--epochs", "3", "--seed", "2", "--activation", act.EXTREMA]
    assert run(argv + ["--out", str(tmp_path / "a")]) == 0
    assert run(argv + ["--out", str(tmp_path / "b")]) == 0
    first, second = artifacts(tmp_path / "a"), artifacts(tmp_path / "b")
    assert set(first) >= {"checkpoint.txt", "history.csv", "test_reports.csv", "kernel_0.csv"}
    assert first == second
    model = load_checkpoint(tmp_path / "a" / "checkpoint.txt")
    assert model.activation == act.EXTREMA and model.kernels[0].shape == (50,)


def test_sweep_with_config(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("epochs = 2\nkernel_sizes = 10, 25\nactivations = identity, topk_absolutes\n")
    argv = ["sweep", "--config", str(cfg), "--seed", "1"]
    assert run(argv + ["--out", str(tmp_path / "a")]) == 0
    assert run(argv + ["--out", str(tmp_path / "b")]) == 0
    first = artifacts(tmp_path / "a")
    assert first == artifacts(tmp_path / "b")
    assert len(first["sweep.csv"].decode().splitlines()) == 5
    assert "checkpoints/topk_absolutes_m25.txt" in first


def test_eval_classifier_on_idx(tmp_path, capsys):
    rng = np.random.default_rng(0)
    labels = np.arange(120) % 2
    images = rng.integers(0, 60, (120, 8, 8))
    images[labels == 1, 2:6, 2:6] += 150
    data.write_idx(tmp_path / "img", images, data.IDX_IMAGES_MAGIC)
    data.write_idx(tmp_path / "lbl", labels, data.IDX_LABELS_MAGIC)
    ckpt = tmp_path / "identity.txt"
    save_checkpoint(SanModel([np.array([[1.0]])], act.IDENTITY, [None]), ckpt)
    argv = ["eval-classifier", "--checkpoint", str(ckpt), "--idx-images", str(tmp_path / "img"),
            "--idx-labels", str(tmp_path / "lbl"), "--n-train", "80", "--n-val", "20", "--n-test", "20",
            "--out", str(tmp_path / "o")]
    assert run(argv) == 0
    rows = (tmp_path / "o" / "classifier.csv").read_text().splitlines()
    assert rows[0] == "raw_accuracy,reconstruction_accuracy,delta_points"
    assert rows[1].split(",")[2] == "0"
    assert "delta +0.0" in capsys.readouterr().out


def test_two_sources_rejected(tmp_path):
    sig = tmp_path / "s.csv"
    sig.write_text("1\n")
    assert run(["train", "--kernel-size", "3", "--signal", str(sig), "--synthetic", "--out", str(tmp_path)]) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SANET_OUTPUT_DIR", str(tmp_path / "env-out"))
    assert run(["gradcheck", "--count", "1"]) == 0
    assert (tmp_path / "env-out" / "gradcheck.csv").exists()
