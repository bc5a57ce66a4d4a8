import functools

import numpy as np
import pytest

from emocircle import cli
from emocircle.data import load_csv, synth_generate, save_csv
from emocircle.experiments import ABLATION_HEADER, SWEEP_HEADER
from emocircle.gradcheck import gradcheck
from emocircle.model import LinearModel, TrainState, Adam, backward, save_checkpoint

FAST = ["--learning-rate", "0.01", "--epochs", "3"]


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.csv"
    save_csv(synth_generate(150, 6, noise=0.05, seed=21), path)
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# -- map -------------------------------------------------------------------


def test_map_one_hot(capsys):
    code, out, err = run(capsys, "map", "--dist", "1,0,0,0,0,0,0,0")
    assert code == 0
    assert out == "p=0 theta=0.392699 r=1.000000 degenerate=false\n"
    assert "resolved configuration" in err


def test_map_uniform_is_degenerate(capsys):
    code, out, _ = run(capsys, "map", "--dist", ",".join(["0.125"] * 8))
    assert code == 0
    assert "degenerate=true" in out and "r=0.000000" in out


def test_map_negative_half(capsys):
    code, out, _ = run(capsys, "map", "--dist", "0,0,0,0,0,1,0,0")
    assert out.startswith("p=1 theta=4.319690")


@pytest.mark.parametrize("dist", ["1,0,0", "a,b", "0.5,0.5,0.5,0,0,0,0,0", "-1,2,0,0,0,0,0,0"])
def test_map_rejects_bad_input(capsys, dist):
    code, _, err = run(capsys, "map", f"--dist={dist}")
    assert code == 2 and "error:" in err


def test_map_batch(capsys, data_csv):
    code, out, _ = run(capsys, "map", "--input", data_csv)
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "id,p,theta,r,degenerate"
    assert len(lines) == 1 + len(load_csv(data_csv))


def test_map_uses_config_positions(capsys, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("positions = 2,1,3,4,5,6,7,8\n")
    code, out, _ = run(capsys, "map", "--config", cfg, "--dist", "1,0,0,0,0,0,0,0")
    assert code == 0 and "theta=1.178097" in out


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("learning_rat = 0.1\n")
    code, _, err = run(capsys, "map", "--config", cfg, "--dist", "1,0,0,0,0,0,0,0")
    assert code == 2 and "learning_rat" in err


def test_unknown_flag_is_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["map", "--dsit", "1"])
    assert info.value.code == 2


# -- train / eval ------------------------------------------------------------


def test_train_writes_artifacts(capsys, tmp_path, data_csv):
    code, out, err = run(capsys, "train", "--data", data_csv, "--out", tmp_path, *FAST,
                         "--mu", "0.7")
    assert code == 0
    trace = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(trace) == 1 + 3
    assert (tmp_path / "model.ckpt").exists() and (tmp_path / "eval.csv").exists()
    assert "mu = 0.7" in err and "kl (down)" in out


def test_train_mu_changes_trace(capsys, tmp_path, data_csv):
    for mu in ("0", "0.7"):
        run(capsys, "train", "--data", data_csv, "--out", tmp_path / mu, *FAST, "--mu", mu)
    a = (tmp_path / "0" / "trace.csv").read_text()
    b = (tmp_path / "0.7" / "trace.csv").read_text()
    assert a != b


def test_train_resume_matches_uninterrupted(capsys, tmp_path, data_csv):
    base = ["train", "--data", data_csv, "--learning-rate", "0.01", "--seed", "2"]
    run(capsys, *base, "--epochs", "5", "--out", tmp_path / "full")
    run(capsys, *base, "--epochs", "3", "--out", tmp_path / "head")
    code, _, _ = run(capsys, *base, "--epochs", "5", "--out", tmp_path / "tail",
                     "--resume", tmp_path / "head" / "model.ckpt")
    assert code == 0
    assert (tmp_path / "full" / "model.ckpt").read_bytes() == (
        tmp_path / "tail" / "model.ckpt").read_bytes()
    full = (tmp_path / "full" / "trace.csv").read_text().splitlines()
    tail = (tmp_path / "tail" / "trace.csv").read_text().splitlines()
    assert tail[1:] == full[4:]
    assert (tmp_path / "full" / "eval.csv").read_text() == (
        tmp_path / "tail" / "eval.csv").read_text()


def test_train_non_finite_exits_3(capsys, tmp_path, data_csv):
    cfg = tmp_path / "c.txt"
    cfg.write_text("init_scale = 1e308\n")
    code, _, err = run(capsys, "train", "--data", data_csv, "--config", cfg,
                       "--out", tmp_path / "o", *FAST)
    assert code == 3 and "epoch 1" in err


def test_eval_perfect_and_uniform(capsys, tmp_path):
    rows = ["id," + ",".join(f"f{k}" for k in range(1, 9)) + ","
            + ",".join(f"d{k}" for k in range(1, 9))]
    for j in range(8):
        onehot = ["1.0" if k == j else "0.0" for k in range(8)]
        rows.append(",".join([f"x{j}"] + onehot + onehot))
    data = tmp_path / "eye.csv"
    data.write_text("\n".join(rows) + "\n")

    perfect = tmp_path / "perfect.ckpt"
    save_checkpoint(perfect, TrainState(LinearModel(80.0 * np.eye(8), np.zeros(8)), Adam()))
    code, out, _ = run(capsys, "eval", "--data", data, "--model", perfect,
                       "--out", tmp_path / "p.csv")
    assert code == 0
    values = dict(zip(*[line.split(",") for line in (tmp_path / "p.csv").read_text().splitlines()]))
    assert float(values["chebyshev"]) < 1e-8 and float(values["cosine"]) > 1 - 1e-12
    assert float(values["accuracy"]) == 1.0

    uniform = tmp_path / "uniform.ckpt"
    save_checkpoint(uniform, TrainState(LinearModel.zeros(8, 8), Adam()))
    code, out, _ = run(capsys, "eval", "--data", data, "--model", uniform)
    header, row = out.strip().splitlines()[-2:]
    values = dict(zip(header.split(","), row.split(",")))
    assert float(values["kl"]) == pytest.approx(2.07944, abs=1e-5)
    assert float(values["cosine"]) == pytest.approx(0.35355, abs=1e-5)


def test_eval_errors(capsys, tmp_path, data_csv):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    model = tmp_path / "m.ckpt"
    save_checkpoint(model, TrainState(LinearModel.zeros(6, 8), Adam()))
    assert run(capsys, "eval", "--data", empty, "--model", model)[0] == 2
    header_only = tmp_path / "header.csv"
    header_only.write_text(data_csv.read_text().splitlines()[0] + "\n")
    assert run(capsys, "eval", "--data", header_only, "--model", model)[0] == 2
    wrong = tmp_path / "wrong.ckpt"
    save_checkpoint(wrong, TrainState(LinearModel.zeros(4, 8), Adam()))
    assert run(capsys, "eval", "--data", data_csv, "--model", wrong)[0] == 2
    assert run(capsys, "eval", "--data", data_csv, "--model", tmp_path / "missing")[0] == 2


# -- gradcheck ---------------------------------------------------------------


def test_gradcheck_passes(capsys):
    code, out, _ = run(capsys, "gradcheck", "--points", "12", "--seed", "3")
    assert code == 0 and out.startswith("PASS")
    assert "max_rel_error=" in out


def test_gradcheck_mu_zero_subset(capsys):
    code, out, _ = run(capsys, "gradcheck", "--points", "8", "--mu", "0")
    assert code == 0 and out.startswith("PASS")


def _flipped(*args, **kwargs):
    grads, report = backward(*args, **kwargs)
    grads["weights"] = -grads["weights"]
    return grads, report


def test_gradcheck_detects_sign_error(capsys, monkeypatch):
    monkeypatch.setattr(cli, "gradcheck", functools.partial(gradcheck, grad_fn=_flipped))
    code, out, _ = run(capsys, "gradcheck", "--points", "4")
    assert code == 1 and out.startswith("FAIL")
    assert "worst" in out


def test_gradcheck_bad_mu(capsys):
    assert run(capsys, "gradcheck", "--mu", "1.5")[0] == 2


# -- sweep / ablate ----------------------------------------------------------


def test_sweep_rows(capsys, tmp_path, data_csv):
    code, out, _ = run(capsys, "sweep-mu", "--data", data_csv, "--grid", "0,0.7,1", *FAST)
    lines = out.splitlines()
    assert code == 0 and lines[0] == ",".join(SWEEP_HEADER)
    assert [float(row.split(",")[0]) for row in lines[1:]] == [0.0, 0.7, 1.0]


def test_sweep_single_point_matches_train(capsys, tmp_path, data_csv):
    run(capsys, "sweep-mu", "--data", data_csv, "--grid", "0.5", *FAST,
        "--out", tmp_path / "sweep.csv")
    run(capsys, "train", "--data", data_csv, "--mu", "0.5", *FAST, "--out", tmp_path / "t")
    _, row = (tmp_path / "sweep.csv").read_text().splitlines()
    header, values = (tmp_path / "t" / "eval.csv").read_text().splitlines()
    ev = dict(zip(header.split(","), values.split(",")))
    assert row.split(",") == ["0.5", ev["kl"], ev["cosine"], ev["accuracy"]]


@pytest.mark.parametrize("grid", ["0,2", "x", "0.5,0.5"])
def test_sweep_bad_grid(capsys, data_csv, grid):
    assert run(capsys, "sweep-mu", "--data", data_csv, "--grid", grid)[0] == 2


def test_ablate_rows_match_train(capsys, tmp_path, data_csv):
    code, out, _ = run(capsys, "ablate", "--data", data_csv, *FAST, "--mu", "0.6")
    lines = out.splitlines()
    assert code == 0 and lines[0] == ",".join(ABLATION_HEADER)
    labels = [row.split(",")[0] for row in lines[1:]]
    assert labels == ["L_KL", "L_KL+L_p", "L_KL+L_t", "L_KL+L_p+L_t", "L_KL+L_PC"]

    def train_row(mu):
        run(capsys, "train", "--data", data_csv, *FAST, "--mu", mu, "--out", tmp_path / mu)
        return (tmp_path / mu / "eval.csv").read_text().splitlines()[1]

    assert lines[1].split(",", 1)[1] == train_row("0")
    assert lines[5].split(",", 1)[1] == train_row("0.6")


# -- synth -------------------------------------------------------------------


def test_synth_writes_rows(capsys, tmp_path):
    args = ["synth", "--n", "100", "--features", "4", "--seed", "5"]
    assert run(capsys, *args, "--out", tmp_path / "a.csv")[0] == 0
    assert run(capsys, *args, "--out", tmp_path / "b.csv")[0] == 0
    text = (tmp_path / "a.csv").read_text()
    assert len(text.splitlines()) == 101
    assert text == (tmp_path / "b.csv").read_text()
    assert len(load_csv(tmp_path / "a.csv")) == 100


def test_synth_unwritable(capsys, tmp_path):
    code, _, err = run(capsys, "synth", "--n", "5", "--out", tmp_path / "missing" / "x.csv")
    assert code == 2 and "error:" in err


def test_synth_bad_parameters(capsys, tmp_path):
    assert run(capsys, "synth", "--n", "0", "--out", tmp_path / "x.csv")[0] == 2
