import json

import pytest

from alarmseq.cli import main


@pytest.fixture(scope="module")
def artefacts(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "gen.cfg").write_text("# small corpus\noccurrences_per_fault = 2\nn_faults = 3\n")
    (d / "sg.cfg").write_text("epochs = 3\n")
    (d / "net.cfg").write_text("filters=6\nlstm_units=4\nattn_dim=3\nlr=0.01\nbatch=10\n")
    assert main(["simulate", "--config", str(d / "gen.cfg"), "--seed", "1", "--out", str(d / "log.csv")]) == 0
    assert main(["preprocess", str(d / "log.csv"), "--out", str(d / "win.txt")]) == 0
    assert main(["train-embed", str(d / "win.txt"), "--config", str(d / "sg.cfg"), "--out", str(d / "emb.txt")]) == 0
    assert main(["train", str(d / "win.txt"), str(d / "emb.txt"), "--config", str(d / "net.cfg"),
                 "--epochs", "3", "--out", str(d / "model.bin")]) == 0
    return d


def test_pipeline_outputs(artefacts, capsys):
    d = artefacts
    assert len((d / "win.txt").read_text().splitlines()) == 6 * 16
    manifest = json.loads((d / "model.bin.manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config"]["filters"] == 6
    assert manifest["config"]["epochs"] == 3
    history = (d / "model.bin.history.csv").read_text().splitlines()
    assert len(history) == 4
    assert "accuracy" in (d / "model.bin.report.txt").read_text()
    assert (d / "model.bin.confusion.csv").read_text().startswith("true,1,2,6")


def test_detect_on_holdout(artefacts, capsys):
    d = artefacts
    held = d / "held.csv"
    assert main(["simulate", "--config", str(d / "gen.cfg"), "--seed", "1", "--first-index", "2",
                 "--occurrences-per-fault", "1", "--out", str(held)]) == 0
    capsys.readouterr()
    assert main(["detect", str(d / "model.bin"), str(d / "emb.txt"), str(held), "--repeat-suppress", "60"]) == 0
    lines = capsys.readouterr().out.splitlines()
    # one continuous stream of three 20-alarm executions
    assert len(lines) == 3 * 20 - 4
    assert all(len(ln.split(",")) == 3 + 3 for ln in lines)


def test_train_embed_from_log_matches_windows(artefacts):
    d = artefacts
    assert main(["train-embed", str(d / "log.csv"), "--config", str(d / "sg.cfg"), "--out", str(d / "emb2.txt")]) == 0
    assert (d / "emb2.txt").read_bytes() == (d / "emb.txt").read_bytes()


def test_exit_codes(artefacts, tmp_path, capsys):
    d = artefacts
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("no_such_key = 1\n")
    assert main(["simulate", "--config", str(bad_cfg), "--out", str(tmp_path / "x.csv")]) == 2
    (tmp_path / "dcfg").write_text("d = 7\n")
    assert main(["train", str(d / "win.txt"), str(d / "emb.txt"), "--config", str(tmp_path / "dcfg"),
                 "--out", str(tmp_path / "m")]) == 2
    (tmp_path / "bad.csv").write_text("timestamp,variable,identifier,priority,occurrence_id,fault\n1,V,Up,1,a,1\n")
    assert main(["preprocess", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "w")]) == 3
    (tmp_path / "junk.bin").write_bytes(b"nope")
    assert main(["detect", str(tmp_path / "junk.bin"), str(d / "emb.txt"), str(d / "log.csv")]) == 3
    assert main(["preprocess", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "w")]) == 3
    assert "error:" in capsys.readouterr().err


def test_detect_halt_on_unknown_tag(artefacts, tmp_path):
    d = artefacts
    (tmp_path / "s.csv").write_text("0,Mystery,High,1\n")
    assert main(["detect", str(d / "model.bin"), str(d / "emb.txt"), str(tmp_path / "s.csv"), "--oov", "halt"]) == 3


def test_gradcheck_command(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("PASS")
    assert "dense-only" in out
    assert main(["gradcheck", "--threshold", "1e-30"]) == 4
