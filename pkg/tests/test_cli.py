import json

import numpy as np
import pytest

from advtext.advtrain import read_predictions, write_predictions
from advtext.cli import main
from advtext.corpus import load_tsv
from advtext.pipeline import desk_config


@pytest.fixture
def corpus_tsv(tmp_path):
    path = tmp_path / "data.tsv"
    assert main(["synth", "--n", "200", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_synth_and_preprocess(tmp_path, corpus_tsv):
    out = tmp_path / "clean.tsv"
    assert main(["preprocess", "--in", str(corpus_tsv), "--out", str(out)]) == 0
    clean = load_tsv(out)
    assert len(clean) == 200
    assert not any("HTTPURL" in t.text.split() or "&amp;" in t.text for t in clean)


def test_preprocess_unlabeled(tmp_path):
    raw = tmp_path / "raw.tsv"
    raw.write_text("1\tStay &amp; safe \U0001f637  HTTPURL\n", encoding="utf-8")
    out = tmp_path / "clean.tsv"
    assert main(["preprocess", "--in", str(raw), "--out", str(out), "--unlabeled"]) == 0
    assert out.read_text(encoding="utf-8") == "1\tStay & safe :face_with_medical_mask: URL\n"


def test_preprocess_custom_table(tmp_path):
    raw = tmp_path / "raw.tsv"
    raw.write_text("1\tmask \U0001f637\n", encoding="utf-8")
    table = tmp_path / "e.tsv"
    table.write_text("1F637\tmask\n", encoding="utf-8")
    out = tmp_path / "clean.tsv"
    assert main(["preprocess", "--in", str(raw), "--out", str(out), "--unlabeled", "--emoji-table", str(table)]) == 0
    assert out.read_text(encoding="utf-8") == "1\tmask :mask:\n"


def test_folds(tmp_path, corpus_tsv):
    out = tmp_path / "folds.tsv"
    assert main(["folds", "--in", str(corpus_tsv), "--k", "4", "--seed", "1", "--out", str(out)]) == 0
    rows = [r.split("\t") for r in out.read_text().splitlines()]
    assert len(rows) == 200 and {r[1] for r in rows} == {"0", "1", "2", "3"}


def test_train_fold(tmp_path, corpus_tsv):
    data = load_tsv(corpus_tsv)
    from advtext.corpus import write_tsv

    write_tsv(data.subset(range(150)), tmp_path / "tr.tsv")
    write_tsv(data.subset(range(150, 200)), tmp_path / "va.tsv")
    (tmp_path / "cfg.json").write_text(json.dumps({"epochs": 2, "max_len": 24, "adversarial": True}))
    args = ["train-fold", "--train", str(tmp_path / "tr.tsv"), "--valid", str(tmp_path / "va.tsv"),
            "--config", str(tmp_path / "cfg.json"), "--out-dir", str(tmp_path / "fold")]
    assert main(args) == 0
    ids, probs = read_predictions(tmp_path / "fold" / "fold.oof.tsv")
    assert len(ids) == 50 and np.all((probs > 0) & (probs < 1))
    assert len((tmp_path / "fold" / "fold.history.tsv").read_text().splitlines()) <= 2


def test_ensemble_levels(tmp_path):
    write_predictions(tmp_path / "a.tsv", ["x", "y"], np.array([0.4, 0.2]))
    write_predictions(tmp_path / "b.tsv", ["x", "y"], np.array([0.8, 0.6]))
    out = tmp_path / "m.tsv"
    assert main(["ensemble", "--level", "fold", str(tmp_path / "a.tsv"), str(tmp_path / "b.tsv"), "--out", str(out)]) == 0
    assert read_predictions(out)[1].tolist() == pytest.approx([0.6, 0.4])
    assert main(["ensemble", "--level", "model", str(tmp_path / "a.tsv"), "--out", str(out)]) == 2
    assert main(["ensemble", "--level", "fold", str(tmp_path / "a.tsv"), "--out", str(out)]) == 0
    write_predictions(tmp_path / "c.tsv", ["y", "x"], np.array([0.4, 0.2]))
    assert main(["ensemble", "--level", "model", str(tmp_path / "a.tsv"), str(tmp_path / "c.tsv"), "--out", str(out)]) == 2


def _gold(tmp_path):
    gold = tmp_path / "gold.tsv"
    gold.write_text("a\tt\tUNINFORMATIVE\nb\tt\tUNINFORMATIVE\nc\tt\tINFORMATIVE\n", encoding="utf-8")
    return gold


def test_tune_threshold(tmp_path, capsys):
    write_predictions(tmp_path / "oof.tsv", ["a", "b", "c"], np.array([0.1, 0.4, 0.9]))
    out = tmp_path / "t.json"
    assert main(["tune-threshold", "--oof", str(tmp_path / "oof.tsv"), "--gold", str(_gold(tmp_path)), "--out", str(out)]) == 0
    assert json.loads(out.read_text()) == {"threshold": 0.65, "f1": 1.0, "candidates": 4}


def test_evaluate_probs_and_labels(tmp_path, capsys):
    gold = _gold(tmp_path)
    write_predictions(tmp_path / "p.tsv", ["c", "a", "b"], np.array([0.9, 0.6, 0.1]))
    assert main(["evaluate", "--pred", str(tmp_path / "p.tsv"), "--gold", str(gold)]) == 0
    assert capsys.readouterr().out == "tp 1\nfp 1\nfn 0\ntn 1\nprecision 0.500000\nrecall 1.000000\nf1 0.666667\n"
    (tmp_path / "l.tsv").write_text("a\tUNINFORMATIVE\nb\tUNINFORMATIVE\nc\tINFORMATIVE\n")
    assert main(["evaluate", "--pred", str(tmp_path / "l.tsv"), "--gold", str(gold)]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "f1 1.000000"


def test_analyze(tmp_path, capsys):
    gold = _gold(tmp_path)
    write_predictions(tmp_path / "a.tsv", ["a", "b", "c"], np.array([0.7, 0.6, 0.2]))
    write_predictions(tmp_path / "b.tsv", ["a", "b", "c"], np.array([0.1, 0.8, 0.3]))
    args = ["analyze", "--pred-a", str(tmp_path / "a.tsv"), "--pred-b", str(tmp_path / "b.tsv"),
            "--gold", str(gold), "--k", "2", "--out-dir", str(tmp_path / "an")]
    assert main(args) == 0
    top = [r.split("\t") for r in (tmp_path / "an" / "top_k.tsv").read_text().splitlines()]
    assert [r[0] for r in top] == ["c", "a"] and top[0][2] == "INFORMATIVE"
    tsv = (tmp_path / "an" / "disagreement.tsv").read_text().splitlines()
    assert tsv[1] == "a_wrong\t3\ta,b,c" and tsv[3] == "a_wrong_b_right\t1\ta"
    assert "misclassified 3 samples" in capsys.readouterr().out


def test_exit_codes(tmp_path):
    for argv in (["nope"], ["folds", "--in"], []):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1
    bad = tmp_path / "bad.tsv"
    bad.write_text("1\tonly two\n")
    assert main(["folds", "--in", str(bad), "--out", str(tmp_path / "f.tsv")]) == 2
    assert main(["folds", "--in", str(tmp_path / "missing.tsv"), "--out", str(tmp_path / "f.tsv")]) == 2


def test_numeric_failure_exit_code(tmp_path, monkeypatch, corpus_tsv):
    from advtext import advtrain
    from advtext.errors import NonFiniteGradient

    def boom(*a, **k):
        raise NonFiniteGradient("nan")

    monkeypatch.setattr(advtrain, "train_fold", boom)
    args = ["train-fold", "--train", str(corpus_tsv), "--valid", str(corpus_tsv), "--out-dir", str(tmp_path)]
    assert main(args) == 3


def test_run_and_predict(tmp_path, capsys):
    cfg = desk_config(tmp_path / "run", n=200)
    d = cfg.to_dict()
    for v in d["variants"]:
        v["train"]["epochs"] = 1
    d["k"] = 2
    (tmp_path / "exp.json").write_text(json.dumps(d))
    assert main(["run", "--config", str(tmp_path / "exp.json")]) == 0
    assert "ensemble" in capsys.readouterr().out
    raw = tmp_path / "test.tsv"
    raw.write_text("q1\t12 new cases confirmed in texas HTTPURL \U0001f637\nq2\tlol this is a joke\n", encoding="utf-8")
    out = tmp_path / "preds.tsv"
    assert main(["predict", "--manifest", str(tmp_path / "run" / "manifest.json"), "--in", str(raw), "--out", str(out)]) == 0
    rows = [r.split("\t") for r in out.read_text().splitlines()]
    assert [r[0] for r in rows] == ["q1", "q2"]
    assert all(r[1] in ("INFORMATIVE", "UNINFORMATIVE") for r in rows)
