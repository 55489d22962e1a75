import itertools
import math
from pathlib import Path

import numpy as np
import pytest

import stacktag

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def test_version():
    assert stacktag.__version__ == "0.1.0"
    code, out, _ = stacktag.cli(["--version"])
    assert (code, out) == (0, "stacktag 0.1.0\n")


def test_tokenize_counts_code_points():
    toks = stacktag.tokenize("Ñandú 12,5 mg.")
    assert [t.surface for t in toks] == ["Ñandú", "12", ",", "5", "mg", "."]
    assert (toks[0].start, toks[0].end) == (0, 5)


def test_figure_alignment():
    text = "tratamiento amoxicilina - clavulánico oral"
    sents = stacktag.to_bio(text, "T1\tNORM 12 37\tamoxicilina - clavulánico\n")
    assert sents[0].tags == ["O", "B-NORM", "I-NORM", "I-NORM", "O"]
    mentions = stacktag.decode_bio(sents[0])
    assert [(m.start, m.end, m.label) for m in mentions] == [(12, 37, "NORM")]


def test_bad_annotation_raises():
    with pytest.raises(stacktag.StacktagError, match="SurfaceMismatch"):
        stacktag.to_bio("abc def", "T1\tX 0 3\tabd\n")


def test_crf_against_enumeration():
    rng = np.random.default_rng(0)
    L, T = 3, 4
    em = rng.normal(size=(T, L))
    trans = stacktag.crf_init_transitions(L)
    trans[:L, :L] = rng.normal(size=(L, L))
    start, stop = L, L + 1

    def score(path):
        s = trans[start, path[0]] + trans[path[-1], stop]
        s += sum(em[t, y] for t, y in enumerate(path))
        s += sum(trans[a, b] for a, b in zip(path, path[1:]))
        return s

    paths = list(itertools.product(range(L), repeat=T))
    scores = [score(p) for p in paths]
    logz = max(scores) + math.log(sum(math.exp(s - max(scores)) for s in scores))
    assert stacktag.crf_log_partition(em, trans) == pytest.approx(logz, rel=1e-10)
    tags, best = stacktag.crf_viterbi(em, trans)
    assert tuple(tags) == paths[int(np.argmax(scores))]
    assert best == pytest.approx(max(scores))
    assert stacktag.crf_nll(em, trans, tags) >= 0.0


def test_bpe_toy():
    freq = {"low": 5, "lower": 2, "newest": 6, "widest": 3}
    merges = stacktag.bpe_learn(freq, 23)
    assert merges[:2] == [("e", "s"), ("es", "t")]
    assert stacktag.bpe_segment(merges, "lowest") == ["_low", "est"]


def test_evaluate_and_format():
    gold = [stacktag.EntityMention("d", 0, 5, "A"), stacktag.EntityMention("d", 6, 9, "B")]
    pred = [stacktag.EntityMention("d", 0, 5, "A"), stacktag.EntityMention("d", 6, 8, "B")]
    r = stacktag.evaluate(gold, pred)
    assert (r["tp"], r["fp"], r["fn"]) == (1, 1, 1)
    assert r["f1"] == pytest.approx(50.0)
    assert r["per_label"]["A"]["f1"] == pytest.approx(100.0)
    assert stacktag.format_percent(90.525) == "90.53"
    assert stacktag.format_percent(200 / 3) == "66.67"


def test_fixture_round_trip():
    for txt in sorted(FIXTURES.glob("brat/*.txt")):
        text = txt.read_text(encoding="utf-8")
        ann = txt.with_suffix(".ann").read_text(encoding="utf-8")
        sents = stacktag.to_bio(text, ann)
        mentions = [m for s in sents for m in stacktag.decode_bio(s)]
        back = stacktag.read_ann_mentions(stacktag.write_brat(mentions, text), "x")
        gold = stacktag.read_ann_mentions(ann, "x")
        assert stacktag.evaluate(gold, back)["f1"] == 100.0


def test_cli_errors():
    code, _, err = stacktag.cli(["nope"])
    assert code == 2
    assert err.startswith("error\tUnknownSubcommand\t")


def test_train_and_tag(tmp_path):
    sents = ["Paciente recibe ibuprofeno oral .", "Dolor tolera paracetamol leve ."] * 5
    tags = ["O O B-DRUG O O", "O O B-DRUG O O"] * 5
    conll = "".join(
        "".join(f"{w} {t}\n" for w, t in zip(s.split(), g.split())) + "\n" for s, g in zip(sents, tags)
    )
    (tmp_path / "train.conll").write_text(conll, encoding="utf-8")
    (tmp_path / "corpus.txt").write_text("\n".join(sents) + "\n", encoding="utf-8")
    code, _, err = stacktag.cli(["train-embed", "--corpus", str(tmp_path / "corpus.txt"), "--out",
                                 str(tmp_path / "w.vec"), "--dim", "8", "--min-count", "1",
                                 "--epochs", "2", "--seed", "1"])
    assert code == 0, err
    code, _, err = stacktag.cli(["train", "--train", str(tmp_path / "train.conll"), "--stack",
                                 "word:" + str(tmp_path / "w.vec"), "--out", str(tmp_path / "m.stk"),
                                 "--hidden", "8", "--batch", "1", "--max-epochs", "30", "--seed", "1"])
    assert code == 0, err

    model = stacktag.Model.load(str(tmp_path / "m.stk"))
    assert model.labels == ["O", "B-DRUG"]
    assert model.stack == ["word"]
    text = "Paciente recibe ibuprofeno oral ."
    mentions, ann = model.tag(text)
    for m in mentions:
        assert text[m.start:m.end] in ann
    assert model.tag("") == ([], "")
