import json
import math
import struct

import numpy as np
import pytest

import scbm


def fnv_probability(adjective, text, persona=""):
    h = 14695981039346656037
    for byte in (adjective + "\x1f" + text + "\x1f" + persona).encode():
        h ^= byte
        h = (h * 1099511628211) % 2**64
    return (h >> 11) * 2.0**-53


def test_lexicon():
    lex = scbm.Lexicon()
    assert len(lex) == 131
    assert lex[0] == "abusive"
    assert lex.index_of("ABUSIVE") == 0
    with pytest.raises(IndexError):
        lex[1000]


def test_mock_probability_matches_fnv():
    for adj, text in [("hostile", "hello"), ("crude", "ñandú"), ("a", "")]:
        assert scbm.mock_yes_probability(adj, text) == fnv_probability(adj, text)


def test_score_texts_and_cache(tmp_path):
    lex = scbm.Lexicon(["hostile", "crude", "kind"], "py-test")
    texts = ["first text", "second text"]
    cache = str(tmp_path / "cache.bin")
    scores = scbm.score_texts(texts, lex, cache_path=cache)
    assert scores.shape == (2, 3)
    assert scores[1, 2] == fnv_probability("kind", "second text")
    again = scbm.score_texts(texts, lex, cache_path=cache)
    assert np.array_equal(scores, again)


def test_metrics():
    assert scbm.soft_cross_entropy([[0.5, 0.5]], [[0.5, 0.5]]) == pytest.approx(math.log(2), abs=1e-12)
    assert scbm.macro_f1([0, 0, 0, 0], [0, 0, 1, 1], 2) == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(scbm.ScbmError):
        scbm.macro_f1([0], [0, 1], 2)


def test_offline_run_and_model(tmp_path):
    assert scbm.run(["synth", "--out", str(tmp_path), "--posts", "60", "--train", "40", "--seed", "2"]) == 0
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "seed": 4,
        "paths": {"dataset": "dataset.json", "splits": "splits.json", "output_dir": "out"},
        "train": {"epochs": 50, "hidden": [16]},
    }))
    for command in (["score"], ["train"], ["evaluate"]):
        assert scbm.run(command + ["--config", str(config)]) == 0
    metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert metrics["ALL"]["macro_f1"] >= 0.8

    model = scbm.Model.load(str(tmp_path / "out" / "checkpoint.json"))
    assert model.task == "1.1"
    assert model.kind == "scbm"
    assert model.labels == ["SEXIST", "NON-SEXIST"]
    lex = scbm.Lexicon()
    x = scbm.score_texts(["some post", "another post"], lex)
    proba = model.predict_proba(x)
    assert proba.shape == (2, 2)
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert model.predict(x) == [int(np.argmax(row)) if row[0] != row[1] else 0 for row in proba]
    top = model.explain(x[0], k=5)
    assert len(top) == 5
    assert [a for _, a in top] == sorted((a for _, a in top), reverse=True)
    with pytest.raises(scbm.ScbmError):
        model.predict_proba(x[:, :10])


def test_bad_config_exit_code(tmp_path):
    config = tmp_path / "run.json"
    config.write_text("{}")
    assert scbm.run(["train", "--config", str(config)]) == 1
