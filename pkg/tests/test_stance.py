import numpy as np
import pytest

from threadcred import stance


def test_tokenize():
    assert stance.tokenize("@bob That's FAKE!! see http://t.co/x") == [
        "<mention>", "that's", "fake", "see", "<url>"]
    assert stance.tokenize("") == []


def test_featurize_is_deterministic_and_bounded():
    a = stance.featurize_text(["this", "is", "fake"], hash_bits=10)
    assert a == stance.featurize_text(["this", "is", "fake"], hash_bits=10)
    assert all(0 <= i < 1024 for i in a)
    assert len(a) <= 5  # 3 unigrams + 2 bigrams


def test_example_validation():
    with pytest.raises(ValueError):
        stance.StanceExample("  ", "disagree")
    with pytest.raises(ValueError):
        stance.StanceExample("x", "agree")


def test_training_needs_both_classes():
    with pytest.raises(ValueError):
        stance.train_stance([stance.StanceExample("x", "other")])


def test_model_separates_synthetic_corpus_and_roundtrips(tmp_path):
    corpus = stance.synthetic_corpus(60, seed=3)
    model = stance.train_stance(corpus, stance.StanceConfig(hash_bits=14, epochs=5))
    assert stance.is_disagreement(model, "that claim is a hoax")
    assert not stance.is_disagreement(model, "the report is confirmed")
    assert model.epoch_loss[-1] < model.epoch_loss[0]
    p = tmp_path / "m.json"
    model.save(p)
    loaded = stance.StanceModel.load(p)
    assert np.array_equal(loaded.weights, model.weights) and loaded.bias == model.bias


def test_seeded_retraining_is_identical():
    corpus = stance.synthetic_corpus(40, seed=1)
    cfg = stance.StanceConfig(hash_bits=12, epochs=3, seed=9)
    a, b = stance.train_stance(corpus, cfg), stance.train_stance(corpus, cfg)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


def test_support_mapping():
    assert stance.stance_from_support("Refute") == "disagree"
    assert stance.stance_from_support("comment") == "other"
    with pytest.raises(ValueError):
        stance.stance_from_support("shrug")


def test_bundled_corpus_matches_generator():
    assert stance.bundled_corpus() == stance.synthetic_corpus(200, 0)
