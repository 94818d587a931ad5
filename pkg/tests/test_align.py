import pytest

from threadcred import align
from threadcred.ingest import DatasetManifest, ManifestEntry, TweetRecord


def rv(*ratings):
    return align.RatingVector("e", ratings)


def test_rating_validation():
    with pytest.raises(ValueError):
        rv(3)
    with pytest.raises(ValueError):
        align.RatingVector("e", ())


def test_default_labels_and_boundaries():
    assert align.label_by_mean(1.95) == "accurate"
    assert align.label_by_mean(1.40) == "inaccurate"
    assert align.label_by_mean(1.70) == "unlabeled"
    assert align.label_by_mean(1.9) == "unlabeled"
    assert align.label_by_mean(1.467) == "unlabeled"


def test_degenerate_thresholds():
    with pytest.raises(ValueError, match="degenerate"):
        align.LabelThresholds(1.9, 1.9)


def test_quantile_thresholds():
    th = align.compute_thresholds([0, 1, 2, 3, 4], 0.25)
    assert (th.low, th.high) == (1.0, 3.0)
    with pytest.raises(ValueError):
        align.compute_thresholds([1, 1, 1], 0.15)


def t(tid, time, parent=None, rt=0):
    return TweetRecord(tid, time, "x", "a", in_reply_to=parent, retweet_count=rt)


def test_root_event_picks_most_retweeted():
    tweets = [t("a", 0, rt=3), t("b", 1, rt=9), t("c", 2, "b"), t("d", 3, "c"), t("e", 4, "a")]
    tree = align.root_event(tweets)
    assert tree.id == "b" and set(tree.tweets) == {"b", "c", "d"}


def test_root_event_without_reactions_is_discarded():
    assert align.root_event([t("a", 0, rt=5), t("b", 1)]) is None
    assert align.root_event([]) is None


def test_unify_pheme_and_buzzfeed():
    m = DatasetManifest("p", "pheme-like", [ManifestEntry("a", "true"), ManifestEntry("b", "false"),
                                            ManifestEntry("c", "unverified")])
    u = align.unify_labels(m)
    assert [e.label for e in u.manifest.threads] == ["accurate", "inaccurate"]
    assert u.counts() == {"accurate": 1, "inaccurate": 1, "excluded": 1}
    m = DatasetManifest("b", "buzzfeed-like", [ManifestEntry("a", "mostly-false")])
    assert align.unify_labels(m).manifest.threads[0].label == "inaccurate"


def test_unify_credbank_uses_ratings():
    m = DatasetManifest("c", "credbank-like", [ManifestEntry("x/e1.jsonl", "unlabeled", "e1"),
                                               ManifestEntry("x/e2.jsonl", "unlabeled")])
    ratings = {"e1": align.RatingVector("e1", (2, 2)), "e2": align.RatingVector("e2", (1, 1))}
    u = align.unify_labels(m, ratings)
    assert [e.label for e in u.manifest.threads] == ["accurate", "inaccurate"]
    with pytest.raises(ValueError, match="no ratings"):
        align.unify_labels(m, {})
