import json

import pytest

from threadcred import ingest
from threadcred.cli import main
from threadcred.synthetic import informative_noise, synthetic_threads, two_gaussians


def run(*argv):
    return main([str(a) for a in argv])


def test_help_and_unknown_flags(capsys):
    with pytest.raises(SystemExit) as e:
        run("rfe", "--help")
    assert e.value.code == 0
    with pytest.raises(SystemExit) as e:
        run("rfe", "--bogus")
    assert e.value.code == 2


def test_build_threads_reply_tree(tmp_path, fixtures, capsys):
    assert run("build-threads", fixtures / "thread5.jsonl", "--out", tmp_path / "th") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["threads"] == 1
    assert ingest.load_manifest(tmp_path / "th" / "manifest.json").threads[0].path.name == "r.jsonl"


def test_build_threads_missing_input(tmp_path, capsys):
    assert run("build-threads", tmp_path / "nope.jsonl", "--out", tmp_path / "o") == 2
    assert "nope.jsonl" in capsys.readouterr().err


def test_build_threads_strict_and_lenient(tmp_path, fixtures, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text((fixtures / "thread5.jsonl").read_text() + "{oops\n")
    assert run("build-threads", bad, "--out", tmp_path / "s") == 2
    assert run("--lenient", "build-threads", bad, "--out", tmp_path / "l") == 1


def test_root_event_discards_reactionless(tmp_path, capsys):
    ev = tmp_path / "quiet.jsonl"
    ingest.write_tweets([ingest.TweetRecord("a", 0, "x", "u", retweet_count=4),
                         ingest.TweetRecord("b", 5, "y", "v")], ev)
    assert run("build-threads", ev, "--mode", "root-event", "--out", tmp_path / "o") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["threads"] == 0 and summary["discarded_events"] == ["quiet"]


def test_label_credbank(tmp_path, capsys):
    r = tmp_path / "ratings.jsonl"
    r.write_text('{"event_id": "e1", "ratings": [2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 1]}\n'
                 '{"event_id": "e2", "ratings": [1, 1, 1, 2, 2, 2, 1, 2, 1, 1]}\n'
                 '{"event_id": "e3", "ratings": [2, 2, 2, 1, 1, 1, 2, 2, 2, 2]}\n')
    assert run("label-credbank", r, "--out", tmp_path / "m.json") == 0
    out = capsys.readouterr().out
    assert "low=1.467 high=1.9" in out and "accurate=1 inaccurate=1 unlabeled=1" in out
    assert run("label-credbank", r, "--out", tmp_path / "m.json", "--low", "2", "--high", "1") == 2
    assert run("label-credbank", r, "--out", tmp_path / "q.json", "--quantile", "0.25") == 0
    assert "low=1.55 high=1.825" in capsys.readouterr().out


def test_seed_required_and_config_file(tmp_path, capsys):
    ds = two_gaussians(40, 2, seed=0)
    ds.to_csv(tmp_path / "g.csv")
    assert run("crossval", "--matrix", tmp_path / "g.csv") == 2
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test\nseed = 4\nrepeats = 2\ntrees = 5\n")
    assert run("--config", cfg, "crossval", "--matrix", tmp_path / "g.csv",
               "--out", tmp_path / "a.json") == 0
    assert len(json.loads((tmp_path / "a.json").read_text())["aucs"]) == 2
    # flags beat the config file
    assert run("--config", cfg, "crossval", "--matrix", tmp_path / "g.csv", "--repeats", "3",
               "--out", tmp_path / "b.json") == 0
    assert len(json.loads((tmp_path / "b.json").read_text())["aucs"]) == 3
    cfg.write_text("color = red\n")
    assert run("--config", cfg, "crossval", "--matrix", tmp_path / "g.csv") == 2


def test_rfe_on_20_feature_set(tmp_path):
    informative_noise(n=40, seed=1).to_csv(tmp_path / "r.csv")
    args = ["rfe", "--matrix", tmp_path / "r.csv", "--seed", 3, "--repeats", 1, "--trees", 3,
            "--folds", 3, "--out", tmp_path / "t.json", "--curve", tmp_path / "c.csv"]
    assert run(*args) == 0
    trace = json.loads((tmp_path / "t.json").read_text())
    assert len(trace["iterations"]) == 19
    assert (tmp_path / "c.csv").read_text().startswith("iteration,n_features,best_auc,removed\n")


def _pipeline(root, fixtures_seed=0):
    """Synthetic threads -> manifest -> stance model -> features -> transfer -> report."""
    threads = synthetic_threads(24, 12, seed=fixtures_seed)
    tweets = root / "tweets.jsonl"
    ingest.write_tweets([r for t in threads for r in t.records()], tweets)
    assert run("build-threads", tweets, "--out", root / "th", "--summary", root / "sum.json") == 0
    man = json.loads((root / "th" / "manifest.json").read_text())
    for i, e in enumerate(man["threads"]):
        e["label"] = "accurate" if i % 2 else "inaccurate"
    (root / "th" / "manifest.json").write_text(json.dumps(man))
    assert run("train-stance", "--seed", 1, "--epochs", 2, "--out", root / "stance.json") == 0
    assert run("apply-stance", "--model", root / "stance.json", "--manifest",
               root / "th" / "manifest.json", "--out", root / "flags.json") == 0
    assert run("featurize", "--manifest", root / "th" / "manifest.json", "--flags",
               root / "flags.json", "--out", root / "feat.csv") == 0
    assert run("featurize", "--manifest", root / "th" / "manifest.json", "--stance-model",
               root / "stance.json", "--out", root / "feat2.csv") == 0
    assert (root / "feat.csv").read_bytes() == (root / "feat2.csv").read_bytes()
    (root / "subset.json").write_text('["tweet_count", "mean_followers", "mean_polarity"]')
    assert run("transfer", "--seed", 2, "--source", root / "feat.csv", "--source",
               root / "feat2.csv", "--target", root / "feat.csv", "--features",
               root / "subset.json", "--repeats", 3, "--trees", 5,
               "--out", root / "out" / "transfer.json") == 0
    assert run("report", root / "out" / "transfer.json", "--out", root / "report.csv") == 0


def test_end_to_end_pipeline_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _pipeline(a)
    _pipeline(b)
    doc = json.loads((a / "out" / "transfer.json").read_text())
    assert [m["model"] for m in doc["models"]] == ["source_feat", "source_feat2", "pooled", "baseline"]
    assert all(len(m["aucs"]) == 3 for m in doc["models"])
    report = (a / "report.csv").read_text().splitlines()
    assert report[0] == "model,fpr,tpr"
    assert {line.split(",")[0] for line in report[1:]} == {m["model"] for m in doc["models"]}
    for rel in ["th/manifest.json", "flags.json", "feat.csv", "out/transfer.json", "report.csv",
                "out/roc_pooled.csv"]:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_featurize_needs_stance_source(tmp_path, fixtures, capsys):
    run("build-threads", fixtures / "thread5.jsonl", "--out", tmp_path / "th")
    assert run("featurize", "--manifest", tmp_path / "th" / "manifest.json",
               "--out", tmp_path / "f.csv") == 2


def test_baseline_command(tmp_path):
    two_gaussians(100, 2, seed=0).to_csv(tmp_path / "g.csv")
    assert run("baseline", "--seed", 1, "--target", tmp_path / "g.csv", "--out",
               tmp_path / "b.json") == 0
    doc = json.loads((tmp_path / "b.json").read_text())
    assert len(doc["aucs"]) == 20 and (tmp_path / doc["roc_csv"]).exists()
