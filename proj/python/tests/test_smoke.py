import math

import pytest

import puppetscan as ps


def test_binomial_tail():
    assert ps.binomial_tail(10, 2, 0.5) == pytest.approx(1013 / 1024, rel=1e-12)
    assert ps.binomial_tail_ln(10, 0, 0.3) == 0.0
    assert ps.binomial_tail_ln(558, 200, 1e-9) < -3000
    assert ps.format_log_probability(math.log(1.5e-5)) == "1.50e-05"


def test_birthday():
    assert ps.birthday_collision_prob(181, 10_000) == pytest.approx(0.8058, abs=1e-4)


def test_secret_probability():
    h = ps.sha1_hex("password")
    assert h == "5BAA61E4C9B93F3F0682250B6CF8331B7EE68FD8"
    assert ps.secret_probability(h) == pytest.approx(1 / 5_579_399_834)
    assert ps.secret_probability(h, 50, 100) == 0.5


def test_study1_pipeline():
    preset = ps.load_preset("study1")
    sim = ps.simulate(preset["population"], preset["study"])
    report = ps.analyze(sim["log"], preset["study"], frequencies=sim["frequencies"])
    overall = next(g for g in report["groups"] if g["group_id"] == "all")
    assert (overall["puppets"], overall["inattentive"], overall["valid"]) == (193, 127, 238)
    metrics = ps.evaluate(report, sim["truth"])
    assert metrics["per_label"]["puppet"]["recall"] == 1.0
    assert ps.features_csv(sim["log"], preset["study"]).count("\n") == 559


def test_simulate_is_deterministic():
    preset = ps.load_preset("study2")
    a = ps.simulate(preset["population"], preset["study"])
    b = ps.simulate(preset["population"], preset["study"])
    assert a["log"] == b["log"]


def test_challenges():
    s = ps.shuffle_options("q1", ["a", "b", "c", "d"], ps.seed_for("w1", "salt"))
    assert sorted(s["shown_options"]) == ["a", "b", "c", "d"]
    assert s == ps.shuffle_options("q1", ["a", "b", "c", "d"], ps.seed_for("w1", "salt"))
    tmpl = {"id": "fruit", "text": "What color is a {fruit}?", "slot": "fruit",
            "values": [{"value": "banana", "answer": "yellow"}, {"value": "cherry", "answer": "red"}]}
    q = ps.instantiate_context(tmpl, 1)
    assert q["slot_value"] in q["text"]
    assert len(ps.cueing_trials(1, 4)["trials"]) == 4
    assert ps.score_learning_curve([2400, 1900, 1500, 1200]) == "first_time_human"
    assert ps.score_learning_curve([120, 115, 118, 119]) == "bot_like"
    png = ps.render_text_png("A")
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    assert png == ps.render_text_png("A")


def test_errors_raise_value_error():
    with pytest.raises(ValueError):
        ps.load_preset("nope")
    with pytest.raises(ValueError):
        ps.score_learning_curve([1.0, 2.0])
