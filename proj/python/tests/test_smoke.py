import math

import pytest

import videonav as vn


def test_tree_and_schedule():
    assert vn.derive_width(4096) == 6
    assert vn.derive_width(4038) == 6
    assert vn.interval_of([0], 4096) == pytest.approx((0.0, 4096 / 6))
    assert [vn.frame_budget(l) for l in range(4)] == [256, 128, 64, 32]
    with pytest.raises(ValueError):
        vn.derive_width(-1)


def test_rewards_and_costs():
    assert vn.location_reward([(96, 112)], [(100, 116)]) == pytest.approx(0.75, abs=1e-12)
    assert vn.location_reward([(96, 128)], [(100, 116)]) == pytest.approx(2 / 3, abs=1e-12)
    assert vn.merge_intervals([(0, 2), (1, 3), (5, 6)]) == [(0, 3), (5, 6)]
    assert math.isclose(vn.modeled_cost(10.5, 14.14, 0.36), 126.202, abs_tol=1e-9)
    assert vn.expected_captions(5, 10.5, 0.36) == 14.14
    assert vn.group_advantages([0, 1, 1, 0]) == pytest.approx([-1, 1, 1, -1])
    assert vn.clipped_surrogate(math.log(1.5), 0.0, 1.0) == pytest.approx(1.2)


def test_protocol():
    a = vn.parse_action("<think>go</think><tool>get_caption((2,3))</tool>", width=6)
    assert a["kind"] == "get_caption"
    assert a["path"] == [1, 2]
    err = vn.parse_action("<think>only</think>")
    assert err["kind"] == "error"
    assert err["message"] == "no tool/answer"
    assert vn.render_tool_call("video_qa", [0, 1, 2], "what?") == "video_qa((1,2,3), what?)"


def test_corpus_episode_and_eval():
    corpus = vn.Corpus.generate(3, 4, 2700, 4300)
    assert len(corpus) == 4
    assert corpus.qa_count == 12
    assert vn.Corpus.loads(corpus.dumps()).dumps() == corpus.dumps()
    ep = vn.run_episode(corpus, 0)
    assert ep["correct"]
    assert ep["captions"] + ep["qa_calls"] <= 10
    assert "<think>" in ep["transcript"]
    csv = vn.evaluate(corpus, "noisy:0.3", [5, 30], seed=7)
    assert csv == vn.evaluate(corpus, "noisy:0.3", [5, 30], seed=7, jobs=2)
    assert csv.count("\n") == 3


def test_training_improves_toy_policy():
    corpus = vn.Corpus.generate(11, 10, 2700, 4300)
    before = vn.evaluate_toy(corpus, seed=1)
    ckpt = vn.train_toy(corpus, steps=40, seed=2)
    after = vn.evaluate_toy(corpus, ckpt, seed=1)
    assert after["accuracy"] > before["accuracy"] + 0.2
    assert after["mean_rounds"] < before["mean_rounds"]
