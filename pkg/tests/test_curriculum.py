"""Adaptive sampler tests: EMA tracking, the mastered/struggling weight
branches, softmax probabilities, and sampling frequencies."""

import numpy as np
import pytest

from instructrl.curriculum import (SAMPLERS, CurriculumConfig,
                                   CurriculumSampler, UniformSampler)


def test_config_validation():
    CurriculumConfig()
    with pytest.raises(ValueError):
        CurriculumConfig(d=0)
    with pytest.raises(ValueError):
        CurriculumConfig(tau=1.0)
    with pytest.raises(ValueError):
        CurriculumConfig(alpha=0.0)
    with pytest.raises(ValueError):
        CurriculumSampler([])


def test_update_is_exponential_moving_average():
    s = CurriculumSampler(["a"], CurriculumConfig(alpha=0.5))
    s.update("a", 1.0)
    assert s.stats["a"].r == pytest.approx(0.5)
    assert s.stats["a"].delta == pytest.approx(0.25)
    s.update("a", 1.0)
    assert s.stats["a"].r == pytest.approx(0.75)
    assert s.stats["a"].delta == pytest.approx(0.25)
    assert s.stats["a"].n == 2
    with pytest.raises(KeyError):
        s.update("missing", 1.0)


def test_weight_branches():
    cfg = CurriculumConfig(d=10.0, tau=0.8)
    s = CurriculumSampler(["mastered", "volatile", "untouched"], cfg)
    s.stats["mastered"].r = 0.9
    s.stats["volatile"].r = 0.5
    s.stats["volatile"].delta = 0.2
    w = s.weights()
    assert w[0] == pytest.approx(1.0 / 10.0)  # above tau
    assert w[1] == pytest.approx(1.0 + 0.2 * 10.0)
    assert w[2] == pytest.approx(1.0)  # fresh task, delta 0
    # exactly at tau counts as mastered
    s.stats["volatile"].r = 0.8
    assert s.weights()[1] == pytest.approx(0.1)


def test_probabilities_are_softmax_of_weights():
    s = CurriculumSampler(["a", "b"])
    s.stats["a"].r = 0.9
    s.stats["b"].delta = 0.2
    p = s.probabilities()
    q = np.array([0.1, 3.0])
    e = np.exp(q - q.max())
    assert np.allclose(p, e / e.sum(), atol=1e-12)
    assert p.sum() == pytest.approx(1.0)


def test_mastered_tasks_sampled_less():
    s = CurriculumSampler(["easy", "hard"])
    for _ in range(200):
        s.update("easy", 1.0)
        s.update("hard", 0.0)
    rng = np.random.default_rng(0)
    draws = [s.sample(rng) for _ in range(2000)]
    share = draws.count("easy") / len(draws)
    p = s.probabilities()
    assert p[0] < 0.5 < p[1]
    assert abs(share - p[0]) < 0.05


def test_rows_align_with_probabilities():
    s = CurriculumSampler(["a", "b", "c"])
    s.update("b", 1.0)
    rows = s.rows()
    p = s.probabilities()
    assert [t for t, *_ in rows] == ["a", "b", "c"]
    for (task, r, delta, prob), pi in zip(rows, p):
        assert s.stats[task].r == r
        assert s.stats[task].delta == delta
        assert prob == pytest.approx(pi)


def test_uniform_sampler_is_flat_but_tracks_stats():
    u = UniformSampler(["a", "b", "c", "d"])
    assert np.allclose(u.probabilities(), 0.25)
    for _ in range(50):
        u.update("a", 1.0)
    assert np.allclose(u.probabilities(), 0.25)
    assert u.stats["a"].r > 0.9
    rng = np.random.default_rng(3)
    draws = [u.sample(rng) for _ in range(4000)]
    for t in "abcd":
        assert abs(draws.count(t) / 4000 - 0.25) < 0.03
    with pytest.raises(ValueError):
        UniformSampler([])


def test_sampler_registry():
    assert SAMPLERS["curriculum"] is CurriculumSampler
    assert SAMPLERS["uniform"] is UniformSampler
