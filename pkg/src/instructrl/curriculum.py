"""Adaptive task sampler: tasks the agent has mastered (EMA reward above a
threshold) get weight 1/d, the rest get 1 + delta*d where delta tracks how
much the task's EMA reward is still moving. Softmax of the weights gives the
sampling distribution, so mastered tasks drop below uniform probability and
unstable ones are revisited more often.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CurriculumConfig:
    d: float = 10.0
    tau: float = 0.8
    alpha: float = 0.1

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("d must be positive")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0,1)")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0,1]")


@dataclass
class TaskStats:
    r: float = 0.0
    delta: float = 0.0
    n: int = 0


class CurriculumSampler:
    def __init__(self, task_ids: list, cfg: CurriculumConfig | None = None):
        if not task_ids:
            raise ValueError("at least one task is required")
        self.cfg = cfg or CurriculumConfig()
        self.task_ids = list(task_ids)
        self.stats = {t: TaskStats() for t in self.task_ids}

    def update(self, task_id, outcome: float) -> None:
        try:
            s = self.stats[task_id]
        except KeyError:
            raise KeyError(f"unknown task {task_id!r}") from None
        a = self.cfg.alpha
        r_old = s.r
        s.r = (1 - a) * r_old + a * outcome
        s.delta = (1 - a) * s.delta + a * abs(s.r - r_old)
        s.n += 1

    def weights(self) -> np.ndarray:
        cfg = self.cfg
        q = np.empty(len(self.task_ids))
        for i, t in enumerate(self.task_ids):
            s = self.stats[t]
            q[i] = 1.0 / cfg.d if s.r >= cfg.tau else 1.0 + s.delta * cfg.d
        return q

    def probabilities(self) -> np.ndarray:
        q = self.weights()
        e = np.exp(q - q.max())
        return e / e.sum()

    def sample(self, rng: np.random.Generator):
        p = self.probabilities()
        return self.task_ids[int(rng.choice(len(p), p=p))]

    def rows(self) -> list[tuple]:
        """(task, r, delta, p) per task, for the curriculum log."""
        p = self.probabilities()
        return [
            (t, self.stats[t].r, self.stats[t].delta, float(p[i]))
            for i, t in enumerate(self.task_ids)
        ]


class UniformSampler:
    """Same interface, flat distribution; stats are tracked for logging only."""

    def __init__(self, task_ids: list, cfg: CurriculumConfig | None = None):
        if not task_ids:
            raise ValueError("at least one task is required")
        self.cfg = cfg or CurriculumConfig()
        self.task_ids = list(task_ids)
        self.stats = {t: TaskStats() for t in self.task_ids}

    def update(self, task_id, outcome: float) -> None:
        s = self.stats[task_id]
        a = self.cfg.alpha
        r_old = s.r
        s.r = (1 - a) * r_old + a * outcome
        s.delta = (1 - a) * s.delta + a * abs(s.r - r_old)
        s.n += 1

    def probabilities(self) -> np.ndarray:
        return np.full(len(self.task_ids), 1.0 / len(self.task_ids))

    def weights(self) -> np.ndarray:
        return np.ones(len(self.task_ids))

    def sample(self, rng: np.random.Generator):
        return self.task_ids[int(rng.integers(len(self.task_ids)))]

    def rows(self) -> list[tuple]:
        p = self.probabilities()
        return [
            (t, self.stats[t].r, self.stats[t].delta, float(p[i]))
            for i, t in enumerate(self.task_ids)
        ]


SAMPLERS = {"curriculum": CurriculumSampler, "uniform": UniformSampler}
