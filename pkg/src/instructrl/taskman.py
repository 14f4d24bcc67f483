"""Task Manager: wraps an environment, feeds the policy one subtask at a time
as a goal vector, detects completion from step events, pays subtask bonuses,
advances the plan, and ends the episode when the plan is done or the step
budget runs out.

Reward schedule (gridbuild): in the early stage every block modification pays
bonus/(chebyshev_distance_to_goal + 1) and completing the subtask pays the full
bonus; in the late stage completion pays the bonus and any other modification
pays the incorrect penalty. Optional proximity shaping (early stage only) adds
+0.02 whenever the agent strictly closes in on the goal cell. Techlite reward
is env_reward_scale times the raw environment reward plus completion bonuses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import Block, chebyshev, in_bounds
from .gridbuild import BlockPlaced, BlockRemoved, BuildTask, GridBuild
from .techlite import ACHIEVEMENTS, AchievementUnlocked, Techlite

PROXIMITY_REWARD = 0.02
DEFAULT_BUDGET = {"gridbuild": 200, "techlite": 500}

GOAL_DIM = {"gridbuild": 11, "techlite": len(ACHIEVEMENTS) + 1}
_ACH_INDEX = {name: i for i, name in enumerate(ACHIEVEMENTS)}


@dataclass(frozen=True)
class PlaceBlock:
    block: Block

    def __post_init__(self):
        if not in_bounds(self.block.x, self.block.y, self.block.z):
            raise ValueError(f"subtask cell out of bounds: {self.block}")
        if not 1 <= self.block.color <= 6:
            raise ValueError(f"subtask color out of range: {self.block}")


@dataclass(frozen=True)
class RemoveBlock:
    x: int
    y: int
    z: int

    def __post_init__(self):
        if not in_bounds(self.x, self.y, self.z):
            raise ValueError(f"subtask cell out of bounds: ({self.x},{self.y},{self.z})")


@dataclass(frozen=True)
class Achieve:
    achievement: str
    count: int = 1

    def __post_init__(self):
        if self.achievement not in _ACH_INDEX:
            raise ValueError(f"unknown achievement {self.achievement!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")


Subtask = PlaceBlock | RemoveBlock | Achieve


@dataclass
class TaskPlan:
    subtasks: list
    source_id: str = ""


@dataclass
class RewardConfig:
    stage: str = "late"
    subtask_bonus: float = 1.0
    env_reward_scale: float = 0.1
    incorrect_penalty: float = -0.5
    proximity_shaping: bool = False

    def __post_init__(self):
        if self.subtask_bonus <= 0:
            raise ValueError("subtask_bonus must be positive")
        if self.stage not in ("early", "late"):
            raise ValueError(f"unknown stage {self.stage!r}")


def encode_goal(subtask: Subtask) -> np.ndarray:
    """Fixed-size goal vector: kind one-hot + scaled cell + color one-hot for
    blocks; achievement one-hot + scaled count for techlite."""
    if isinstance(subtask, (PlaceBlock, RemoveBlock)):
        vec = np.zeros(GOAL_DIM["gridbuild"])
        if isinstance(subtask, PlaceBlock):
            b = subtask.block
            vec[0] = 1.0
            vec[5 + b.color - 1] = 1.0
            x, y, z = b.x, b.y, b.z
        else:
            vec[1] = 1.0
            x, y, z = subtask.x, subtask.y, subtask.z
        vec[2:5] = (x / 10.0, y / 8.0, z / 10.0)
        return vec
    vec = np.zeros(GOAL_DIM["techlite"])
    vec[_ACH_INDEX[subtask.achievement]] = 1.0
    vec[-1] = subtask.count / 10.0
    return vec


def goal_cell(subtask: Subtask) -> tuple[int, int, int]:
    if isinstance(subtask, PlaceBlock):
        return subtask.block.x, subtask.block.y, subtask.block.z
    if isinstance(subtask, RemoveBlock):
        return subtask.x, subtask.y, subtask.z
    raise ValueError("achievement subtasks have no goal cell")


@dataclass
class ManagedStep:
    obs: object
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


class ManagedEnv:
    """One episode = one plan (or one focused subtask of it)."""

    def __init__(
        self,
        env,
        plan: TaskPlan,
        cfg: RewardConfig,
        *,
        mode: str = "flying",
        initial_blocks: tuple = (),
        focus: int | None = None,
        step_budget: int | None = None,
        spawn: tuple[int, int, int] | None = None,
    ):
        if not plan.subtasks:
            raise ValueError("plan must be non-empty")
        kinds_block = all(isinstance(s, (PlaceBlock, RemoveBlock)) for s in plan.subtasks)
        kinds_ach = all(isinstance(s, Achieve) for s in plan.subtasks)
        if isinstance(env, GridBuild) and not kinds_block:
            raise ValueError("gridbuild episodes need block subtasks")
        if isinstance(env, Techlite) and not kinds_ach:
            raise ValueError("techlite episodes need achievement subtasks")
        if not isinstance(env, (GridBuild, Techlite)):
            raise ValueError(f"unsupported environment {type(env).__name__}")
        self.env = env
        self.kind = "gridbuild" if isinstance(env, GridBuild) else "techlite"
        self.cfg = cfg
        self.mode = mode
        self.spawn = spawn
        self.initial_blocks = list(initial_blocks)
        self.full_plan = plan
        if focus is None:
            self.active = list(plan.subtasks)
            self.prefix = []
        else:
            self.active = [plan.subtasks[focus]]
            self.prefix = list(plan.subtasks[:focus])
        self.step_budget = step_budget or DEFAULT_BUDGET[self.kind]
        self.idx = 0
        self.steps = 0
        self.bonus_paid = 0.0
        self._ach_counts: dict[str, int] = {}
        self._prev_dist: int | None = None

    # -- episode control ----------------------------------------------------

    def reset(self, seed: int = 0):
        self.idx = 0
        self.steps = 0
        self.bonus_paid = 0.0
        self._ach_counts = {}
        self._prev_dist = None
        if self.kind == "gridbuild":
            blocks = self._apply_prefix(self.initial_blocks, self.prefix)
            obs = self.env.reset(
                BuildTask(blocks=blocks, mode=self.mode, seed=seed, spawn=self.spawn)
            )
            self._prev_dist = self._agent_goal_dist(obs)
        else:
            obs = self.env.reset(seed)
        obs.goal = encode_goal(self.active[self.idx])
        return obs

    def step(self, action: int) -> ManagedStep:
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        res = self.env.step(action)
        self.steps += 1
        reward, completed = self._score(res)
        transition = "continue"
        if completed:
            transition = "done" if self.idx >= len(self.active) else "advance"
        timeout = self.steps >= self.step_budget and self.idx < len(self.active)
        done = transition == "done" or timeout
        obs = res.obs
        goal_idx = min(self.idx, len(self.active) - 1)
        obs.goal = encode_goal(self.active[goal_idx])
        info = {
            "transition": transition,
            "events": res.events,
            "timeout": timeout,
            "completed": self.idx,
            "success": self.idx >= len(self.active),
        }
        return ManagedStep(obs, reward, done, info)

    @property
    def done(self) -> bool:
        return self.idx >= len(self.active) or self.steps >= self.step_budget

    @property
    def success(self) -> bool:
        return self.idx >= len(self.active)

    # -- reward logic --------------------------------------------------------

    def _score(self, res) -> tuple[float, bool]:
        reward = 0.0
        completed = False
        if self.kind == "techlite":
            reward += self.cfg.env_reward_scale * res.reward
            for ev in res.events:
                if isinstance(ev, AchievementUnlocked):
                    self._ach_counts[ev.name] = self._ach_counts.get(ev.name, 0) + 1
            while self.idx < len(self.active) and self._ach_done(self.active[self.idx]):
                reward += self.cfg.subtask_bonus
                self.bonus_paid += self.cfg.subtask_bonus
                self.idx += 1
                completed = True
            return reward, completed

        for ev in res.events:
            goal = self.active[self.idx] if self.idx < len(self.active) else None
            if goal is not None and self._matches(ev, goal):
                reward += self.cfg.subtask_bonus
                self.bonus_paid += self.cfg.subtask_bonus
                self.idx += 1
                completed = True
                self._prev_dist = None
            elif isinstance(ev, (BlockPlaced, BlockRemoved)):
                reward += self._modification_reward(ev, goal)
        if self.cfg.proximity_shaping and self.cfg.stage == "early":
            reward += self._proximity(res.obs)
        return reward, completed

    def _ach_done(self, subtask: Achieve) -> bool:
        # threshold is cumulative over the episode so chained repeats of the
        # same achievement each require fresh events
        needed = 0
        for s in self.active[: self.idx + 1]:
            if s.achievement == subtask.achievement:
                needed += s.count
        return self._ach_counts.get(subtask.achievement, 0) >= needed

    @staticmethod
    def _matches(ev, goal: Subtask) -> bool:
        if isinstance(goal, PlaceBlock):
            return isinstance(ev, BlockPlaced) and ev.block == goal.block
        if isinstance(goal, RemoveBlock):
            return isinstance(ev, BlockRemoved) and (ev.x, ev.y, ev.z) == (
                goal.x,
                goal.y,
                goal.z,
            )
        return False

    def _modification_reward(self, ev, goal: Subtask | None) -> float:
        if goal is None:
            return 0.0
        cell = ev.block[:3] if isinstance(ev, BlockPlaced) else (ev.x, ev.y, ev.z)
        if self.cfg.stage == "early":
            dist = chebyshev(cell, goal_cell(goal))
            return self.cfg.subtask_bonus / (dist + 1)
        return self.cfg.incorrect_penalty

    def _proximity(self, obs) -> float:
        dist = self._agent_goal_dist(obs)
        prev, self._prev_dist = self._prev_dist, dist
        if dist is not None and prev is not None and dist < prev:
            return PROXIMITY_REWARD
        return 0.0

    def _agent_goal_dist(self, obs) -> int | None:
        if self.idx >= len(self.active):
            return None
        p = obs.pose
        return chebyshev((p.x, p.y, p.z), goal_cell(self.active[self.idx]))

    @staticmethod
    def _apply_prefix(initial: list[Block], prefix: list) -> list[Block]:
        cells = {(b.x, b.y, b.z): b.color for b in initial}
        for s in prefix:
            if isinstance(s, PlaceBlock):
                cells[(s.block.x, s.block.y, s.block.z)] = s.block.color
            elif isinstance(s, RemoveBlock):
                cells.pop((s.x, s.y, s.z), None)
        return [Block(x, y, z, c) for (x, y, z), c in sorted(cells.items())]


def attach(
    env,
    plan: TaskPlan,
    cfg: RewardConfig,
    **kwargs,
) -> ManagedEnv:
    return ManagedEnv(env, plan, cfg, **kwargs)
