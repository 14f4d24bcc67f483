"""Voxel building environment: an embodied agent walks or flies inside the
11x9x11 volume, placing and removing colored blocks.

Action space (19 discrete): noop, 4 look rotations, break, place, 6 color
selections (the 13 non-movement actions), 4 compass moves, and up/down moves
that only function in flying mode. Placement targets the cell one step ahead
of the agent (pitch shifts the target a level up or down) and requires support:
floor contact or an occupied neighbor. Illegal mutations are silent no-ops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import AIR, BLUE, X_SIZE, Y_SIZE, Z_SIZE, Block, in_bounds

A_NOOP = 0
A_TURN_LEFT = 1
A_TURN_RIGHT = 2
A_LOOK_UP = 3
A_LOOK_DOWN = 4
A_BREAK = 5
A_PLACE = 6
A_SELECT_FIRST = 7  # 7..12 select colors 1..6
A_MOVE_NORTH = 13
A_MOVE_EAST = 14
A_MOVE_SOUTH = 15
A_MOVE_WEST = 16
A_MOVE_UP = 17
A_MOVE_DOWN = 18
N_ACTIONS = 19
NON_MOVEMENT_ACTIONS = 13

YAW_NORTH, YAW_EAST, YAW_SOUTH, YAW_WEST = 0, 1, 2, 3
YAW_VECS = {YAW_NORTH: (0, -1), YAW_EAST: (1, 0), YAW_SOUTH: (0, 1), YAW_WEST: (-1, 0)}
MOVE_DIRS = {A_MOVE_NORTH: (0, -1), A_MOVE_EAST: (1, 0), A_MOVE_SOUTH: (0, 1), A_MOVE_WEST: (-1, 0)}

PITCH_DOWN, PITCH_LEVEL, PITCH_UP = -1, 0, 1

DEFAULT_CAPACITY = 20


@dataclass
class AgentPose:
    x: int
    y: int
    z: int
    yaw: int
    pitch: int


@dataclass
class BuildTask:
    blocks: list[Block] = field(default_factory=list)
    mode: str = "flying"
    seed: int = 0
    spawn: tuple[int, int, int] | None = None  # (x, z, yaw); y comes from support

    def to_json(self) -> dict:
        obj = {"blocks": [list(b) for b in self.blocks], "mode": self.mode, "seed": self.seed}
        if self.spawn is not None:
            obj["spawn"] = list(self.spawn)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "BuildTask":
        spawn = obj.get("spawn")
        return cls(
            blocks=[Block(*map(int, b)) for b in obj.get("blocks", [])],
            mode=obj.get("mode", "flying"),
            seed=int(obj.get("seed", 0)),
            spawn=tuple(map(int, spawn)) if spawn is not None else None,
        )


@dataclass
class BuildObservation:
    grid: np.ndarray
    inventory: np.ndarray
    pose: AgentPose
    selected_color: int
    goal: np.ndarray | None = None


@dataclass(frozen=True)
class BlockPlaced:
    block: Block


@dataclass(frozen=True)
class BlockRemoved:
    x: int
    y: int
    z: int


@dataclass
class StepResult:
    obs: BuildObservation
    events: list
    done: bool = False


class GridBuild:
    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        self.capacity = capacity
        self.grid = np.zeros((X_SIZE, Y_SIZE, Z_SIZE), dtype=np.int8)
        self.inventory = np.zeros(6, dtype=np.int64)
        self.pose = AgentPose(5, 0, 5, YAW_NORTH, PITCH_LEVEL)
        self.selected = BLUE
        self.mode = "flying"

    def reset(self, task: BuildTask) -> BuildObservation:
        if task.mode not in ("flying", "walking"):
            raise ValueError(f"unknown mode {task.mode!r}")
        seen = set()
        self.grid[:] = AIR
        for b in task.blocks:
            if not in_bounds(b.x, b.y, b.z) or not 1 <= b.color <= 6:
                raise ValueError(f"invalid initial block {b}")
            if (b.x, b.y, b.z) in seen:
                raise ValueError(f"duplicate initial block at {(b.x, b.y, b.z)}")
            seen.add((b.x, b.y, b.z))
            self.grid[b.x, b.y, b.z] = b.color
        self.inventory[:] = self.capacity
        for b in task.blocks:
            self.inventory[b.color - 1] -= 1
        if (self.inventory < 0).any():
            raise ValueError("initial blocks exceed inventory capacity")
        self.mode = task.mode
        rng = np.random.default_rng(task.seed)
        if task.spawn is not None:
            x, z, yaw = task.spawn
            if self._support(x, z) >= Y_SIZE:
                raise ValueError(f"spawn column ({x},{z}) is full")
            self.pose = AgentPose(x, self._support(x, z), z, yaw % 4, PITCH_LEVEL)
        else:
            spots = [
                (x, z)
                for x in range(X_SIZE)
                for z in range(Z_SIZE)
                if self._support(x, z) < Y_SIZE
            ]
            x, z = spots[int(rng.integers(len(spots)))]
            self.pose = AgentPose(x, self._support(x, z), z, int(rng.integers(4)), PITCH_LEVEL)
        self.selected = BLUE
        return self._observe()

    def step(self, action: int) -> StepResult:
        events: list = []
        p = self.pose
        if action == A_TURN_LEFT:
            p.yaw = (p.yaw - 1) % 4
        elif action == A_TURN_RIGHT:
            p.yaw = (p.yaw + 1) % 4
        elif action == A_LOOK_UP:
            p.pitch = min(PITCH_UP, p.pitch + 1)
        elif action == A_LOOK_DOWN:
            p.pitch = max(PITCH_DOWN, p.pitch - 1)
        elif A_SELECT_FIRST <= action < A_SELECT_FIRST + 6:
            self.selected = action - A_SELECT_FIRST + 1
        elif action == A_PLACE:
            events = self._place()
        elif action == A_BREAK:
            events = self._break()
        elif action in MOVE_DIRS:
            self._move(*MOVE_DIRS[action])
        elif action == A_MOVE_UP and self.mode == "flying":
            self._move_vertical(1)
        elif action == A_MOVE_DOWN and self.mode == "flying":
            self._move_vertical(-1)
        return StepResult(self._observe(), events)

    # -- internals ---------------------------------------------------------

    def _support(self, x: int, z: int) -> int:
        ys = np.nonzero(self.grid[x, :, z])[0]
        return int(ys[-1]) + 1 if len(ys) else 0

    def _target(self) -> tuple[int, int, int]:
        dx, dz = YAW_VECS[self.pose.yaw]
        return self.pose.x + dx, self.pose.y + self.pose.pitch, self.pose.z + dz

    def _supported(self, x: int, y: int, z: int) -> bool:
        if y == 0:
            return True
        for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            nx, ny, nz = x + dx, y + dy, z + dz
            if in_bounds(nx, ny, nz) and self.grid[nx, ny, nz] != AIR:
                return True
        return False

    def _place(self) -> list:
        x, y, z = self._target()
        if not in_bounds(x, y, z) or self.grid[x, y, z] != AIR:
            return []
        if not self._supported(x, y, z) or self.inventory[self.selected - 1] <= 0:
            return []
        self.grid[x, y, z] = self.selected
        self.inventory[self.selected - 1] -= 1
        return [BlockPlaced(Block(x, y, z, self.selected))]

    def _break(self) -> list:
        x, y, z = self._target()
        if not in_bounds(x, y, z) or self.grid[x, y, z] == AIR:
            return []
        color = int(self.grid[x, y, z])
        self.grid[x, y, z] = AIR
        self.inventory[color - 1] += 1
        self._settle()
        return [BlockRemoved(x, y, z)]

    def _move(self, dx: int, dz: int) -> None:
        p = self.pose
        nx, nz = p.x + dx, p.z + dz
        if not 0 <= nx < X_SIZE or not 0 <= nz < Z_SIZE:
            return
        if self.mode == "walking":
            ny = self._support(nx, nz)
            # climbing is capped at one step; falling is unrestricted
            if ny >= Y_SIZE or ny - p.y > 1:
                return
        else:
            ny = p.y
            if self.grid[nx, ny, nz] != AIR:
                return
        p.x, p.y, p.z = nx, ny, nz

    def _move_vertical(self, dy: int) -> None:
        p = self.pose
        ny = p.y + dy
        if 0 <= ny < Y_SIZE and self.grid[p.x, ny, p.z] == AIR:
            p.y = ny

    def _settle(self) -> None:
        if self.mode == "walking":
            self.pose.y = self._support(self.pose.x, self.pose.z)

    def _observe(self) -> BuildObservation:
        p = self.pose
        return BuildObservation(
            grid=self.grid.copy(),
            inventory=self.inventory.copy(),
            pose=AgentPose(p.x, p.y, p.z, p.yaw, p.pitch),
            selected_color=self.selected,
        )
