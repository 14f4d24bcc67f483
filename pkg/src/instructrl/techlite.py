"""Survival gridworld: gather resources, craft tools through a tech tree,
fight stationary creatures, sleep. Every achievement unlock emits an event
(repeatable within an episode); the raw environment reward pays +1 only on the
first unlock of each achievement per episode.

Mechanics are a deliberately minimal cut: creatures do not move or attack,
defeat means two hits with a sufficient sword tier, and sleeping only works
once energy has run low. The tech tree gates are the point: stone needs a wood
pickaxe, iron needs a stone pickaxe, diamond needs an iron pickaxe, and iron
tools need a table and a furnace nearby plus wood, coal, and iron in stock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACHIEVEMENTS = [
    "collect_wood",
    "collect_stone",
    "collect_coal",
    "collect_iron",
    "collect_diamond",
    "collect_sapling",
    "collect_drink",
    "place_table",
    "place_stone",
    "place_furnace",
    "place_plant",
    "make_wood_pickaxe",
    "make_wood_sword",
    "make_stone_pickaxe",
    "make_stone_sword",
    "make_iron_pickaxe",
    "make_iron_sword",
    "eat_cow",
    "eat_plant",
    "defeat_zombie",
    "defeat_skeleton",
    "wake_up",
]

ITEMS = [
    "wood",
    "stone",
    "coal",
    "iron",
    "diamond",
    "sapling",
    "wood_pickaxe",
    "wood_sword",
    "stone_pickaxe",
    "stone_sword",
    "iron_pickaxe",
    "iron_sword",
]
ITEM_INDEX = {name: i for i, name in enumerate(ITEMS)}

T_GRASS = 0
T_TREE = 1
T_STONE = 2
T_COAL = 3
T_IRON = 4
T_DIAMOND = 5
T_WATER = 6
T_SAPLING = 7
T_TABLE = 8
T_FURNACE = 9
T_PLANT = 10
T_RIPE_PLANT = 11
T_PLACED_STONE = 12
N_TILE_KINDS = 13

A_NOOP = 0
A_MOVE_NORTH = 1
A_MOVE_EAST = 2
A_MOVE_SOUTH = 3
A_MOVE_WEST = 4
A_INTERACT = 5
A_PLACE_TABLE = 6
A_PLACE_STONE = 7
A_PLACE_FURNACE = 8
A_PLACE_PLANT = 9
A_CRAFT_WOOD_PICKAXE = 10
A_CRAFT_WOOD_SWORD = 11
A_CRAFT_STONE_PICKAXE = 12
A_CRAFT_STONE_SWORD = 13
A_CRAFT_IRON_PICKAXE = 14
A_CRAFT_IRON_SWORD = 15
A_SLEEP = 16
N_ACTIONS = 17

DIRS = {A_MOVE_NORTH: (0, -1), A_MOVE_EAST: (1, 0), A_MOVE_SOUTH: (0, 1), A_MOVE_WEST: (-1, 0)}
FACING_VECS = [(0, -1), (1, 0), (0, 1), (-1, 0)]

ENERGY_MAX = 9
ENERGY_DECAY_PERIOD = 20
SLEEPY_AT = 3
PLANT_GROWTH_STEPS = 12
CREATURE_HITS = 2

_CRAFT_RECIPES = {
    A_CRAFT_WOOD_PICKAXE: ("wood_pickaxe", {"wood": 1}, False),
    A_CRAFT_WOOD_SWORD: ("wood_sword", {"wood": 1}, False),
    A_CRAFT_STONE_PICKAXE: ("stone_pickaxe", {"wood": 1, "stone": 1}, False),
    A_CRAFT_STONE_SWORD: ("stone_sword", {"wood": 1, "stone": 1}, False),
    A_CRAFT_IRON_PICKAXE: ("iron_pickaxe", {"wood": 1, "coal": 1, "iron": 1}, True),
    A_CRAFT_IRON_SWORD: ("iron_sword", {"wood": 1, "coal": 1, "iron": 1}, True),
}

_PLACE_RULES = {
    A_PLACE_TABLE: (T_TABLE, {"wood": 1}, "place_table"),
    A_PLACE_STONE: (T_PLACED_STONE, {"stone": 1}, "place_stone"),
    A_PLACE_FURNACE: (T_FURNACE, {"stone": 1}, "place_furnace"),
    A_PLACE_PLANT: (T_PLANT, {"sapling": 1}, "place_plant"),
}


@dataclass(frozen=True)
class AchievementUnlocked:
    name: str


@dataclass(frozen=True)
class ResourceCollected:
    kind: str
    count: int


@dataclass
class TechObservation:
    tiles: np.ndarray
    agent: tuple[int, int]
    facing: int
    inventory: np.ndarray
    energy: int
    entities: dict = None
    goal: np.ndarray | None = None


@dataclass
class StepResult:
    obs: TechObservation
    events: list
    reward: float
    done: bool = False


class Techlite:
    def __init__(self, size: tuple[int, int] = (16, 16)):
        if size[0] < 8 or size[1] < 8:
            raise ValueError("world must be at least 8x8")
        self.size = size
        self.tiles = np.zeros(size, dtype=np.int8)
        self.entities: dict[tuple[int, int], str] = {}
        self.agent = (0, 0)
        self.facing = 1
        self.inventory = np.zeros(len(ITEMS), dtype=np.int64)
        self.energy = ENERGY_MAX
        self.tick = 0
        self.unlocked: set[str] = set()
        self.hits: dict[tuple[int, int], int] = {}
        self.plant_age: dict[tuple[int, int], int] = {}

    def reset(self, seed: int) -> TechObservation:
        for attempt in range(5):
            rng = np.random.default_rng((seed, attempt))
            self._generate(rng)
            if self._verify_reachability():
                break
        else:
            raise RuntimeError(f"world generation failed for seed {seed}")
        self.inventory[:] = 0
        self.energy = ENERGY_MAX
        self.tick = 0
        self.unlocked = set()
        self.hits = {}
        self.plant_age = {}
        self.facing = 1
        return self._observe()

    def step(self, action: int) -> StepResult:
        self.tick += 1
        if self.tick % ENERGY_DECAY_PERIOD == 0:
            self.energy = max(0, self.energy - 1)
        for pos, age in list(self.plant_age.items()):
            if self.tiles[pos] == T_PLANT and self.tick - age >= PLANT_GROWTH_STEPS:
                self.tiles[pos] = T_RIPE_PLANT
        events: list = []
        if action in DIRS:
            self._move(action)
        elif action == A_INTERACT:
            events = self._interact()
        elif action in _PLACE_RULES:
            events = self._place(action)
        elif action in _CRAFT_RECIPES:
            events = self._craft(action)
        elif action == A_SLEEP:
            if self.energy <= SLEEPY_AT:
                self.energy = ENERGY_MAX
                events = [AchievementUnlocked("wake_up")]
        reward = 0.0
        for ev in events:
            if isinstance(ev, AchievementUnlocked) and ev.name not in self.unlocked:
                self.unlocked.add(ev.name)
                reward += 1.0
        return StepResult(self._observe(), events, reward)

    # -- internals ---------------------------------------------------------

    def _move(self, action: int) -> None:
        dx, dy = DIRS[action]
        self.facing = [A_MOVE_NORTH, A_MOVE_EAST, A_MOVE_SOUTH, A_MOVE_WEST].index(action)
        nx, ny = self.agent[0] + dx, self.agent[1] + dy
        if not self._in_bounds(nx, ny):
            return
        if self.tiles[nx, ny] != T_GRASS or (nx, ny) in self.entities:
            return
        self.agent = (nx, ny)

    def _facing_cell(self) -> tuple[int, int]:
        dx, dy = FACING_VECS[self.facing]
        return self.agent[0] + dx, self.agent[1] + dy

    def _interact(self) -> list:
        pos = self._facing_cell()
        if not self._in_bounds(*pos):
            return []
        if pos in self.entities:
            return self._attack(pos)
        tile = int(self.tiles[pos])
        if tile == T_TREE:
            return self._collect(pos, "wood", "collect_wood", deplete=False)
        if tile in (T_STONE, T_PLACED_STONE):
            if self._has("wood_pickaxe"):
                return self._collect(pos, "stone", "collect_stone")
        elif tile == T_COAL:
            if self._has("wood_pickaxe"):
                return self._collect(pos, "coal", "collect_coal")
        elif tile == T_IRON:
            if self._has("stone_pickaxe"):
                return self._collect(pos, "iron", "collect_iron")
        elif tile == T_DIAMOND:
            if self._has("iron_pickaxe"):
                return self._collect(pos, "diamond", "collect_diamond")
        elif tile == T_WATER:
            return [ResourceCollected("drink", 1), AchievementUnlocked("collect_drink")]
        elif tile == T_SAPLING:
            return self._collect(pos, "sapling", "collect_sapling")
        elif tile == T_RIPE_PLANT:
            self.tiles[pos] = T_GRASS
            return [AchievementUnlocked("eat_plant")]
        return []

    def _attack(self, pos: tuple[int, int]) -> list:
        kind = self.entities[pos]
        if kind == "cow":
            del self.entities[pos]
            return [AchievementUnlocked("eat_cow")]
        swords = ["wood_sword", "stone_sword", "iron_sword"]
        if kind == "skeleton":
            swords = swords[1:]
        if not any(self._has(s) for s in swords):
            return []
        self.hits[pos] = self.hits.get(pos, 0) + 1
        if self.hits[pos] >= CREATURE_HITS:
            del self.entities[pos]
            del self.hits[pos]
            return [AchievementUnlocked(f"defeat_{kind}")]
        return []

    def _collect(self, pos, item: str, ach: str, deplete: bool = True) -> list:
        self.inventory[ITEM_INDEX[item]] += 1
        if deplete:
            self.tiles[pos] = T_GRASS
        return [ResourceCollected(item, 1), AchievementUnlocked(ach)]

    def _place(self, action: int) -> list:
        tile, costs, ach = _PLACE_RULES[action]
        pos = self._facing_cell()
        if not self._in_bounds(*pos) or self.tiles[pos] != T_GRASS or pos in self.entities:
            return []
        if not all(self.inventory[ITEM_INDEX[k]] >= v for k, v in costs.items()):
            return []
        for k, v in costs.items():
            self.inventory[ITEM_INDEX[k]] -= v
        self.tiles[pos] = tile
        if tile == T_PLANT:
            self.plant_age[pos] = self.tick
        return [AchievementUnlocked(ach)]

    def _craft(self, action: int) -> list:
        tool, costs, needs_furnace = _CRAFT_RECIPES[action]
        if not self._near(T_TABLE) or (needs_furnace and not self._near(T_FURNACE)):
            return []
        if not all(self.inventory[ITEM_INDEX[k]] >= v for k, v in costs.items()):
            return []
        for k, v in costs.items():
            self.inventory[ITEM_INDEX[k]] -= v
        self.inventory[ITEM_INDEX[tool]] += 1
        return [AchievementUnlocked(f"make_{tool}")]

    def _near(self, tile: int) -> bool:
        x, y = self.agent
        w, h = self.size
        patch = self.tiles[max(0, x - 1):min(w, x + 2), max(0, y - 1):min(h, y + 2)]
        return bool((patch == tile).any())

    def _has(self, item: str) -> bool:
        return self.inventory[ITEM_INDEX[item]] > 0

    def _in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.size[0] and 0 <= y < self.size[1]

    def _observe(self) -> TechObservation:
        return TechObservation(
            tiles=self.tiles.copy(),
            agent=self.agent,
            facing=self.facing,
            inventory=self.inventory.copy(),
            energy=self.energy,
            entities=dict(self.entities),
        )

    # -- world generation ---------------------------------------------------

    def _generate(self, rng: np.random.Generator) -> None:
        w, h = self.size
        self.tiles[:] = T_GRASS
        self.entities = {}
        stone_x0 = w - max(4, w // 4)
        self.tiles[stone_x0:, :] = T_STONE
        # ore veins sit on the stone face adjacent to grass, then deeper ones
        face = [(stone_x0, y) for y in range(h)]
        rng.shuffle(face)
        ores = [T_COAL, T_COAL, T_COAL, T_IRON, T_IRON, T_IRON, T_DIAMOND, T_DIAMOND]
        for tile, (x, y) in zip(ores, face):
            self.tiles[x, y] = tile
        # water pool in the south-west corner
        self.tiles[0:3, h - 3:h] = T_WATER
        free = self._free_cells()
        rng.shuffle(free)
        placements = [T_TREE] * 8 + [T_SAPLING] * 4
        for tile in placements:
            if free:
                self.tiles[free.pop()] = tile
        free = [c for c in free if self.tiles[c] == T_GRASS]
        for kind in ["cow"] * 3 + ["zombie"] * 3 + ["skeleton"] * 2:
            if free:
                self.entities[free.pop()] = kind
        spawn = [c for c in free if self.tiles[c] == T_GRASS and c not in self.entities]
        self.agent = spawn[int(rng.integers(len(spawn)))]

    def _free_cells(self) -> list[tuple[int, int]]:
        w, h = self.size
        return [
            (x, y)
            for x in range(w)
            for y in range(h)
            if self.tiles[x, y] == T_GRASS and (x, y) not in self.entities
        ]

    def _verify_reachability(self) -> bool:
        """Every resource tier must be adjacent to a cell reachable over grass,
        except ores, which may also be reached by carving through stone."""
        from collections import deque

        w, h = self.size
        passable = self.tiles == T_GRASS
        reach = np.zeros_like(passable)
        q = deque([self.agent])
        reach[self.agent] = True
        while q:
            x, y = q.popleft()
            for dx, dy in FACING_VECS:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and passable[nx, ny] and not reach[nx, ny]:
                    reach[nx, ny] = True
                    q.append((nx, ny))

        def adjacent_reachable(mask: np.ndarray) -> bool:
            for x, y in zip(*np.nonzero(mask)):
                for dx, dy in FACING_VECS:
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < w and 0 <= ny < h and reach[nx, ny]:
                        return True
            return False

        # ores: carving stone can expose them, so count stone as passable too
        carve = passable | (self.tiles == T_STONE)
        reach2 = np.zeros_like(carve)
        q = deque([self.agent])
        reach2[self.agent] = True
        while q:
            x, y = q.popleft()
            for dx, dy in FACING_VECS:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and carve[nx, ny] and not reach2[nx, ny]:
                    reach2[nx, ny] = True
                    q.append((nx, ny))

        def carve_reachable(mask: np.ndarray) -> bool:
            for x, y in zip(*np.nonzero(mask)):
                for dx, dy in FACING_VECS:
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < w and 0 <= ny < h and reach2[nx, ny]:
                        return True
            return False

        checks = [
            adjacent_reachable(self.tiles == T_TREE),
            adjacent_reachable(self.tiles == T_STONE),
            adjacent_reachable(self.tiles == T_WATER),
            adjacent_reachable(self.tiles == T_SAPLING),
            carve_reachable(self.tiles == T_COAL),
            carve_reachable(self.tiles == T_IRON),
            carve_reachable(self.tiles == T_DIAMOND),
        ]
        ent = {k: False for k in ("cow", "zombie", "skeleton")}
        for pos, kind in self.entities.items():
            for dx, dy in FACING_VECS:
                nx, ny = pos[0] + dx, pos[1] + dy
                if 0 <= nx < w and 0 <= ny < h and reach[nx, ny]:
                    ent[kind] = True
        return all(checks) and all(ent.values())
