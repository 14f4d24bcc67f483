"""Scripted oracle agents. They exist to validate the pipeline around the
policy: a builder that completes any reachable block plan in flying mode, and
a survival agent that resolves achievement prerequisites through the tech tree.

Both replan from the current observation every step, so queued intentions can
never go stale. The builder scaffolds unsupported placements with temporary
blocks and removes them during the following subtask's window (a scaffold
under a plan's final subtask would outlive the episode, which ends on
completion; dataset construction avoids that shape).
"""

from __future__ import annotations

from collections import deque

import numpy as np

from . import gridbuild as gb
from . import techlite as tl
from .blocks import AIR, X_SIZE, Y_SIZE, Z_SIZE, in_bounds
from .taskman import Achieve, ManagedEnv, PlaceBlock, RemoveBlock

_SCAFFOLD_COLOR = 1


def run_oracle(menv: ManagedEnv, seed: int = 0, max_steps: int | None = None) -> dict:
    """Reset the managed episode and drive it with the matching oracle."""
    oracle = GridbuildOracle() if menv.kind == "gridbuild" else TechliteOracle()
    obs = menv.reset(seed)
    trace: list[int] = []
    limit = max_steps or menv.step_budget
    while not menv.done and len(trace) < limit:
        action = oracle.next_action(menv, obs)
        step = menv.step(action)
        obs = step.obs
        trace.append(action)
    return {
        "success": menv.success,
        "completed": menv.idx,
        "bonus": menv.bonus_paid,
        "actions": trace,
        "final_obs": obs,
    }


# -- gridbuild ----------------------------------------------------------------

_MOVE_FOR = {
    (0, 0, -1): gb.A_MOVE_NORTH,
    (1, 0, 0): gb.A_MOVE_EAST,
    (0, 0, 1): gb.A_MOVE_SOUTH,
    (-1, 0, 0): gb.A_MOVE_WEST,
    (0, 1, 0): gb.A_MOVE_UP,
    (0, -1, 0): gb.A_MOVE_DOWN,
}


class GridbuildOracle:
    """Completes place/remove plans in flying mode via BFS through empty cells."""

    def __init__(self):
        self.scaffold: list[tuple[int, int, int]] = []
        self.scaffold_for: int | None = None

    def next_action(self, menv: ManagedEnv, obs) -> int:
        grid = obs.grid
        # scaffold comes down only after the subtask it propped up is done
        if self.scaffold and menv.idx != self.scaffold_for:
            cell = self.scaffold[-1]
            if grid[cell] == AIR:
                self.scaffold.pop()
                return self.next_action(menv, obs)
            return self._work_toward(obs, cell, color=None)
        sub = menv.active[menv.idx]
        if isinstance(sub, RemoveBlock):
            return self._work_toward(obs, (sub.x, sub.y, sub.z), color=None)
        target = (sub.block.x, sub.block.y, sub.block.z)
        if not self._supported(grid, target):
            below = self._scaffold_cell(grid, target)
            self.scaffold_for = menv.idx
            action = self._work_toward(obs, below, color=_SCAFFOLD_COLOR)
            if action == gb.A_PLACE:
                self.scaffold.append(below)
            return action
        return self._work_toward(obs, target, color=sub.block.color)

    @staticmethod
    def _supported(grid, cell) -> bool:
        x, y, z = cell
        if y == 0:
            return True
        for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            nx, ny, nz = x + dx, y + dy, z + dz
            if in_bounds(nx, ny, nz) and grid[nx, ny, nz] != AIR:
                return True
        return False

    @staticmethod
    def _scaffold_cell(grid, target) -> tuple[int, int, int]:
        x, y, z = target
        yy = 0
        while grid[x, yy, z] != AIR:
            yy += 1
        if yy >= y:
            raise RuntimeError(f"no scaffold room under {target}")
        return (x, yy, z)

    def _work_toward(self, obs, cell, color: int | None) -> int:
        """Next primitive action to place at (color given) or break (None) cell."""
        pose = obs.pose
        here = (pose.x, pose.y, pose.z)
        stands = self._stand_options(obs.grid, cell, here)
        if not stands:
            raise RuntimeError(f"no standing cell can target {cell}")
        if here in stands:
            yaw, pitch = stands[here]
            if pose.yaw != yaw:
                return gb.A_TURN_LEFT if (pose.yaw - yaw) % 4 == 1 else gb.A_TURN_RIGHT
            if pose.pitch != pitch:
                return gb.A_LOOK_UP if pitch > pose.pitch else gb.A_LOOK_DOWN
            if color is None:
                return gb.A_BREAK
            if obs.selected_color != color:
                return gb.A_SELECT_FIRST + color - 1
            return gb.A_PLACE
        step = self._bfs_step(obs.grid, here, set(stands))
        if step is None:
            raise RuntimeError(f"no path from {here} to a cell targeting {cell}")
        return _MOVE_FOR[(step[0] - here[0], step[1] - here[1], step[2] - here[2])]

    @staticmethod
    def _stand_options(grid, cell, here) -> dict:
        """Standing cells that can target `cell`, mapped to (yaw, pitch)."""
        out = {}
        for yaw, (vx, vz) in gb.YAW_VECS.items():
            for pitch in (0, -1, 1):
                sx, sy, sz = cell[0] - vx, cell[1] - pitch, cell[2] - vz
                if not in_bounds(sx, sy, sz):
                    continue
                stand = (sx, sy, sz)
                if stand == cell:
                    continue
                if grid[stand] == AIR or stand == here:
                    out.setdefault(stand, (yaw, pitch))
        return out

    @staticmethod
    def _bfs_step(grid, start, goals: set) -> tuple[int, int, int] | None:
        """First move of a shortest empty-cell path from start to any goal."""
        prev = {start: None}
        q = deque([start])
        while q:
            cur = q.popleft()
            if cur in goals:
                while prev[cur] != start:
                    cur = prev[cur]
                return cur
            x, y, z = cur
            for dx, dy, dz in _MOVE_FOR:
                nxt = (x + dx, y + dy, z + dz)
                if nxt in prev or not in_bounds(*nxt):
                    continue
                if grid[nxt] != AIR:
                    continue
                prev[nxt] = cur
                q.append(nxt)
        return None


# -- techlite -------------------------------------------------------------------

_TOOL_RECIPES = {
    "wood_pickaxe": ({"wood": 1}, tl.A_CRAFT_WOOD_PICKAXE, False),
    "wood_sword": ({"wood": 1}, tl.A_CRAFT_WOOD_SWORD, False),
    "stone_pickaxe": ({"wood": 1, "stone": 1}, tl.A_CRAFT_STONE_PICKAXE, False),
    "stone_sword": ({"wood": 1, "stone": 1}, tl.A_CRAFT_STONE_SWORD, False),
    "iron_pickaxe": ({"wood": 1, "coal": 1, "iron": 1}, tl.A_CRAFT_IRON_PICKAXE, True),
    "iron_sword": ({"wood": 1, "coal": 1, "iron": 1}, tl.A_CRAFT_IRON_SWORD, True),
}
_ORE_TILES = {"stone": tl.T_STONE, "coal": tl.T_COAL, "iron": tl.T_IRON, "diamond": tl.T_DIAMOND}
_ORE_PICK = {"stone": "wood_pickaxe", "coal": "wood_pickaxe", "iron": "stone_pickaxe",
             "diamond": "iron_pickaxe"}


class TechliteOracle:
    """Resolves achievement prerequisites and walks/mines to targets."""

    def next_action(self, menv: ManagedEnv, obs) -> int:
        sub = menv.active[menv.idx]
        assert isinstance(sub, Achieve)
        return self._for_goal(obs, sub.achievement)

    def _for_goal(self, obs, name: str) -> int:
        if name == "wake_up":
            return tl.A_SLEEP if obs.energy <= tl.SLEEPY_AT else tl.A_NOOP
        if name.startswith("defeat_"):
            kind = name.split("_", 1)[1]
            swords = ["stone_sword", "iron_sword"] if kind == "skeleton" else [
                "wood_sword", "stone_sword", "iron_sword"]
            if not any(self._has(obs, s) for s in swords):
                return self._obtain(obs, swords[0])
            return self._approach_entity(obs, kind)
        if name == "eat_cow":
            return self._approach_entity(obs, "cow")
        if name == "eat_plant":
            if (obs.tiles == tl.T_RIPE_PLANT).any():
                return self._approach_tile(obs, tl.T_RIPE_PLANT)
            if (obs.tiles == tl.T_PLANT).any():
                return tl.A_NOOP  # ripening
            return self._for_goal(obs, "place_plant")
        if name == "collect_drink":
            return self._approach_tile(obs, tl.T_WATER)
        if name == "collect_wood":
            return self._approach_tile(obs, tl.T_TREE)
        if name == "collect_sapling":
            return self._approach_tile(obs, tl.T_SAPLING)
        if name.startswith("collect_"):
            ore = name.split("_", 1)[1]
            pick = _ORE_PICK[ore]
            if not self._has(obs, pick):
                return self._obtain(obs, pick)
            tile = _ORE_TILES[ore]
            if ore == "stone" and not (obs.tiles == tile).any():
                tile = tl.T_PLACED_STONE
            return self._approach_tile(obs, tile, mine=True)
        if name.startswith("place_"):
            thing = name.split("_", 1)[1]
            action, item = {
                "table": (tl.A_PLACE_TABLE, "wood"),
                "stone": (tl.A_PLACE_STONE, "stone"),
                "furnace": (tl.A_PLACE_FURNACE, "stone"),
                "plant": (tl.A_PLACE_PLANT, "sapling"),
            }[thing]
            if not self._has(obs, item):
                return self._obtain(obs, item)
            return self._place_on_grass(obs, action)
        if name.startswith("make_"):
            return self._obtain(obs, name.split("_", 1)[1])
        raise ValueError(f"oracle does not know {name!r}")

    # -- requirement chain ----------------------------------------------------

    def _has(self, obs, item: str, n: int = 1) -> bool:
        return obs.inventory[tl.ITEM_INDEX[item]] >= n

    def _obtain(self, obs, item: str) -> int:
        """One action of progress toward holding `item`."""
        if item in _TOOL_RECIPES:
            costs, craft_action, needs_furnace = _TOOL_RECIPES[item]
            for ingredient, n in costs.items():
                if not self._has(obs, ingredient, n):
                    return self._obtain(obs, ingredient)
            # stock station costs before walking to the table: discovering a
            # missing furnace stone only once there would bounce the agent
            # between "stay near the table" and "go mine stone" forever
            if needs_furnace and not (obs.tiles == tl.T_FURNACE).any() and not self._has(obs, "stone"):
                return self._obtain(obs, "stone")
            if not self._near(obs, tl.T_TABLE):
                return self._ensure_near(obs, tl.T_TABLE, tl.A_PLACE_TABLE, "wood")
            if needs_furnace and not self._near(obs, tl.T_FURNACE):
                return self._ensure_near(obs, tl.T_FURNACE, tl.A_PLACE_FURNACE, "stone",
                                          stay_near=tl.T_TABLE)
            return craft_action
        if item == "wood":
            return self._approach_tile(obs, tl.T_TREE)
        if item == "sapling":
            return self._approach_tile(obs, tl.T_SAPLING)
        if item in _ORE_TILES:
            pick = _ORE_PICK[item]
            if not self._has(obs, pick):
                return self._obtain(obs, pick)
            return self._approach_tile(obs, _ORE_TILES[item], mine=True)
        raise ValueError(f"cannot obtain {item!r}")

    def _ensure_near(self, obs, tile: int, place_action: int, cost_item: str,
                     stay_near: int | None = None) -> int:
        """Stand next to an existing `tile` or place a fresh one."""
        cells = np.argwhere(obs.tiles == tile)
        if len(cells):
            act = self._approach_tile(obs, tile)
            return act
        # crafting a table costs wood on top of the recipe's own wood
        if not self._has(obs, cost_item):
            return self._obtain(obs, cost_item)
        return self._place_on_grass(obs, place_action, stay_near=stay_near)

    def _near(self, obs, tile: int) -> bool:
        x, y = obs.agent
        w, h = obs.tiles.shape
        patch = obs.tiles[max(0, x - 1):min(w, x + 2), max(0, y - 1):min(h, y + 2)]
        return bool((patch == tile).any())

    # -- movement primitives ----------------------------------------------------

    def _place_on_grass(self, obs, action: int, stay_near: int | None = None) -> int:
        fx, fy = self._facing_cell(obs)
        if self._free_grass(obs, (fx, fy)) and not self._cuts_reachability(obs, (fx, fy)):
            return action
        # moving turns the agent; prefer a direction with two free cells so
        # the cell faced after the step is itself placeable, and when pairing
        # a second station with an anchor tile keep the anchor in reach
        x, y = obs.agent
        anchors = ({tuple(c) for c in np.argwhere(obs.tiles == stay_near)}
                   if stay_near is not None else None)
        for restrict in ((True, False) if anchors else (False,)):
            fallback = None
            for a, (dx, dy) in tl.DIRS.items():
                nxt = (x + dx, y + dy)
                if not self._free_grass(obs, nxt):
                    continue
                if restrict and not any(
                    max(abs(nxt[0] - ax), abs(nxt[1] - ay)) <= 1 for ax, ay in anchors
                ):
                    continue
                if self._free_grass(obs, (x + 2 * dx, y + 2 * dy)):
                    return a
                fallback = fallback or a
            if fallback is not None:
                return fallback
        if self._free_grass(obs, (fx, fy)):
            return action  # every option pockets the map; placing here beats stalling
        raise RuntimeError("nowhere to place: no adjacent free grass")

    def _cuts_reachability(self, obs, cell: tuple[int, int]) -> bool:
        """True when building on `cell` would wall the agent off from any
        grass it can currently walk to (the map has no way to demolish)."""
        before = self._reachable_grass(obs, exclude=None)
        after = self._reachable_grass(obs, exclude=cell)
        return after < before - 1

    def _reachable_grass(self, obs, exclude: tuple[int, int] | None) -> int:
        w, h = obs.tiles.shape
        start = tuple(obs.agent)
        seen = {start} if exclude is None else {start, exclude}
        q = deque([start])
        count = 1
        while q:
            x, y = q.popleft()
            for dx, dy in tl.FACING_VECS:
                c = (x + dx, y + dy)
                if c in seen or not (0 <= c[0] < w and 0 <= c[1] < h):
                    continue
                if obs.tiles[c] != tl.T_GRASS:
                    continue
                seen.add(c)
                q.append(c)
                count += 1
        return count

    def _free_grass(self, obs, cell: tuple[int, int]) -> bool:
        w, h = obs.tiles.shape
        if not (0 <= cell[0] < w and 0 <= cell[1] < h):
            return False
        return obs.tiles[cell] == tl.T_GRASS and cell not in (obs.entities or {})

    def _facing_cell(self, obs) -> tuple[int, int]:
        dx, dy = tl.FACING_VECS[obs.facing]
        return obs.agent[0] + dx, obs.agent[1] + dy

    def _approach_tile(self, obs, tile: int, mine: bool = False) -> int:
        targets = {tuple(c) for c in np.argwhere(obs.tiles == tile)}
        if not targets:
            raise RuntimeError(f"no tile of kind {tile} on the map")
        return self._approach(obs, targets, mine=mine)

    def _approach_entity(self, obs, kind: str) -> int:
        targets = {pos for pos, k in (obs.entities or {}).items() if k == kind}
        if not targets:
            raise RuntimeError(f"no {kind} left on the map")
        return self._approach(obs, targets, mine=False)

    _MOVES = {(0, -1): tl.A_MOVE_NORTH, (1, 0): tl.A_MOVE_EAST,
              (0, 1): tl.A_MOVE_SOUTH, (-1, 0): tl.A_MOVE_WEST}

    def _approach(self, obs, targets: set, mine: bool) -> int:
        """Walk (clearing obstacles on the way) until facing a target, then
        interact. Entities on the path are attacked through; saplings are
        collected; stone is mined when a pickaxe is held."""
        fx, fy = self._facing_cell(obs)
        if (fx, fy) in targets:
            return tl.A_INTERACT
        here = tuple(obs.agent)
        for d, a in self._MOVES.items():
            if (here[0] + d[0], here[1] + d[1]) in targets:
                return a  # blocked move turns the agent toward the target
        nxt = self._bfs_step(obs, here, targets, mine)
        if nxt is None:
            raise RuntimeError(f"no path toward {sorted(targets)[:3]}")
        action = self._MOVES[(nxt[0] - here[0], nxt[1] - here[1])]
        # a non-walkable next cell must be cleared first: the move action
        # turns to face it, interact clears, and the following move walks on
        ents = obs.entities or {}
        if (nxt in ents or obs.tiles[nxt] != tl.T_GRASS) and (fx, fy) == nxt:
            return tl.A_INTERACT
        return action

    @staticmethod
    def _bfs_step(obs, start, targets: set, mine: bool):
        """First cell of a shortest path to any cell 4-adjacent to a target."""
        w, h = obs.tiles.shape
        ents = obs.entities or {}
        inv = obs.inventory

        def can_clear(kind):
            if kind == "cow":
                return True
            swords = ("wood_sword", "stone_sword", "iron_sword")
            if kind == "skeleton":
                swords = swords[1:]
            return any(inv[tl.ITEM_INDEX[s]] > 0 for s in swords)

        def passable(c):
            if c in ents and not can_clear(ents[c]):
                return False  # creatures never move; an unarmed agent detours
            t = obs.tiles[c]
            if t in (tl.T_GRASS, tl.T_SAPLING):
                return True  # clearable in a hit or two
            return mine and t in (tl.T_STONE, tl.T_PLACED_STONE)

        goals = set()
        for tx, ty in targets:
            for dx, dy in tl.FACING_VECS:
                c = (tx + dx, ty + dy)
                if 0 <= c[0] < w and 0 <= c[1] < h and (c == start or passable(c)):
                    goals.add(c)
        if start in goals:
            return None  # caller should already be interacting; defensive
        prev = {start: None}
        q = deque([start])
        while q:
            cur = q.popleft()
            if cur in goals:
                while prev[cur] != start:
                    cur = prev[cur]
                return cur
            for dx, dy in tl.FACING_VECS:
                nxt = (cur[0] + dx, cur[1] + dy)
                if nxt in prev or not (0 <= nxt[0] < w and 0 <= nxt[1] < h):
                    continue
                if not passable(nxt):
                    continue
                prev[nxt] = cur
                q.append(nxt)
        return None
