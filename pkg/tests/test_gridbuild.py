"""Voxel builder env tests: movement modes, placement support rules,
break/settle, inventory accounting, and task serialization."""

import numpy as np
import pytest

from instructrl.blocks import AIR, Block
from instructrl.gridbuild import (A_BREAK, A_LOOK_DOWN, A_LOOK_UP,
                                  A_MOVE_DOWN, A_MOVE_EAST, A_MOVE_NORTH,
                                  A_MOVE_SOUTH, A_MOVE_UP, A_MOVE_WEST,
                                  A_PLACE, A_SELECT_FIRST, A_TURN_LEFT,
                                  A_TURN_RIGHT, BlockPlaced, BlockRemoved,
                                  BuildTask, GridBuild, YAW_EAST, YAW_NORTH,
                                  YAW_SOUTH)


def fresh(mode="flying", blocks=(), spawn=(5, 5, YAW_EAST), capacity=20):
    env = GridBuild(capacity=capacity)
    env.reset(BuildTask(blocks=list(blocks), mode=mode, spawn=spawn))
    return env


def test_turn_and_pitch_clamp():
    env = fresh()
    env.step(A_TURN_LEFT)
    assert env.pose.yaw == YAW_NORTH
    env.step(A_TURN_RIGHT)
    env.step(A_TURN_RIGHT)
    assert env.pose.yaw == YAW_SOUTH
    for _ in range(3):
        env.step(A_LOOK_UP)
    assert env.pose.pitch == 1
    for _ in range(5):
        env.step(A_LOOK_DOWN)
    assert env.pose.pitch == -1


def test_moves_are_absolute_and_clipped():
    env = fresh(spawn=(0, 0, YAW_EAST))
    env.step(A_MOVE_NORTH)
    env.step(A_MOVE_WEST)
    assert (env.pose.x, env.pose.z) == (0, 0)
    env.step(A_MOVE_SOUTH)
    env.step(A_MOVE_EAST)
    assert (env.pose.x, env.pose.z) == (1, 1)


def test_place_on_ground_and_select():
    env = fresh(spawn=(5, 5, YAW_EAST))
    env.step(A_SELECT_FIRST + 2)  # red
    res = env.step(A_PLACE)
    assert res.events == [BlockPlaced(Block(6, 0, 5, 3))]
    assert env.grid[6, 0, 5] == 3
    assert env.inventory[2] == 19


def test_place_requires_support():
    env = fresh(spawn=(5, 5, YAW_EAST))
    env.step(A_MOVE_UP)
    env.step(A_MOVE_UP)
    res = env.step(A_PLACE)  # target (6,2,5) floats
    assert res.events == []
    assert env.grid[6, 2, 5] == AIR
    # a column below makes the same cell placeable
    env2 = fresh(spawn=(5, 5, YAW_EAST),
                 blocks=[Block(6, 0, 5, 1), Block(6, 1, 5, 1)])
    env2.step(A_MOVE_UP)
    env2.step(A_MOVE_UP)
    res2 = env2.step(A_PLACE)
    assert res2.events == [BlockPlaced(Block(6, 2, 5, 1))]


def test_place_blocked_by_occupied_or_empty_inventory():
    env = fresh(spawn=(5, 5, YAW_EAST), blocks=[Block(6, 0, 5, 2)])
    assert env.step(A_PLACE).events == []
    tight = fresh(spawn=(5, 5, YAW_EAST), capacity=1,
                  blocks=[Block(0, 0, 0, 1)])
    assert tight.inventory[0] == 0
    assert tight.step(A_PLACE).events == []


def test_break_returns_to_inventory():
    env = fresh(spawn=(5, 5, YAW_EAST), blocks=[Block(6, 0, 5, 4)])
    assert env.inventory[3] == 19
    res = env.step(A_BREAK)
    assert res.events == [BlockRemoved(6, 0, 5)]
    assert env.grid[6, 0, 5] == AIR
    assert env.inventory[3] == 20


def test_flying_vertical_and_lateral_blocking():
    env = fresh(spawn=(5, 5, YAW_EAST), blocks=[Block(6, 0, 5, 1)])
    env.step(A_MOVE_EAST)  # blocked at y=0 by the block
    assert (env.pose.x, env.pose.y) == (5, 0)
    env.step(A_MOVE_UP)
    env.step(A_MOVE_EAST)  # free at y=1
    assert (env.pose.x, env.pose.y) == (6, 1)
    env.step(A_MOVE_DOWN)  # occupied below, stays
    assert env.pose.y == 1


def test_walking_climb_cap_and_fall():
    stack = [Block(6, 0, 5, 1), Block(7, 0, 5, 1), Block(7, 1, 5, 1)]
    env = fresh(mode="walking", spawn=(5, 5, YAW_EAST), blocks=stack)
    env.step(A_MOVE_EAST)  # one step up is fine
    assert (env.pose.x, env.pose.y) == (6, 1)
    env.step(A_MOVE_EAST)
    assert (env.pose.x, env.pose.y) == (7, 2)
    env.step(A_MOVE_NORTH)  # drop straight back to the floor
    assert (env.pose.x, env.pose.y, env.pose.z) == (7, 0, 4)
    env.step(A_MOVE_SOUTH)  # a 2-high climb is refused
    assert (env.pose.x, env.pose.y, env.pose.z) == (7, 0, 4)
    env.step(A_MOVE_UP)  # vertical moves are flying-only
    assert env.pose.y == 0


def test_walking_settles_after_break():
    env = fresh(mode="walking", spawn=(5, 5, YAW_EAST),
                blocks=[Block(5, 0, 5, 1)])
    assert env.pose.y == 1
    env.step(A_LOOK_DOWN)
    env.step(A_TURN_LEFT)  # face north; target (5,0,4)... need own cell
    # break the block underfoot by looking down while standing next to it
    env2 = fresh(mode="walking", spawn=(4, 5, YAW_EAST),
                 blocks=[Block(5, 0, 5, 1)])
    res = env2.step(A_BREAK)
    assert res.events == [BlockRemoved(5, 0, 5)]
    assert env2.pose.y == 0


def test_reset_validates_initial_blocks():
    env = GridBuild()
    with pytest.raises(ValueError):
        env.reset(BuildTask(blocks=[Block(0, 0, 0, 7)]))
    with pytest.raises(ValueError):
        env.reset(BuildTask(blocks=[Block(11, 0, 0, 1)]))
    with pytest.raises(ValueError):
        env.reset(BuildTask(blocks=[Block(1, 0, 1, 1), Block(1, 0, 1, 2)]))
    with pytest.raises(ValueError):
        env.reset(BuildTask(mode="swimming"))


def test_initial_blocks_consume_inventory():
    env = fresh(blocks=[Block(1, 0, 1, 5), Block(2, 0, 1, 5)])
    assert env.inventory[4] == 18


def test_random_spawn_deterministic():
    env_a, env_b = GridBuild(), GridBuild()
    task = BuildTask(seed=7)
    env_a.reset(task)
    env_b.reset(task)
    assert env_a.pose == env_b.pose
    env_b.reset(BuildTask(seed=8))
    poses = {tuple((env_a.pose.x, env_a.pose.z, env_a.pose.yaw)),
             tuple((env_b.pose.x, env_b.pose.z, env_b.pose.yaw))}
    assert len(poses) == 2  # seeds 7 and 8 happen to differ


def test_observation_is_snapshot():
    env = fresh(spawn=(5, 5, YAW_EAST))
    obs = env.step(A_SELECT_FIRST).obs
    assert obs.selected_color == 1
    obs.grid[0, 0, 0] = 9
    assert env.grid[0, 0, 0] == AIR
    assert obs.pose is not env.pose


def test_task_json_round_trip():
    task = BuildTask(blocks=[Block(5, 0, 5, 3), Block(5, 1, 5, 3)],
                     mode="walking", seed=4, spawn=(2, 2, YAW_SOUTH))
    clone = BuildTask.from_json(task.to_json())
    assert clone == task


def test_pitch_aims_place_and_break():
    env = fresh(spawn=(5, 5, YAW_EAST), blocks=[Block(6, 0, 5, 1)])
    env.step(A_MOVE_UP)
    env.step(A_LOOK_DOWN)  # target (6,0,5): occupied, break it
    res = env.step(A_BREAK)
    assert res.events == [BlockRemoved(6, 0, 5)]
    env.step(A_LOOK_UP)  # pitch back to level, target (6,1,5): unsupported now
    assert env.step(A_PLACE).events == []


def test_random_walk_invariants():
    rng = np.random.default_rng(11)
    for mode in ("flying", "walking"):
        env = GridBuild()
        env.reset(BuildTask(mode=mode, seed=3))
        placed = 0
        for _ in range(400):
            action = int(rng.integers(0, 19))
            res = env.step(action)
            for ev in res.events:
                placed += 1 if isinstance(ev, BlockPlaced) else -1
            assert not res.done
        occupied = int((env.grid != AIR).sum())
        assert occupied == placed
        # conservation: every color's stock plus its blocks equals capacity
        for color in range(1, 7):
            on_grid = int((env.grid == color).sum())
            assert env.inventory[color - 1] + on_grid == env.capacity
        p = env.pose
        assert 0 <= p.x < 11 and 0 <= p.y < 9 and 0 <= p.z < 11
        if mode == "walking":
            assert env._support(p.x, p.z) == p.y
