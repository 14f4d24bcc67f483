"""Survival env tests: worldgen layout, tool gating, crafting stations,
plant growth, sleep, combat, and the first-unlock reward rule."""

import numpy as np
import pytest

from instructrl.techlite import (ACHIEVEMENTS, A_CRAFT_IRON_PICKAXE,
                                 A_CRAFT_IRON_SWORD, A_CRAFT_STONE_PICKAXE,
                                 A_CRAFT_WOOD_PICKAXE, A_INTERACT,
                                 A_MOVE_EAST, A_MOVE_NORTH, A_MOVE_WEST,
                                 A_PLACE_PLANT, A_PLACE_TABLE, A_SLEEP,
                                 CREATURE_HITS, ENERGY_DECAY_PERIOD,
                                 ENERGY_MAX, ITEM_INDEX, PLANT_GROWTH_STEPS,
                                 SLEEPY_AT, T_COAL, T_DIAMOND, T_FURNACE,
                                 T_GRASS, T_IRON, T_PLANT, T_RIPE_PLANT,
                                 T_SAPLING, T_STONE, T_TABLE, T_TREE,
                                 T_WATER, AchievementUnlocked, Techlite)


def blank_world(**tiles):
    """Reset then flatten the map so tests control every cell."""
    env = Techlite()
    env.reset(0)
    env.tiles[:] = T_GRASS
    env.entities = {}
    env.agent = (5, 5)
    env.facing = 1
    env.inventory[:] = 0
    for (x, y), tile in tiles.items():
        env.tiles[x, y] = tile
    return env


def give(env, **items):
    for name, count in items.items():
        env.inventory[ITEM_INDEX[name]] += count


def unlocks(res):
    return [e.name for e in res.events if isinstance(e, AchievementUnlocked)]


def test_achievement_list():
    assert len(ACHIEVEMENTS) == 22
    assert len(set(ACHIEVEMENTS)) == 22


def test_worldgen_deterministic_and_stocked():
    a, b = Techlite(), Techlite()
    oa, ob = a.reset(3), b.reset(3)
    assert np.array_equal(oa.tiles, ob.tiles)
    assert oa.agent == ob.agent and oa.entities == ob.entities
    counts = {t: int((oa.tiles == t).sum())
              for t in (T_COAL, T_IRON, T_DIAMOND, T_TREE, T_SAPLING, T_WATER)}
    assert counts[T_COAL] == 3 and counts[T_IRON] == 3 and counts[T_DIAMOND] == 2
    assert counts[T_TREE] == 8 and counts[T_SAPLING] == 4 and counts[T_WATER] == 9
    kinds = sorted(oa.entities.values())
    assert kinds == ["cow", "cow", "cow", "skeleton", "skeleton",
                     "zombie", "zombie", "zombie"]
    assert a.reset(4).agent != oa.agent or not np.array_equal(a.tiles, oa.tiles)


def test_size_floor():
    with pytest.raises(ValueError):
        Techlite(size=(4, 4))


def test_move_sets_facing_even_when_blocked():
    env = blank_world()
    env.tiles[5, 4] = T_STONE
    env.step(A_MOVE_NORTH)
    assert env.agent == (5, 5) and env.facing == 0
    env.step(A_MOVE_EAST)
    assert env.agent == (6, 5) and env.facing == 1
    env.entities[(5, 5)] = "cow"
    env.step(A_MOVE_WEST)
    assert env.agent == (6, 5) and env.facing == 3


def test_trees_replenish_water_too():
    env = blank_world()
    env.tiles[6, 5] = T_TREE
    for _ in range(3):
        res = env.step(A_INTERACT)
    assert env.inventory[ITEM_INDEX["wood"]] == 3
    assert env.tiles[6, 5] == T_TREE
    env.tiles[6, 5] = T_WATER
    res = env.step(A_INTERACT)
    assert unlocks(res) == ["collect_drink"]
    assert env.tiles[6, 5] == T_WATER


def test_pickaxe_tiers_gate_ores():
    env = blank_world()
    env.tiles[6, 5] = T_STONE
    assert env.step(A_INTERACT).events == []
    give(env, wood_pickaxe=1)
    assert unlocks(env.step(A_INTERACT)) == ["collect_stone"]
    assert env.tiles[6, 5] == T_GRASS

    env.tiles[6, 5] = T_IRON
    assert env.step(A_INTERACT).events == []
    give(env, stone_pickaxe=1)
    assert unlocks(env.step(A_INTERACT)) == ["collect_iron"]

    env.tiles[6, 5] = T_DIAMOND
    assert env.step(A_INTERACT).events == []
    give(env, iron_pickaxe=1)
    assert unlocks(env.step(A_INTERACT)) == ["collect_diamond"]


def test_place_consumes_and_requires_grass():
    env = blank_world()
    assert env.step(A_PLACE_TABLE).events == []  # no wood yet
    give(env, wood=2)
    res = env.step(A_PLACE_TABLE)
    assert unlocks(res) == ["place_table"]
    assert env.tiles[6, 5] == T_TABLE
    assert env.inventory[ITEM_INDEX["wood"]] == 1
    assert env.step(A_PLACE_TABLE).events == []  # cell no longer grass


def test_craft_needs_stations():
    env = blank_world()
    give(env, wood=3, coal=1, iron=1)
    assert env.step(A_CRAFT_WOOD_PICKAXE).events == []  # no table nearby
    env.tiles[5, 4] = T_TABLE
    assert unlocks(env.step(A_CRAFT_WOOD_PICKAXE)) == ["make_wood_pickaxe"]
    assert env.inventory[ITEM_INDEX["wood_pickaxe"]] == 1
    assert env.step(A_CRAFT_IRON_PICKAXE).events == []  # furnace missing
    env.tiles[5, 6] = T_FURNACE
    assert unlocks(env.step(A_CRAFT_IRON_PICKAXE)) == ["make_iron_pickaxe"]
    assert env.inventory[ITEM_INDEX["wood"]] == 1
    assert env.inventory[ITEM_INDEX["coal"]] == 0
    give(env, wood=1, coal=1, iron=1)
    assert unlocks(env.step(A_CRAFT_IRON_SWORD)) == ["make_iron_sword"]


def test_stone_pickaxe_needs_both_inputs():
    env = blank_world()
    env.tiles[5, 4] = T_TABLE
    give(env, wood=1)
    assert env.step(A_CRAFT_STONE_PICKAXE).events == []
    give(env, stone=1)
    assert unlocks(env.step(A_CRAFT_STONE_PICKAXE)) == ["make_stone_pickaxe"]


def test_plant_growth_cycle():
    env = blank_world()
    give(env, sapling=1)
    res = env.step(A_PLACE_PLANT)
    assert unlocks(res) == ["place_plant"]
    assert env.tiles[6, 5] == T_PLANT
    for _ in range(PLANT_GROWTH_STEPS - 1):
        env.step(0)
    assert env.tiles[6, 5] == T_PLANT
    env.step(0)
    assert env.tiles[6, 5] == T_RIPE_PLANT
    res = env.step(A_INTERACT)
    assert unlocks(res) == ["eat_plant"]
    assert env.tiles[6, 5] == T_GRASS


def test_energy_decay_and_sleep_gate():
    env = blank_world()
    assert env.step(A_SLEEP).events == []  # not sleepy
    ticks_to_sleepy = (ENERGY_MAX - SLEEPY_AT) * ENERGY_DECAY_PERIOD
    for _ in range(ticks_to_sleepy):
        env.step(0)
    assert env.energy == SLEEPY_AT
    res = env.step(A_SLEEP)
    assert unlocks(res) == ["wake_up"] and res.reward == 1.0
    assert env.energy == ENERGY_MAX


def test_combat_rules():
    env = blank_world()
    env.entities[(6, 5)] = "cow"
    res = env.step(A_INTERACT)
    assert unlocks(res) == ["eat_cow"] and (6, 5) not in env.entities

    env.entities[(6, 5)] = "zombie"
    assert env.step(A_INTERACT).events == []  # bare hands
    give(env, wood_sword=1)
    for i in range(CREATURE_HITS):
        res = env.step(A_INTERACT)
    assert unlocks(res) == ["defeat_zombie"] and (6, 5) not in env.entities

    env.entities[(6, 5)] = "skeleton"
    assert env.step(A_INTERACT).events == []  # wood sword too weak
    give(env, stone_sword=1)
    for i in range(CREATURE_HITS):
        res = env.step(A_INTERACT)
    assert unlocks(res) == ["defeat_skeleton"]


def test_reward_only_on_first_unlock():
    env = blank_world()
    env.tiles[6, 5] = T_TREE
    assert env.step(A_INTERACT).reward == 1.0
    assert env.step(A_INTERACT).reward == 0.0
    assert env.unlocked == {"collect_wood"}


def test_entities_hold_position():
    env = Techlite()
    obs = env.reset(9)
    before = dict(obs.entities)
    rng = np.random.default_rng(1)
    for _ in range(100):
        env.step(int(rng.integers(1, 5)))  # walk around, never interact
    assert env.entities == before


def test_observation_is_copy():
    env = blank_world()
    obs = env.step(0).obs
    obs.tiles[0, 0] = T_STONE
    obs.inventory[0] = 99
    assert env.tiles[0, 0] == T_GRASS
    assert env.inventory[0] == 0
