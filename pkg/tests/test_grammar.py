"""Instruction grammar tests: shapes, anchors, multi-step plans, removals,
the techlite synonym lexicon, and the text-aligned augmentations."""

import numpy as np
import pytest

from instructrl.blocks import Block
from instructrl.grammar import (GrammarError, augment_recolor,
                                augment_rotate180, translate)
from instructrl.taskman import Achieve, PlaceBlock, RemoveBlock


def blocks_of(plan):
    return [s.block for s in plan.subtasks]


def test_single_block_default_center():
    plan = translate("place a blue block", "gridbuild")
    assert blocks_of(plan) == [Block(5, 0, 5, 1)]


def test_row_instruction_normalized():
    plan = translate("place a row of three red blocks running east", "gridbuild")
    assert blocks_of(plan) == [Block(5 + i, 0, 5, 3) for i in range(3)]
    # same figure whichever way it runs: normalization recenters
    west = translate("place a row of three red blocks running west", "gridbuild")
    assert blocks_of(west) == blocks_of(plan)


def test_tower_and_appendix_phrasing():
    plan = translate("column/tower of 6 yellow blocks in the middle of the grid",
                     "gridbuild")
    assert blocks_of(plan) == [Block(5, y, 5, 6) for y in range(6)]


def test_table1_instruction():
    plan = translate("place 5 red blocks in a row, one row north of center",
                     "gridbuild")
    assert blocks_of(plan) == [Block(5 + i, 0, 5, 3) for i in range(5)]


def test_rectangle_shape():
    plan = translate("build a two by three rectangle of green blocks", "gridbuild")
    cells = {(b.x, b.z) for b in blocks_of(plan)}
    assert len(cells) == 6
    assert all(b.color == 2 and b.y == 0 for b in blocks_of(plan))


def test_offset_anchor_then_normalize():
    plan = translate("put a green block two cells east of the center", "gridbuild")
    # a single block always recenters; the anchor shows up only pre-normalization
    assert blocks_of(plan) == [Block(5, 0, 5, 2)]


def test_multi_step_and_removal_literal():
    plan = translate("remove the block two steps west of center", "gridbuild")
    assert plan.subtasks == [RemoveBlock(3, 0, 5)]
    multi = translate(
        "place a blue block two cells west of center, then place a red block "
        "two cells east of center", "gridbuild")
    assert all(isinstance(s, PlaceBlock) for s in multi.subtasks)
    assert len(multi.subtasks) == 2


def test_errors_cite_token():
    with pytest.raises(GrammarError) as err:
        translate("place a cromulent block", "gridbuild")
    assert "cromulent" in str(err.value)
    with pytest.raises(GrammarError):
        translate("place a row of nine blue blocks running east four cells "
                  "east of center", "gridbuild")  # runs off the grid
    with pytest.raises(GrammarError):
        translate("place a blue block, then place a red block", "gridbuild")


def test_techlite_lexicon():
    plan = translate(
        "Vanquish the undead foe, gather a single unit of metallic mineral, "
        "and forge an iron weapon.", "techlite")
    assert plan.subtasks == [Achieve("defeat_zombie", 1),
                             Achieve("collect_iron", 1),
                             Achieve("make_iron_sword", 1)]
    assert translate("chop three trees", "techlite").subtasks == [
        Achieve("collect_wood", 3)]
    assert translate("take a nap", "techlite").subtasks == [Achieve("wake_up", 1)]
    with pytest.raises(GrammarError):
        translate("defenestrate a zombie", "techlite")


def test_augment_rotate180_swaps_text_and_blocks():
    sample = {"instruction": "place a row of three red blocks running east "
                             "two cells north of center",
              "blocks": [Block(5, 0, 3, 3), Block(6, 0, 3, 3), Block(7, 0, 3, 3)]}
    out = augment_rotate180(sample)
    assert out["blocks"] == [Block(5, 0, 7, 3), Block(4, 0, 7, 3), Block(3, 0, 7, 3)]
    assert "west" in out["instruction"] and "south" in out["instruction"]
    assert "unaligned" not in out
    again = augment_rotate180(out)
    assert again["blocks"] == sample["blocks"]
    assert again["instruction"] == sample["instruction"]


def test_augment_rotate180_marks_non_grammar_text():
    sample = {"instruction": "make it look nice over there",
              "blocks": [Block(4, 0, 5, 1)]}
    out = augment_rotate180(sample)
    assert out["unaligned"] is True
    assert out["instruction"] == sample["instruction"]
    assert out["blocks"] == [Block(6, 0, 5, 1)]


def test_augment_recolor_swaps_words_and_codes():
    sample = {"instruction": "place a red block", "blocks": [Block(5, 0, 5, 3)]}
    out = augment_recolor(sample, {3: 1})
    assert out["blocks"] == [Block(5, 0, 5, 1)]
    assert out["instruction"] == "place a blue block"
    identity = augment_recolor(sample, {})
    assert identity["blocks"] == sample["blocks"]
    assert identity["instruction"] == sample["instruction"]


def test_translate_matches_augmented_text():
    rng = np.random.default_rng(23)
    instructions = [
        "place a tower of four purple blocks",
        "add three orange blocks in a line going north",
        "construct a two by two square of yellow blocks one cell south of center",
    ]
    for text in instructions:
        plan = translate(text, "gridbuild")
        out = augment_recolor({"instruction": text, "blocks": blocks_of(plan)},
                              {int(rng.integers(1, 7)): int(rng.integers(1, 7))}
                              if rng.random() < 0.5 else {})
        replan = translate(out["instruction"], "gridbuild")
        assert blocks_of(replan) == out["blocks"]
