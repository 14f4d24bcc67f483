"""Instruction language: a closed mini-grammar for build instructions and a
synonym lexicon for survival goals, compiled straight to task plans.

Build steps are shape phrases (row, tower, square, rectangle, single block,
remove-block) with optional direction and anchor modifiers, split on "then" or
sentence breaks. Survival instructions are comma/"and"-separated verb phrases
resolved through the lexicon to achievement subtasks with counts.

Every parse failure carries the offending text span; nothing is guessed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .blocks import Block, COLOR_CODES, COLOR_NAMES, in_bounds
from .codecs import (
    complete_color_map,
    normalize_blocks,
    recolor_blocks,
    rotate180_blocks,
)
from .taskman import Achieve, PlaceBlock, RemoveBlock, TaskPlan
from .techlite import ACHIEVEMENTS


class GrammarError(ValueError):
    """Parse failure citing the offending token span."""

    def __init__(self, message: str, text: str, span: tuple[int, int]):
        self.message = message
        self.text = text
        self.span = span
        snippet = text[span[0]:span[1]] or "<end>"
        super().__init__(f"{message} at {span[0]}..{span[1]}: {snippet!r}")


@dataclass
class _Token:
    word: str
    start: int
    end: int


def _tokenize(text: str) -> list[_Token]:
    toks = []
    for m in re.finditer(r"[A-Za-z0-9/_']+", text):
        toks.append(_Token(m.group().lower(), m.start(), m.end()))
    return toks


_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}

_DIRECTIONS = ("north", "south", "east", "west")
_DIR_VECS = {"north": (0, -1), "south": (0, 1), "east": (1, 0), "west": (-1, 0)}

_PLACE_VERBS = {"place", "put", "build", "add", "construct", "stack"}
_REMOVE_VERBS = {"destroy", "remove", "break"}
_ROW_NOUNS = {"row", "line"}
_TOWER_NOUNS = {"tower", "column", "column/tower", "tower/column"}
_RECT_NOUNS = {"rectangle", "square"}
_RUN_WORDS = {"running", "extending", "going", "pointing"}
_STEP_UNITS = {"row", "rows", "column", "columns", "cell", "cells", "step", "steps", "block", "blocks"}


class _Cursor:
    def __init__(self, text: str, tokens: list[_Token]):
        self.text = text
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> str | None:
        i = self.pos + ahead
        return self.tokens[i].word if i < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, *words: str) -> bool:
        if self.peek() in words:
            self.pos += 1
            return True
        return False

    def expect(self, *words: str, what: str = "") -> _Token:
        if self.peek() in words:
            return self.take()
        self.fail(f"expected {what or '/'.join(words)}")

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def span(self) -> tuple[int, int]:
        if self.pos < len(self.tokens):
            t = self.tokens[self.pos]
            return (t.start, t.end)
        end = self.tokens[-1].end if self.tokens else len(self.text)
        return (end, end)

    def fail(self, message: str):
        raise GrammarError(message, self.text, self.span())

    def number(self, what: str = "a number") -> int:
        w = self.peek()
        if w is not None and w.isdigit():
            return int(self.take().word)
        if w in _NUMBER_WORDS:
            return _NUMBER_WORDS[self.take().word]
        self.fail(f"expected {what}")

    def color(self) -> int:
        w = self.peek()
        if w in COLOR_CODES:
            self.take()
            return COLOR_CODES[w]
        self.fail("expected a color")


# -- gridbuild steps ---------------------------------------------------------


@dataclass
class _Anchor:
    x: int = 5
    z: int = 5
    y: int = 0
    moved: bool = False


def _parse_anchor(cur: _Cursor, anchor: _Anchor) -> bool:
    """One anchor clause; returns False when the cursor does not start one."""
    w = cur.peek()
    if w in ("in", "at") and cur.peek(1) in ("the",) and cur.peek(2) in ("middle", "center", "centre"):
        cur.take(), cur.take(), cur.take()
        if cur.peek() == "of" and cur.peek(1) == "the" and cur.peek(2) in ("grid", "space", "world"):
            cur.take(), cur.take(), cur.take()
        anchor.x, anchor.z, anchor.moved = 5, 5, True
        return True
    if w == "at" and cur.peek(1) == "height":
        cur.take(), cur.take()
        anchor.y = cur.number("a height")
        anchor.moved = True
        return True
    if (w is not None and w.isdigit()) or w in _NUMBER_WORDS:
        mark = cur.pos
        n = cur.number()
        if cur.peek() in _STEP_UNITS and cur.peek(1) in _DIRECTIONS:
            cur.take()
            d = cur.take().word
            cur.expect("of", what='"of"')
            cur.accept("the")
            cur.expect("center", "centre", "middle", what='"center"')
            dx, dz = _DIR_VECS[d]
            anchor.x += n * dx
            anchor.z += n * dz
            anchor.moved = True
            return True
        cur.pos = mark
    return False


def _parse_anchors(cur: _Cursor, anchor: _Anchor) -> None:
    while not cur.done():
        if not _parse_anchor(cur, anchor):
            break


def _parse_direction_mod(cur: _Cursor) -> str:
    if cur.peek() in _RUN_WORDS and cur.peek(1) in _DIRECTIONS:
        cur.take()
        return cur.take().word
    return "east"


def _row_cells(anchor: _Anchor, count: int, direction: str) -> list[tuple[int, int, int]]:
    dx, dz = _DIR_VECS[direction]
    return [(anchor.x + i * dx, anchor.y, anchor.z + i * dz) for i in range(count)]


def _parse_build_step(cur: _Cursor) -> list:
    """One build step -> list of (cell, color) placements."""
    anchor = _Anchor()
    cur.accept(*_PLACE_VERBS)
    cur.accept("a", "an")

    w = cur.peek()
    placements: list[tuple[tuple[int, int, int], int]] = []
    if w in _ROW_NOUNS or w in _TOWER_NOUNS:
        # "a row of 5 red blocks [running east]"
        noun = cur.take().word
        cur.expect("of", what='"of"')
        count = cur.number("a block count")
        color = cur.color()
        cur.expect("blocks", "block", what='"blocks"')
        direction = _parse_direction_mod(cur) if noun in _ROW_NOUNS else "east"
        _parse_anchors(cur, anchor)
        if noun in _TOWER_NOUNS:
            cells = [(anchor.x, anchor.y + i, anchor.z) for i in range(count)]
        else:
            cells = _row_cells(anchor, count, direction)
        placements = [(c, color) for c in cells]
    elif (w is not None and w.isdigit()) or w in _NUMBER_WORDS:
        first = cur.number()
        if cur.peek() in ("by", "x"):
            # "a 2 by 3 rectangle of blue blocks"
            cur.take()
            second = cur.number("the second dimension")
            noun = cur.expect(*_RECT_NOUNS, what='"rectangle" or "square"').word
            if noun == "square" and first != second:
                cur.fail(f"square sides differ ({first} vs {second})")
            cur.expect("of", what='"of"')
            color = cur.color()
            cur.expect("blocks", "block", what='"blocks"')
            _parse_anchors(cur, anchor)
            cells = [
                (anchor.x + i, anchor.y, anchor.z + j)
                for i in range(first)
                for j in range(second)
            ]
            placements = [(c, color) for c in cells]
        else:
            # "5 red blocks in a row [running east]"
            color = cur.color()
            cur.expect("blocks", "block", what='"blocks"')
            cur.expect("in", what='"in a row/tower"')
            cur.accept("a", "an")
            noun = cur.take().word if cur.peek() in (_ROW_NOUNS | _TOWER_NOUNS) else cur.fail(
                'expected "row" or "tower"'
            )
            direction = _parse_direction_mod(cur) if noun in _ROW_NOUNS else "east"
            _parse_anchors(cur, anchor)
            if noun in _TOWER_NOUNS:
                cells = [(anchor.x, anchor.y + i, anchor.z) for i in range(first)]
            else:
                cells = _row_cells(anchor, first, direction)
            placements = [(c, color) for c in cells]
    elif w in ("single", "one"):
        cur.take()
        color = cur.color()
        cur.expect("block", what='"block"')
        _parse_anchors(cur, anchor)
        placements = [((anchor.x, anchor.y, anchor.z), color)]
    elif w in COLOR_CODES:
        # "a red block at height 2"
        color = cur.color()
        cur.expect("block", what='"block"')
        _parse_anchors(cur, anchor)
        placements = [((anchor.x, anchor.y, anchor.z), color)]
    else:
        cur.fail("expected a shape phrase")

    for cell, _ in placements:
        if not in_bounds(*cell):
            cur.fail(f"shape leaves the grid at {cell}")
    return [PlaceBlock(Block(*cell, color)) for cell, color in placements]


def _parse_remove_step(cur: _Cursor) -> list:
    cur.expect(*_REMOVE_VERBS)
    cur.accept("the", "a", "an")
    cur.expect("block", what='"block"')
    anchor = _Anchor()
    _parse_anchors(cur, anchor)
    if not in_bounds(anchor.x, anchor.y, anchor.z):
        cur.fail(f"target cell ({anchor.x},{anchor.y},{anchor.z}) is outside the grid")
    return [RemoveBlock(anchor.x, anchor.y, anchor.z)]


_STEP_SPLIT = re.compile(r",?\s+then\s+|[.;]\s*(?:then\s+)?")


def _split_steps(text: str) -> list[tuple[int, str]]:
    steps = []
    pos = 0
    for m in _STEP_SPLIT.finditer(text):
        steps.append((pos, text[pos:m.start()]))
        pos = m.end()
    steps.append((pos, text[pos:]))
    return [(off, s) for off, s in steps if s.strip(" .,\t")]


def _translate_gridbuild(text: str) -> TaskPlan:
    subtasks: list = []
    for offset, chunk in _split_steps(text):
        tokens = _tokenize(chunk)
        for t in tokens:
            t.start += offset
            t.end += offset
        if not tokens:
            continue
        cur = _Cursor(text, tokens)
        if cur.peek() in _REMOVE_VERBS:
            step = _parse_remove_step(cur)
        else:
            step = _parse_build_step(cur)
        if not cur.done():
            cur.fail("unexpected trailing words")
        subtasks.extend(step)

    if not subtasks:
        raise GrammarError("no steps found", text, (0, len(text)))
    all_place = all(isinstance(s, PlaceBlock) for s in subtasks)
    cells = [
        (s.block.x, s.block.y, s.block.z) if isinstance(s, PlaceBlock) else (s.x, s.y, s.z)
        for s in subtasks
    ]
    if len(set(cells)) != len(cells):
        raise GrammarError("steps overlap on a cell", text, (0, len(text)))
    if all_place:
        # plans made only of placements are recentered and ordered like dataset
        # figures; removal plans keep their literal cells and step order
        normalized = normalize_blocks([s.block for s in subtasks])
        subtasks = [PlaceBlock(b) for b in normalized]
    return TaskPlan(subtasks)


# -- techlite lexicon ---------------------------------------------------------

_VERB_CLASSES = {
    "defeat": "defeat", "vanquish": "defeat", "slay": "defeat", "kill": "defeat",
    "fight": "defeat",
    "collect": "collect", "gather": "collect", "mine": "collect", "harvest": "collect",
    "get": "collect", "grab": "collect", "chop": "collect",
    "drink": "drink",
    "make": "make", "craft": "make", "forge": "make",
    "place": "place", "set": "place", "install": "place",
    "plant": "plant",
    "eat": "eat", "consume": "eat", "devour": "eat",
    "sleep": "sleep", "rest": "sleep", "nap": "sleep", "take": "sleep", "go": "sleep",
}

# multi-word noun phrases resolve before single words; longest match wins
_NOUN_PHRASES = {
    ("undead", "foe"): "zombie",
    ("bone", "archer"): "skeleton",
    ("metallic", "mineral"): "iron",
    ("crafting", "table"): "table",
    ("precious", "gem"): "diamond",
    ("a", "nap"): "nap",
}
_NOUNS = {
    "zombie": "zombie", "zombies": "zombie", "undead": "zombie",
    "skeleton": "skeleton", "skeletons": "skeleton", "archer": "skeleton",
    "cow": "cow", "cows": "cow",
    "wood": "wood", "timber": "wood", "lumber": "wood", "tree": "wood", "trees": "wood",
    "stone": "stone", "stones": "stone", "rock": "stone", "rocks": "stone",
    "coal": "coal",
    "iron": "iron", "metal": "iron",
    "diamond": "diamond", "diamonds": "diamond", "gem": "diamond", "gems": "diamond",
    "sapling": "sapling", "saplings": "sapling", "seedling": "sapling", "seedlings": "sapling",
    "water": "water",
    "table": "table", "workbench": "table",
    "furnace": "furnace", "smelter": "furnace",
    "plant": "plant", "plants": "plant", "crop": "plant", "crops": "plant",
    "pickaxe": "pickaxe", "pickaxes": "pickaxe", "pick": "pickaxe",
    "sword": "sword", "swords": "sword", "weapon": "sword", "weapons": "sword",
    "blade": "sword",
    "nap": "nap",
}
_MATERIALS = {"wood": "wood", "wooden": "wood", "stone": "stone", "iron": "iron"}
_FILLER = {"a", "an", "the", "some", "of", "unit", "units", "piece", "pieces",
           "single", "up", "down", "until", "morning", "to", "sleep", "it",
           "grown", "ripe", "block", "blocks"}

_RESOLVE = {
    ("defeat", "zombie"): "defeat_zombie",
    ("defeat", "skeleton"): "defeat_skeleton",
    ("collect", "wood"): "collect_wood",
    ("collect", "stone"): "collect_stone",
    ("collect", "coal"): "collect_coal",
    ("collect", "iron"): "collect_iron",
    ("collect", "diamond"): "collect_diamond",
    ("collect", "sapling"): "collect_sapling",
    ("collect", "water"): "collect_drink",
    ("drink", "water"): "collect_drink",
    ("place", "table"): "place_table",
    ("place", "stone"): "place_stone",
    ("place", "furnace"): "place_furnace",
    ("place", "sapling"): "place_plant",
    ("place", "plant"): "place_plant",
    ("plant", "sapling"): "place_plant",
    ("plant", "plant"): "place_plant",
    ("plant", None): "place_plant",
    ("eat", "cow"): "eat_cow",
    ("eat", "plant"): "eat_plant",
    ("sleep", None): "wake_up",
    ("sleep", "nap"): "wake_up",
}


def _phrase_spans(text: str) -> list[tuple[int, str]]:
    parts = []
    pos = 0
    for m in re.finditer(
        r",\s*(?:and\s+then\s+|and\s+|then\s+)?|\s+and\s+(?:then\s+)?|\s+then\s+|\.\s+", text
    ):
        parts.append((pos, text[pos:m.start()]))
        pos = m.end()
    parts.append((pos, text[pos:]))
    return [(off, p) for off, p in parts if p.strip(" .,\t")]


def _translate_techlite(text: str) -> TaskPlan:
    subtasks = []
    for offset, chunk in _phrase_spans(text):
        tokens = _tokenize(chunk)
        for t in tokens:
            t.start += offset
            t.end += offset
        if not tokens:
            continue
        verb_tok = tokens[0]
        verb = _VERB_CLASSES.get(verb_tok.word)
        if verb is None:
            raise GrammarError("unknown verb", text, (verb_tok.start, verb_tok.end))
        count = 1
        material = None
        noun = None
        i = 1
        while i < len(tokens):
            tok = tokens[i]
            w = tok.word
            pair = (w, tokens[i + 1].word) if i + 1 < len(tokens) else None
            if pair in _NOUN_PHRASES:
                noun = _NOUN_PHRASES[pair]
                i += 2
                continue
            if w.isdigit():
                count = int(w)
            elif w in _NUMBER_WORDS:
                count = _NUMBER_WORDS[w]
            elif w in _MATERIALS and material is None and i + 1 < len(tokens):
                material = _MATERIALS[w]
            elif w in _NOUNS:
                noun = _NOUNS[w]
            elif w in _FILLER:
                pass
            else:
                raise GrammarError("unknown word", text, (tok.start, tok.end))
            i += 1

        if verb == "make":
            if noun not in ("pickaxe", "sword"):
                raise GrammarError("craft phrases need a tool", text, (verb_tok.start, verb_tok.end))
            if material is None:
                raise GrammarError("craft phrases need a material", text, (verb_tok.start, verb_tok.end))
            name = f"make_{material}_{noun}"
        elif verb == "sleep":
            name = "wake_up"
        else:
            # treat leftover material words as the noun ("mine iron")
            if noun is None and material is not None:
                noun = material
            name = _RESOLVE.get((verb, noun))
            if name is None:
                raise GrammarError(
                    f"cannot resolve {verb!r} phrase", text, (verb_tok.start, verb_tok.end)
                )
        if name not in ACHIEVEMENTS:
            raise GrammarError(f"unknown goal {name!r}", text, (verb_tok.start, verb_tok.end))
        subtasks.append(Achieve(name, count))
    if not subtasks:
        raise GrammarError("no goals found", text, (0, len(text)))
    return TaskPlan(subtasks)


def translate(instruction: str, domain: str) -> TaskPlan:
    """Compile one instruction into an ordered subtask plan."""
    if domain == "gridbuild":
        return _translate_gridbuild(instruction)
    if domain == "techlite":
        return _translate_techlite(instruction)
    raise ValueError(f"unknown domain {domain!r}")


# -- sample augmentation -------------------------------------------------------

_DIR_SWAP = {"north": "south", "south": "north", "east": "west", "west": "east"}


def _swap_words(text: str, table: dict[str, str]) -> str:
    def repl(m: re.Match) -> str:
        word = m.group()
        mapped = table.get(word.lower())
        if mapped is None:
            return word
        return mapped.capitalize() if word[0].isupper() else mapped

    return re.sub(r"[A-Za-z]+", repl, text)


def augment_rotate180(sample: dict) -> dict:
    """Half-turn about the grid's vertical center line: blocks reflect in both
    horizontal axes; grammar instructions swap their direction words. Text that
    does not parse is left alone and the sample is marked unaligned."""
    out = dict(sample)
    out["blocks"] = rotate180_blocks(sample["blocks"])
    try:
        translate(sample["instruction"], "gridbuild")
    except GrammarError:
        out["unaligned"] = True
        return out
    out["instruction"] = _swap_words(sample["instruction"], _DIR_SWAP)
    return out


def augment_recolor(sample: dict, mapping: dict[int, int]) -> dict:
    """Bijective recoloring of blocks plus the matching color-word rewrite."""
    full = complete_color_map(mapping)
    out = dict(sample)
    out["blocks"] = recolor_blocks(sample["blocks"], full)
    words = {COLOR_NAMES[src]: COLOR_NAMES[dst] for src, dst in full.items()}
    out["instruction"] = _swap_words(sample["instruction"], words)
    return out
