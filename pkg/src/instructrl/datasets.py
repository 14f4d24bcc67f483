"""JSONL instruction datasets: row codec, loader, and bundled corpus generators.

One JSON object per line:

    {"id": "gb-train-007", "env": "gridbuild",
     "instruction": "place a row of three blue blocks running east",
     "subtasks": "(0, 4, 5, 1), (0, 5, 5, 1), (0, 6, 5, 1)",
     "format": "coords"}

Formats: "coords" is a coordinate string where color 0 marks a removal;
"prims" is a primitive string (place-only plans); "ach" is a list of
{"name", "count"} achievement objects for techlite rows.  Rows whose plan
removes blocks carry an "initial" coords string giving the grid contents at
episode start (real colors, never 0).

Place-only gridbuild figures are stored in normalized form and decoding
re-normalizes, so the stored order is canonical; plans containing removals
keep their literal subtask order.  Generated corpora are sampled from the
instruction grammar itself, so every generated row translates back to its
stored subtasks exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .blocks import Block, COLOR_NAMES
from .codecs import (DATASET, AxisConvention, blocks_to_prims, expand_primitive,
                     format_coords, format_prims, normalize_blocks, parse_coords,
                     parse_prims)
from .grammar import GrammarError, translate
from .taskman import Achieve, PlaceBlock, RemoveBlock, TaskPlan

ENVS = ("gridbuild", "techlite")
FORMATS = ("coords", "prims", "ach")


@dataclass
class Sample:
    """One decoded dataset row."""

    id: str
    env: str
    instruction: str
    plan: TaskPlan
    initial: tuple = ()
    format: str = "coords"


def plan_blocks(plan: TaskPlan) -> list:
    """Subtasks as blocks; removals become color-0 markers."""
    out = []
    for sub in plan.subtasks:
        if isinstance(sub, PlaceBlock):
            out.append(sub.block)
        elif isinstance(sub, RemoveBlock):
            out.append(Block(sub.x, sub.y, sub.z, 0))
        else:
            raise ValueError(f"not a gridbuild subtask: {sub!r}")
    return out


def expected_final(sample: Sample) -> list:
    """Grid contents after executing the plan on the initial blocks."""
    cells = {(b.x, b.y, b.z): b.color for b in sample.initial}
    for sub in sample.plan.subtasks:
        if isinstance(sub, PlaceBlock):
            cells[(sub.block.x, sub.block.y, sub.block.z)] = sub.block.color
        elif isinstance(sub, RemoveBlock):
            cells.pop((sub.x, sub.y, sub.z), None)
        else:
            raise ValueError(f"not a gridbuild subtask: {sub!r}")
    return [Block(x, y, z, c) for (x, y, z), c in sorted(cells.items())]


def encode_row(sample: Sample, conv: AxisConvention = DATASET) -> dict:
    """Sample -> JSON-ready row dict."""
    if sample.env not in ENVS:
        raise ValueError(f"unknown env {sample.env!r}")
    row = {"id": sample.id, "env": sample.env, "instruction": sample.instruction}
    if sample.env == "techlite":
        row["format"] = "ach"
        row["subtasks"] = [{"name": s.achievement, "count": s.count}
                           for s in sample.plan.subtasks]
        return row
    blocks = plan_blocks(sample.plan)
    removes = any(b.color == 0 for b in blocks)
    fmt = sample.format
    if fmt == "ach":
        raise ValueError("format 'ach' is for techlite rows")
    if fmt == "prims":
        if removes:
            raise ValueError("format 'prims' cannot encode removals")
        row["subtasks"] = format_prims(blocks_to_prims(blocks, conv))
    else:
        fmt = "coords"
        row["subtasks"] = format_coords(blocks, conv)
    row["format"] = fmt
    if sample.initial:
        row["initial"] = format_coords(list(sample.initial), conv)
    return row


def decode_row(row: dict, conv: AxisConvention = DATASET) -> Sample:
    """Row dict -> Sample; raises ValueError with a row-level message."""
    if not isinstance(row, dict):
        raise ValueError("row is not a JSON object")
    for key in ("id", "env", "instruction", "subtasks", "format"):
        if key not in row:
            raise ValueError(f"missing field {key!r}")
    env, fmt = row["env"], row["format"]
    if env not in ENVS:
        raise ValueError(f"unknown env {env!r}")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "ach":
        if env != "techlite":
            raise ValueError("format 'ach' is for techlite rows")
        subs = row["subtasks"]
        if not isinstance(subs, list):
            raise ValueError("achievement subtasks must be a list")
        plan = TaskPlan([Achieve(str(d["name"]), int(d.get("count", 1)))
                         for d in subs], source_id=row["id"])
    else:
        if env != "gridbuild":
            raise ValueError(f"format {fmt!r} is for gridbuild rows")
        if fmt == "prims":
            prims = parse_prims(row["subtasks"], conv)
            blocks = [b for p in prims for b in expand_primitive(p, conv)]
        else:
            blocks = parse_coords(row["subtasks"], conv)
        if not blocks:
            raise ValueError("empty plan")
        if all(b.color != 0 for b in blocks):
            # canonical storage order for pure figures; identity on
            # generator output, which is already normalized
            blocks = normalize_blocks(blocks)
            plan = TaskPlan([PlaceBlock(b) for b in blocks], source_id=row["id"])
        else:
            subs = [RemoveBlock(b.x, b.y, b.z) if b.color == 0 else PlaceBlock(b)
                    for b in blocks]
            plan = TaskPlan(subs, source_id=row["id"])
    initial = ()
    if "initial" in row:
        initial = tuple(parse_coords(row["initial"], conv))
        if any(b.color == 0 for b in initial):
            raise ValueError("initial blocks must have real colors")
    return Sample(id=str(row["id"]), env=env, instruction=str(row["instruction"]),
                  plan=plan, initial=initial, format=fmt)


def load_dataset(path) -> tuple:
    """Read a JSONL dataset.

    Returns (samples, diagnostics) where diagnostics is a list of
    (line_number, message) pairs for rows that failed to parse.  Loading is
    order-preserving and bad rows never abort the rest of the file.
    """
    samples, diagnostics = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                samples.append(decode_row(json.loads(line)))
            except ValueError as exc:
                diagnostics.append((lineno, str(exc)))
            except KeyError as exc:
                diagnostics.append((lineno, f"missing field {exc}"))
    return samples, diagnostics


def write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


# --- bundled corpus generators -------------------------------------------
#
# Instructions are assembled from the same vocabulary the parser accepts and
# checked by actually translating them, so generation is rejection sampling
# with translate() as the ground truth.  The bundled gridbuild figures stay
# grounded (no floating-block anchors): a scripted builder can then finish
# every plan without leaving scaffolding behind.

_COLOR_WORDS = tuple(COLOR_NAMES[c] for c in sorted(COLOR_NAMES) if c != 0)
_NUMBERS = ("two", "three", "four", "five", "six")
_DIRS = ("north", "south", "east", "west")
_CENTER_ANCHORS = (
    "",
    " in the middle",
    " at the center",
    " in the centre of the grid",
    " at the middle of the world",
    " in the center of the space",
)
_UNITS = ("cell", "step", "block")


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _offset_anchor(rng) -> str:
    n = int(rng.integers(1, 5))
    unit = _pick(rng, _UNITS) + ("s" if n > 1 else "")
    word = ("one", "two", "three", "four")[n - 1]
    the = _pick(rng, ("the ", ""))
    return f" {word} {unit} {_pick(rng, _DIRS)} of {the}center"


def _anchor(rng) -> str:
    return _offset_anchor(rng) if rng.random() < 0.45 else _pick(rng, _CENTER_ANCHORS)


def _place_step(rng) -> str:
    verb = _pick(rng, ("place", "put", "build", "add", "construct"))
    color = _pick(rng, _COLOR_WORDS)
    kind = rng.random()
    if kind < 0.30:
        article = _pick(rng, ("a", "one", "a single"))
        shape = f"{article} {color} block"
    elif kind < 0.60:
        n = _pick(rng, _NUMBERS)
        noun = _pick(rng, ("row", "line"))
        run = _pick(rng, ("running", "extending", "going", "pointing"))
        d = _pick(rng, _DIRS)
        if rng.random() < 0.5:
            shape = f"a {noun} of {n} {color} blocks {run} {d}"
        else:
            shape = f"{n} {color} blocks in a {noun} {run} {d}"
    elif kind < 0.85:
        n = _pick(rng, ("two", "three", "four", "five"))
        noun = _pick(rng, ("tower", "column"))
        if rng.random() < 0.5:
            shape = f"a {noun} of {n} {color} blocks"
        else:
            shape = f"{n} {color} blocks in a {noun}"
    else:
        a = _pick(rng, ("two", "three"))
        b = _pick(rng, ("two", "three"))
        noun = "square" if a == b else "rectangle"
        shape = f"a {a} by {b} {noun} of {color} blocks"
    return f"{verb} {shape}{_anchor(rng)}"


def _remove_instruction(rng) -> str:
    verb = _pick(rng, ("remove", "destroy", "break"))
    return f"{verb} the block{_anchor(rng)}"


def _gridbuild_candidate(rng):
    """One instruction attempt -> (instruction, plan, initial) or None."""
    roll = rng.random()
    if roll < 0.08:
        instruction = _remove_instruction(rng)
    elif roll < 0.18:
        joiner = _pick(rng, (", then ", ". then ", "; "))
        instruction = _place_step(rng) + joiner + _place_step(rng)
    else:
        instruction = _place_step(rng)
    try:
        plan = translate(instruction, "gridbuild")
    except GrammarError:
        return None
    initial = ()
    if any(isinstance(s, RemoveBlock) for s in plan.subtasks):
        target = plan.subtasks[0]
        cells = {(target.x, target.y, target.z)}
        blocks = [Block(target.x, target.y, target.z,
                        int(rng.integers(1, 7)))]
        for _ in range(int(rng.integers(1, 4))):
            cell = (int(rng.integers(11)), 0, int(rng.integers(11)))
            if cell in cells:
                continue
            cells.add(cell)
            blocks.append(Block(*cell, int(rng.integers(1, 7))))
        initial = tuple(blocks)
    return instruction, plan, initial


def generate_gridbuild(n: int, seed: int, id_prefix: str = "gb") -> list:
    """n unique gridbuild rows as JSON-ready dicts."""
    rng = np.random.default_rng((seed, 11))
    rows, seen = [], set()
    guard = 0
    while len(rows) < n:
        guard += 1
        if guard > 200 * n:
            raise RuntimeError("grammar sampler stalled; template bug likely")
        cand = _gridbuild_candidate(rng)
        if cand is None or cand[0] in seen:
            continue
        instruction, plan, initial = cand
        seen.add(instruction)
        fmt = "coords"
        if not initial and len(plan.subtasks) > 1 and rng.random() < 0.3:
            fmt = "prims"
        sample = Sample(id=f"{id_prefix}-{len(rows):03d}", env="gridbuild",
                        instruction=instruction, plan=plan, initial=initial,
                        format=fmt)
        rows.append(encode_row(sample))
    return rows


_TL_TEMPLATES = (
    ("chop {n} trees", True),
    ("collect some wood", False),
    ("gather {n} pieces of timber", True),
    ("mine {n} stones", True),
    ("collect a rock", False),
    ("mine some coal", False),
    ("collect {n} units of iron", True),
    ("mine a single unit of metallic mineral", False),
    ("mine a diamond", False),
    ("collect a precious gem", False),
    ("gather a sapling", False),
    ("collect {n} seedlings", True),
    ("drink some water", False),
    ("collect water", False),
    ("defeat a zombie", False),
    ("slay the undead foe", False),
    ("fight a skeleton", False),
    ("vanquish a bone archer", False),
    ("eat a cow", False),
    ("devour the cow", False),
    ("eat the ripe plant", False),
    ("eat a grown crop", False),
    ("place a table", False),
    ("install a crafting table", False),
    ("place a furnace", False),
    ("set up a smelter", False),
    ("place a stone block", False),
    ("plant a sapling", False),
    ("plant it", False),
    ("make a wood pickaxe", False),
    ("craft a wooden pick", False),
    ("make a wood sword", False),
    ("forge a wooden blade", False),
    ("craft a stone pickaxe", False),
    ("make a stone sword", False),
    ("craft an iron pickaxe", False),
    ("forge an iron sword", False),
    ("craft an iron blade", False),
    ("take a nap", False),
    ("go to sleep", False),
)


def _techlite_step(rng) -> str:
    text, counted = _pick(rng, _TL_TEMPLATES)
    if counted:
        text = text.format(n=_pick(rng, ("two", "three", "four")))
    return text


def generate_techlite(n: int, seed: int, id_prefix: str = "tl") -> list:
    """n unique techlite rows as JSON-ready dicts."""
    rng = np.random.default_rng((seed, 13))
    rows, seen = [], set()
    guard = 0
    while len(rows) < n:
        guard += 1
        if guard > 200 * n:
            raise RuntimeError("grammar sampler stalled; template bug likely")
        steps = [_techlite_step(rng)]
        if rng.random() < 0.25:
            joiner = _pick(rng, (", then ", " and ", " and then "))
            other = _techlite_step(rng)
            if other != steps[0]:
                steps = [steps[0] + joiner + other]
        instruction = steps[0]
        if instruction in seen:
            continue
        try:
            plan = translate(instruction, "techlite")
        except GrammarError:
            continue
        seen.add(instruction)
        sample = Sample(id=f"{id_prefix}-{len(rows):03d}", env="techlite",
                        instruction=instruction, plan=plan, format="ach")
        rows.append(encode_row(sample))
    return rows


def generate_corpora(seed: int, *, gridbuild_train: int = 109,
                     gridbuild_test: int = 41, techlite_train: int = 60,
                     techlite_test: int = 20) -> dict:
    """The bundled mini-corpora, keyed by output file stem.

    Train and test rows come from one deduplicated stream per env, so the
    splits never share an instruction.
    """
    gb = generate_gridbuild(gridbuild_train + gridbuild_test, seed)
    tl = generate_techlite(techlite_train + techlite_test, seed)

    def reid(rows, prefix):
        out = []
        for i, row in enumerate(rows):
            row = dict(row)
            row["id"] = f"{prefix}-{i:03d}"
            out.append(row)
        return out

    return {
        "gridbuild_train": reid(gb[:gridbuild_train], "gb-train"),
        "gridbuild_test": reid(gb[gridbuild_train:], "gb-test"),
        "techlite_train": reid(tl[:techlite_train], "tl-train"),
        "techlite_test": reid(tl[techlite_train:], "tl-test"),
    }
