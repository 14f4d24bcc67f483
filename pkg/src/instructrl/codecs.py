"""Serialization codecs for block structures: per-block coords, box primitives,
block-order normalization, figure classification, and geometric transforms.

Two serialized tuple conventions exist in the wild for the same canonical frame:
the dataset order stores (up, east, south) and the legacy prompt order stores
(south, east, up). Both are expressed as AxisConvention values; DATASET is the
default everywhere.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

from .blocks import (
    AIR,
    CENTER_X,
    CENTER_Z,
    COLOR_CODES,
    COLOR_NAMES,
    X_SIZE,
    Y_SIZE,
    Z_SIZE,
    Block,
    canonical_order,
    in_bounds,
)


class ParseError(ValueError):
    """Malformed codec text; carries the item index and character offset."""

    def __init__(self, message: str, item: int, pos: int):
        super().__init__(f"{message} (item {item}, char {pos})")
        self.item = item
        self.pos = pos


class PrimEncodingError(ValueError):
    """Block set has a box the rotation-tag vocabulary cannot express."""


@dataclass(frozen=True)
class AxisConvention:
    """Maps serialized tuple slots onto canonical axes x (east), y (up), z (south)."""

    name: str
    slot_axes: tuple[str, str, str]

    def to_canonical(self, slots: tuple[int, int, int]) -> tuple[int, int, int]:
        axes = dict(zip(self.slot_axes, slots))
        return axes["x"], axes["y"], axes["z"]

    def from_canonical(self, x: int, y: int, z: int) -> tuple[int, int, int]:
        axes = {"x": x, "y": y, "z": z}
        return tuple(axes[a] for a in self.slot_axes)


DATASET = AxisConvention("dataset", ("y", "x", "z"))
APPENDIX_C = AxisConvention("appendix_c", ("z", "x", "y"))
CONVENTIONS = {c.name: c for c in (DATASET, APPENDIX_C)}

# Rotation tags assign the size components, sorted largest first, to world axes.
# One-word tags pin only the largest component; the rest fill in x, y, z order.
ROTATION_TAGS = {
    "east": ("x", "y", "z"),
    "sky": ("y", "x", "z"),
    "south": ("z", "x", "y"),
    "eastsky": ("x", "y", "z"),
    "eastsouth": ("x", "z", "y"),
    "southsky": ("z", "y", "x"),
}
# Preference order when several tags describe the same box (ties in size).
_TAG_CANDIDATES = ("eastsky", "eastsouth", "southsky", "sky", "south", "east")


@dataclass(frozen=True)
class PrimitiveSpec:
    """Axis-aligned box: start tuple and size tuple in serialized slot order,
    rotation tag from ROTATION_TAGS, color name."""

    start: tuple[int, int, int]
    size: tuple[int, int, int]
    rotation: str
    color: str


_GROUP_RE = re.compile(r"\(([^()]*)\)")
_SEP_RE = re.compile(r"[\s,]*")


def _scan_groups(text: str, item_name: str) -> list[tuple[tuple[int, ...], int]]:
    """Parenthesized integer tuples with their char offsets; separators are
    commas/whitespace only."""
    groups: list[tuple[tuple[int, ...], int]] = []
    pos = 0
    idx = 0
    while pos < len(text):
        gap = _SEP_RE.match(text, pos)
        pos = gap.end()
        if pos >= len(text):
            break
        m = _GROUP_RE.match(text, pos)
        if m is None:
            raise ParseError(f"expected '(' starting a {item_name}", idx, pos)
        parts = [p.strip() for p in m.group(1).split(",")]
        try:
            values = tuple(int(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-integer field in {item_name}", idx, pos) from None
        groups.append((values, pos))
        pos = m.end()
        idx += 1
    return groups


def parse_coords(text: str, conv: AxisConvention = DATASET) -> list[Block]:
    """Parse "(a, b, c, color)" tuples; color 0 marks a removal cell."""
    blocks: list[Block] = []
    for idx, (values, pos) in enumerate(_scan_groups(text, "coords tuple")):
        if len(values) != 4:
            raise ParseError("coords tuple needs 4 fields", idx, pos)
        *slots, color = values
        if not 0 <= color <= 6:
            raise ParseError(f"invalid color {color}", idx, pos)
        x, y, z = conv.to_canonical(tuple(slots))
        if not in_bounds(x, y, z):
            raise ParseError(f"cell out of bounds ({x},{y},{z})", idx, pos)
        blocks.append(Block(x, y, z, color))
    return blocks


def format_coords(blocks: list[Block], conv: AxisConvention = DATASET) -> str:
    parts = []
    for b in blocks:
        a, c, d = conv.from_canonical(b.x, b.y, b.z)
        parts.append(f"({a}, {c}, {d}, {b.color})")
    return ", ".join(parts)


def _assign_axes(size_desc: tuple[int, int, int], tag: str) -> dict[str, int]:
    return dict(zip(ROTATION_TAGS[tag], size_desc))


def expand_primitive(p: PrimitiveSpec, conv: AxisConvention = DATASET) -> list[Block]:
    if p.rotation not in ROTATION_TAGS:
        raise ValueError(f"unknown rotation tag {p.rotation!r}")
    if p.color not in COLOR_CODES:
        raise ValueError(f"unknown color name {p.color!r}")
    if any(s < 1 for s in p.size):
        raise ValueError(f"size components must be >= 1, got {p.size}")
    x0, y0, z0 = conv.to_canonical(p.start)
    extent = _assign_axes(tuple(sorted(p.size, reverse=True)), p.rotation)
    code = COLOR_CODES[p.color]
    blocks = []
    for dx in range(extent["x"]):
        for dy in range(extent["y"]):
            for dz in range(extent["z"]):
                x, y, z = x0 + dx, y0 + dy, z0 + dz
                if not in_bounds(x, y, z):
                    raise ValueError(f"primitive expansion out of bounds at ({x},{y},{z})")
                blocks.append(Block(x, y, z, code))
    return canonical_order(blocks)


def parse_prims(text: str, conv: AxisConvention = DATASET) -> list[PrimitiveSpec]:
    """Parse "; "-separated primitives "(start), (size), tag, color"."""
    prims = []
    for idx, chunk in enumerate(c for c in (s.strip() for s in text.split(";")) if c):
        m = re.fullmatch(
            r"\(([^()]*)\)\s*,\s*\(([^()]*)\)\s*,\s*([a-z]+)\s*,\s*([a-z]+)", chunk
        )
        if m is None:
            raise ParseError("primitive needs (start), (size), tag, color", idx, text.find(chunk))
        try:
            start = tuple(int(v.strip()) for v in m.group(1).split(","))
            size = tuple(int(v.strip()) for v in m.group(2).split(","))
        except ValueError:
            raise ParseError("non-integer field in primitive", idx, text.find(chunk)) from None
        if len(start) != 3 or len(size) != 3:
            raise ParseError("start and size need 3 fields each", idx, text.find(chunk))
        tag, color = m.group(3), m.group(4)
        if tag not in ROTATION_TAGS:
            raise ParseError(f"unknown rotation tag {tag!r}", idx, text.find(chunk))
        if color not in COLOR_CODES:
            raise ParseError(f"unknown color {color!r}", idx, text.find(chunk))
        prims.append(PrimitiveSpec(start, size, tag, color))
    return prims


def format_prims(prims: list[PrimitiveSpec]) -> str:
    parts = []
    for p in prims:
        a, b, c = p.start
        sa, sb, sc = p.size
        parts.append(f"({a}, {b}, {c}), ({sa}, {sb}, {sc}), {p.rotation}, {p.color}")
    return "; ".join(parts)


def blocks_to_prims(blocks: list[Block], conv: AxisConvention = DATASET) -> list[PrimitiveSpec]:
    """Greedy box decomposition; raises PrimEncodingError when a box's extent
    assignment has no rotation tag."""
    remaining = set(blocks)
    if len(remaining) != len(blocks):
        raise ValueError("duplicate blocks")
    prims = []
    for seed in canonical_order(blocks):
        if seed not in remaining:
            continue
        box = _grow_box(seed, remaining)
        (x0, y0, z0), (ex, ey, ez) = box
        for x in range(x0, x0 + ex):
            for y in range(y0, y0 + ey):
                for z in range(z0, z0 + ez):
                    remaining.discard(Block(x, y, z, seed.color))
        tag = _tag_for_extent(ex, ey, ez)
        if tag is None:
            raise PrimEncodingError(f"extent ({ex},{ey},{ez}) has no rotation tag")
        prims.append(
            PrimitiveSpec(
                conv.from_canonical(x0, y0, z0),
                tuple(sorted((ex, ey, ez))),
                tag,
                COLOR_NAMES[seed.color],
            )
        )
    return prims


def _grow_box(seed: Block, cells: set[Block]) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    """Largest same-color box anchored at seed, greedily grown x, then z, then y."""

    def filled(ex: int, ey: int, ez: int) -> bool:
        return all(
            Block(seed.x + dx, seed.y + dy, seed.z + dz, seed.color) in cells
            for dx in range(ex)
            for dy in range(ey)
            for dz in range(ez)
        )

    ex = ey = ez = 1
    while filled(ex + 1, ey, ez):
        ex += 1
    while filled(ex, ey, ez + 1):
        ez += 1
    while filled(ex, ey + 1, ez):
        ey += 1
    return (seed.x, seed.y, seed.z), (ex, ey, ez)


def _tag_for_extent(ex: int, ey: int, ez: int) -> str | None:
    for tag in _TAG_CANDIDATES:
        assigned = _assign_axes(tuple(sorted((ex, ey, ez), reverse=True)), tag)
        if (assigned["x"], assigned["y"], assigned["z"]) == (ex, ey, ez):
            return tag
    return None


class RecenterClamped(UserWarning):
    """Recentering shift was clamped to keep all blocks in bounds."""


def normalize_blocks(blocks: list[Block]) -> list[Block]:
    """Stable sort by (x, z, y), then shift horizontally so the first block
    lands at the grid center column (clamped to bounds when the figure is too
    wide; idempotent either way)."""
    ordered = canonical_order(blocks)
    if not ordered:
        return []
    first = ordered[0]
    xs = [b.x for b in ordered]
    zs = [b.z for b in ordered]
    dx = _clamp_shift(CENTER_X - first.x, min(xs), max(xs), X_SIZE)
    dz = _clamp_shift(CENTER_Z - first.z, min(zs), max(zs), Z_SIZE)
    if (dx, dz) != (CENTER_X - first.x, CENTER_Z - first.z):
        warnings.warn(
            f"recenter shift clamped to ({dx},{dz})", RecenterClamped, stacklevel=2
        )
    return [Block(b.x + dx, b.y, b.z + dz, b.color) for b in ordered]


def _clamp_shift(d: int, lo: int, hi: int, size: int) -> int:
    return max(-lo, min(d, size - 1 - hi))


def classify_figure(blocks: list[Block]) -> set[str]:
    """Multi-label {floor, flat, tall, air}. Height wins over footprint for
    tall; flat requires a grounded figure no taller than 2."""
    if not blocks:
        raise ValueError("cannot classify an empty figure")
    ys = [b.y for b in blocks]
    xs = [b.x for b in blocks]
    zs = [b.z for b in blocks]
    height = max(ys) - min(ys) + 1
    ext_x = max(xs) - min(xs) + 1
    ext_z = max(zs) - min(zs) + 1
    labels = set()
    if all(y == 0 for y in ys):
        labels.add("floor")
    if min(ys) > 0:
        labels.add("air")
    if height > max(ext_x, ext_z):
        labels.add("tall")
    if height <= min(ext_x, ext_z) and height <= 2 and min(ys) == 0:
        labels.add("flat")
    return labels


def rotate180_blocks(blocks: list[Block]) -> list[Block]:
    return [Block(X_SIZE - 1 - b.x, b.y, Z_SIZE - 1 - b.z, b.color) for b in blocks]


def complete_color_map(mapping: dict[int, int]) -> dict[int, int]:
    """Extend a partial injective color map to a full permutation of 1..6.
    Unmapped colors keep their code unless it is taken, in which case they
    fill the leftover codes in sorted order (so {RED: BLUE} swaps red/blue)."""
    colors = sorted(COLOR_NAMES)
    if not set(mapping) <= set(colors) or not set(mapping.values()) <= set(colors):
        raise ValueError("color map uses codes outside 1..6")
    if len(set(mapping.values())) != len(mapping):
        raise ValueError("color map is not injective")
    completed = dict(mapping)
    taken = set(completed.values())
    collided = []
    for c in colors:
        if c in completed:
            continue
        if c in taken:
            collided.append(c)
        else:
            completed[c] = c
            taken.add(c)
    leftovers = sorted(set(colors) - taken)
    for c, t in zip(collided, leftovers):
        completed[c] = t
    if sorted(completed.values()) != colors:
        raise ValueError("color map cannot be completed to a permutation")
    return completed


def recolor_blocks(blocks: list[Block], mapping: dict[int, int]) -> list[Block]:
    perm = complete_color_map(mapping)
    return [Block(b.x, b.y, b.z, perm.get(b.color, b.color)) for b in blocks]
