"""Canonical voxel frame shared by the builder environment and the language tools.

Axes: x grows east, y grows up, z grows south. The build volume is 11 x 9 x 11
(x in 0..10, y in 0..8, z in 0..10) with the horizontal center at (5, 5).
Color codes 1..6 are real blocks; 0 marks air / removal.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

import numpy as np

X_SIZE = 11
Y_SIZE = 9
Z_SIZE = 11
CENTER_X = 5
CENTER_Z = 5

AIR = 0
BLUE = 1
GREEN = 2
RED = 3
ORANGE = 4
PURPLE = 5
YELLOW = 6

COLOR_NAMES = {
    BLUE: "blue",
    GREEN: "green",
    RED: "red",
    ORANGE: "orange",
    PURPLE: "purple",
    YELLOW: "yellow",
}
COLOR_CODES = {name: code for code, name in COLOR_NAMES.items()}


class Block(NamedTuple):
    x: int
    y: int
    z: int
    color: int


def in_bounds(x: int, y: int, z: int) -> bool:
    return 0 <= x < X_SIZE and 0 <= y < Y_SIZE and 0 <= z < Z_SIZE


def canonical_order(blocks: Iterable[Block]) -> list[Block]:
    """Stable sort by (x, z, y); ties keep input order."""
    return sorted(blocks, key=lambda b: (b.x, b.z, b.y))


def blocks_to_grid(blocks: Iterable[Block]) -> np.ndarray:
    """Dense int8 occupancy grid indexed [x, y, z]; later blocks overwrite."""
    grid = np.zeros((X_SIZE, Y_SIZE, Z_SIZE), dtype=np.int8)
    for b in blocks:
        if not in_bounds(b.x, b.y, b.z):
            raise ValueError(f"block out of bounds: {b}")
        grid[b.x, b.y, b.z] = b.color
    return grid


def grid_to_blocks(grid: np.ndarray) -> list[Block]:
    xs, ys, zs = np.nonzero(grid)
    blocks = [Block(int(x), int(y), int(z), int(grid[x, y, z])) for x, y, z in zip(xs, ys, zs)]
    return canonical_order(blocks)


def chebyshev(a: tuple[int, int, int], b: tuple[int, int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2]))
