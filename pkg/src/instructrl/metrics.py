"""Evaluation metrics: structure F1 for builds and Success Rate for
achievement plans, plus per-figure-class and per-subtask breakdowns.

A built block matches a target block only when cell and color both agree. With
translation invariance the built set is slid over every horizontal offset that
keeps it inside the grid and the best match count wins; since
f1 = 2m/(|built|+|target|), maximizing matches maximizes f1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blocks import X_SIZE, Z_SIZE


@dataclass(frozen=True)
class F1Report:
    precision: float
    recall: float
    f1: float
    best_offset: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class SuccessReport:
    total: float
    per_subtask: dict
    n: int


def _as_cells(blocks, label: str) -> set:
    cells = [(b.x, b.y, b.z) for b in blocks]
    if len(set(cells)) != len(cells):
        raise ValueError(f"{label} blocks contain duplicate cells")
    return {(b.x, b.y, b.z, b.color) for b in blocks}


def f1_score(built, target, translation_invariant: bool = True) -> F1Report:
    built_set = _as_cells(built, "built")
    target_set = _as_cells(target, "target")
    if not target_set:
        raise ValueError("target is empty; recall is undefined")
    if not built_set:
        return F1Report(0.0, 0.0, 0.0, (0, 0))

    if translation_invariant:
        # every offset where the horizontal bounding boxes overlap; a narrower
        # "stay in bounds" window would make the score direction-dependent
        bx = [b.x for b in built]
        bz = [b.z for b in built]
        tx = [b.x for b in target]
        tz = [b.z for b in target]
        dxs = range(min(tx) - max(bx), max(tx) - min(bx) + 1)
        dzs = range(min(tz) - max(bz), max(tz) - min(bz) + 1)
    else:
        dxs = dzs = (0,)

    best, best_offset = 0, (0, 0)
    for dx in dxs:
        for dz in dzs:
            m = sum((x + dx, y, z + dz, c) in target_set for x, y, z, c in built_set)
            if m > best:
                best, best_offset = m, (dx, dz)
    precision = best / len(built_set)
    recall = best / len(target_set)
    f1 = 2 * best / (len(built_set) + len(target_set)) if best else 0.0
    return F1Report(precision, recall, f1, best_offset)


def success_report(episodes) -> SuccessReport:
    """Per-instruction all-or-nothing success plus per-subtask fractions.

    Each episode row names its plan's subtask labels and either a completed
    prefix length ("completed") or an explicit label list
    ("completed_subtasks"). A label counts as done for an instruction only if
    every occurrence of it was completed.
    """
    if not episodes:
        return SuccessReport(0.0, {}, 0)
    total = 0
    required: dict = {}
    done: dict = {}
    for ep in episodes:
        labels = list(ep["subtasks"])
        if "completed_subtasks" in ep:
            completed = list(ep["completed_subtasks"])
        else:
            completed = labels[: ep["completed"]]
        total += int(len(completed) == len(labels))
        for label in set(labels):
            required[label] = required.get(label, 0) + 1
            if completed.count(label) >= labels.count(label):
                done[label] = done.get(label, 0) + 1
    per = {label: done.get(label, 0) / n for label, n in sorted(required.items())}
    return SuccessReport(total / len(episodes), per, len(episodes))


def class_breakdown(results) -> dict:
    """Mean score per figure class; multi-label rows count in each class."""
    sums: dict = {}
    counts: dict = {}
    for row in results:
        for cls in row["classes"]:
            sums[cls] = sums.get(cls, 0.0) + row["f1"]
            counts[cls] = counts.get(cls, 0) + 1
    return {cls: sums[cls] / counts[cls] for cls in sorted(counts)}
