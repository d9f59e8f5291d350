"""Groups of mutually confused classes and the frame regions where they differ."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classifier import ConfusionMatrix
from .imaging import FRAME, Rect


class NoConfusionRegion(ValueError):
    pass


@dataclass(frozen=True)
class GroupingConfig:
    pair_threshold: int = 7
    region_threshold: float = 0.5
    region_overrides: Mapping[frozenset, Rect] = field(default_factory=dict)

    def __post_init__(self):
        if self.pair_threshold < 1:
            raise ValueError("pair_threshold must be >= 1")
        if not 0.0 < self.region_threshold <= 1.0:
            raise ValueError("region_threshold must lie in (0, 1]")

    def override_for(self, members) -> Rect | None:
        return self.region_overrides.get(frozenset(members))


@dataclass(frozen=True)
class GroupSpec:
    members: tuple[int, ...]
    region: Rect

    def __post_init__(self):
        members = tuple(sorted(int(m) for m in self.members))
        if len(set(members)) != len(members) or len(members) < 2:
            raise ValueError(f"a group needs at least two distinct members, got {self.members}")
        object.__setattr__(self, "members", members)

    def to_line(self) -> str:
        return f"members={','.join(map(str, self.members))}; region={self.region}"


def pair_weights(cm: ConfusionMatrix) -> dict[tuple[int, int], int]:
    """Symmetrised off-diagonal counts for every unordered label pair."""
    c = cm.counts
    return {(cm.labels[i], cm.labels[j]): int(c[i, j] + c[j, i])
            for i, j in itertools.combinations(range(len(cm.labels)), 2)}


def form_groups(cm: ConfusionMatrix, pair_threshold: int) -> list[tuple[int, ...]]:
    """Connected components (size >= 2) of the graph of pairs confused >= threshold times.

    Components are returned sorted, each by its smallest member.
    """
    parent = {c: c for c in cm.labels}

    def root(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    for (a, b), w in pair_weights(cm).items():
        if w >= pair_threshold:
            ra, rb = root(a), root(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    comps: dict[int, list[int]] = {}
    for c in cm.labels:
        comps.setdefault(root(c), []).append(c)
    return sorted(tuple(sorted(m)) for m in comps.values() if len(m) >= 2)


def ungrouped(labels: Sequence[int], groups: Sequence[Sequence[int]]) -> tuple[int, ...]:
    grouped = {m for g in groups for m in g}
    return tuple(c for c in labels if c not in grouped)


def disagreement_map(overlaps: Sequence[np.ndarray]) -> np.ndarray:
    if len(overlaps) < 2:
        raise ValueError("need at least two overlap images")
    stack = np.asarray(overlaps, dtype=np.float64)
    if stack.shape[1:] != (FRAME, FRAME):
        raise ValueError(f"overlap images must be {FRAME}x{FRAME}")
    return stack.max(axis=0) - stack.min(axis=0)


def confusion_region(overlaps: Sequence[np.ndarray], threshold: float = 0.5,
                     override: Rect | None = None) -> Rect:
    """Bounding box of the pixels where some pair of member overlaps differs by >= threshold."""
    if override is not None:
        return override
    # max over pairs of |Oi - Oj| is the per-pixel range
    rows, cols = np.nonzero(disagreement_map(overlaps) >= threshold)
    if len(rows) == 0:
        raise NoConfusionRegion("no confusion region")
    return Rect(int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max()))


def grow_region(region: Rect, min_span: int) -> Rect:
    """Widen a rectangle symmetrically (inside the frame) until each side spans min_span pixels."""
    def widen(lo, hi):
        while hi - lo + 1 < min_span:
            if lo > 0:
                lo -= 1
            if hi - lo + 1 < min_span and hi < FRAME - 1:
                hi += 1
        return lo, hi

    top, bottom = widen(region.top, region.bottom)
    left, right = widen(region.left, region.right)
    return Rect(top, left, bottom, right)


def published_regions() -> dict[frozenset, Rect]:
    """Confusion regions reported for the handwritten Bangla digit pairs.

    The published corner pairs are read as (row, column).
    """
    return {
        frozenset({3, 6}): Rect(0, 18, 24, 31),
        frozenset({0, 5}): Rect(0, 15, 31, 31),
        frozenset({1, 9}): Rect(12, 0, 31, 31),
    }


def parse_groups_file(text: str) -> list[tuple[tuple[int, ...], Rect | None]]:
    """Parse ``members=a,b,...; region=top,left,bottom,right`` lines.

    The region field may be omitted; blank lines and ``#`` comments are skipped.
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = {}
        for chunk in line.split(";"):
            key, sep, value = chunk.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key=value, got {chunk.strip()!r}")
            fields[key.strip()] = value.strip()
        if "members" not in fields or set(fields) - {"members", "region"}:
            raise ValueError(f"line {lineno}: expected members=...; region=...")
        try:
            members = tuple(sorted(int(t) for t in fields["members"].split(",")))
            region = Rect.parse(fields["region"]) if "region" in fields else None
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if len(set(members)) < 2:
            raise ValueError(f"line {lineno}: a group needs at least two members")
        out.append((members, region))
    seen: set[int] = set()
    for members, _ in out:
        if seen & set(members):
            raise ValueError(f"overlapping groups: {sorted(seen & set(members))}")
        seen |= set(members)
    return out


def format_groups_file(groups: Sequence[GroupSpec]) -> str:
    return "".join(g.to_line() + "\n" for g in groups)
