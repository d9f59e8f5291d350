"""Two-part cut chromosomes and fuzzy zoning features.

A chromosome holds one strictly increasing list of row cuts and one of column
cuts over a rectangle of the frame. Consecutive cuts bound a strip; the
boundary between two strips is softened by a linear ramp, so pixels near a
cut belong partly to both neighbours.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imaging import FULL_FRAME, Rect, crop

DEFAULT_CUT_BOUNDS = (3, 12)


@dataclass(frozen=True)
class FuzzyParams:
    ramp: int = 2  # ramp half-width in pixels

    def __post_init__(self):
        if int(self.ramp) != self.ramp or self.ramp < 0:
            raise ValueError(f"ramp half-width must be a non-negative integer, got {self.ramp!r}")


@dataclass(frozen=True)
class Chromosome:
    h_cuts: tuple[int, ...]
    v_cuts: tuple[int, ...]
    region: Rect = FULL_FRAME

    def __post_init__(self):
        object.__setattr__(self, "h_cuts", tuple(int(c) for c in self.h_cuts))
        object.__setattr__(self, "v_cuts", tuple(int(c) for c in self.v_cuts))

    def parts(self):
        """(cuts, lo, hi) for the row part and the column part."""
        r = self.region
        return ((self.h_cuts, r.top, r.bottom), (self.v_cuts, r.left, r.right))

    def with_parts(self, h_cuts, v_cuts) -> "Chromosome":
        return Chromosome(tuple(h_cuts), tuple(v_cuts), self.region)

    def __str__(self) -> str:
        text = ",".join(map(str, self.h_cuts)) + " | " + ",".join(map(str, self.v_cuts))
        if self.region != FULL_FRAME:
            text += f" @ {self.region}"
        return text

    @classmethod
    def parse(cls, text: str) -> "Chromosome":
        body, _, suffix = text.partition("@")
        region = Rect.parse(suffix) if suffix.strip() else FULL_FRAME
        left, sep, right = body.partition("|")
        if not sep:
            raise ValueError(f"chromosome text needs a '|' between the parts: {text!r}")
        try:
            h = tuple(int(t) for t in left.split(","))
            v = tuple(int(t) for t in right.split(","))
        except ValueError:
            raise ValueError(f"malformed chromosome text: {text!r}") from None
        return cls(h, v, region)


def feature_dim(ch: Chromosome) -> int:
    return (len(ch.h_cuts) - 1) * (len(ch.v_cuts) - 1)


def validate(ch: Chromosome, bounds: tuple[int, int] | None = DEFAULT_CUT_BOUNDS) -> list[str]:
    """Every violated chromosome invariant; an empty list means valid.

    ``bounds=None`` skips the cut-count check (only structure is checked).
    """
    problems = []
    for name, (cuts, lo, hi) in zip(("h_cuts", "v_cuts"), ch.parts()):
        if len(cuts) < 2:
            problems.append(f"{name}: fewer than two cuts")
            continue
        if bounds is not None:
            if len(cuts) < bounds[0]:
                problems.append(f"{name}: too few cuts ({len(cuts)} < {bounds[0]})")
            if len(cuts) > bounds[1]:
                problems.append(f"{name}: too many cuts ({len(cuts)} > {bounds[1]})")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            problems.append(f"{name}: not strictly increasing")
        if cuts[0] != lo:
            problems.append(f"{name}: first cut {cuts[0]} != region start {lo}")
        if cuts[-1] != hi:
            problems.append(f"{name}: last cut {cuts[-1]} != region end {hi}")
        if any(c < lo or c > hi for c in cuts):
            problems.append(f"{name}: cut outside region [{lo}, {hi}]")
    return problems


def axis_bounds(lo: int, hi: int, bounds: tuple[int, int]) -> tuple[int, int]:
    """Cut-count bounds clipped to what a span [lo, hi] can hold."""
    return bounds[0], min(bounds[1], hi - lo + 1)


def _random_cuts(lo, hi, bounds, rng) -> tuple[int, ...]:
    lo_n, hi_n = axis_bounds(lo, hi, bounds)
    if lo_n > hi_n or hi <= lo:
        raise ValueError(f"span [{lo}, {hi}] too small for {bounds[0]} cuts")
    n = int(rng.integers(lo_n, hi_n + 1))
    inner = rng.choice(np.arange(lo + 1, hi), size=n - 2, replace=False) if n > 2 else []
    return (lo, *sorted(int(c) for c in inner), hi)


def random_chromosome(region: Rect, bounds: tuple[int, int], rng: np.random.Generator) -> Chromosome:
    h = _random_cuts(region.top, region.bottom, bounds, rng)
    v = _random_cuts(region.left, region.right, bounds, rng)
    return Chromosome(h, v, region)


def _left_share(b: int, e: int, coords: np.ndarray) -> np.ndarray:
    """Membership of the strip left of boundary ``b`` (ramp half-width ``e``)."""
    if e == 0:
        return (coords < b).astype(np.float64)
    return np.clip((b + e - coords) / (2.0 * e), 0.0, 1.0)


@lru_cache(maxsize=4096)
def _membership_matrix(cuts: tuple[int, ...], ramp: int) -> np.ndarray:
    coords = np.arange(cuts[0], cuts[-1] + 1, dtype=np.float64)
    n_strips = len(cuts) - 1
    # share[j] = membership left of cut j; the outer cuts are hard walls
    share = np.empty((len(cuts), len(coords)))
    share[0] = 0.0
    share[-1] = 1.0
    for j in range(1, n_strips):
        e = min(ramp, (cuts[j] - cuts[j - 1]) // 2, (cuts[j + 1] - cuts[j]) // 2)
        share[j] = _left_share(cuts[j], e, coords)
    # ramps never overlap, so strip j = (right of cut j) and (left of cut j+1)
    m = (1.0 - share[:-1]) * share[1:]
    m.setflags(write=False)
    return m


def membership_matrix(cuts, ramp: int) -> np.ndarray:
    """Strip memberships, shape (strips, span); column i is coordinate cuts[0] + i."""
    return _membership_matrix(tuple(int(c) for c in cuts), int(ramp))


def strip_membership(cuts, ramp: int, coord: int) -> np.ndarray:
    cuts = tuple(int(c) for c in cuts)
    if not cuts[0] <= coord <= cuts[-1]:
        raise ValueError(f"coordinate {coord} outside the cut span [{cuts[0]}, {cuts[-1]}]")
    return membership_matrix(cuts, ramp)[:, coord - cuts[0]].copy()


def extract_batch(images: np.ndarray, ch: Chromosome, fp: FuzzyParams, cropped: bool = False) -> np.ndarray:
    """Features of a stack of frames, shape (n, feature_dim).

    With ``cropped=True`` the images are already cut down to ``ch.region``.
    """
    mh = membership_matrix(ch.h_cuts, fp.ramp)
    mv = membership_matrix(ch.v_cuts, fp.ramp)
    window = images if cropped else crop(images, ch.region)
    num = mh @ window @ mv.T
    den = np.outer(mh.sum(axis=1), mv.sum(axis=1))
    return np.clip(num / den, 0.0, 1.0).reshape(len(window), -1)


def extract_features(img: np.ndarray, ch: Chromosome, fp: FuzzyParams) -> np.ndarray:
    problems = validate(ch, bounds=None)
    if problems:
        raise ValueError("invalid chromosome: " + "; ".join(problems))
    return extract_batch(np.asarray(img, dtype=np.float64)[None], ch, fp)[0]
