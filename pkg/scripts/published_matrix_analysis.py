"""Accuracies, pair weights and groups implied by the published confusion counts.

    python3 scripts/published_matrix_analysis.py [--threshold 7]
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from fuzzygeno.classifier import ConfusionMatrix, accuracy
from fuzzygeno.grouping import form_groups, pair_weights, published_regions, ungrouped

DIGITS = tuple(range(10))

# rows = true digit, columns = predicted digit, 50 samples per digit
COARSE = [
    [49, 0, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 46, 0, 0, 1, 0, 0, 1, 2, 0],
    [0, 2, 46, 0, 2, 0, 0, 0, 0, 0],
    [1, 0, 0, 37, 0, 3, 6, 2, 1, 0],
    [0, 0, 0, 0, 48, 0, 0, 0, 1, 1],
    [9, 0, 1, 0, 0, 39, 0, 0, 1, 0],
    [0, 0, 0, 14, 0, 2, 33, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, 49, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 50, 0],
    [1, 7, 0, 1, 3, 0, 0, 3, 1, 34],
]
TWO_PASS = [
    [50, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 44, 0, 0, 1, 0, 0, 1, 2, 2],
    [0, 2, 46, 0, 2, 0, 0, 0, 0, 0],
    [1, 0, 0, 40, 0, 3, 3, 2, 1, 0],
    [0, 0, 0, 0, 48, 0, 0, 0, 1, 1],
    [4, 0, 1, 0, 0, 44, 0, 0, 1, 0],
    [0, 0, 0, 5, 0, 2, 42, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, 49, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 50, 0],
    [1, 2, 0, 1, 3, 0, 0, 3, 1, 39],
]


@dataclass
class AnalysisConfig:
    threshold: int = 7
    scan: tuple[int, int] = (1, 21)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--threshold", type=int, default=AnalysisConfig.threshold)
    cfg = AnalysisConfig(threshold=parser.parse_args().threshold)

    coarse = ConfusionMatrix(DIGITS, np.array(COARSE))
    final = ConfusionMatrix(DIGITS, np.array(TWO_PASS))
    for name, cm in (("coarse", coarse), ("two-pass", final)):
        acc = accuracy(cm)
        print(f"{name} accuracy: {int(np.trace(cm.counts))}/{cm.total} = {float(acc):.3f}")

    weights = sorted(((w, p) for p, w in pair_weights(coarse).items() if w), reverse=True)
    print("\npair weights (coarse, symmetrised):")
    for w, (a, b) in weights:
        print(f"  {a},{b}\t{w}")

    groups = form_groups(coarse, cfg.threshold)
    print(f"\ngroups at threshold {cfg.threshold}: {groups}; ungrouped {ungrouped(DIGITS, groups)}")
    print("threshold scan:")
    for tau in range(*cfg.scan):
        print(f"  {tau}\t{form_groups(coarse, tau)}")

    print("\nper-digit change, two-pass minus coarse (diagonal):")
    diff = np.diag(final.counts) - np.diag(coarse.counts)
    print("  " + " ".join(f"{d}:{v:+d}" for d, v in zip(DIGITS, diff)))
    print("\npublished regions (top,left,bottom,right):")
    for members, rect in published_regions().items():
        print(f"  {','.join(map(str, sorted(members)))}\t{rect}\t{rect.height}x{rect.width}")


if __name__ == "__main__":
    main()
