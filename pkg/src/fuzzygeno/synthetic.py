"""Constructed datasets with known structure, for tests and experiments."""
from __future__ import annotations

import numpy as np

from .imaging import FRAME, LabeledSet, Rect

# Confusable pair: blank outside CONFUSION_RECT; inside, a checkerboard of one
# parity for one class and the other parity for the other. Only cells about one
# pixel wide over the region see the difference.
CONFUSABLE_PAIR = (3, 6)
CONFUSION_RECT = Rect(12, 12, 19, 19)
# Each other class is one faint full-height vertical line, away from the region.
# Under noise, narrow strips on these lines keep paying off, so a full-frame
# partition has a use for every cut it could otherwise spend on the region.
LINE_COLUMNS = (0, 2, 4, 6, 24, 26, 28, 30)


def checkerboard(rect: Rect, parity: int) -> np.ndarray:
    img = np.zeros((FRAME, FRAME))
    rows, cols = np.mgrid[rect.top:rect.bottom + 1, rect.left:rect.right + 1]
    img[rows, cols] = ((rows + cols) % 2 == parity).astype(float)
    return img


def class_templates(contrast: float = 0.4, line_level: float = 0.4) -> dict[int, np.ndarray]:
    a, b = CONFUSABLE_PAIR
    out = {a: contrast * checkerboard(CONFUSION_RECT, 0), b: contrast * checkerboard(CONFUSION_RECT, 1)}
    others = [c for c in range(10) if c not in CONFUSABLE_PAIR]
    for c, col in zip(others, LINE_COLUMNS):
        img = np.zeros((FRAME, FRAME))
        img[:, col] = line_level
        out[c] = img
    return out


def _noisy(templates: dict[int, np.ndarray], per_class: int, noise: float, seed: int) -> LabeledSet:
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for c in sorted(templates):
        for _ in range(per_class):
            img = templates[c] + rng.normal(0.0, noise, (FRAME, FRAME)) if noise else templates[c].copy()
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(c)
    return LabeledSet(np.stack(images), np.array(labels))


def confusable_set(per_class: int = 50, noise: float = 0.5, contrast: float = 0.4,
                   line_level: float = 0.4, seed: int = 0) -> LabeledSet:
    """Ten classes; two differ only inside ``CONFUSION_RECT``, by a checkerboard of the
    given contrast. Gaussian pixel noise, clipped to [0, 1]."""
    return _noisy(class_templates(contrast, line_level), per_class, noise, seed)


def halves_set(per_class: int = 5, noise: float = 0.0, seed: int = 0) -> LabeledSet:
    """Class 0 inks the top half of the frame, class 1 the bottom half."""
    top = np.zeros((FRAME, FRAME))
    top[:FRAME // 2] = 1.0
    return _noisy({0: top, 1: 1.0 - top}, per_class, noise, seed)


def block_set(per_class: int = 10, noise: float = 0.05, seed: int = 0) -> LabeledSet:
    """Ten classes, each inking a different 8x8 block of a 4x4 block grid."""
    templates = {}
    for c in range(10):
        img = np.zeros((FRAME, FRAME))
        r, q = divmod(c, 4)
        img[8 * r:8 * r + 8, 8 * q:8 * q + 8] = 1.0
        templates[c] = img
    return _noisy(templates, per_class, noise, seed)
