from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from fuzzygeno.classifier import ConfusionMatrix
from fuzzygeno.imaging import LabeledSet, to_bytes, write_pgm

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

DIGITS = tuple(range(10))

# Published confusion counts for 500 handwritten Bangla digits (50 per class),
# rows = true class, columns = predicted class.
COARSE_COUNTS = np.array([
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
])

TWO_PASS_COUNTS = np.array([
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
])

# Published two-pass chromosome used to illustrate a partition.
PUBLISHED_CHROMOSOME_TEXT = "0,7,9,13,21,23,31 | 0,11,19,24,31"


@pytest.fixture
def coarse_cm():
    return ConfusionMatrix(DIGITS, COARSE_COUNTS.copy())


@pytest.fixture
def two_pass_cm():
    return ConfusionMatrix(DIGITS, TWO_PASS_COUNTS.copy())


def with_corner_marks(img: np.ndarray) -> np.ndarray:
    """Ink the four corners so normalisation keeps the full frame unchanged."""
    img = np.array(img, dtype=np.float64)
    img[0, 0] = img[0, -1] = img[-1, 0] = img[-1, -1] = 1.0
    return img


def write_pgm_tree(data: LabeledSet, root: Path) -> LabeledSet:
    """Write ``data`` as class directories of PGM files; return what loading should give back."""
    images = []
    for i, (img, lab) in enumerate(data.items()):
        d = root / str(lab)
        d.mkdir(parents=True, exist_ok=True)
        raw = to_bytes(with_corner_marks(img))
        write_pgm(d / f"s{i:04d}.pgm", raw)
        images.append(raw / 255.0)
    return LabeledSet(np.stack(images), data.labels)


# ------------------------------------------------- acceptance summary lines

_ACCEPTANCE: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    entry = _ACCEPTANCE.setdefault(number, [title, True])
    entry[1] = entry[1] and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
