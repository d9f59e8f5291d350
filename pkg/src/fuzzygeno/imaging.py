"""Image ingestion and the 32x32 frame.

Images inside the package are float64 arrays with ink = 1 and background = 0.
Raw images are 2-D ``uint8`` arrays (rows x cols), as read from PGM or IDX.
"""
from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FRAME = 32
IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class DataError(ValueError):
    """Unreadable, malformed or degenerate input data."""


@dataclass(frozen=True, order=True)
class Rect:
    """Inclusive rectangle of frame coordinates (rows top..bottom, cols left..right)."""

    top: int
    left: int
    bottom: int
    right: int

    def __post_init__(self):
        for v in (self.top, self.left, self.bottom, self.right):
            if not isinstance(v, (int, np.integer)):
                raise ValueError(f"rect coordinates must be integers, got {v!r}")
        if not (0 <= self.top <= self.bottom < FRAME and 0 <= self.left <= self.right < FRAME):
            raise ValueError(f"rect outside the {FRAME}x{FRAME} frame: {self}")

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.top, self.left, self.bottom, self.right)

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.as_tuple())

    @classmethod
    def parse(cls, text: str) -> "Rect":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected top,left,bottom,right; got {text!r}")
        return cls(*(int(p) for p in parts))


FULL_FRAME = Rect(0, 0, FRAME - 1, FRAME - 1)


@dataclass
class LabeledSet:
    """Normalized images with integer class labels.

    ``images`` has shape (n, 32, 32); ``labels`` has shape (n,).
    """

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3 or self.images.shape[1:] != (FRAME, FRAME):
            raise ValueError(f"images must have shape (n, {FRAME}, {FRAME}), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError("image/label count mismatch")
        if len(self.labels) == 0:
            raise DataError("empty dataset")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unique(self.labels))

    def subset(self, classes: Iterable[int]) -> "LabeledSet":
        mask = np.isin(self.labels, list(classes))
        return LabeledSet(self.images[mask], self.labels[mask])

    def items(self):
        for img, lab in zip(self.images, self.labels):
            yield img, int(lab)


@dataclass(frozen=True)
class LoaderOptions:
    invert: bool = False
    idx: bool = False
    idx_images: str = "images.idx"
    idx_labels: str = "labels.idx"


# ---------------------------------------------------------------- PGM / IDX

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode a P2 or P5 greymap (maxval <= 255) into a uint8 array."""
    pos = 0
    tokens = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise DataError("malformed PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise DataError(f"malformed PGM header: bad magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataError("malformed PGM header") from None
    if width < 1 or height < 1 or not 1 <= maxval <= 255:
        raise DataError(f"malformed PGM header: {width}x{height} maxval {maxval}")
    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = data[pos + 1:pos + 1 + n]
        if len(raster) != n:
            raise DataError("truncated PGM raster")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        text = re.sub(rb"#[^\n]*", b"", data[pos:])
        try:
            values = np.array([int(t) for t in text.split()[:n]], dtype=np.int64)
        except ValueError:
            raise DataError("malformed PGM raster") from None
        if len(values) != n:
            raise DataError("truncated PGM raster")
    if values.max(initial=0) > maxval:
        raise DataError("PGM sample exceeds maxval")
    if maxval != 255:
        values = np.rint(values * 255.0 / maxval)
    return values.astype(np.uint8).reshape(height, width)


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_pgm(data)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def encode_pgm(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def write_pgm(path: str | os.PathLike, pixels: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(pixels))


def to_bytes(img: np.ndarray) -> np.ndarray:
    """Map [0,1] intensities to 0..255 bytes."""
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def _read_idx(path: Path, magic: int) -> tuple[tuple[int, ...], bytes]:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if len(data) < 8:
        raise DataError(f"{path}: truncated IDX header")
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise DataError(f"{path}: IDX magic mismatch (0x{found:08x}, expected 0x{magic:08x})")
    ndim = magic & 0xFF
    dims = struct.unpack(f">{ndim}I", data[4:4 + 4 * ndim])
    body = data[4 + 4 * ndim:]
    if len(body) != int(np.prod(dims)):
        raise DataError(f"{path}: IDX payload size does not match header")
    return dims, body


def read_idx_pair(images_path, labels_path) -> tuple[list[np.ndarray], np.ndarray]:
    (count, rows, cols), body = _read_idx(Path(images_path), IDX_IMAGE_MAGIC)
    (nlab,), lab_body = _read_idx(Path(labels_path), IDX_LABEL_MAGIC)
    if count != nlab:
        raise DataError(f"IDX image/label count mismatch ({count} vs {nlab})")
    raster = np.frombuffer(body, dtype=np.uint8).reshape(count, rows, cols)
    return list(raster), np.frombuffer(lab_body, dtype=np.uint8).astype(np.int64)


def encode_idx_images(images: Sequence[np.ndarray]) -> bytes:
    arr = np.asarray(images, dtype=np.uint8)
    return struct.pack(">IIII", IDX_IMAGE_MAGIC, *arr.shape) + arr.tobytes()


def encode_idx_labels(labels: Sequence[int]) -> bytes:
    arr = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", IDX_LABEL_MAGIC, len(arr)) + arr.tobytes()


# ------------------------------------------------------------ normalization

def _bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    # corner-aligned sampling: an out_h x out_w input maps onto itself exactly
    h, w = img.shape
    ys = np.arange(out_h) * ((h - 1) / (out_h - 1)) if h > 1 else np.zeros(out_h)
    xs = np.arange(out_w) * ((w - 1) / (out_w - 1)) if w > 1 else np.zeros(out_w)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - fx) + img[np.ix_(y0, x1)] * fx
    bot = img[np.ix_(y1, x0)] * (1 - fx) + img[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def normalize(raw: np.ndarray, invert: bool = False) -> np.ndarray:
    """Crop a raw greymap to its ink bounding box and resample it to 32x32.

    Ink is every pixel >= 128 after the optional inversion. The output keeps
    grey levels, scaled to [0, 1].
    """
    raw = np.asarray(raw)
    if raw.ndim != 2 or raw.size == 0:
        raise DataError("raw image must be a non-empty 2-D array")
    values = raw.astype(np.float64)
    if invert:
        values = 255.0 - values
    rows, cols = np.nonzero(values >= 128)
    if len(rows) == 0:
        raise DataError("blank sample")
    box = values[rows.min():rows.max() + 1, cols.min():cols.max() + 1] / 255.0
    return np.clip(_bilinear(box, FRAME, FRAME), 0.0, 1.0)


def overlap_image(samples: Sequence[np.ndarray]) -> np.ndarray:
    """Pixel-wise mean of the samples, contrast-stretched onto [0, 1].

    A constant mean is returned as is.
    """
    if len(samples) == 0:
        raise ValueError("overlap of an empty sample sequence")
    mean = np.mean(np.asarray(samples, dtype=np.float64), axis=0)
    lo, hi = mean.min(), mean.max()
    if hi == lo:
        return mean
    return (mean - lo) / (hi - lo)


def class_overlaps(data: LabeledSet, classes: Iterable[int] | None = None) -> dict[int, np.ndarray]:
    wanted = data.classes if classes is None else classes
    return {c: overlap_image(data.images[data.labels == c]) for c in wanted}


def crop(img: np.ndarray, region: Rect) -> np.ndarray:
    return img[..., region.top:region.bottom + 1, region.left:region.right + 1]


# ------------------------------------------------------------------ dataset

def _load_pgm_tree(root: Path, invert: bool) -> LabeledSet:
    class_dirs = []
    for entry in sorted(root.iterdir()):
        if not entry.is_dir():
            continue
        if not re.fullmatch(r"\d+", entry.name):
            raise DataError(f"class directory name is not a decimal label: {entry.name}")
        class_dirs.append(entry)
    if not class_dirs:
        raise DataError(f"no class directories under {root}")
    files = []
    for d in class_dirs:
        pgms = [p for p in d.iterdir() if p.is_file() and p.suffix.lower() == ".pgm"]
        if not pgms:
            raise DataError(f"empty class: {d.name}")
        files.extend((p, int(d.name)) for p in pgms)
    files.sort(key=lambda item: str(item[0].relative_to(root)))
    images, labels = [], []
    for path, label in files:
        try:
            images.append(normalize(read_pgm(path), invert))
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None
        labels.append(label)
    return LabeledSet(np.stack(images), np.array(labels))


def load_dataset(path: str | os.PathLike, options: LoaderOptions = LoaderOptions()) -> LabeledSet:
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")
    if not options.idx:
        return _load_pgm_tree(root, options.invert)
    raws, labels = read_idx_pair(root / options.idx_images, root / options.idx_labels)
    if not raws:
        raise DataError("empty IDX dataset")
    images = []
    for i, raw in enumerate(raws):
        try:
            images.append(normalize(raw, options.invert))
        except DataError as exc:
            raise DataError(f"IDX record {i}: {exc}") from None
    return LabeledSet(np.stack(images), labels)
