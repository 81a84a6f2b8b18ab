"""Page images: PGM decode/encode and the deterministic grid-mean featurizer.

The featurizer stands in for a frozen pretrained feature extractor: it
partitions a page into a 32x32 grid (cell boundaries at ``floor(k*H/32)`` /
``floor(k*W/32)``) and emits the mean intensity of each cell scaled to [0, 1],
row-major, always 1024 values. A trainable linear head sits on top of it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ._base import ParamsMixin

GRID = 32
FEATURE_DIM = GRID * GRID
FEATURIZER_VERSION = "grid-mean-32x32/1"


class PgmError(ValueError):
    """Base class for PGM decode failures."""


class PgmFormatError(PgmError):
    """Malformed or unsupported header."""


class PgmTruncatedError(PgmError):
    """Payload shorter than the header promises."""


@dataclass(frozen=True)
class PageImage:
    """Grayscale page: row-major intensities in [0, 255], shape (height, width)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                f"pixel buffer shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}"
            )


def decode_pgm(data: bytes) -> PageImage:
    """Decode a binary (P5) or ASCII (P2) PGM with maxval <= 255.

    Header comments (``#`` to end of line) are honored. Unsupported magic
    numbers, malformed headers, out-of-range samples, and short payloads all
    raise explicit errors.
    """
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmFormatError(f"unsupported PGM magic {magic!r} (want P2 or P5)")
    fields, offset = _header_fields(data)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PgmFormatError(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmFormatError(f"unsupported maxval {maxval} (want 1..255)")
    count = width * height
    if magic == b"P5":
        payload = data[offset : offset + count]
        if len(payload) < count:
            raise PgmTruncatedError(
                f"expected {count} pixel bytes, found {len(payload)}"
            )
        values = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    else:
        tokens = _strip_comments(data[offset:]).split()
        if len(tokens) < count:
            raise PgmTruncatedError(
                f"expected {count} pixel samples, found {len(tokens)}"
            )
        try:
            values = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
        except ValueError as exc:
            raise PgmFormatError(f"non-numeric pixel sample: {exc}") from None
    if values.min() < 0 or values.max() > maxval:
        raise PgmFormatError("pixel sample out of range")
    return PageImage(width=width, height=height, pixels=values.reshape(height, width))


def encode_pgm(image: PageImage) -> bytes:
    """Binary (P5) encoding, maxval 255."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.astype(np.uint8).tobytes()


def read_pgm(path) -> PageImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def _header_fields(data: bytes) -> tuple[tuple[int, int, int], int]:
    """Parse width/height/maxval after the magic; returns fields + payload offset."""
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise PgmFormatError("header ended before width/height/maxval")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            token = data[pos:end]
            if not token.isdigit():
                raise PgmFormatError(f"bad header token {token!r}")
            fields.append(int(token))
            pos = end
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PgmFormatError("missing whitespace after maxval")
    return (fields[0], fields[1], fields[2]), pos + 1


def _strip_comments(data: bytes) -> bytes:
    return b"\n".join(line.split(b"#", 1)[0] for line in data.split(b"\n"))


def image_features(image: PageImage) -> np.ndarray:
    """1024 grid-cell mean intensities in [0, 1], row-major.

    Images narrower or shorter than 32 px leave some grid cells empty; an
    empty cell copies the nearest previous non-empty cell in scan order (the
    head of the scan, before any non-empty cell, copies the first non-empty
    one). Every pixel belongs to exactly one cell, so at least one cell is
    always non-empty.
    """
    pixels = image.pixels.astype(np.float64)
    row_edges = [(k * image.height) // GRID for k in range(GRID + 1)]
    col_edges = [(k * image.width) // GRID for k in range(GRID + 1)]
    features = np.full(FEATURE_DIM, np.nan)
    previous = None
    pos = 0
    for r in range(GRID):
        band = pixels[row_edges[r] : row_edges[r + 1]]
        for c in range(GRID):
            cell = band[:, col_edges[c] : col_edges[c + 1]]
            if cell.size:
                previous = cell.mean() / 255.0
            if previous is not None:
                features[pos] = previous
            pos += 1
    head = np.isnan(features)
    if head.any():
        features[head] = features[~head][0]
    return features


def featurizer_sha256() -> str:
    """Hash of the featurizer version tag; plays the vocabulary-hash role for
    image-side models."""
    return hashlib.sha256(FEATURIZER_VERSION.encode("ascii")).hexdigest()


class GridImageFeaturizer(ParamsMixin):
    """Stateless transformer: list of :class:`PageImage` -> (n, 1024) array."""

    version = FEATURIZER_VERSION

    def fit(self, X, y=None):
        return self

    def transform(self, images) -> np.ndarray:
        return np.array([image_features(img) for img in images])

    def fit_transform(self, images, y=None) -> np.ndarray:
        return self.transform(images)
