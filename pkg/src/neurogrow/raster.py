"""Image and mask data model, lossless file I/O, and binarization.

All rasters are 2D numpy arrays in row-major order. Grayscale images are
8-bit; binary masks carry the class their True pixels represent, because
the growing stages work on membrane (border) masks while evaluation works
on neuron masks, and mixing the two is a bug we want to catch early.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ClassMismatch,
    CorruptData,
    DegenerateHistogram,
    DimensionMismatch,
    IoFailure,
    MissingFile,
    UnsupportedFormat,
)

NEURON = "neuron"
BORDER = "border"

# ITU-R BT.601 luma weights, applied only when color input is explicitly allowed.
_LUMA = (0.299, 0.587, 0.114)


@dataclass
class GrayImage:
    """8-bit single-channel raster; ``pixels`` has shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D raster, got shape {self.pixels.shape}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass
class BinaryMask:
    """Boolean raster whose True pixels belong to ``positive_class``.

    ``positive_class`` is fixed at construction ("neuron" or "border") and
    carried through every operation that consumes or produces masks.
    """

    bits: np.ndarray
    positive_class: str

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2 or self.bits.shape[0] < 1 or self.bits.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D raster, got shape {self.bits.shape}")
        if self.positive_class not in (NEURON, BORDER):
            raise ValueError(f"unknown positive class {self.positive_class!r}")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BinaryMask)
            and self.positive_class == other.positive_class
            and np.array_equal(self.bits, other.bits)
        )


def require_border(mask: BinaryMask, op: str) -> None:
    if mask.positive_class != BORDER:
        raise ClassMismatch(f"{op} expects a border mask, got positive class {mask.positive_class!r}")


# --- file I/O ---------------------------------------------------------------

def _open(path: Path | str) -> Image.Image:
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    try:
        return Image.open(path)
    except UnidentifiedImageError as exc:
        raise CorruptData(f"{path}: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def load_image(path: Path | str, allow_color: bool = False) -> GrayImage:
    """Read an 8-bit grayscale PNG or PGM (P5).

    Multi-channel files are rejected unless ``allow_color`` is set, in which
    case they are converted with BT.601 luma weights rounded to nearest.
    Silent conversion is deliberately not offered: color overlays carry
    click-point annotations that a luma collapse would destroy.
    """
    with _open(path) as im:
        if im.mode == "L":
            return GrayImage(np.asarray(im))
        if im.mode in ("RGB", "RGBA"):
            if not allow_color:
                raise UnsupportedFormat(
                    f"{path}: {im.mode} input needs explicit luma conversion (allow_color/--luma)"
                )
            rgb = np.asarray(im.convert("RGB")).astype(np.float64)
            luma = rgb[..., 0] * _LUMA[0] + rgb[..., 1] * _LUMA[1] + rgb[..., 2] * _LUMA[2]
            return GrayImage(np.floor(luma + 0.5).astype(np.uint8))
        raise UnsupportedFormat(f"{path}: mode {im.mode} is not 8-bit grayscale")


def save_image(obj: GrayImage | BinaryMask, path: Path | str) -> None:
    """Write a PGM (P5, maxval 255) or 8-bit PNG; masks encode positive=255."""
    path = Path(path)
    if isinstance(obj, BinaryMask):
        data = np.where(obj.bits, 255, 0).astype(np.uint8)
    else:
        data = obj.pixels
    try:
        Image.fromarray(data, "L").save(path)
    except (OSError, ValueError) as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def mask_from_image(img: GrayImage, positive_class: str) -> BinaryMask:
    """Interpret a 0/255 image as a mask; any other value is corrupt."""
    values = np.unique(img.pixels)
    if not np.all(np.isin(values, (0, 255))):
        raise CorruptData(f"mask image contains values other than 0/255: {values[:8].tolist()}")
    return BinaryMask(img.pixels == 255, positive_class)


def load_mask(path: Path | str, positive_class: str) -> BinaryMask:
    return mask_from_image(load_image(path), positive_class)


def load_overlay(path: Path | str) -> np.ndarray:
    """Read a color annotation overlay as an (H, W, 3) uint8 array."""
    with _open(path) as im:
        if im.mode not in ("RGB", "RGBA"):
            raise UnsupportedFormat(f"{path}: overlay must be a color image, got mode {im.mode}")
        return np.asarray(im.convert("RGB"))


def save_label_raster(labels: np.ndarray, path: Path | str) -> None:
    """Write a per-pixel id raster as 16-bit grayscale PNG."""
    labels = np.asarray(labels)
    if labels.max(initial=0) > np.iinfo(np.uint16).max:
        raise UnsupportedFormat("label ids beyond 65535 do not fit a 16-bit PNG")
    try:
        Image.fromarray(labels.astype(np.uint16)).save(Path(path))
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def load_label_raster(path: Path | str) -> np.ndarray:
    with _open(path) as im:
        if im.mode not in ("I;16", "I"):
            raise UnsupportedFormat(f"{path}: expected a 16-bit label PNG, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint32)


# --- thresholding ------------------------------------------------------------

def threshold_fixed(img: GrayImage, t: int) -> BinaryMask:
    """Mark every pixel with intensity strictly below ``t`` as border.

    Membranes are the darkly dyed structures in SEM sections, so the dark
    side of the threshold is the border class.
    """
    if not 0 <= t <= 255:
        raise ValueError(f"threshold must be in 0..255, got {t}")
    return BinaryMask(img.pixels < t, BORDER)


def threshold_otsu(img: GrayImage) -> tuple[BinaryMask, int]:
    """Pick the threshold maximizing between-class variance, then binarize.

    The argmax over all 256 candidate thresholds is computed in exact
    integer arithmetic (the variance comparison is cross-multiplied), so
    ties resolve deterministically to the smallest maximizing threshold
    with no float round-off involved.
    """
    counts = np.bincount(img.pixels.ravel(), minlength=256)
    if int(np.count_nonzero(counts)) < 2:
        raise DegenerateHistogram("image has a single intensity; supply a fixed threshold")

    total = int(counts.sum())
    total_weighted = int(np.dot(counts, np.arange(256, dtype=np.int64)))

    best_t = -1
    best_num = -1  # variance numerator/denominator compared as exact fractions
    best_den = 1
    n_below = 0
    s_below = 0
    for t in range(256):
        if t > 0:
            n_below += int(counts[t - 1])
            s_below += (t - 1) * int(counts[t - 1])
        n_above = total - n_below
        if n_below == 0 or n_above == 0:
            continue
        s_above = total_weighted - s_below
        num = (s_below * n_above - s_above * n_below) ** 2
        den = n_below * n_above
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den

    return threshold_fixed(img, best_t), best_t


def ensure_same_shape(a: GrayImage | BinaryMask | np.ndarray, b: GrayImage | BinaryMask | np.ndarray) -> None:
    def shape(x):
        if isinstance(x, GrayImage):
            return x.pixels.shape
        if isinstance(x, BinaryMask):
            return x.bits.shape
        return np.asarray(x).shape[:2]

    if shape(a) != shape(b):
        raise DimensionMismatch(f"shape mismatch: {shape(a)} vs {shape(b)}")
