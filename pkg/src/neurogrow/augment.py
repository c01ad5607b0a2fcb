"""Dataset multiplication: the 8 square symmetries plus 4 axis translations.

Twelve transforms per source image. Masks and label rasters are moved by
pure index remapping (never interpolated), and click-points can be mapped
through the same transforms so annotations stay glued to their pixels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clickpoints import ClickPoint, ClickPointSet, parse_clickpoints, serialize_clickpoints
from .errors import IoFailure, MismatchedPointFile
from .raster import BinaryMask, GrayImage, load_image, save_image

DIHEDRAL_NAMES = (
    "identity",
    "rot90",
    "rot180",
    "rot270",
    "hflip",
    "vflip",
    "transpose",
    "anti_transpose",
)

DEFAULT_SHIFT = 64


@dataclass(frozen=True)
class TransformSpec:
    """One augmentation step: a square symmetry, then a translation.

    Rotations are clockwise. The shift (dx, dy) moves content right/down,
    refilling the exposed band by reflection about the image edge.
    """

    dihedral: str = "identity"
    shift: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        if self.dihedral not in DIHEDRAL_NAMES:
            raise ValueError(f"unknown dihedral element {self.dihedral!r}")

    def label(self) -> str:
        if self.shift == (0, 0):
            return self.dihedral
        return f"{self.dihedral}+shift({self.shift[0]},{self.shift[1]})"


def _apply_dihedral(arr: np.ndarray, name: str) -> np.ndarray:
    if name == "identity":
        return arr.copy()
    if name == "rot90":
        return np.rot90(arr, -1).copy()
    if name == "rot180":
        return np.rot90(arr, 2).copy()
    if name == "rot270":
        return np.rot90(arr, 1).copy()
    if name == "hflip":
        return np.fliplr(arr).copy()
    if name == "vflip":
        return np.flipud(arr).copy()
    if name == "transpose":
        return arr.T.copy()
    if name == "anti_transpose":
        return np.flipud(np.fliplr(arr)).T.copy()
    raise ValueError(f"unknown dihedral element {name!r}")


def _apply_shift(arr: np.ndarray, dx: int, dy: int) -> np.ndarray:
    if dx == 0 and dy == 0:
        return arr
    height, width = arr.shape
    px, py = abs(dx), abs(dy)
    if px >= width or py >= height:
        raise ValueError(f"shift ({dx}, {dy}) too large for a {width}x{height} raster")
    padded = np.pad(arr, ((py, py), (px, px)), mode="reflect")
    y0, x0 = py - dy, px - dx
    return padded[y0 : y0 + height, x0 : x0 + width].copy()


def apply_transform(obj, spec: TransformSpec):
    """Transform a GrayImage, BinaryMask, or raw 2D array; same type out."""
    if isinstance(obj, GrayImage):
        return GrayImage(apply_transform(obj.pixels, spec))
    if isinstance(obj, BinaryMask):
        return BinaryMask(apply_transform(obj.bits, spec), obj.positive_class)
    arr = _apply_dihedral(np.asarray(obj), spec.dihedral)
    return _apply_shift(arr, *spec.shift)


def map_point(x: int, y: int, width: int, height: int, spec: TransformSpec) -> tuple[int, int] | None:
    """Map a pixel coordinate through a transform; None if shifted outside.

    width/height are the dimensions *before* the transform.
    """
    d = spec.dihedral
    if d == "identity":
        nx, ny = x, y
    elif d == "rot90":
        nx, ny = height - 1 - y, x
    elif d == "rot180":
        nx, ny = width - 1 - x, height - 1 - y
    elif d == "rot270":
        nx, ny = y, width - 1 - x
    elif d == "hflip":
        nx, ny = width - 1 - x, y
    elif d == "vflip":
        nx, ny = x, height - 1 - y
    elif d == "transpose":
        nx, ny = y, x
    elif d == "anti_transpose":
        nx, ny = height - 1 - y, width - 1 - x
    else:
        raise ValueError(f"unknown dihedral element {d!r}")

    if d in ("rot90", "rot270", "transpose", "anti_transpose"):
        width, height = height, width
    nx, ny = nx + spec.shift[0], ny + spec.shift[1]
    if 0 <= nx < width and 0 <= ny < height:
        return nx, ny
    return None


def transform_points(
    cset: ClickPointSet, width: int, height: int, spec: TransformSpec
) -> tuple[ClickPointSet, list[int]]:
    """Map a point set through a transform; returns (kept set, dropped ids)."""
    kept: list[ClickPoint] = []
    dropped: list[int] = []
    for p in cset:
        mapped = map_point(p.x, p.y, width, height, spec)
        if mapped is None:
            dropped.append(p.id)
        else:
            kept.append(ClickPoint(x=mapped[0], y=mapped[1], id=p.id))
    return ClickPointSet(slice_name=cset.slice_name, points=kept), dropped


def enumerate_transforms(shift: int = DEFAULT_SHIFT) -> list[TransformSpec]:
    """The canonical 12-transform set: 8 symmetries + 4 axis translations."""
    specs = [TransformSpec(dihedral=name) for name in DIHEDRAL_NAMES]
    specs += [
        TransformSpec(shift=(shift, 0)),
        TransformSpec(shift=(-shift, 0)),
        TransformSpec(shift=(0, shift)),
        TransformSpec(shift=(0, -shift)),
    ]
    return specs


def _find_point_file(in_dir: Path, stem: str) -> Path | None:
    for suffix in (".json", ".csv"):
        candidate = in_dir / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def augment_dataset(
    in_dir: Path | str,
    out_dir: Path | str,
    transform_points_too: bool = False,
    shift: int = DEFAULT_SHIFT,
) -> list[dict]:
    """Write all 12 transforms of every image in ``in_dir``.

    Outputs are named ``<stem>__t<k><ext>``. With ``transform_points_too``
    each image must have a matching click-point file, whose coordinates are
    mapped through the same transform; points translated out of frame are
    dropped and recorded in the manifest. The manifest (one row per output)
    is returned and written to ``out_dir/manifest.json``.
    """
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    images = sorted(p for p in in_dir.iterdir() if p.suffix.lower() in (".pgm", ".png"))
    if not images:
        raise IoFailure(f"no .pgm/.png images in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    specs = enumerate_transforms(shift=shift)
    manifest: list[dict] = []
    for image_path in images:
        img = load_image(image_path)
        points = None
        if transform_points_too:
            point_path = _find_point_file(in_dir, image_path.stem)
            if point_path is None:
                raise MismatchedPointFile(f"no click-point file for {image_path.name}")
            points = parse_clickpoints(point_path)
        for k, spec in enumerate(specs):
            out_name = f"{image_path.stem}__t{k}{image_path.suffix}"
            save_image(apply_transform(img, spec), out_dir / out_name)
            row = {
                "source": image_path.name,
                "transform_index": k,
                "transform": spec.label(),
                "output": out_name,
            }
            if points is not None:
                mapped, dropped = transform_points(points, img.width, img.height, spec)
                points_name = f"{image_path.stem}__t{k}.json"
                serialize_clickpoints(mapped, out_dir / points_name)
                row["points_output"] = points_name
                row["dropped_point_ids"] = dropped
            manifest.append(row)

    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
