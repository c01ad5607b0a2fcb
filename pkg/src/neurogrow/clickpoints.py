"""Single-pixel neuron annotations: parsing, overlay extraction, rasterization.

Click-points live in external JSON (or CSV) files rather than being baked
into images, so the same annotations seed both growing methods and the
test fixtures.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatch,
    DuplicateCoordinate,
    DuplicateId,
    MissingFile,
    OutOfBounds,
    SchemaViolation,
)
from .raster import NEURON, BinaryMask, GrayImage


@dataclass(frozen=True)
class ClickPoint:
    x: int
    y: int
    id: int


@dataclass
class ClickPointSet:
    """Canonical (id-sorted, collision-free) set of points for one slice."""

    slice_name: str = ""
    points: list[ClickPoint] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen_ids: set[int] = set()
        seen_xy: set[tuple[int, int]] = set()
        for p in self.points:
            if not (isinstance(p.id, int) and isinstance(p.x, int) and isinstance(p.y, int)):
                raise SchemaViolation(f"non-integer click-point field: {p}")
            if p.id < 1:
                raise SchemaViolation(f"click-point id must be a positive integer, got {p.id}")
            if p.id in seen_ids:
                raise DuplicateId(f"id {p.id} appears more than once")
            if (p.x, p.y) in seen_xy:
                raise DuplicateCoordinate(f"two points share pixel ({p.x}, {p.y})")
            seen_ids.add(p.id)
            seen_xy.add((p.x, p.y))
        self.points = sorted(self.points, key=lambda p: p.id)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _points_from_rows(rows, slice_name: str) -> ClickPointSet:
    points = []
    for row in rows:
        try:
            points.append(ClickPoint(x=row["x"], y=row["y"], id=row["id"]))
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"click-point entry must have integer x, y, id: {row!r}") from exc
    return ClickPointSet(slice_name=slice_name, points=points)


def parse_clickpoints(path: Path | str) -> ClickPointSet:
    """Read a click-point file.

    Accepted forms: a JSON array of {"x", "y", "id"} objects, a JSON object
    {"slice": name, "points": [...]}, or a CSV file with header id,x,y.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))

    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != {"id", "x", "y"}:
                raise SchemaViolation(f"{path}: CSV header must be id,x,y")
            try:
                rows = [{k: int(v) for k, v in row.items()} for row in reader]
            except (TypeError, ValueError) as exc:
                raise SchemaViolation(f"{path}: non-integer CSV value") from exc
        return _points_from_rows(rows, path.stem)

    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: {exc}") from exc
    if isinstance(doc, list):
        return _points_from_rows(doc, path.stem)
    if isinstance(doc, dict) and isinstance(doc.get("points"), list):
        name = doc.get("slice", path.stem)
        if not isinstance(name, str):
            raise SchemaViolation(f"{path}: 'slice' must be a string")
        return _points_from_rows(doc["points"], name)
    raise SchemaViolation(f"{path}: expected a JSON array or an object with a 'points' list")


def serialize_clickpoints(cset: ClickPointSet, path: Path | str) -> None:
    doc = {
        "slice": cset.slice_name,
        "points": [{"x": p.x, "y": p.y, "id": p.id} for p in cset.points],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def extract_from_overlay(
    overlay: np.ndarray,
    base: GrayImage,
    red_min: int = 200,
    green_max: int = 80,
    blue_max: int = 80,
) -> ClickPointSet:
    """Recover click-points from red marker blobs painted on an overlay.

    Each 8-connected component of sufficiently red pixels becomes one point
    at the component centroid (rounded half-up). Ids run 1..n in row-major
    order of first appearance.
    """
    overlay = np.asarray(overlay)
    if overlay.ndim != 3 or overlay.shape[2] < 3:
        raise SchemaViolation(f"overlay must be (H, W, 3), got shape {overlay.shape}")
    if overlay.shape[:2] != base.pixels.shape:
        raise DimensionMismatch(f"overlay {overlay.shape[:2]} vs base {base.pixels.shape}")

    red = (
        (overlay[..., 0] >= red_min)
        & (overlay[..., 1] <= green_max)
        & (overlay[..., 2] <= blue_max)
    )
    comp, n = ndimage.label(red, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return ClickPointSet(slice_name="", points=[])

    # Reorder components by first row-major pixel so ids do not depend on
    # the labeling library's internal numbering.
    width = red.shape[1]
    first_seen = ndimage.minimum(
        np.arange(red.size).reshape(red.shape), labels=comp, index=range(1, n + 1)
    )
    order = np.argsort(first_seen, kind="stable")

    centers = ndimage.center_of_mass(red, labels=comp, index=(order + 1).tolist())
    points = []
    for rank, (cy, cx) in enumerate(centers, start=1):
        points.append(ClickPoint(x=int(np.floor(cx + 0.5)), y=int(np.floor(cy + 0.5)), id=rank))
    return ClickPointSet(slice_name="", points=points)


def rasterize_points(cset: ClickPointSet, width: int, height: int) -> BinaryMask:
    """Paint each click-point as a single True pixel (for QA overlays)."""
    bits = np.zeros((height, width), dtype=bool)
    for p in cset:
        if not (0 <= p.x < width and 0 <= p.y < height):
            raise OutOfBounds(f"point id {p.id} at ({p.x}, {p.y}) outside {width}x{height}")
        bits[p.y, p.x] = True
    return BinaryMask(bits, NEURON)


def check_in_bounds(cset: ClickPointSet, width: int, height: int) -> None:
    for p in cset:
        if not (0 <= p.x < width and 0 <= p.y < height):
            raise OutOfBounds(f"seed id {p.id} at ({p.x}, {p.y}) outside {width}x{height}")
