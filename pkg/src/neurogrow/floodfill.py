"""Flood-fill growing: skeletonize membranes, close gaps, fill from seeds.

The stage order is fixed: binarize, thin the membrane mask to a skeleton,
morphologically close small breaks, then flood-fill each neuron from its
click-point until the closed skeleton stops it. Fills that escape through
an unclosed gap are detected by an area cap and rolled back instead of
silently flooding the slice.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .clickpoints import ClickPointSet, check_in_bounds
from .raster import BORDER, NEURON, BinaryMask, GrayImage, require_border, threshold_fixed, threshold_otsu

_CONNECTIVITY_STRUCTURE = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int),
    8: np.ones((3, 3), dtype=int),
}


@dataclass(frozen=True)
class StructuringElement:
    """Disk-shaped neighborhood used by the closing operation.

    Offsets satisfy dx^2 + dy^2 <= radius * (radius + 1): the half-pixel
    slack admits the diagonal neighbors at radius 1 (a strict Euclidean
    radius-1 disk is the 4-neighborhood plus center, which provably cannot
    bridge a single-pixel break in a one-pixel-wide skeleton line).
    """

    radius: int
    offsets: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if not self.offsets:
            limit = self.radius * (self.radius + 1)
            offs = tuple(
                (dx, dy)
                for dy in range(-self.radius, self.radius + 1)
                for dx in range(-self.radius, self.radius + 1)
                if dx * dx + dy * dy <= limit
            )
            object.__setattr__(self, "offsets", offs)

    @classmethod
    def disk(cls, radius: int) -> "StructuringElement":
        return cls(radius=radius)

    def footprint(self) -> np.ndarray:
        fp = np.zeros((2 * self.radius + 1, 2 * self.radius + 1), dtype=bool)
        for dx, dy in self.offsets:
            fp[dy + self.radius, dx + self.radius] = True
        return fp


@dataclass
class FillResult:
    """Outcome of growing one slice: per-pixel ids plus failure buckets.

    Every seed id lands in exactly one place: the label raster, leaked_ids
    (fill exceeded the leak cap and was rolled back), or missed_ids (seed
    sat on a border pixel, or on a pixel an earlier id already claimed, so
    nothing was fillable).
    """

    labels: np.ndarray
    leaked_ids: list[int] = field(default_factory=list)
    missed_ids: list[int] = field(default_factory=list)

    def union_mask(self) -> BinaryMask:
        return BinaryMask(self.labels > 0, NEURON)

    def report(self) -> dict:
        return {"leaked": list(self.leaked_ids), "missed": list(self.missed_ids)}

    def labeled_ids(self) -> list[int]:
        ids = np.unique(self.labels)
        return [int(i) for i in ids if i > 0]


# --- skeletonization --------------------------------------------------------

def _thinning_candidates(bits: np.ndarray, subiteration: int) -> np.ndarray:
    """One Zhang-Suen subiteration: flag deletable pixels.

    Deletable pixels are object pixels with 2..6 object neighbors, exactly
    one 0->1 transition around the 8-neighborhood, and the subiteration's
    directional products zero.
    """
    p = np.pad(bits, 1).astype(np.uint8)
    # Clockwise neighbors starting from north.
    n = p[:-2, 1:-1]
    ne = p[:-2, 2:]
    e = p[1:-1, 2:]
    se = p[2:, 2:]
    s = p[2:, 1:-1]
    sw = p[2:, :-2]
    w = p[1:-1, :-2]
    nw = p[:-2, :-2]

    ring = (n, ne, e, se, s, sw, w, nw, n)
    neighbor_count = sum(ring[:-1])
    transitions = sum((ring[i] == 0) & (ring[i + 1] == 1) for i in range(8))

    deletable = bits & (neighbor_count >= 2) & (neighbor_count <= 6) & (transitions == 1)
    if subiteration == 0:
        deletable &= (n * e * s == 0) & (e * s * w == 0)
    else:
        deletable &= (n * e * w == 0) & (n * s * w == 0)
    return deletable


def skeletonize(mask: BinaryMask) -> BinaryMask:
    """Thin a border mask to one-pixel width (Zhang-Suen, run to fixpoint)."""
    require_border(mask, "skeletonize")
    bits = mask.bits.copy()
    while True:
        changed = False
        for sub in (0, 1):
            deletable = _thinning_candidates(bits, sub)
            if deletable.any():
                bits &= ~deletable
                changed = True
        if not changed:
            return BinaryMask(bits, BORDER)


# --- closing ------------------------------------------------------------------

def close(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    """Dilate then erode by the same element, bridging sub-element gaps.

    Both passes run on a radius-padded copy so the result matches closing
    on the unbounded plane cropped back to the frame; this keeps the
    operation extensive and idempotent at the image border.
    """
    require_border(mask, "close")
    r = se.radius
    fp = se.footprint()
    padded = np.pad(mask.bits, r)
    dilated = ndimage.binary_dilation(padded, structure=fp)
    eroded = ndimage.binary_erosion(dilated, structure=fp)
    return BinaryMask(eroded[r:-r, r:-r], BORDER)


# --- filling -------------------------------------------------------------------

def flood_fill(
    borders: BinaryMask,
    seeds: ClickPointSet,
    connectivity: int = 4,
    leak_fraction: float = 0.25,
) -> FillResult:
    """Fill each seed's enclosing region, in ascending id order.

    A fill is the set of non-border pixels reachable from the seed under
    the given connectivity, stopping at border pixels and at pixels already
    claimed by earlier ids. Fills larger than leak_fraction of the slice
    area are rolled back and reported as leaks; seeds sitting on border or
    already-claimed pixels fill nothing and are reported as misses.
    """
    require_border(borders, "flood_fill")
    if connectivity not in _CONNECTIVITY_STRUCTURE:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    check_in_bounds(seeds, borders.width, borders.height)

    cap = leak_fraction * borders.width * borders.height
    labels = np.zeros(borders.bits.shape, dtype=np.uint32)
    result = FillResult(labels=labels)

    components, n = ndimage.label(~borders.bits, structure=_CONNECTIVITY_STRUCTURE[connectivity])
    if n == 0:
        result.missed_ids = [p.id for p in seeds]
        return result
    sizes = np.bincount(components.ravel())
    boxes = ndimage.find_objects(components)

    claimed: set[int] = set()
    leaky: set[int] = set()
    for p in seeds:  # ClickPointSet iterates in ascending id order
        if borders.bits[p.y, p.x]:
            result.missed_ids.append(p.id)
            continue
        comp = int(components[p.y, p.x])
        if comp in claimed:
            # An earlier id filled this entire region; nothing reachable is
            # unlabeled, so the fill is empty.
            result.missed_ids.append(p.id)
        elif comp in leaky or sizes[comp] > cap:
            leaky.add(comp)
            result.leaked_ids.append(p.id)
        else:
            box = boxes[comp - 1]
            labels[box][components[box] == comp] = p.id
            claimed.add(comp)
    return result


@dataclass(frozen=True)
class FloodFillParams:
    threshold: int | None = None  # None: pick automatically (Otsu)
    se_radius: int = 2
    connectivity: int = 4
    leak_fraction: float = 0.25


def grow_floodfill(img: GrayImage, seeds: ClickPointSet, params: FloodFillParams = FloodFillParams()) -> FillResult:
    """Run the whole pipeline: binarize, skeletonize, close, flood-fill."""
    check_in_bounds(seeds, img.width, img.height)
    if params.threshold is None:
        borders, _ = threshold_otsu(img)
    else:
        borders = threshold_fixed(img, params.threshold)
    skeleton = skeletonize(borders)
    closed = close(skeleton, StructuringElement.disk(params.se_radius))
    return flood_fill(closed, seeds, connectivity=params.connectivity, leak_fraction=params.leak_fraction)
