"""Seeded region growing: best-first absorption by intensity similarity.

Starting from a single seed pixel, each iteration absorbs the frontier
pixel whose intensity is closest to the running region mean, recomputes
the mean, and stops once even the closest candidate differs by more than
the threshold. Growth is exact and deterministic: the mean is kept as an
integer sum/count pair and candidate comparison cross-multiplies, so no
float round-off can flip an argmin, and ties break on the smallest
row-major pixel index.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .clickpoints import ClickPointSet, check_in_bounds
from .errors import OutOfBounds
from .floodfill import FillResult
from .raster import GrayImage

STOP_THRESHOLD = "threshold"
STOP_FRONTIER_EMPTY = "frontier_empty"
STOP_MAX_REGION = "max_region"

_OFFSETS = {
    4: ((0, -1), (-1, 0), (1, 0), (0, 1)),
    8: ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)),
}


@dataclass(frozen=True)
class RegionGrowParams:
    threshold: int = 30
    connectivity: int = 4
    max_region: int | None = None  # None: a quarter of the image area

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.connectivity not in _OFFSETS:
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.max_region is not None and self.max_region < 1:
            raise ValueError(f"max_region must be >= 1, got {self.max_region}")

    def cap_for(self, width: int, height: int) -> int:
        if self.max_region is not None:
            return self.max_region
        return max(1, (width * height) // 4)


@dataclass
class GrownRegion:
    """One grown region: pixels in absorption order plus why growth stopped."""

    pixels: list[tuple[int, int]]
    stop_reason: str
    mean: float
    mean_trace: tuple[float, ...] | None = None

    def pixel_set(self) -> set[tuple[int, int]]:
        return set(self.pixels)

    def __len__(self) -> int:
        return len(self.pixels)


class _Frontier:
    """Candidate pixels bucketed by intensity.

    The argmin of |intensity - mean| over the frontier is always attained
    at the occupied intensity nearest the mean from below or from above,
    so one outward scan over at most 256 buckets finds it exactly. Each
    bucket is a heap of row-major indices, which makes the within-bucket
    tie-break (smallest index) free.
    """

    def __init__(self) -> None:
        self.buckets: list[list[int]] = [[] for _ in range(256)]
        self.size = 0

    def push(self, intensity: int, index: int) -> None:
        heapq.heappush(self.buckets[intensity], index)
        self.size += 1

    def nearest(self, total: int, count: int) -> tuple[int, int] | None:
        """Return (intensity, index) minimizing |intensity - total/count|."""
        if self.size == 0:
            return None
        mean_floor = min(total // count, 255)
        lo = next((v for v in range(mean_floor, -1, -1) if self.buckets[v]), None)
        hi = next((v for v in range(mean_floor + 1, 256) if self.buckets[v]), None)
        if lo is None:
            best = hi
        elif hi is None:
            best = lo
        else:
            # |v*count - total| compared in exact integers; the shared
            # denominator drops out.
            d_lo = total - lo * count
            d_hi = hi * count - total
            if d_lo < d_hi:
                best = lo
            elif d_hi < d_lo:
                best = hi
            else:
                best = lo if self.buckets[lo][0] < self.buckets[hi][0] else hi
        return best, self.buckets[best][0]

    def pop(self, intensity: int) -> int:
        self.size -= 1
        return heapq.heappop(self.buckets[intensity])


def grow_region(
    img: GrayImage,
    seed,
    params: RegionGrowParams = RegionGrowParams(),
    blocked: np.ndarray | None = None,
    record_means: bool = False,
) -> GrownRegion:
    """Grow one region from ``seed`` (anything with .x and .y attributes).

    ``blocked`` pixels are never absorbed and never enter the frontier;
    the seed pixel itself is exempt. Returns the absorbed pixels in
    absorption order (seed first) and the reason growth stopped.
    """
    height, width = img.pixels.shape
    if not (0 <= seed.x < width and 0 <= seed.y < height):
        raise OutOfBounds(f"seed at ({seed.x}, {seed.y}) outside {width}x{height}")

    flat = img.pixels.ravel()
    blocked_flat = None if blocked is None else np.asarray(blocked, dtype=bool).ravel()
    cap = params.cap_for(width, height)
    offsets = _OFFSETS[params.connectivity]
    threshold = params.threshold

    seen = np.zeros(flat.size, dtype=bool)  # in region or already in frontier
    frontier = _Frontier()
    order: list[tuple[int, int]] = []
    means: list[float] | None = [] if record_means else None
    total = 0
    count = 0

    def absorb(index: int) -> None:
        nonlocal total, count
        y, x = divmod(index, width)
        order.append((x, y))
        total += int(flat[index])
        count += 1
        if means is not None:
            means.append(total / count)
        for dx, dy in offsets:
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height:
                n_index = ny * width + nx
                if not seen[n_index] and (blocked_flat is None or not blocked_flat[n_index]):
                    seen[n_index] = True
                    frontier.push(int(flat[n_index]), n_index)

    seed_index = seed.y * width + seed.x
    seen[seed_index] = True
    absorb(seed_index)

    while True:
        if count >= cap:
            stop = STOP_MAX_REGION
            break
        candidate = frontier.nearest(total, count)
        if candidate is None:
            stop = STOP_FRONTIER_EMPTY
            break
        intensity, _ = candidate
        # stop when |intensity - total/count| > threshold, exactly
        if abs(intensity * count - total) > threshold * count:
            stop = STOP_THRESHOLD
            break
        absorb(frontier.pop(intensity))

    return GrownRegion(
        pixels=order,
        stop_reason=stop,
        mean=total / count,
        mean_trace=tuple(means) if means is not None else None,
    )


def grow_all(img: GrayImage, seeds: ClickPointSet, params: RegionGrowParams = RegionGrowParams()) -> FillResult:
    """Grow every seed in ascending id order into a shared label raster.

    Pixels claimed by earlier regions are barriers to later growth, and
    every seed pixel is reserved for its own id up front, so a seed inside
    an already-grown region still yields a (single-pixel) region rather
    than vanishing. Regions that hit the size cap are rolled back and
    reported as leaks.
    """
    check_in_bounds(seeds, img.width, img.height)
    labels = np.zeros(img.pixels.shape, dtype=np.uint32)
    result = FillResult(labels=labels)

    occupied = np.zeros(img.pixels.shape, dtype=bool)
    for p in seeds:
        occupied[p.y, p.x] = True

    for p in seeds:
        region = grow_region(img, p, params, blocked=occupied)
        if region.stop_reason == STOP_MAX_REGION:
            result.leaked_ids.append(p.id)
            occupied[p.y, p.x] = False  # free the reservation for later ids
            continue
        xs = np.fromiter((px for px, _ in region.pixels), dtype=np.intp, count=len(region.pixels))
        ys = np.fromiter((py for _, py in region.pixels), dtype=np.intp, count=len(region.pixels))
        labels[ys, xs] = p.id
        occupied[ys, xs] = True
    return result
