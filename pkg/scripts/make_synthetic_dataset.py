#!/usr/bin/env python3
"""Generate a synthetic slice dataset: images, click-points, and gold masks.

Each slice is light tissue crossed by dark square membranes on a grid, one
click-point at every cell center, and a gold mask marking the enclosed
interiors. Handy for exercising the full grow -> eval -> report loop:

    python scripts/make_synthetic_dataset.py --out demo --slices 5
    neurogrow grow --method floodfill --images demo/images \\
        --points demo/points --out demo/grown
    mkdir demo/pred && cp demo/grown/*__mask.png demo/pred/
    (cd demo/pred && for f in *__mask.png; do mv "$f" "${f%__mask.png}.png"; done)
    neurogrow eval --pred demo/pred --truth demo/gold --out demo/run.json
"""
import argparse
import json
from pathlib import Path

import numpy as np

from neurogrow.raster import NEURON, BinaryMask, GrayImage, save_image


def make_slice(size, grid, thickness, membrane, tissue, rng, speckle):
    pixels = np.full((size, size), tissue, dtype=np.uint8)
    gold = np.zeros((size, size), dtype=bool)
    centers = []
    cell = size // grid
    inset = 4
    side = cell - 2 * inset
    for gy in range(grid):
        for gx in range(grid):
            top, left = gy * cell + inset, gx * cell + inset
            t = thickness
            pixels[top : top + t, left : left + side] = membrane
            pixels[top + side - t : top + side, left : left + side] = membrane
            pixels[top : top + side, left : left + t] = membrane
            pixels[top : top + side, left + side - t : left + side] = membrane
            gold[top + t : top + side - t, left + t : left + side - t] = True
            centers.append((left + side // 2, top + side // 2))
    if speckle:
        count = int(speckle * size * size)
        where = rng.integers(0, size * size, size=count)
        pixels.ravel()[where] = rng.integers(60, 180, size=count).astype(np.uint8)
    return pixels, gold, centers


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="dataset root directory")
    parser.add_argument("--slices", type=int, default=5)
    parser.add_argument("--size", type=int, default=512, help="slice side length in pixels")
    parser.add_argument("--grid", type=int, default=4, help="cells per side")
    parser.add_argument("--membrane-thickness", type=int, default=1)
    parser.add_argument("--speckle", type=float, default=0.0, help="fraction of pixels hit by gray speckle noise")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    root = Path(args.out)
    for sub in ("images", "points", "gold"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    for i in range(args.slices):
        pixels, gold, centers = make_slice(
            args.size, args.grid, args.membrane_thickness, membrane=30, tissue=205, rng=rng, speckle=args.speckle
        )
        name = f"slice{i:03d}"
        save_image(GrayImage(pixels), root / "images" / f"{name}.pgm")
        save_image(BinaryMask(gold, NEURON), root / "gold" / f"{name}.png")
        (root / "points" / f"{name}.json").write_text(
            json.dumps([{"x": x, "y": y, "id": k + 1} for k, (x, y) in enumerate(centers)], indent=2) + "\n"
        )
    print(f"wrote {args.slices} slice(s) under {root}/{{images,points,gold}}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
