"""Grow single-pixel neuron annotations into masks and score the results."""

from .augment import TransformSpec, apply_transform, augment_dataset, enumerate_transforms, map_point
from .clickpoints import ClickPoint, ClickPointSet, extract_from_overlay, parse_clickpoints, rasterize_points
from .floodfill import FillResult, FloodFillParams, StructuringElement, close, flood_fill, grow_floodfill, skeletonize
from .metrics import (
    ConfusionCounts,
    KappaResult,
    MetricsReport,
    accuracy,
    auroc,
    build_report,
    classify_auroc,
    classify_kappa,
    confusion_from_masks,
    dice,
    error_rates,
    jaccard,
    kappa,
    pool_counts,
)
from .raster import (
    BORDER,
    NEURON,
    BinaryMask,
    GrayImage,
    load_image,
    load_mask,
    save_image,
    threshold_fixed,
    threshold_otsu,
)
from .regiongrow import GrownRegion, RegionGrowParams, grow_all, grow_region

__version__ = "0.1.0"

__all__ = [
    "BORDER",
    "NEURON",
    "BinaryMask",
    "ClickPoint",
    "ClickPointSet",
    "ConfusionCounts",
    "FillResult",
    "FloodFillParams",
    "GrayImage",
    "GrownRegion",
    "KappaResult",
    "MetricsReport",
    "RegionGrowParams",
    "StructuringElement",
    "TransformSpec",
    "accuracy",
    "apply_transform",
    "augment_dataset",
    "auroc",
    "build_report",
    "classify_auroc",
    "classify_kappa",
    "close",
    "confusion_from_masks",
    "dice",
    "enumerate_transforms",
    "error_rates",
    "extract_from_overlay",
    "flood_fill",
    "grow_all",
    "grow_floodfill",
    "grow_region",
    "jaccard",
    "kappa",
    "load_image",
    "load_mask",
    "map_point",
    "parse_clickpoints",
    "pool_counts",
    "rasterize_points",
    "save_image",
    "skeletonize",
    "threshold_fixed",
    "threshold_otsu",
]
