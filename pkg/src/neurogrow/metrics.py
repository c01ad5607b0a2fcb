"""Pixel-wise segmentation scoring against gold masks.

All scores derive from one 2x2 confusion matrix expressed as fractions of
the pixel count (so the matrix sums to 1). When the matrix comes from
actual masks the raw integer counts are kept alongside the fractions and
every metric that can be computed exactly from them is, which is what lets
chance-corrected agreement come out as exactly 0 for constant predictors
instead of 1e-17.

The "auroc" here is the one-operating-point quantity 1 - (FPR + FNR) / 2:
the area under the single-threshold ROC polygon, algebraically the
balanced accuracy of the hard mask. It is not an integral over thresholds;
the name is kept because the report consumers expect it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    ClassMismatch,
    DegenerateAgreement,
    DimensionMismatch,
    EmptyUnion,
    NoNegatives,
    NoPositives,
)
from .raster import NEURON, BinaryMask

# Published 4-decimal matrices sum to 1 +/- a few 1e-4; exact counts to ~0.
_SUM_TOLERANCE = 5e-4


@dataclass(frozen=True)
class ConfusionCounts:
    """tp/tn/fp/fn as fractions of all pixels, optionally with raw counts.

    ``raw`` is (tp, tn, fp, fn) in pixels when the matrix was built from
    masks; fraction-only instances (e.g. read from a 4-decimal table) leave
    it None and lose a little exactness.
    """

    tp: float
    tn: float
    fp: float
    fn: float
    raw: tuple[int, int, int, int] | None = None

    def __post_init__(self) -> None:
        for name, value in (("tp", self.tp), ("tn", self.tn), ("fp", self.fp), ("fn", self.fn)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        total = self.tp + self.tn + self.fp + self.fn
        if abs(total - 1.0) > _SUM_TOLERANCE:
            raise ValueError(f"confusion fractions sum to {total}, expected 1")

    @classmethod
    def from_raw(cls, tp: int, tn: int, fp: int, fn: int) -> "ConfusionCounts":
        n = tp + tn + fp + fn
        if n <= 0:
            raise ValueError("empty confusion matrix")
        return cls(tp=tp / n, tn=tn / n, fp=fp / n, fn=fn / n, raw=(tp, tn, fp, fn))


def confusion_from_masks(pred: BinaryMask, truth: BinaryMask) -> ConfusionCounts:
    """Count pixel-wise agreement; positive means the neuron class."""
    if pred.positive_class != NEURON or truth.positive_class != NEURON:
        raise ClassMismatch(
            f"evaluation masks must be neuron-positive, got {pred.positive_class!r}/{truth.positive_class!r}"
        )
    if pred.bits.shape != truth.bits.shape:
        raise DimensionMismatch(f"pred {pred.bits.shape} vs truth {truth.bits.shape}")
    tp = int(np.count_nonzero(pred.bits & truth.bits))
    fp = int(np.count_nonzero(pred.bits & ~truth.bits))
    fn = int(np.count_nonzero(~pred.bits & truth.bits))
    tn = pred.bits.size - tp - fp - fn
    return ConfusionCounts.from_raw(tp=tp, tn=tn, fp=fp, fn=fn)


def pool_counts(counts: Iterable[ConfusionCounts]) -> ConfusionCounts:
    """Sum raw counts across a test set, then renormalize.

    Pooling (rather than averaging per-image scores) is the aggregation
    that keeps a 50-image evaluation equivalent to one giant image.
    """
    counts = list(counts)
    if not counts:
        raise ValueError("nothing to pool")
    if any(c.raw is None for c in counts):
        raise ValueError("pooling needs raw pixel counts on every matrix")
    sums = [sum(c.raw[i] for c in counts) for i in range(4)]
    return ConfusionCounts.from_raw(*sums)


# --- scores -------------------------------------------------------------------

def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / (c.tp + c.tn + c.fp + c.fn)


def jaccard(c: ConfusionCounts) -> float:
    union = c.tp + c.fp + c.fn
    if union == 0:
        raise EmptyUnion("no positive pixel in either mask")
    return c.tp / union


def dice(c: ConfusionCounts) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        raise EmptyUnion("no positive pixel in either mask")
    return 2 * c.tp / denom


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    observed_agreement: float
    chance_agreement: float


def kappa(c: ConfusionCounts) -> KappaResult:
    """Chance-corrected agreement (observed - chance) / (1 - chance).

    Observed agreement is tp + tn; chance agreement is the sum of the
    products of the matching marginals. With raw counts available the
    ratio is formed from exact integers before the single division.
    """
    if c.raw is not None:
        tp, tn, fp, fn = c.raw
        n = tp + tn + fp + fn
        observed_n = tp + tn
        chance_nn = (tn + fn) * (tn + fp) + (fp + tp) * (fn + tp)
        denominator = n * n - chance_nn
        if denominator == 0:
            raise DegenerateAgreement("all pixels in one confusion cell")
        return KappaResult(
            kappa=(observed_n * n - chance_nn) / denominator,
            observed_agreement=observed_n / n,
            chance_agreement=chance_nn / (n * n),
        )
    observed = c.tp + c.tn
    chance = (c.tn + c.fn) * (c.tn + c.fp) + (c.fp + c.tp) * (c.fn + c.tp)
    if chance == 1.0:
        raise DegenerateAgreement("all mass in one confusion cell")
    return KappaResult(
        kappa=(observed - chance) / (1.0 - chance),
        observed_agreement=observed,
        chance_agreement=chance,
    )


def error_rates(c: ConfusionCounts) -> tuple[float, float]:
    """(false-positive rate, false-negative rate)."""
    if c.raw is not None:
        tp, tn, fp, fn = c.raw
    else:
        tp, tn, fp, fn = c.tp, c.tn, c.fp, c.fn
    if fp + tn == 0:
        raise NoNegatives("no actual-negative pixels: FPR undefined")
    if fn + tp == 0:
        raise NoPositives("no actual-positive pixels: FNR undefined")
    return fp / (fp + tn), fn / (fn + tp)


def auroc(fpr: float, fnr: float) -> float:
    """Area under the one-threshold ROC polygon: 1 - (FPR + FNR) / 2."""
    if not (0.0 <= fpr <= 1.0 and 0.0 <= fnr <= 1.0):
        raise ValueError(f"rates must be in [0, 1], got fpr={fpr}, fnr={fnr}")
    return 1.0 - (fpr + fnr) / 2.0


def classify_kappa(k: float) -> str:
    """Label a kappa value with the conventional agreement band.

    The published bands have gaps (0.80 vs 0.81); we make them half-open
    and upper-inclusive so every value in [-1, 1] gets exactly one label.
    """
    if not -1.0 <= k <= 1.0:
        raise ValueError(f"kappa must be in [-1, 1], got {k}")
    if k < 0.0:
        return "no agreement"
    if k <= 0.20:
        return "slight agreement"
    if k <= 0.40:
        return "fair agreement"
    if k <= 0.60:
        return "moderate agreement"
    if k <= 0.80:
        return "substantial agreement"
    return "almost perfect agreement"


def classify_auroc(a: float) -> str:
    """Label an AUROC with the academic letter-grade band (lower-inclusive)."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"auroc must be in [0, 1], got {a}")
    if a < 0.5:
        return "worse than chance"
    if a < 0.6:
        return "no agreement (F)"
    if a < 0.7:
        return "poor agreement (D)"
    if a < 0.8:
        return "fair agreement (C)"
    if a < 0.9:
        return "good agreement (B)"
    return "excellent agreement (A)"


@dataclass(frozen=True)
class MetricsReport:
    """Every score for one evaluation, plus the guideline labels."""

    accuracy: float
    jaccard: float
    dice: float
    kappa: float
    observed_agreement: float
    chance_agreement: float
    fpr: float
    fnr: float
    auroc: float
    kappa_label: str
    auroc_label: str

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "jaccard": self.jaccard,
            "dice": self.dice,
            "kappa": self.kappa,
            "observed_agreement": self.observed_agreement,
            "chance_agreement": self.chance_agreement,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "auroc": self.auroc,
            "kappa_label": self.kappa_label,
            "auroc_label": self.auroc_label,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__})


def build_report(
    c: ConfusionCounts,
    fpr_override: float | None = None,
    fnr_override: float | None = None,
) -> MetricsReport:
    """Compute the full report from one confusion matrix.

    Degenerate matrices raise the typed error of the first metric that is
    undefined; a report never contains NaN. Explicit rate overrides let
    callers replay separately published FPR/FNR pairs at full precision.
    """
    kap = kappa(c)
    fpr, fnr = error_rates(c)
    if fpr_override is not None:
        fpr = fpr_override
    if fnr_override is not None:
        fnr = fnr_override
    roc = auroc(fpr, fnr)
    return MetricsReport(
        accuracy=accuracy(c),
        jaccard=jaccard(c),
        dice=dice(c),
        kappa=kap.kappa,
        observed_agreement=kap.observed_agreement,
        chance_agreement=kap.chance_agreement,
        fpr=fpr,
        fnr=fnr,
        auroc=roc,
        kappa_label=classify_kappa(kap.kappa),
        auroc_label=classify_auroc(roc),
    )


def format_confusion(c: ConfusionCounts) -> str:
    """Render the 2x2 matrix in the conventional actual-by-predicted layout."""
    rows = [
        ("", "predicted background", "predicted neuron"),
        ("actual background", f"{c.tn:.6f}", f"{c.fp:.6f}"),
        ("actual neuron", f"{c.fn:.6f}", f"{c.tp:.6f}"),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(row))
        for row in rows
    )
