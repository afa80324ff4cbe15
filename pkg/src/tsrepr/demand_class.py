"""Syntetos-Boylan demand categorisation (smooth/erratic/intermittent/lumpy)."""
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

ADI_CUTOFF = 1.32
CV2_CUTOFF = 0.49


class UnclassifiableError(ValueError):
    """Demand statistics are missing, so no category can be assigned."""


class DemandClass(str, Enum):
    SMOOTH = "smooth"
    ERRATIC = "erratic"
    INTERMITTENT = "intermittent"
    LUMPY = "lumpy"


@dataclass(frozen=True)
class DemandStats:
    """Average inter-demand interval and squared CV of nonzero sizes.

    Either field is NaN when undefined (no demand, or fewer than two
    nonzero demands for ``cv2``).
    """

    adi: float
    cv2: float


def demand_stats(values):
    x = np.asarray(values, dtype=np.float64)
    sizes = x[x != 0]
    adi = x.size / sizes.size if sizes.size else math.nan
    if sizes.size >= 2:
        cv2 = float((sizes.std(ddof=1) / sizes.mean()) ** 2)
    else:
        cv2 = math.nan
    return DemandStats(float(adi), cv2)


def classify(stats, adi_cut=ADI_CUTOFF, cv2_cut=CV2_CUTOFF):
    """Quadrant of (adi, cv2); values on a cutoff go to the higher class."""
    if not (math.isfinite(stats.adi) and math.isfinite(stats.cv2)):
        raise UnclassifiableError(f"cannot classify {stats}")
    if stats.adi < adi_cut:
        return DemandClass.SMOOTH if stats.cv2 < cv2_cut else DemandClass.ERRATIC
    return DemandClass.INTERMITTENT if stats.cv2 < cv2_cut else DemandClass.LUMPY


def profile(ds, adi_cut=ADI_CUTOFF, cv2_cut=CV2_CUTOFF, skip_unclassifiable=False):
    """Percentage of series in each demand class.

    Returns ``(percentages, n_skipped)``; percentages cover all four
    classes and sum to 100. Unclassifiable series raise unless
    ``skip_unclassifiable`` is set.
    """
    counts = Counter()
    skipped = 0
    for s in ds:
        try:
            counts[classify(demand_stats(s.values), adi_cut, cv2_cut)] += 1
        except UnclassifiableError:
            if not skip_unclassifiable:
                raise UnclassifiableError(f"series {s.id!r} cannot be classified") from None
            skipped += 1
    total = sum(counts.values())
    if total == 0:
        raise UnclassifiableError("no classifiable series")
    pct = {c.value: 100.0 * counts[c] / total for c in DemandClass}
    return pct, skipped
