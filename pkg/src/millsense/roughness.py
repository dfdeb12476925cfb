"""Profile roughness amplitude parameters.

Every parameter is computed on the mean-centered profile: the mean line is
the arithmetic mean of the sampled heights and is subtracted first. With z
the centered heights and h the sample spacing:

    ra  = mean |z|
    rq  = sqrt(mean z^2)
    rt  = max z - min z
    rz  = mean(top-5 peak heights) + mean(|bottom-5 valley depths|)
    rsm_paper = mean(top-5 peak heights)
    rsk = mean(z^3) / rq^3
    rku = mean(z^4) / rq^4
    rdq = sqrt(mean(((z[i+1] - z[i]) / h)^2))

A peak is a sample strictly greater than both immediate neighbors (no
plateau merging); a valley is the mirror definition. ``rsm_paper`` is a
deliberately nonstandard quantity (mean summit height, not the usual mean
peak spacing) and is named to avoid conflation with ISO RSm.

When the profile has fewer than five peaks or five valleys, ``rz`` and
``rsm_paper`` are returned as None; when rq is zero, ``rsk`` and ``rku``
are returned as None. The profile is not filtered before computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation

MIN_PROFILE_LEN = 10
_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Profile:
    """Sampled surface profile: heights in µm, uniform spacing in µm."""

    heights: np.ndarray
    spacing: float

    def __post_init__(self):
        arr = np.asarray(self.heights, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "heights", arr)
        if arr.ndim != 1 or arr.size < MIN_PROFILE_LEN:
            raise InvariantViolation(
                f"profile needs at least {MIN_PROFILE_LEN} samples, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("profile heights must all be finite")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise InvariantViolation(f"spacing must be positive, got {self.spacing!r}")


@dataclass(frozen=True)
class RoughnessParams:
    ra: float
    rq: float
    rz: float | None
    rt: float
    rsm_paper: float | None
    rsk: float | None
    rku: float | None
    rdq: float

    def __post_init__(self):
        if self.ra < 0 or self.rdq < 0:
            raise InvariantViolation("ra and rdq must be non-negative")
        if self.rq < self.ra * (1.0 - _REL_TOL):
            raise InvariantViolation(f"rq={self.rq} < ra={self.ra} breaks the power-mean inequality")
        if self.rz is not None and not (self.rt >= self.rz * (1.0 - _REL_TOL) and self.rz >= 0):
            raise InvariantViolation(f"expected rt >= rz >= 0, got rt={self.rt}, rz={self.rz}")
        if self.rku is not None and self.rku < 1.0 - _REL_TOL:
            raise InvariantViolation(f"rku must be >= 1, got {self.rku}")


def peak_heights(z: np.ndarray) -> np.ndarray:
    """Heights of strict local maxima over immediate neighbors (interior only)."""
    z = np.asarray(z, dtype=float)
    interior = z[1:-1]
    mask = (interior > z[:-2]) & (interior > z[2:])
    return interior[mask]


def valley_values(z: np.ndarray) -> np.ndarray:
    """Heights of strict local minima over immediate neighbors (interior only)."""
    z = np.asarray(z, dtype=float)
    interior = z[1:-1]
    mask = (interior < z[:-2]) & (interior < z[2:])
    return interior[mask]


def compute_roughness(p: Profile) -> RoughnessParams:
    """All roughness parameters of ``p``; see the module docstring for the
    exact formulas and the absent-field conventions."""
    heights = p.heights
    if np.all(heights == heights[0]):
        # exactly flat: center to exact zeros so ra = rq = rt = rdq = 0
        z = np.zeros_like(heights)
    else:
        z = heights - heights.mean()

    ra = float(np.mean(np.abs(z)))
    rq = float(np.sqrt(np.mean(z * z)))
    rt = float(z.max() - z.min())
    rdq = float(np.sqrt(np.mean(((z[1:] - z[:-1]) / p.spacing) ** 2)))

    peaks = peak_heights(z)
    valleys = valley_values(z)
    if peaks.size >= 5 and valleys.size >= 5:
        top5 = float(np.mean(np.sort(peaks)[-5:]))
        bottom5_depth = float(np.mean(np.abs(np.sort(valleys)[:5])))
        rz: float | None = top5 + bottom5_depth
        rsm_paper: float | None = top5
    else:
        rz = None
        rsm_paper = None

    if rq == 0.0:
        rsk: float | None = None
        rku: float | None = None
    else:
        rsk = float(np.mean(z**3) / rq**3)
        rku = float(np.mean(z**4) / rq**4)

    return RoughnessParams(
        ra=ra, rq=rq, rz=rz, rt=rt, rsm_paper=rsm_paper, rsk=rsk, rku=rku, rdq=rdq
    )
