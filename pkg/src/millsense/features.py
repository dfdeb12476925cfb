"""Fixed-length feature vectors from variable-length force recordings.

Each record maps to 25 features: the four machine configuration parameters,
a 0/1 cutting-mode flag (0 = up milling, 1 = down milling), and the
five-number summary (min, Q1, median, Q3, max) of each force channel in the
time domain and of its magnitude spectrum. Quartiles interpolate linearly
between order statistics at positions (n - 1) * p, the spectrum is the
one-sided DFT magnitude of the mean-removed series with the DC bin excluded,
and the DFT is evaluated directly from its defining sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import CuttingMode, Dataset, ExperimentRecord
from .errors import (
    EmptySeries,
    InvariantViolation,
    NonFiniteSample,
    SeriesTooShort,
    TooFewRecords,
    UnknownGroupPrefix,
)

_STATS = ("min", "q1", "median", "q3", "max")

CONFIG_FEATURES = ("f", "n", "vc", "ap", "mode_flag")

#: Full 25-name schema, fixed order: configuration parameters first, then
#: per-channel box statistics, time domain before frequency domain.
FEATURE_NAMES: tuple[str, ...] = CONFIG_FEATURES + tuple(
    f"{channel}_{domain}_{stat}"
    for channel in ("Fa", "Fz")
    for domain in ("time", "freq")
    for stat in _STATS
)

SENSOR_GROUP_PREFIXES = ("Fa_", "Fz_")


@dataclass(frozen=True)
class BoxStats:
    """Five-number summary of a sample."""

    min: float
    q1: float
    median: float
    q3: float
    max: float

    def __post_init__(self):
        vals = (self.min, self.q1, self.median, self.q3, self.max)
        if any(a > b for a, b in zip(vals, vals[1:])):
            raise InvariantViolation(f"box statistics must be non-decreasing, got {vals}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.min, self.q1, self.median, self.q3, self.max)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if len(self.names) != vals.size:
            raise InvariantViolation("feature names and values differ in length")
        if len(set(self.names)) != len(self.names):
            raise InvariantViolation("feature names must be unique")
        if not np.all(np.isfinite(vals)):
            bad = self.names[int(np.flatnonzero(~np.isfinite(vals))[0])]
            raise InvariantViolation(f"feature {bad} is not finite")


def _quantile(sorted_vals: np.ndarray, p: float) -> float:
    # linear interpolation between order statistics at position (n - 1) * p
    pos = (sorted_vals.size - 1) * p
    lo = int(np.floor(pos))
    frac = pos - lo
    if frac == 0.0:
        return float(sorted_vals[lo])
    return float(sorted_vals[lo] + frac * (sorted_vals[lo + 1] - sorted_vals[lo]))


def box_stats(series: Sequence[float] | np.ndarray) -> BoxStats:
    """Five-number summary (min, Q1, median, Q3, max) of ``series``."""
    arr = np.asarray(series, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySeries("cannot summarize an empty series")
    if not np.all(np.isfinite(arr)):
        idx = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFiniteSample(f"sample {idx} is not finite: {arr[idx]!r}")
    s = np.sort(arr)
    return BoxStats(
        min=float(s[0]),
        q1=_quantile(s, 0.25),
        median=_quantile(s, 0.5),
        q3=_quantile(s, 0.75),
        max=float(s[-1]),
    )


def magnitude_spectrum(series: Sequence[float] | np.ndarray) -> np.ndarray:
    """One-sided DFT magnitudes |X_k|, k = 1..floor(n/2), of the mean-removed
    series.

    Evaluated directly from the DFT sum in k-blocks, O(n^2) overall; removing
    the mean annihilates the (excluded) DC bin and makes the output invariant
    to constant offsets.
    """
    arr = np.asarray(series, dtype=float).ravel()
    n = arr.size
    if n < 8:
        raise SeriesTooShort(f"need at least 8 samples for a spectrum, got {n}")
    if not np.all(np.isfinite(arr)):
        idx = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFiniteSample(f"sample {idx} is not finite: {arr[idx]!r}")
    x = arr - arr.mean()
    j = np.arange(n)
    out = np.empty(n // 2, dtype=float)
    block = 512
    for start in range(1, n // 2 + 1, block):
        k = np.arange(start, min(start + block, n // 2 + 1))
        ang = (2.0 * np.pi / n) * np.outer(k, j)
        re = np.cos(ang) @ x
        im = np.sin(ang) @ x
        out[start - 1 : start - 1 + k.size] = np.sqrt(re * re + im * im)
    return out


def featurize(rec: ExperimentRecord) -> FeatureVector:
    """Map one experiment to the fixed 25-feature schema."""
    p = rec.params
    values = [
        p.feed_f,
        p.spindle_n,
        p.cutting_speed_vc,
        p.depth_ap,
        0.0 if p.mode is CuttingMode.UP else 1.0,
    ]
    for channel in (rec.signals.fa, rec.signals.fz):
        values.extend(box_stats(channel).as_tuple())
        values.extend(box_stats(magnitude_spectrum(channel)).as_tuple())
    return FeatureVector(names=FEATURE_NAMES, values=np.array(values, dtype=float))


def _resolve_drop(drop_groups: Iterable[str]) -> list[int]:
    keep = list(range(len(FEATURE_NAMES)))
    for prefix in drop_groups:
        matches = [i for i, nm in enumerate(FEATURE_NAMES) if nm.startswith(prefix)]
        if not matches:
            raise UnknownGroupPrefix(f"prefix {prefix!r} matches no feature name")
        keep = [i for i in keep if i not in set(matches)]
    return keep


def featurize_dataset(
    ds: Dataset, drop_groups: Iterable[str] = ()
) -> tuple[np.ndarray, list[str]]:
    """Feature matrix for every record of ``ds`` (row i = record i) and the
    matching column names, with any column whose name starts with a prefix in
    ``drop_groups`` omitted."""
    if not ds.records:
        raise TooFewRecords("cannot featurize an empty dataset")
    keep = _resolve_drop(drop_groups)
    full = np.stack([featurize(r).values for r in ds.records])
    return full[:, keep], [FEATURE_NAMES[i] for i in keep]


def write_features_csv(matrix: np.ndarray, names: Sequence[str], path: str | Path) -> None:
    """Dump a feature matrix as CSV with the feature names as header."""
    lines = [",".join(names)]
    for row in np.asarray(matrix, dtype=float):
        lines.append(",".join(format(v, ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
