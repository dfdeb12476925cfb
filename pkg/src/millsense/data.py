"""Experiment data model, on-disk dataset format, and seeded train/test splits.

A dataset on disk is a metadata CSV plus one signal file per experiment and
force channel::

    experiments.csv          one row per milling run
    signals/<id>_fa.csv      active-force samples
    signals/<id>_fz.csv      normal-force samples

The metadata header is fixed:
``id,f_mm_per_rot,n_rpm,vc_m_per_min,ap_mm,mode,Ramean,Rzmean,Rkumean,Rp1maxmean,Rdqmaxmean``
with ``mode`` one of ``up``/``down``. Columns after ``mode`` are roughness
targets; extra columns beyond the standard five are ingested as additional
targets. Signal files start with a ``sample_rate_hz,<value>`` header line
followed by one decimal sample per line; the fa/fz pair of a record must
agree on the sample rate.

All numeric text is written with 17 significant digits, so a load/save/load
round trip reproduces every float bit-exactly. Records are sorted by id on
load and after splitting, so directory enumeration order never leaks into
results.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    InvariantViolation,
    MissingFile,
    SchemaError,
    TooFewRecords,
)

METADATA_HEADER = (
    "id",
    "f_mm_per_rot",
    "n_rpm",
    "vc_m_per_min",
    "ap_mm",
    "mode",
    "Ramean",
    "Rzmean",
    "Rkumean",
    "Rp1maxmean",
    "Rdqmaxmean",
)

#: Target names every metadata file must carry, in header order.
STANDARD_TARGETS = METADATA_HEADER[6:]

#: Prefixes of target names that must be non-negative (amplitude parameters
#: and kurtosis); other targets are ingested as opaque values.
_NONNEG_TARGET_PREFIXES = ("Ra", "Rq", "Rz", "Rt", "Rku")

MIN_SIGNAL_LEN = 8


class CuttingMode(Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class ProcessParams:
    """Machine configuration of one milling run."""

    feed_f: float           # mm per tool rotation
    spindle_n: float        # rpm
    cutting_speed_vc: float # m/min
    depth_ap: float         # mm
    mode: CuttingMode

    def __post_init__(self):
        for name in ("feed_f", "spindle_n", "cutting_speed_vc", "depth_ap"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvariantViolation(f"{name} must be a positive finite number, got {v!r}")


@dataclass(frozen=True, eq=False)
class ForceSignals:
    """Raw dynamometer series for one run; fa and fz may differ in length
    across experiments but share one sample rate within a record."""

    fa: np.ndarray
    fz: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        fa = np.asarray(self.fa, dtype=float)
        fz = np.asarray(self.fz, dtype=float)
        fa.setflags(write=False)
        fz.setflags(write=False)
        object.__setattr__(self, "fa", fa)
        object.__setattr__(self, "fz", fz)
        for name, arr in (("fa", fa), ("fz", fz)):
            if arr.ndim != 1 or arr.size < MIN_SIGNAL_LEN:
                raise InvariantViolation(
                    f"{name} must be a 1-D series with at least {MIN_SIGNAL_LEN} samples, "
                    f"got length {arr.size}"
                )
        if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise InvariantViolation(f"sample_rate_hz must be positive, got {self.sample_rate_hz!r}")


def _validate_targets(targets: dict[str, float]) -> None:
    if not targets:
        raise InvariantViolation("record carries no roughness targets")
    for name, v in targets.items():
        if not math.isfinite(v):
            raise InvariantViolation(f"target {name} must be finite, got {v!r}")
        if v < 0 and any(name.startswith(p) for p in _NONNEG_TARGET_PREFIXES):
            raise InvariantViolation(f"target {name} must be non-negative, got {v}")


@dataclass(frozen=True, eq=False)
class ExperimentRecord:
    id: str
    params: ProcessParams
    signals: ForceSignals
    targets: dict[str, float]

    def __post_init__(self):
        if not self.id:
            raise InvariantViolation("record id must be non-empty")
        _validate_targets(self.targets)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable, id-sorted collection of experiment records."""

    records: tuple[ExperimentRecord, ...]
    feature_schema: tuple[str, ...] = field(default=())

    def __post_init__(self):
        recs = tuple(sorted(self.records, key=lambda r: r.id))
        ids = [r.id for r in recs]
        if len(set(ids)) != len(ids):
            dup = next(i for k, i in enumerate(ids) if i in ids[:k])
            raise InvariantViolation(f"duplicate record id {dup!r}")
        object.__setattr__(self, "records", recs)

    def __len__(self) -> int:
        return len(self.records)

    def target_names(self) -> tuple[str, ...]:
        return tuple(self.records[0].targets.keys()) if self.records else ()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"{where}: expected a number, got {text!r}") from None


def _read_signal_file(path: Path) -> tuple[np.ndarray, float]:
    if not path.is_file():
        raise MissingFile(f"signal file not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("sample_rate_hz,"):
        raise SchemaError(f"{path}: first line must be 'sample_rate_hz,<value>'")
    rate = _parse_float(lines[0].split(",", 1)[1], f"{path} header")
    samples = np.array(
        [_parse_float(t, f"{path} line {k + 2}") for k, t in enumerate(lines[1:]) if t.strip()],
        dtype=float,
    )
    return samples, rate


def load_dataset(metadata_path: str | Path, signals_dir: str | Path) -> Dataset:
    """Load a dataset from ``metadata_path`` and its per-record signal files.

    Raises MissingFile, SchemaError, or InvariantViolation with the offending
    path, row/column, or record id and field named in the message.
    """
    metadata_path = Path(metadata_path)
    signals_dir = Path(signals_dir)
    if not metadata_path.is_file():
        raise MissingFile(f"metadata file not found: {metadata_path}")

    with open(metadata_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{metadata_path}: empty file") from None
        if tuple(header[: len(METADATA_HEADER)]) != METADATA_HEADER:
            raise SchemaError(
                f"{metadata_path}: header must start with {','.join(METADATA_HEADER)}"
            )
        target_cols = tuple(header[6:])
        if len(set(target_cols)) != len(target_cols):
            raise SchemaError(f"{metadata_path}: duplicate target columns")

        records = []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{metadata_path} row {rownum}: expected {len(header)} columns, got {len(row)}"
                )
            where = f"{metadata_path} row {rownum}"
            rec_id = row[0]
            mode_text = row[5]
            try:
                mode = CuttingMode(mode_text)
            except ValueError:
                raise SchemaError(f"{where}: mode must be 'up' or 'down', got {mode_text!r}") from None
            try:
                params = ProcessParams(
                    feed_f=_parse_float(row[1], where),
                    spindle_n=_parse_float(row[2], where),
                    cutting_speed_vc=_parse_float(row[3], where),
                    depth_ap=_parse_float(row[4], where),
                    mode=mode,
                )
                targets = {
                    name: _parse_float(val, f"{where} column {name}")
                    for name, val in zip(target_cols, row[6:])
                }
                fa, rate_a = _read_signal_file(signals_dir / f"{rec_id}_fa.csv")
                fz, rate_z = _read_signal_file(signals_dir / f"{rec_id}_fz.csv")
                if rate_a != rate_z:
                    raise SchemaError(
                        f"record {rec_id}: fa/fz sample rates disagree ({rate_a} vs {rate_z})"
                    )
                signals = ForceSignals(fa=fa, fz=fz, sample_rate_hz=rate_a)
                records.append(ExperimentRecord(rec_id, params, signals, targets))
            except InvariantViolation as exc:
                raise InvariantViolation(f"record {rec_id}: {exc}") from None

    return Dataset(records=tuple(records))


def save_dataset(ds: Dataset, metadata_path: str | Path, signals_dir: str | Path) -> None:
    """Write ``ds`` in the on-disk format read by :func:`load_dataset`."""
    if not ds.records:
        raise TooFewRecords("cannot save an empty dataset")
    metadata_path = Path(metadata_path)
    signals_dir = Path(signals_dir)
    metadata_path.parent.mkdir(parents=True, exist_ok=True)
    signals_dir.mkdir(parents=True, exist_ok=True)

    target_cols = ds.target_names()
    for std in STANDARD_TARGETS:
        if std not in target_cols:
            raise SchemaError(f"dataset lacks standard target column {std}")
    ordered = tuple(STANDARD_TARGETS) + tuple(
        t for t in target_cols if t not in STANDARD_TARGETS
    )

    lines = [",".join(METADATA_HEADER[:6] + ordered)]
    for rec in ds.records:
        p = rec.params
        row = [
            rec.id,
            _fmt(p.feed_f),
            _fmt(p.spindle_n),
            _fmt(p.cutting_speed_vc),
            _fmt(p.depth_ap),
            p.mode.value,
        ] + [_fmt(rec.targets[t]) for t in ordered]
        lines.append(",".join(row))
        for suffix, series in (("fa", rec.signals.fa), ("fz", rec.signals.fz)):
            body = [f"sample_rate_hz,{_fmt(rec.signals.sample_rate_hz)}"]
            body.extend(_fmt(v) for v in series)
            (signals_dir / f"{rec.id}_{suffix}.csv").write_text("\n".join(body) + "\n")
    metadata_path.write_text("\n".join(lines) + "\n")


def split_train_test(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint seeded partition of ``ds`` into (train, test).

    Test size is round(test_fraction * n) clamped to [1, n - 1]; the shuffle
    is drawn from ``numpy.random.default_rng(seed)``, so the same inputs give
    the same partition on every platform.
    """
    if not 0.0 < test_fraction < 1.0:
        raise InvariantViolation(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(ds)
    if n < 2:
        raise TooFewRecords(f"need at least 2 records to split, got {n}")
    k = int(math.floor(test_fraction * n + 0.5))
    k = min(max(k, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = set(perm[:k].tolist())
    train = tuple(r for i, r in enumerate(ds.records) if i not in test_idx)
    test = tuple(r for i, r in enumerate(ds.records) if i in test_idx)
    return Dataset(records=train), Dataset(records=test)
