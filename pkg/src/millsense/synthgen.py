"""Deterministic synthetic milling datasets with known feature/target structure.

The generator stands in for the proprietary 200-run milling dataset and is
built so the qualitative findings the pipeline must detect hold by
construction: roughness targets are smooth monotone functions of feed, depth
of cut, and milling mode; the active-force channel carries a genuine
amplitude signal; and in PURE_NOISE mode the normal-force channel is an
uninformative decoy that a sensor-ablation study should flag as removable.

Per experiment (one shared RNG stream, draws in a fixed documented order):

* process parameters are uniform over their configured ranges, the milling
  mode is a fair coin;
* the active force is a sinusoid at the tooth-passing frequency
  2 * spindle_n / 60 Hz (two inserts) with amplitude
  FORCE_AMP_PER_AP_F * ap * f plus Gaussian noise;
* the normal force repeats that construction at 0.75 amplitude
  (INFORMATIVE) or is a Gaussian decoy with sigma FZ_DECOY_PER_SD * noise_sd
  (PURE_NOISE);
* a surface profile is synthesized as an 80 µm-wavelength fundamental plus a
  phase-shifted second harmonic whose weight grows with feed, scaled by the
  amplitude function

      amp(f, ap, mode) = 0.8 + 2.2 f + 0.45 ap + 0.3 mode_flag   [µm]

  with Gaussian noise on the amplitude and per-sample heights;
* targets are the roughness parameters of that profile
  (Ramean <- ra, Rzmean <- rz, Rkumean <- rku, Rdqmaxmean <- rdq,
  Rp1maxmean <- highest peak).

With noise_sd = 0 the targets are exact functions of (f, ap, mode), and
regeneration with the same config is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .data import (
    CuttingMode,
    Dataset,
    ExperimentRecord,
    ForceSignals,
    ProcessParams,
)
from .errors import ConfigError, InvariantViolation
from .roughness import Profile, compute_roughness, peak_heights

SAMPLE_RATE_HZ = 1000.0
FORCE_LEN_RANGE = (240, 400)        # samples, drawn per experiment
FORCE_AMP_PER_AP_F = 120.0          # N per (mm * mm/rot)
FORCE_NOISE_PER_SD = 40.0           # force-noise sigma = 40 * noise_sd, in N
FZ_DECOY_PER_SD = 100.0             # PURE_NOISE normal-force sigma = 100 * noise_sd, in N

PROFILE_LEN = 1200
PROFILE_SPACING_UM = 1.0
PROFILE_WAVELENGTH_UM = 80.0
HARMONIC_PHASE = 0.7                # rad, keeps sampled peaks strict
AMP_BASE, AMP_F, AMP_AP, AMP_MODE = 0.8, 2.2, 0.45, 0.3    # µm
HARMONIC_BASE, HARMONIC_F = 0.10, 0.25

DEFAULT_PARAM_RANGES: Mapping[str, tuple[float, float]] = {
    "f": (0.1, 0.8),        # mm/rot
    "n": (1000.0, 6000.0),  # rpm
    "vc": (60.0, 380.0),    # m/min
    "ap": (0.2, 2.0),       # mm
}

DEFAULT_NOISE_SD = 0.04


class SensorMode(Enum):
    INFORMATIVE = "informative"
    PURE_NOISE = "pure_noise"


@dataclass(frozen=True)
class SynthConfig:
    n_experiments: int = 500
    seed: int = 0
    param_ranges: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_PARAM_RANGES)
    )
    noise_sd: float = DEFAULT_NOISE_SD
    irrelevant_sensor_mode: SensorMode = SensorMode.PURE_NOISE

    def __post_init__(self):
        if not isinstance(self.n_experiments, int) or self.n_experiments < 10:
            raise ConfigError(f"n_experiments must be an integer >= 10, got {self.n_experiments!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd!r}")
        if set(self.param_ranges) != set(DEFAULT_PARAM_RANGES):
            raise ConfigError(
                f"param_ranges must have exactly the keys {sorted(DEFAULT_PARAM_RANGES)}, "
                f"got {sorted(self.param_ranges)}"
            )
        for name, rng in self.param_ranges.items():
            try:
                low, high = float(rng[0]), float(rng[1])
            except (TypeError, ValueError, IndexError):
                raise ConfigError(f"param_ranges[{name!r}] must be a (low, high) pair") from None
            if not (math.isfinite(low) and math.isfinite(high) and low < high and low > 0):
                raise ConfigError(
                    f"param_ranges[{name!r}] must satisfy 0 < low < high, got ({rng[0]}, {rng[1]})"
                )


def _amplitude(f: float, ap: float, mode_flag: float) -> float:
    return AMP_BASE + AMP_F * f + AMP_AP * ap + AMP_MODE * mode_flag


def _profile_heights(f: float, ap: float, mode_flag: float, rng: np.random.Generator,
                     noise_sd: float) -> np.ndarray:
    theta = (2.0 * np.pi / PROFILE_WAVELENGTH_UM) * np.arange(PROFILE_LEN) * PROFILE_SPACING_UM
    w = HARMONIC_BASE + HARMONIC_F * f
    waveform = np.sin(theta) + w * np.sin(2.0 * theta + HARMONIC_PHASE)
    amp = _amplitude(f, ap, mode_flag) + rng.standard_normal() * noise_sd
    return amp * waveform + rng.standard_normal(PROFILE_LEN) * noise_sd


def _force_sinusoid(amp: float, tooth_hz: float, length: int, phase: float,
                    noise: np.ndarray) -> np.ndarray:
    t = np.arange(length) / SAMPLE_RATE_HZ
    return amp * np.sin(2.0 * np.pi * tooth_hz * t + phase) + noise


def generate(cfg: SynthConfig) -> Dataset:
    """Generate a dataset from ``cfg``; a pure function of the config."""
    rng = np.random.default_rng(cfg.seed)
    id_width = max(4, len(str(cfg.n_experiments - 1)))
    force_sd = FORCE_NOISE_PER_SD * cfg.noise_sd

    records = []
    for i in range(cfg.n_experiments):
        f = float(rng.uniform(*cfg.param_ranges["f"]))
        n_rpm = float(rng.uniform(*cfg.param_ranges["n"]))
        vc = float(rng.uniform(*cfg.param_ranges["vc"]))
        ap = float(rng.uniform(*cfg.param_ranges["ap"]))
        mode = CuttingMode.UP if rng.integers(0, 2) == 0 else CuttingMode.DOWN
        mode_flag = 0.0 if mode is CuttingMode.UP else 1.0

        tooth_hz = 2.0 * n_rpm / 60.0
        amp_force = FORCE_AMP_PER_AP_F * ap * f

        length_a = int(rng.integers(FORCE_LEN_RANGE[0], FORCE_LEN_RANGE[1] + 1))
        phase_a = float(rng.uniform(0.0, 2.0 * np.pi))
        fa = _force_sinusoid(
            amp_force, tooth_hz, length_a, phase_a, rng.standard_normal(length_a) * force_sd
        )

        length_z = int(rng.integers(FORCE_LEN_RANGE[0], FORCE_LEN_RANGE[1] + 1))
        if cfg.irrelevant_sensor_mode is SensorMode.PURE_NOISE:
            fz = rng.standard_normal(length_z) * (FZ_DECOY_PER_SD * cfg.noise_sd)
        else:
            phase_z = float(rng.uniform(0.0, 2.0 * np.pi))
            fz = _force_sinusoid(
                0.75 * amp_force, tooth_hz, length_z, phase_z,
                rng.standard_normal(length_z) * force_sd,
            )

        heights = _profile_heights(f, ap, mode_flag, rng, cfg.noise_sd)
        rp = compute_roughness(Profile(heights=heights, spacing=PROFILE_SPACING_UM))
        if rp.rz is None or rp.rku is None:
            raise InvariantViolation(
                f"generated profile for experiment {i} lacks the extrema or variance "
                "needed for its targets"
            )
        centered = heights - heights.mean()
        top_peak = float(np.max(peak_heights(centered)))

        targets = {
            "Ramean": rp.ra,
            "Rzmean": rp.rz,
            "Rkumean": rp.rku,
            "Rp1maxmean": top_peak,
            "Rdqmaxmean": rp.rdq,
        }
        records.append(
            ExperimentRecord(
                id=f"exp{i:0{id_width}d}",
                params=ProcessParams(
                    feed_f=f, spindle_n=n_rpm, cutting_speed_vc=vc, depth_ap=ap, mode=mode
                ),
                signals=ForceSignals(fa=fa, fz=fz, sample_rate_hz=SAMPLE_RATE_HZ),
                targets=targets,
            )
        )
    return Dataset(records=tuple(records))
