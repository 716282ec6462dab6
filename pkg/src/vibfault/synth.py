"""Synthetic bearing vibration generator for desk-scale experiments.

Healthy signals are a unit-amplitude shaft-frequency sinusoid plus Gaussian
noise. Faulty signals superpose a train of exponentially decaying resonance
bursts repeating at the fault's characteristic frequency (BPFO, BPFI or BSF
from standard bearing kinematics) with +/-2% uniform onset jitter.

All randomness comes from numpy's PCG64 generator seeded from the config,
so equal configs produce bit-identical signals.
"""

from dataclasses import dataclass, field

import numpy as np

from .signals import Signal

FAULT_KINDS = ("healthy", "inner", "outer", "ball")

ONSET_JITTER = 0.02        # fraction of the fault period
BURST_CUTOFF = 1e-4        # truncate a burst once its envelope decays below this


@dataclass(frozen=True)
class BearingGeometry:
    n_balls: int = 8
    ball_diam: float = 7.94        # mm, 6203-style deep groove bearing
    pitch_diam: float = 34.55      # mm
    contact_angle_deg: float = 0.0

    def __post_init__(self):
        if not self.ball_diam < self.pitch_diam:
            raise ValueError("ball_diam must be smaller than pitch_diam")
        if self.n_balls < 1:
            raise ValueError("n_balls must be at least 1")


@dataclass(frozen=True)
class SynthConfig:
    fault_kind: str = "healthy"
    sample_rate_hz: float = 12_000.0
    duration_s: float = 5.0
    shaft_rpm: float = 1800.0
    geometry: BearingGeometry = field(default_factory=BearingGeometry)
    impulse_amplitude: float = 2.0
    resonance_hz: float = 3000.0
    decay_rate: float = 800.0      # 1/s envelope decay of each burst
    noise_std: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.fault_kind not in FAULT_KINDS:
            raise ValueError(f"fault_kind must be one of {FAULT_KINDS}")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if not self.shaft_rpm > 0:
            raise ValueError("shaft_rpm must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def fault_frequencies(geometry, shaft_rpm):
    """Characteristic fault frequencies (Hz) for the given geometry.

    BPFO = (n/2) f_r (1 - (d/D) cos phi)
    BPFI = (n/2) f_r (1 + (d/D) cos phi)
    BSF  = (D/2d) f_r (1 - ((d/D) cos phi)^2)
    with f_r the shaft rotation frequency in Hz.
    """
    f_r = shaft_rpm / 60.0
    ratio = (geometry.ball_diam / geometry.pitch_diam) * np.cos(
        np.deg2rad(geometry.contact_angle_deg))
    n = geometry.n_balls
    return {
        "shaft": f_r,
        "outer": (n / 2.0) * f_r * (1.0 - ratio),
        "inner": (n / 2.0) * f_r * (1.0 + ratio),
        "ball": (geometry.pitch_diam / (2.0 * geometry.ball_diam))
                * f_r * (1.0 - ratio ** 2),
    }


def synth_signal(cfg):
    """Generate one synthetic vibration Signal per the config."""
    rng = np.random.default_rng(cfg.seed)
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    t = np.arange(n) / cfg.sample_rate_hz
    freqs = fault_frequencies(cfg.geometry, cfg.shaft_rpm)

    x = np.sin(2.0 * np.pi * freqs["shaft"] * t)

    if cfg.fault_kind != "healthy":
        period = 1.0 / freqs[cfg.fault_kind]
        n_bursts = int(np.floor(cfg.duration_s / period)) + 1
        jitter = rng.uniform(-ONSET_JITTER, ONSET_JITTER, size=n_bursts) * period
        onsets = np.arange(n_bursts) * period + jitter
        # Bursts are truncated once the envelope is negligible.
        burst_len = int(np.ceil(
            cfg.sample_rate_hz * np.log(1.0 / BURST_CUTOFF) / cfg.decay_rate))
        for onset in onsets:
            if onset < 0 or onset >= cfg.duration_s:
                continue
            start = int(np.ceil(onset * cfg.sample_rate_hz))
            stop = min(start + burst_len, n)
            if start >= stop:
                continue
            tau = t[start:stop] - onset
            x[start:stop] += (cfg.impulse_amplitude
                              * np.exp(-cfg.decay_rate * tau)
                              * np.sin(2.0 * np.pi * cfg.resonance_hz * tau))

    if cfg.noise_std > 0:
        x += rng.normal(0.0, cfg.noise_std, size=n)

    return Signal(x, cfg.sample_rate_hz,
                  source_id=f"synth:{cfg.fault_kind}:seed{cfg.seed}")
