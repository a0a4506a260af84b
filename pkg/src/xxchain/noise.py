"""Low-pass-filtered Gaussian control noise and reproducible seeding.

Traces are white Gaussian sequences filtered in the frequency domain by the
amplitude envelope A(f) = exp(-2|f|/B), which is down to 1/e**2 at f = B.
After filtering the trace is rescaled so its empirical rms equals the
requested value exactly.  The slow components (including the random offset
over a gate window) are deliberately kept: they carry most of the dephasing
power and are what the encoding is supposed to fight.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseTrace", "NoiseGridError", "make_noise", "seed_stream", "channel_key"]


class NoiseGridError(ValueError):
    """dt_noise too coarse for the requested bandwidth."""


@dataclass
class NoiseTrace:
    channel_id: str | int
    dt: float
    samples: np.ndarray
    rms_target: float
    bandwidth: float
    mode: str = "additive"

    def at(self, times) -> np.ndarray:
        """Linear interpolation onto arbitrary times within the grid."""
        grid = np.arange(len(self.samples)) * self.dt
        return np.interp(times, grid, self.samples)

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))


def channel_key(channel_id: str | int) -> int:
    """Stable 63-bit integer key for a channel identifier."""
    if isinstance(channel_id, int):
        return channel_id
    digest = hashlib.sha256(channel_id.encode("utf8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def seed_stream(master_seed: int, run_index: int, channel_index: int) -> np.random.SeedSequence:
    """Counter-based sub-seed derivation, injective in (run, channel)."""
    return np.random.SeedSequence(master_seed, spawn_key=(run_index, channel_index))


def make_noise(
    seed: int | np.random.SeedSequence,
    channel_id: str | int,
    T: float,
    dt_noise: float,
    rms: float,
    bandwidth: float,
    mode: str = "additive",
) -> NoiseTrace:
    """Sample one channel's trace on a uniform grid covering [0, T].

    Deterministic in (seed, channel_id).  ``rms`` and ``bandwidth`` are in
    GHz, times in ns. Requires dt_noise <= 1/(8*bandwidth).
    """
    if bandwidth > 0 and dt_noise > 1.0 / (8.0 * bandwidth):
        raise NoiseGridError(
            f"dt_noise={dt_noise} too coarse for bandwidth {bandwidth} GHz; "
            f"need <= {1.0 / (8.0 * bandwidth):.4g} ns"
        )
    n = int(np.ceil(T / dt_noise)) + 2
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(
            seed.entropy, spawn_key=tuple(seed.spawn_key) + (channel_key(channel_id),)
        )
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(channel_key(channel_id),))
    if rms == 0.0:
        return NoiseTrace(channel_id, dt_noise, np.zeros(n), 0.0, bandwidth, mode)
    rng = np.random.default_rng(ss)
    white = rng.standard_normal(n)
    freqs = np.fft.rfftfreq(n, d=dt_noise)
    spectrum = np.fft.rfft(white) * np.exp(-2.0 * np.abs(freqs) / bandwidth)
    filtered = np.fft.irfft(spectrum, n=n)
    scale = np.sqrt(np.mean(filtered**2))
    samples = filtered * (rms / scale) if scale > 0 else filtered
    return NoiseTrace(channel_id, dt_noise, samples, rms, bandwidth, mode)
