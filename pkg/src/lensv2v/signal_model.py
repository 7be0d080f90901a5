"""Noisy array snapshot synthesis for one or more incident paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayConfig, ArrayKind, lens_amplitude, ula_steering
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PathSpec:
    """One incident path: AoA, complex channel gain, linear pathloss gain."""

    theta: float
    h: complex = 1.0 + 0j
    inv_rho: float = 1.0

    def __post_init__(self):
        if abs(np.sin(self.theta)) > 1:
            raise DomainError("invalid AoA")
        if self.inv_rho < 0:
            raise DomainError("pathloss gain must be nonnegative")


@dataclass(frozen=True)
class Snapshot:
    """Complex received vector across the array with its noise variance."""

    y: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=complex))


def synthesize(
    cfg: ArrayConfig,
    paths: list[PathSpec],
    sigma2: float,
    rng: np.random.Generator | None = None,
) -> Snapshot:
    """Superimpose the array responses of all paths and add receiver noise.

    Lens paths carry the common phase exp(-i*2*pi*x) of the lens-to-array
    distance; noise is i.i.d. circular complex Gaussian with per-element
    variance ``sigma2``.
    """
    if not paths and sigma2 <= 0:
        raise ConfigError("need at least one path or positive noise variance")
    y = np.zeros(cfg.N, dtype=complex)
    if cfg.kind is ArrayKind.LENS:
        phase = np.exp(-1j * 2 * np.pi * cfg.x)
        for p in paths:
            y += p.h * np.sqrt(p.inv_rho) * phase * lens_amplitude(cfg, p.theta).values
    else:
        for p in paths:
            y += p.h * np.sqrt(p.inv_rho) * ula_steering(cfg, p.theta)
    if sigma2 > 0:
        if rng is None:
            raise ConfigError("an RNG is required when sigma2 > 0")
        noise = rng.normal(scale=np.sqrt(sigma2 / 2), size=(cfg.N, 2))
        y = y + noise[:, 0] + 1j * noise[:, 1]
    return Snapshot(y=y, sigma2=float(sigma2))


def snr_to_sigma2(snr_db: float) -> float:
    """Per-element noise variance for a unit-power pre-array signal."""
    return 10.0 ** (-snr_db / 10.0)
