"""Lens-MIMO and ULA front-end geometry and steering amplitudes.

Lengths (aperture, focal length, element spacing, lens-to-array distance)
are expressed in carrier-wavelength units so that the amplitude pattern of
a lens array at critical sampling reduces to integer-offset sinc samples.
The meters-valued carrier wavelength is carried along only for the
pathloss model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DomainError

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 28e9


class ArrayKind(Enum):
    LENS = "lens"
    ULA = "ula"


def sinc(u):
    """Normalized sinc, sin(pi*u)/(pi*u), with sinc(0) = 1."""
    return np.sinc(u)


def sinc_deriv(u, zero_tol: float = 1e-12):
    """First derivative of the normalized sinc.

    Uses the analytic value 0 at the removable singularity u = 0.
    """
    u = np.asarray(u, dtype=float)
    safe = np.where(np.abs(u) < zero_tol, 1.0, u)
    d = (np.pi * safe * np.cos(np.pi * safe) - np.sin(np.pi * safe)) / (
        np.pi * safe**2
    )
    return np.where(np.abs(u) < zero_tol, 0.0, d)


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of a lens-MIMO or ULA receive front end.

    Parameters
    ----------
    kind : ArrayKind
        Lens or uniform linear array.
    N : int
        Number of antenna elements (odd, >= 3).
    L : float
        Lens aperture in wavelength units (lens only).
    f : float
        Focal length in wavelength units (lens only, f >= L/2).
    x : float
        Distance from the rear of the lens to the array, wavelength
        units. Defaults to the focal length (critical placement).
    d_ula : float
        ULA element spacing in wavelength units.
    wavelength : float
        Carrier wavelength in meters (pathloss only).
    view_half_angle : float
        Angular field limit in radians.
    """

    kind: ArrayKind
    N: int
    L: float = 0.0
    f: float = 0.0
    x: float = 0.0
    d_ula: float = 0.5
    wavelength: float = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ
    view_half_angle: float = np.pi / 2

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise ConfigError(f"N must be odd and >= 3, got {self.N}")
        if self.kind is ArrayKind.LENS:
            if self.L <= 0:
                raise ConfigError("lens aperture L must be positive")
            if self.f < self.L / 2:
                raise ConfigError(
                    f"focal length f={self.f} below the minimum L/2={self.L / 2}"
                )
            if self.x == 0.0:
                object.__setattr__(self, "x", self.f)
        else:
            if self.d_ula <= 0:
                raise ConfigError("ULA spacing must be positive")

    @classmethod
    def lens(cls, L: float, f: float | None = None, N: int | None = None, **kw):
        """Lens array with the fair-comparison defaults N = 2L+1, f = L/2."""
        if f is None:
            f = L / 2
        if N is None:
            N = int(round(2 * L + 1))
        return cls(kind=ArrayKind.LENS, N=N, L=L, f=f, **kw)

    @classmethod
    def ula(cls, N: int, d_ula: float = 0.5, **kw):
        return cls(kind=ArrayKind.ULA, N=N, d_ula=d_ula, **kw)

    @property
    def d_lens(self) -> float:
        """Lens antenna spacing f/L in wavelength units."""
        return self.f / self.L

    @property
    def indices(self) -> np.ndarray:
        """Symmetric element indices -(N-1)/2 .. (N-1)/2."""
        half = (self.N - 1) // 2
        return np.arange(-half, half + 1)


@dataclass(frozen=True)
class SteeringAmplitude:
    """Real amplitude pattern of a lens array and its angle derivative."""

    values: np.ndarray
    derivs: np.ndarray = field(default=None)


def critical_angles(cfg: ArrayConfig) -> np.ndarray:
    """Angles whose focal points coincide with the element positions.

    Returns asin(n * d_lens / x) for symmetric indices n, ascending.
    """
    if cfg.kind is not ArrayKind.LENS:
        raise ConfigError("critical angles are defined for lens arrays only")
    s = cfg.indices * cfg.d_lens / cfg.x
    if np.any(np.abs(s) > 1 + 1e-12):
        raise DomainError(
            "critical spacing exceeds the visible region: |n*d_lens/x| > 1"
        )
    return np.arcsin(np.clip(s, -1.0, 1.0))


def critical_sines(cfg: ArrayConfig) -> np.ndarray:
    """sin of the critical angles, n * d_lens / x."""
    return cfg.indices * cfg.d_lens / cfg.x


def lens_amplitude(cfg: ArrayConfig, theta: float) -> SteeringAmplitude:
    """Amplitude pattern of the lens array for a plane wave from ``theta``.

    values[n] = (L/sqrt(x)) * sinc(L*(sin(theta_n) - sin(theta))) and
    derivs[n] is its exact derivative with respect to theta.
    """
    if cfg.kind is not ArrayKind.LENS:
        raise ConfigError("lens_amplitude requires a lens array")
    if abs(theta) > np.pi / 2 + 1e-12:
        raise DomainError(f"|theta| must be <= pi/2, got {theta}")
    u = cfg.L * (critical_sines(cfg) - np.sin(theta))
    gain = cfg.L / np.sqrt(cfg.x)
    values = gain * sinc(u)
    derivs = -gain * cfg.L * np.cos(theta) * sinc_deriv(u)
    return SteeringAmplitude(values=values, derivs=derivs)


def ula_steering(cfg: ArrayConfig, theta: float) -> np.ndarray:
    """Unit-amplitude ULA steering vector with symmetric element indexing."""
    if cfg.kind is not ArrayKind.ULA:
        raise ConfigError("ula_steering requires a ULA")
    return np.exp(1j * 2 * np.pi * cfg.d_ula * cfg.indices * np.sin(theta))
