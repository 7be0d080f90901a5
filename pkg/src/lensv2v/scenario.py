"""Street-intersection vehicle placement and link geometry.

Vehicles are dropped on the lanes of a multi-road intersection by
independent per-lane Poisson point processes. A scenario exposes, per
directed vehicle pair within communication range, the true bearing-based
AoA, the link distance, and the receiver heading used as the angular
reference.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeometry, DomainError

VEHICLE_LENGTH_M = 4.7
VEHICLE_WIDTH_M = 1.8


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    w = np.mod(np.asarray(a) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if np.isscalar(a) or np.ndim(a) == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class VehiclePose:
    """Planar pose of one vehicle: position in meters, heading in [0, 2pi)."""

    p: np.ndarray
    omega: float
    length: float = VEHICLE_LENGTH_M
    width: float = VEHICLE_WIDTH_M

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2,) or not np.all(np.isfinite(p)):
            raise DomainError("vehicle position must be a finite 2-vector")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "omega", float(np.mod(self.omega, 2 * np.pi)))


@dataclass(frozen=True)
class IntersectionSpec:
    """Geometry of the intersection scenario."""

    roads: int = 3
    lanes_per_direction: int = 2
    lane_width: float = 5.0
    road_length: float = 30.0
    comm_radius: float = 50.0

    def __post_init__(self):
        for name in ("roads", "lanes_per_direction", "lane_width", "road_length", "comm_radius"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")

    @property
    def total_lanes(self) -> int:
        return self.roads * 2 * self.lanes_per_direction


class Link(NamedTuple):
    """Directed link: AoA of j measured at k in k's heading frame."""

    k: int
    j: int
    theta: float
    distance: float
    omega_rel: float


@dataclass(frozen=True)
class Scenario:
    """Immutable vehicle drop with its directed link geometry."""

    vehicles: tuple
    links: tuple
    neighbor_sets: tuple
    spec: IntersectionSpec = field(default_factory=IntersectionSpec)

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)

    def positions(self) -> np.ndarray:
        return np.array([v.p for v in self.vehicles]) if self.vehicles else np.empty((0, 2))

    def headings(self) -> np.ndarray:
        return np.array([v.omega for v in self.vehicles])

    def to_csv(self) -> str:
        """One row per vehicle: id, x, y, omega."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["id", "x", "y", "omega"])
        for i, v in enumerate(self.vehicles):
            w.writerow([i, repr(float(v.p[0])), repr(float(v.p[1])), repr(float(v.omega))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, spec: IntersectionSpec | None = None) -> "Scenario":
        spec = spec or IntersectionSpec()
        rows = list(csv.DictReader(io.StringIO(text)))
        poses = [
            VehiclePose(p=np.array([float(r["x"]), float(r["y"])]), omega=float(r["omega"]))
            for r in sorted(rows, key=lambda r: int(r["id"]))
        ]
        return build_scenario(poses, spec)


def true_aoa(p_k, p_j, omega_rel: float) -> float:
    """Geometric AoA of vehicle j seen from vehicle k.

    Bearing from k to j minus the receiver's angular reference,
    wrapped to (-pi, pi].
    """
    p_k = np.asarray(p_k, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    d = p_j - p_k
    if np.allclose(d, 0.0):
        raise DegenerateGeometry("coincident vehicle positions")
    return wrap_angle(np.arctan2(d[1], d[0]) - omega_rel)


def pathloss_inv(d: float, lam: float, zeta_db_per_km: float = 0.0) -> float:
    """Linear pathloss gain 1/rho: free space times atmospheric attenuation."""
    if d <= 0:
        raise DomainError("link distance must be positive")
    atten = 10.0 ** (-zeta_db_per_km * d / 10000.0)
    return atten * (lam / (4 * np.pi * d)) ** 2


class ArrayFace(Enum):
    FRONT = "front"
    REAR = "rear"


def facing_array(theta_global: float) -> tuple[ArrayFace, float]:
    """Map a vehicle-frame AoA onto the front or rear array's local frame."""
    t = wrap_angle(theta_global)
    if abs(t) <= np.pi / 2:
        return ArrayFace.FRONT, t
    return ArrayFace.REAR, wrap_angle(np.pi - t)


def _resolve_overlaps(s: np.ndarray, min_gap: float, length: float) -> np.ndarray:
    """Shift sorted along-lane coordinates minimally so gaps are >= min_gap."""
    s = np.sort(s)
    for i in range(1, len(s)):
        if s[i] - s[i - 1] < min_gap:
            s[i] = s[i - 1] + min_gap
    # pull the chain back if it ran off the end of the lane
    if len(s) and s[-1] > length:
        s -= min(s[-1] - length, s[0])
    return s


def _lane_frames(spec: IntersectionSpec):
    """Yield (origin_direction, heading, lateral_offset) per lane."""
    for r in range(spec.roads):
        axis = 2 * np.pi * r / spec.roads
        u = np.array([np.cos(axis), np.sin(axis)])
        v = np.array([u[1], -u[0]])  # right-hand side of the outbound direction
        for direction in (0, 1):  # 0 outbound, 1 inbound
            heading = axis if direction == 0 else axis + np.pi
            side = 1.0 if direction == 0 else -1.0
            for lane in range(spec.lanes_per_direction):
                offset = side * spec.lane_width * (0.5 + lane)
                yield u, heading, v * offset


def sample_drop(
    spec: IntersectionSpec, density: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """One Poisson drop as raw arrays: positions (n, 2) and headings (n,).

    ``density`` is in cars/km/lane; lane headings set vehicle headings;
    along-lane overlaps closer than a vehicle length are resequenced by
    minimal shift.
    """
    if density <= 0:
        raise DomainError("density must be positive")
    mean = density * spec.road_length / 1000.0
    positions, headings = [], []
    for u, heading, offset in _lane_frames(spec):
        n = rng.poisson(mean)
        if n == 0:
            continue
        s = _resolve_overlaps(
            rng.uniform(0.0, spec.road_length, size=n), VEHICLE_LENGTH_M, spec.road_length
        )
        positions.append(np.outer(s, u) + offset)
        headings.append(np.full(len(s), heading))
    if not positions:
        return np.empty((0, 2)), np.empty(0)
    return np.vstack(positions), np.concatenate(headings)


def drop_vehicles(
    spec: IntersectionSpec, density: float, rng: np.random.Generator
) -> Scenario:
    """Drop vehicles by independent per-lane Poisson point processes."""
    positions, headings = sample_drop(spec, density, rng)
    poses = [VehiclePose(p=p, omega=h) for p, h in zip(positions, headings)]
    return build_scenario(poses, spec)


def build_scenario(poses, spec: IntersectionSpec) -> Scenario:
    """Compute directed links and neighbor sets for a list of poses."""
    links = []
    n = len(poses)
    neighbors = [[] for _ in range(n)]
    for k in range(n):
        for j in range(n):
            if j == k:
                continue
            d = float(np.linalg.norm(poses[j].p - poses[k].p))
            if d == 0.0 or d > spec.comm_radius:
                continue
            omega_rel = poses[k].omega
            theta = true_aoa(poses[k].p, poses[j].p, omega_rel)
            links.append(Link(k=k, j=j, theta=theta, distance=d, omega_rel=omega_rel))
            neighbors[k].append(j)
    return Scenario(
        vehicles=tuple(poses),
        links=tuple(links),
        neighbor_sets=tuple(tuple(v) for v in neighbors),
        spec=spec,
    )
