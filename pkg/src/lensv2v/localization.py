"""Joint position and orientation recovery from measured AoAs.

Minimizes the sum of squared (optionally variance-weighted) wrapped
bearing residuals by a damped Gauss-Newton iteration with an analytic
Jacobian. The bearing-only objective is invariant under common
translation, rotation, and positive scaling of all poses, so the gauge
is fixed either by anchors (first vehicle's pose plus the second
vehicle's range) or removed after the fact by similarity alignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeometry, DomainError, GaugeDeficient
from .scenario import wrap_angle


class Feasibility(Enum):
    FEASIBLE = "feasible"
    UNDER_DETERMINED = "under_determined"


class GaugeMode(Enum):
    ANCHORED = "anchored"
    SIMILARITY_ALIGNED = "similarity_aligned"


class Measurement(NamedTuple):
    k: int
    j: int
    theta_hat: float
    sigma2_aoa: float | None = None


@dataclass(frozen=True)
class AoAMeasurementSet:
    entries: tuple
    discarded: tuple = ()

    def __post_init__(self):
        keys = [(m.k, m.j) for m in self.entries]
        if len(keys) != len(set(keys)):
            raise DomainError("duplicate (k, j) measurement")
        if set(keys) & set(self.discarded):
            raise DomainError("a link cannot be both measured and discarded")

    @property
    def n_vehicles(self) -> int:
        ids = {m.k for m in self.entries} | {m.j for m in self.entries}
        return max(ids) + 1 if ids else 0


@dataclass(frozen=True)
class AnchorSpec:
    """Gauge anchors: pose of one vehicle and the range to a second."""

    anchor_vehicle: int = 0
    anchor_pose: tuple = (0.0, 0.0, 0.0)
    range_vehicle: int = 1
    range_value: float = 1.0


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-10
    multistart_count: int = 8
    damping_init: float = 1e-3
    gauge: GaugeMode = GaugeMode.ANCHORED
    anchor_spec: AnchorSpec = field(default_factory=AnchorSpec)
    bounding_box: tuple = ((-40.0, 40.0), (-40.0, 40.0))
    seed: int = 0


@dataclass(frozen=True)
class PoseEstimate:
    """Per-vehicle (x, y, omega) with the final residual and gauge mode."""

    poses: np.ndarray  # (n_vehicles, 3)
    residual: float
    gauge: GaugeMode
    converged: bool


def feasibility_check(n_vehicles: int, n_measurements: int, n_discarded: int) -> Feasibility:
    """Counting check: remaining equations must cover 3 unknowns per vehicle."""
    if min(n_vehicles, n_measurements, n_discarded) < 0:
        raise DomainError("counts must be nonnegative")
    if n_measurements - n_discarded >= 3 * n_vehicles:
        return Feasibility.FEASIBLE
    return Feasibility.UNDER_DETERMINED


def discard_low_power(
    measurements: AoAMeasurementSet, power_map: dict, threshold: float
) -> AoAMeasurementSet:
    """Move links whose received power is below ``threshold`` into the
    discarded set (blocked-LoS gating)."""
    if threshold < 0:
        raise DomainError("threshold must be nonnegative")
    kept, dropped = [], list(measurements.discarded)
    for m in measurements.entries:
        if power_map.get((m.k, m.j), np.inf) < threshold:
            dropped.append((m.k, m.j))
        else:
            kept.append(m)
    return AoAMeasurementSet(entries=tuple(kept), discarded=tuple(dropped))


def objective(measurements: AoAMeasurementSet, poses: np.ndarray, weighted: bool = False) -> float:
    """Sum of squared wrapped bearing residuals at the given poses."""
    poses = np.asarray(poses, dtype=float)
    total = 0.0
    for m in measurements.entries:
        d = poses[m.j, :2] - poses[m.k, :2]
        r = wrap_angle(np.arctan2(d[1], d[0]) - poses[m.k, 2] - m.theta_hat)
        w = 1.0 / m.sigma2_aoa if weighted else 1.0
        total += w * r * r
    return float(total)


class _Parameterization:
    """Maps the reduced parameter vector to poses under the anchor gauge.

    Vehicle a is pinned at the anchor pose; vehicle b keeps its distance
    to a fixed and contributes only its direction angle phi; all other
    vehicles contribute (x, y, omega).
    """

    def __init__(self, n_vehicles: int, anchors: AnchorSpec):
        self.nv = n_vehicles
        self.a = anchors.anchor_vehicle
        self.b = anchors.range_vehicle
        self.pose_a = np.asarray(anchors.anchor_pose, dtype=float)
        self.r = float(anchors.range_value)
        if self.a == self.b or not (0 <= self.a < n_vehicles and 0 <= self.b < n_vehicles):
            raise GaugeDeficient("anchor and range vehicles must be distinct and present")
        if self.r <= 0:
            raise GaugeDeficient("anchor range must be positive")
        self.n_params = 3 * n_vehicles - 4

    def slot(self, vehicle: int) -> int:
        """Start offset of a free vehicle's (x, y, omega) triple."""
        free_before = sum(
            3 if v not in (self.a, self.b) else (2 if v == self.b else 0)
            for v in range(vehicle)
        )
        return free_before

    def to_poses(self, params: np.ndarray) -> np.ndarray:
        poses = np.zeros((self.nv, 3))
        for v in range(self.nv):
            s = self.slot(v)
            if v == self.a:
                poses[v] = self.pose_a
            elif v == self.b:
                phi, om = params[s], params[s + 1]
                poses[v, 0] = self.pose_a[0] + self.r * np.cos(phi)
                poses[v, 1] = self.pose_a[1] + self.r * np.sin(phi)
                poses[v, 2] = om
            else:
                poses[v] = params[s : s + 3]
        return poses

    def from_poses(self, poses: np.ndarray) -> np.ndarray:
        params = np.zeros(self.n_params)
        for v in range(self.nv):
            s = self.slot(v)
            if v == self.a:
                continue
            if v == self.b:
                d = poses[v, :2] - self.pose_a[:2]
                params[s] = np.arctan2(d[1], d[0])
                params[s + 1] = poses[v, 2]
            else:
                params[s : s + 3] = poses[v]
        return params

    def position_jacobian(self, params: np.ndarray, vehicle: int) -> tuple[int, np.ndarray]:
        """Columns and d(position)/d(params) block for one vehicle."""
        s = self.slot(vehicle)
        if vehicle == self.a:
            return s, np.zeros((2, 0))
        if vehicle == self.b:
            phi = params[s]
            return s, np.array([[-self.r * np.sin(phi)], [self.r * np.cos(phi)]])
        return s, np.eye(2)


def _residuals_and_jacobian(measurements, param, pz, weighted):
    poses = pz.to_poses(param)
    m_count = len(measurements.entries)
    r = np.zeros(m_count)
    J = np.zeros((m_count, pz.n_params))
    for i, m in enumerate(measurements.entries):
        pk, pj = poses[m.k], poses[m.j]
        dx, dy = pj[0] - pk[0], pj[1] - pk[1]
        d2 = dx * dx + dy * dy
        if d2 == 0:
            raise DegenerateGeometry("coincident vehicles during iteration")
        w = 1.0 / np.sqrt(m.sigma2_aoa) if weighted else 1.0
        r[i] = w * wrap_angle(np.arctan2(dy, dx) - pk[2] - m.theta_hat)
        gk = np.array([dy / d2, -dx / d2])  # d/d(x_k, y_k)
        gj = -gk
        sk, Bk = pz.position_jacobian(param, m.k)
        if Bk.shape[1]:
            J[i, sk : sk + Bk.shape[1]] += w * gk @ Bk
        sj, Bj = pz.position_jacobian(param, m.j)
        if Bj.shape[1]:
            J[i, sj : sj + Bj.shape[1]] += w * gj @ Bj
        # receiver heading
        if m.k == pz.b:
            J[i, pz.slot(m.k) + 1] += -w
        elif m.k != pz.a:
            J[i, pz.slot(m.k) + 2] += -w
    return r, J


def _levenberg_marquardt(measurements, param0, pz, opts, weighted):
    param = param0.copy()
    r, J = _residuals_and_jacobian(measurements, param, pz, weighted)
    cost = float(r @ r)
    lam = opts.damping_init
    converged = False
    for _ in range(opts.max_iterations):
        g = J.T @ r
        if np.max(np.abs(g)) <= opts.gradient_tolerance:
            converged = True
            break
        H = J.T @ J
        step_ok = False
        for _ in range(50):
            try:
                delta = np.linalg.solve(H + lam * np.eye(pz.n_params), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            cand = param + delta
            rc, Jc = _residuals_and_jacobian(measurements, cand, pz, weighted)
            cc = float(rc @ rc)
            if cc < cost:
                param, r, J, cost = cand, rc, Jc, cc
                lam = max(lam / 3.0, 1e-12)
                step_ok = True
                break
            lam *= 4.0
        if not step_ok:
            converged = np.max(np.abs(J.T @ r)) <= max(opts.gradient_tolerance, 1e-8 * (1 + cost))
            break
    return param, cost, converged


def _linear_init(measurements: AoAMeasurementSet, pz: _Parameterization) -> np.ndarray | None:
    """Bearing-graph initialization.

    Relative headings follow from reciprocal measurement pairs; with
    headings fixed, each bearing is a linear collinearity constraint on
    the positions, solved by least squares with the anchors substituted.
    """
    nv = pz.nv
    meas = {(m.k, m.j): m.theta_hat for m in measurements.entries}
    omega = np.full(nv, np.nan)
    omega[pz.a] = pz.pose_a[2]
    frontier = [pz.a]
    while frontier:
        k = frontier.pop()
        for (a, b), th in meas.items():
            for src, dst in ((a, b), (b, a)):
                if src == k and np.isnan(omega[dst]) and (dst, src) in meas:
                    omega[dst] = np.mod(
                        meas[(src, dst)] + omega[src] + np.pi - meas[(dst, src)], 2 * np.pi
                    )
                    frontier.append(dst)
    if np.any(np.isnan(omega)):
        return None
    rows, rhs = [], []
    for (k, j), th in meas.items():
        b = th + omega[k]
        row = np.zeros(2 * nv)
        row[2 * j] = np.sin(b)
        row[2 * j + 1] = -np.cos(b)
        row[2 * k] = -np.sin(b)
        row[2 * k + 1] = np.cos(b)
        rows.append(row)
        rhs.append(0.0)
    # substitute the pose anchor and the range anchor's bearing placement
    A = np.array(rows)
    y = np.array(rhs)
    fixed = {2 * pz.a: pz.pose_a[0], 2 * pz.a + 1: pz.pose_a[1]}
    if (pz.a, pz.b) in meas:
        b01 = meas[(pz.a, pz.b)] + omega[pz.a]
        fixed[2 * pz.b] = pz.pose_a[0] + pz.r * np.cos(b01)
        fixed[2 * pz.b + 1] = pz.pose_a[1] + pz.r * np.sin(b01)
    free_cols = [c for c in range(2 * nv) if c not in fixed]
    if free_cols:
        y = y - A[:, list(fixed)] @ np.array([fixed[c] for c in fixed])
        sol, *_ = np.linalg.lstsq(A[:, free_cols], y, rcond=None)
    else:
        sol = np.array([])
    pos = np.zeros(2 * nv)
    for c, val in fixed.items():
        pos[c] = val
    pos[free_cols] = sol
    poses = np.column_stack([pos[0::2], pos[1::2], omega])
    # degenerate collapse: fall back to random starts
    if np.linalg.norm(poses[pz.b, :2] - pz.pose_a[:2]) < 1e-9:
        return None
    return pz.from_poses(poses)


def _solve(measurements: AoAMeasurementSet, opts: SolverOptions, weighted: bool) -> PoseEstimate:
    nv = measurements.n_vehicles
    if nv < 2:
        raise GaugeDeficient("need at least two vehicles")
    n_free = 3 * nv - 4
    if len(measurements.entries) < n_free:
        raise DomainError(
            f"under-determined: {len(measurements.entries)} equations for {n_free} unknowns"
        )
    anchors = opts.anchor_spec
    if opts.gauge is GaugeMode.SIMILARITY_ALIGNED:
        # arbitrary internal gauge, removed later by alignment
        anchors = AnchorSpec()
    pz = _Parameterization(nv, anchors)
    rng = np.random.default_rng(opts.seed)
    starts = []
    init = _linear_init(measurements, pz)
    if init is not None:
        starts.append(init)
    (x0, x1), (y0, y1) = opts.bounding_box
    while len(starts) < max(opts.multistart_count, 1):
        poses = np.column_stack(
            [
                rng.uniform(x0, x1, nv),
                rng.uniform(y0, y1, nv),
                rng.uniform(0, 2 * np.pi, nv),
            ]
        )
        starts.append(pz.from_poses(poses))
    best = None
    for s in starts:
        param, cost, converged = _levenberg_marquardt(measurements, s, pz, opts, weighted)
        if best is None or cost < best[1]:
            best = (param, cost, converged)
    param, cost, converged = best
    poses = pz.to_poses(param)
    poses[:, 2] = np.mod(poses[:, 2], 2 * np.pi)
    return PoseEstimate(poses=poses, residual=cost, gauge=opts.gauge, converged=converged)


def solve_se(measurements: AoAMeasurementSet, opts: SolverOptions | None = None) -> PoseEstimate:
    """Unweighted sensing-equation least squares over poses."""
    return _solve(measurements, opts or SolverOptions(), weighted=False)


def solve_ml(measurements: AoAMeasurementSet, opts: SolverOptions | None = None) -> PoseEstimate:
    """Variance-weighted (maximum likelihood) pose estimate.

    Every measurement must carry its AoA noise variance; infinite
    variances contribute zero weight.
    """
    finite = []
    for m in measurements.entries:
        if m.sigma2_aoa is None:
            raise DomainError("solve_ml requires sigma2_aoa on every measurement")
        if np.isfinite(m.sigma2_aoa):
            finite.append(m)
    reduced = replace(measurements, entries=tuple(finite), discarded=())
    return _solve(reduced, opts or SolverOptions(), weighted=True)


def align_similarity(estimate: PoseEstimate, truth: np.ndarray) -> PoseEstimate:
    """Remove the similarity gauge against ground truth.

    Least-squares translation + rotation + positive scale mapping the
    estimated positions onto the true ones; headings are co-rotated.
    """
    truth = np.asarray(truth, dtype=float)
    P = estimate.poses[:, :2]
    if P.shape[0] < 2:
        raise DegenerateGeometry("need at least two vehicles to align")
    Q = truth[:, :2]
    pc, qc = P.mean(axis=0), Q.mean(axis=0)
    P0, Q0 = P - pc, Q - qc
    denom = float(np.sum(P0**2))
    if denom < 1e-18:
        raise DegenerateGeometry("estimated positions coincide")
    # planar Procrustes via complex cross-correlation (rotation only)
    zp = P0[:, 0] + 1j * P0[:, 1]
    zq = Q0[:, 0] + 1j * Q0[:, 1]
    cross = np.vdot(zp, zq)  # sum conj(zp) * zq
    ang = float(np.angle(cross))
    scale = float(np.abs(cross)) / denom
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    new_pos = scale * P0 @ R.T + qc
    new_om = np.mod(estimate.poses[:, 2] + ang, 2 * np.pi)
    poses = np.column_stack([new_pos, new_om])
    return PoseEstimate(
        poses=poses,
        residual=estimate.residual,
        gauge=GaugeMode.SIMILARITY_ALIGNED,
        converged=estimate.converged,
    )
