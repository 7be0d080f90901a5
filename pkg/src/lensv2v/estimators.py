"""AoA estimation from array snapshots.

Implements the low-complexity lens estimators (strongest-antenna
selection and its two-antenna ratio refinement), their successive
cancellation extension for multiple paths, and the MUSIC / matched-filter
grid baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .array_model import ArrayConfig, ArrayKind, lens_amplitude, ula_steering
from .errors import DomainError, RankError
from .signal_model import Snapshot


class Method(Enum):
    MS = "ms"
    R2SA = "r2sa"
    R2SA_SIC = "r2sa_sic"
    MUSIC = "music"
    ML_GRID = "ml_grid"


@dataclass(frozen=True)
class AoAEstimate:
    theta_hat: float
    n_star: int
    e_hat: float
    method: Method
    low_confidence: bool = False


@dataclass(frozen=True)
class Dictionary:
    """Precomputed steering responses on a uniform angle grid."""

    grid: np.ndarray
    patterns: np.ndarray  # (len(grid), N) complex

    @classmethod
    def build(cls, cfg: ArrayConfig, resolution_deg: float = 0.1) -> "Dictionary":
        grid = np.deg2rad(np.arange(-90.0, 90.0 + resolution_deg / 2, resolution_deg))
        if cfg.kind is ArrayKind.LENS:
            phase = np.exp(-1j * 2 * np.pi * cfg.x)
            pats = np.array([phase * lens_amplitude(cfg, t).values for t in grid])
        else:
            pats = np.array([ula_steering(cfg, t) for t in grid])
        return cls(grid=grid, patterns=pats)


def max_select(y: Snapshot) -> int:
    """Symmetric index of the strongest element.

    Ties break toward smaller |n|, then smaller n.
    """
    mags = np.abs(np.asarray(y.y))
    if mags.size == 0:
        raise DomainError("empty snapshot")
    half = (mags.size - 1) // 2
    n = np.arange(-half, half + 1)
    best = mags.max()
    cands = n[mags >= best - 1e-15 * max(best, 1.0)]
    return int(min(cands, key=lambda v: (abs(v), v)))


def ms_estimate(cfg: ArrayConfig, n_star: int) -> AoAEstimate:
    """Quantize the AoA to the strongest element's critical angle."""
    s = n_star / cfg.L
    if abs(s) > 1:
        raise DomainError("selected element maps outside the visible region")
    return AoAEstimate(theta_hat=float(np.arcsin(s)), n_star=n_star, e_hat=0.0, method=Method.MS)


def r2sa(cfg: ArrayConfig, y: Snapshot) -> AoAEstimate:
    """Ratio-of-two-strongest-antennas AoA estimate.

    Refines the strongest-element angle with the fractional offset
    recovered from the magnitude ratio against the stronger adjacent
    element; falls back to the quantized estimate at the domain edge.
    """
    mags = np.abs(np.asarray(y.y))
    half = (mags.size - 1) // 2
    n_star = max_select(y)
    i_star = n_star + half
    left = mags[i_star - 1] if i_star - 1 >= 0 else -np.inf
    right = mags[i_star + 1] if i_star + 1 < mags.size else -np.inf
    if left == -np.inf and right == -np.inf:
        e = 0.0
    elif right >= left:
        if right == 0.0:
            e = 0.0
        else:
            ratio = mags[i_star] / right
            e = 1.0 / (ratio + 1.0)
    else:
        if left == 0.0:
            e = 0.0
        else:
            ratio = mags[i_star] / left
            e = -1.0 / (ratio + 1.0)
    e = float(np.clip(e, -0.5, 0.5))
    s = (n_star + e) / cfg.L
    if abs(s) > 1:
        ms = ms_estimate(cfg, n_star)
        return AoAEstimate(theta_hat=ms.theta_hat, n_star=n_star, e_hat=0.0, method=Method.R2SA)
    return AoAEstimate(theta_hat=float(np.arcsin(s)), n_star=n_star, e_hat=e, method=Method.R2SA)


def sic_multi(
    cfg: ArrayConfig,
    y: Snapshot,
    J: int,
    paper_update: bool = False,
) -> list[AoAEstimate]:
    """Estimate J AoAs by ratio refinement with successive cancellation.

    After each estimate the matched path is removed from the residual by
    least-squares projection onto the unit-normalized lens pattern.
    ``paper_update`` switches to the elementwise-product cancellation for
    compatibility; it does not remove the path's full energy.
    """
    if not 1 <= J <= cfg.N:
        raise DomainError("target count J must be in [1, N]")
    residual = np.asarray(y.y, dtype=complex).copy()
    noise_floor = y.sigma2 * cfg.N
    out = []
    for _ in range(J):
        low = float((residual @ residual.conj()).real) < noise_floor
        est = r2sa(cfg, Snapshot(y=residual, sigma2=y.sigma2))
        out.append(
            AoAEstimate(
                theta_hat=est.theta_hat,
                n_star=est.n_star,
                e_hat=est.e_hat,
                method=Method.R2SA_SIC,
                low_confidence=low,
            )
        )
        pattern = lens_amplitude(cfg, est.theta_hat).values.astype(complex)
        pattern *= np.exp(-1j * 2 * np.pi * cfg.x)
        if paper_update:
            unit = pattern / np.max(np.abs(pattern))
            residual = residual - residual * unit
        else:
            unit = pattern / np.linalg.norm(pattern)
            residual = residual - (unit.conj() @ residual) * unit
    return out


def multi_no_sic(cfg: ArrayConfig, y: Snapshot, J: int) -> list[AoAEstimate]:
    """Estimate J AoAs from the raw snapshot without cancellation.

    Picks successive strongest elements (excluding already-used elements
    and their immediate neighbors) and ratio-refines each on the
    unmodified snapshot.
    """
    if not 1 <= J <= cfg.N:
        raise DomainError("target count J must be in [1, N]")
    mags = np.abs(np.asarray(y.y)).copy()
    half = (cfg.N - 1) // 2
    out = []
    masked = np.zeros(cfg.N, dtype=bool)
    for _ in range(J):
        avail = np.where(~masked)[0]
        i_star = avail[np.argmax(mags[avail])]
        n_star = int(i_star - half)
        left = mags[i_star - 1] if i_star - 1 >= 0 and not masked[i_star - 1] else -np.inf
        right = mags[i_star + 1] if i_star + 1 < cfg.N and not masked[i_star + 1] else -np.inf
        if left == -np.inf and right == -np.inf:
            e = 0.0
        elif right >= left:
            e = 1.0 / (mags[i_star] / right + 1.0) if right > 0 else 0.0
        else:
            e = -1.0 / (mags[i_star] / left + 1.0) if left > 0 else 0.0
        e = float(np.clip(e, -0.5, 0.5))
        s = (n_star + e) / cfg.L
        theta = float(np.arcsin(np.clip(s, -1.0, 1.0)))
        out.append(AoAEstimate(theta_hat=theta, n_star=n_star, e_hat=e, method=Method.R2SA))
        lo, hi = max(0, i_star - 1), min(cfg.N, i_star + 2)
        masked[lo:hi] = True
    return out


def music(
    cfg: ArrayConfig,
    snapshots: list[Snapshot],
    J: int,
    dictionary: Dictionary,
) -> list[AoAEstimate]:
    """Subspace baseline: noise-subspace pseudo-spectrum peak search."""
    if len(snapshots) < J + 1:
        raise DomainError("need at least J+1 snapshots")
    Y = np.array([s.y for s in snapshots])
    R = Y.T @ Y.conj() / len(snapshots)
    if np.linalg.matrix_rank(R) < J:
        raise RankError("sample covariance rank below the source count")
    w, v = np.linalg.eigh(R)
    # ascending eigenvalues: last J are the signal subspace
    low_conf = bool(w[-J] <= 3.0 * np.mean(w[: cfg.N - J])) if cfg.N > J else False
    En = v[:, : cfg.N - J]
    proj = En.conj().T @ dictionary.patterns.T  # (N-J, grid)
    denom = np.sum(np.abs(proj) ** 2, axis=0)
    norms = np.sum(np.abs(dictionary.patterns) ** 2, axis=1)
    spectrum = norms / np.maximum(denom, 1e-30)
    peaks = _local_peaks(spectrum)
    order = peaks[np.argsort(spectrum[peaks])[::-1]]
    chosen = list(order[:J])
    if len(chosen) < J:
        extra = np.argsort(spectrum)[::-1]
        for g in extra:
            if g not in chosen:
                chosen.append(int(g))
            if len(chosen) == J:
                break
    out = []
    for g in chosen:
        theta = float(dictionary.grid[g])
        out.append(
            AoAEstimate(
                theta_hat=theta,
                n_star=int(round(cfg.L * np.sin(theta))) if cfg.kind is ArrayKind.LENS else 0,
                e_hat=0.0,
                method=Method.MUSIC,
                low_confidence=low_conf,
            )
        )
    return out


def _local_peaks(spectrum: np.ndarray) -> np.ndarray:
    s = spectrum
    interior = np.where((s[1:-1] >= s[:-2]) & (s[1:-1] >= s[2:]))[0] + 1
    edges = []
    if len(s) >= 2 and s[0] > s[1]:
        edges.append(0)
    if len(s) >= 2 and s[-1] > s[-2]:
        edges.append(len(s) - 1)
    return np.array(sorted(set(interior.tolist() + edges)), dtype=int)


def ml_grid(cfg: ArrayConfig, y: Snapshot, dictionary: Dictionary) -> AoAEstimate:
    """Matched-filter maximization over the dictionary grid."""
    corr = np.abs(dictionary.patterns.conj() @ np.asarray(y.y)) ** 2
    norms = np.sum(np.abs(dictionary.patterns) ** 2, axis=1)
    g = int(np.argmax(corr / norms))
    theta = float(dictionary.grid[g])
    return AoAEstimate(
        theta_hat=theta,
        n_star=int(round(cfg.L * np.sin(theta))) if cfg.kind is ArrayKind.LENS else 0,
        e_hat=0.0,
        method=Method.ML_GRID,
    )


def ml_refined(cfg: ArrayConfig, y: Snapshot, dictionary: Dictionary) -> AoAEstimate:
    """Matched-filter maximization with continuous local refinement.

    Grid argmax as in ``ml_grid``, then a golden-section search of the
    continuous correlation metric within one grid step of the peak.
    """
    yv = np.asarray(y.y)
    corr = np.abs(dictionary.patterns.conj() @ yv) ** 2
    norms = np.sum(np.abs(dictionary.patterns) ** 2, axis=1)
    g = int(np.argmax(corr / norms))
    step = dictionary.grid[1] - dictionary.grid[0] if len(dictionary.grid) > 1 else 1e-3

    if cfg.kind is ArrayKind.LENS:
        def metric(theta):
            a = lens_amplitude(cfg, theta).values
            return np.abs(a @ yv) ** 2 / (a @ a)
    else:
        def metric(theta):
            a = ula_steering(cfg, theta)
            return np.abs(a.conj() @ yv) ** 2 / cfg.N

    lo = max(float(dictionary.grid[0]), dictionary.grid[g] - step)
    hi = min(float(dictionary.grid[-1]), dictionary.grid[g] + step)
    invphi = (np.sqrt(5.0) - 1) / 2
    a_, b_ = lo, hi
    c_ = b_ - invphi * (b_ - a_)
    d_ = a_ + invphi * (b_ - a_)
    fc, fd = metric(c_), metric(d_)
    for _ in range(60):
        if fc > fd:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - invphi * (b_ - a_)
            fc = metric(c_)
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + invphi * (b_ - a_)
            fd = metric(d_)
    theta = float(0.5 * (a_ + b_))
    return AoAEstimate(
        theta_hat=theta,
        n_star=int(round(cfg.L * np.sin(theta))) if cfg.kind is ArrayKind.LENS else 0,
        e_hat=0.0,
        method=Method.ML_GRID,
    )


def r2sa_opcount(N: int, K: int) -> int:
    """Multiplication count of the ratio estimator with K cancellation
    stages: K*(2N+2)."""
    if K < 0 or N < 1:
        raise DomainError("N >= 1 and K >= 0 required")
    return K * (2 * N + 2)
