"""Analytic estimation bounds.

AoA variance bounds for ULA and lens arrays, the closed-form lens bound
at critical sampling with its upper/lower sandwich, the lens-vs-ULA
superiority condition, and the position/orientation Fisher information
and error bounds.

Two lens accounting conventions coexist for the energy of the pattern
derivative: the full two-sided sum over all elements (used by the exact
variance bound) and the per-side sum that counts each symmetric pair of
elements once (used by the closed-form bound so that it sits strictly
inside its printed sandwich). The two differ by a factor of two at a
focused angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .array_model import ArrayConfig, critical_sines, lens_amplitude, sinc, sinc_deriv
from .errors import SingularFim, SingularGeometry
from .scenario import Scenario

_COS_TOL = 1e-9


class Mu2Convention(Enum):
    TWO_SIDED = "two_sided"
    PER_SIDE = "per_side"


@dataclass(frozen=True)
class MuVectors:
    """Normalized lens pattern and its angle-derivative direction."""

    mu1: np.ndarray
    mu2: np.ndarray

    def mu2_energy(self, convention: Mu2Convention = Mu2Convention.PER_SIDE) -> float:
        e = float(self.mu2 @ self.mu2)
        if convention is Mu2Convention.PER_SIDE:
            return e / 2.0
        return e


def mu_vectors(cfg: ArrayConfig, theta: float) -> MuVectors:
    """Pattern vectors at critical sampling: amplitudes factor as
    a = (L/sqrt(f)) mu1 and da/dtheta = (L^2/sqrt(f)) cos(theta) mu2."""
    u = cfg.L * (critical_sines(cfg) - np.sin(theta))
    return MuVectors(mu1=sinc(u), mu2=-sinc_deriv(u))


def crlb_ula(cfg: ArrayConfig, theta: float, sigma2: float, textbook: bool = False) -> float:
    """AoA variance bound of an N-element ULA at angle ``theta``.

    The default evaluates the printed closed form with the spacing in
    wavelength units; ``textbook`` adds the (2*pi)^2 phase-sensitivity
    factor of the standard narrowband bound.
    """
    c = np.cos(theta)
    if abs(c) < _COS_TOL:
        raise SingularGeometry("ULA bound diverges at endfire")
    den = cfg.N * (cfg.N**2 - 1) * cfg.d_ula**2 * c**2
    if textbook:
        den *= (2 * np.pi) ** 2
    return 6.0 * sigma2 / den


def crlb_lens(cfg: ArrayConfig, theta: float, sigma2: float) -> float:
    """AoA variance bound of the lens array from the joint gain-angle
    information determinant, using the exact amplitude derivatives."""
    amp = lens_amplitude(cfg, theta)
    a, da = amp.values, amp.derivs
    saa = a @ a
    sdd = da @ da
    sad = a @ da
    den = saa * sdd - sad**2
    if den <= 1e-300:
        raise SingularGeometry("degenerate amplitude pattern")
    return 0.5 * sigma2 * saa / den


def crlb_lens_simplified(
    cfg: ArrayConfig,
    theta: float,
    sigma2: float,
    convention: Mu2Convention = Mu2Convention.PER_SIDE,
) -> float:
    """Closed-form lens AoA bound at critical sampling (x = f).

    f*sigma^2 / (2 L^4 cos^2(theta) * ||mu2||^2), with the derivative
    energy taken per the chosen convention (per-side by default, which
    keeps the value strictly inside ``lens_crlb_bounds``).
    """
    c = np.cos(theta)
    if abs(c) < _COS_TOL:
        raise SingularGeometry("lens bound diverges at endfire")
    e2 = mu_vectors(cfg, theta).mu2_energy(convention)
    if e2 <= 0:
        raise SingularGeometry("vanishing derivative energy")
    return cfg.f * sigma2 / (2.0 * cfg.L**4 * c**2 * e2)


def lens_crlb_bounds(cfg: ArrayConfig, theta: float, sigma2: float) -> tuple[float, float]:
    """Closed-form (lower, upper) sandwich of the lens AoA bound."""
    c = np.cos(theta)
    if abs(c) < _COS_TOL:
        raise SingularGeometry("bounds diverge at endfire")
    base = cfg.f * sigma2 / (cfg.L**4 * c**2)
    return base / 4.0, base / 2.0


def superiority_focal_limit(L: float, lambda_u: float = 1.0) -> float:
    """Largest focal length for which the lens bound stays at or below the
    ULA bound with matched element count N = 2L+1 and half-wave spacing."""
    return 12.0 * L**3 / ((2 * L + lambda_u) * (L + lambda_u) * lambda_u**4)


class FimVariant(Enum):
    PAPER_EXACT = "paper_exact"
    TEXTBOOK = "textbook"


@dataclass(frozen=True)
class Fim:
    """Fisher information over stacked parameters [x | y | omega]."""

    matrix: np.ndarray
    variant: FimVariant
    n_vehicles: int

    def position_indices(self) -> np.ndarray:
        return np.arange(2 * self.n_vehicles)

    def orientation_indices(self) -> np.ndarray:
        return np.arange(2 * self.n_vehicles, 3 * self.n_vehicles)


@dataclass(frozen=True)
class PebReport:
    peb_p: float
    peb_omega: float


def build_fim(scenario: Scenario, sigma_map: dict, variant: FimVariant = FimVariant.PAPER_EXACT) -> Fim:
    """Assemble the localization FIM from per-link AoA variances.

    ``sigma_map`` maps (k, j) to the AoA noise variance of that link.
    The paper-exact variant accumulates only each receiver's own diagonal
    entries with the constant 1/(sqrt(2*pi)*sigma^3); the textbook
    variant is the Gauss-Markov form J^T diag(1/sigma^2) J with the full
    geometric Jacobian.
    """
    nv = scenario.n_vehicles
    F = np.zeros((3 * nv, 3 * nv))

    def idx(axis, vehicle):
        return axis * nv + vehicle

    for link in scenario.links:
        k, j = link.k, link.j
        s2 = sigma_map[(k, j)]
        if link.distance == 0:
            raise SingularGeometry("zero-distance link")
        dx = scenario.vehicles[j].p[0] - scenario.vehicles[k].p[0]
        dy = scenario.vehicles[j].p[1] - scenario.vehicles[k].p[1]
        d2 = link.distance**2
        if variant is FimVariant.PAPER_EXACT:
            A = 1.0 / (np.sqrt(2 * np.pi) * s2**1.5)
            F[idx(0, k), idx(0, k)] += A * dy**2 / d2**2
            F[idx(1, k), idx(1, k)] += A * dx**2 / d2**2
            F[idx(0, k), idx(1, k)] += A * dx * dy / d2**2
            F[idx(1, k), idx(0, k)] += A * dx * dy / d2**2
            F[idx(0, k), idx(2, k)] += -A * dy / d2
            F[idx(2, k), idx(0, k)] += -A * dy / d2
            F[idx(1, k), idx(2, k)] += -A * dx / d2
            F[idx(2, k), idx(1, k)] += -A * dx / d2
            F[idx(2, k), idx(2, k)] += A
        else:
            w = 1.0 / s2
            grad = np.zeros(3 * nv)
            grad[idx(0, k)] = dy / d2
            grad[idx(1, k)] = -dx / d2
            grad[idx(2, k)] = -1.0
            grad[idx(0, j)] = -dy / d2
            grad[idx(1, j)] = dx / d2
            F += w * np.outer(grad, grad)
    return Fim(matrix=F, variant=variant, n_vehicles=nv)


def peb(
    fim: Fim,
    fixed: tuple = (),
    constraints: tuple = (),
    cond_threshold: float = 1e12,
) -> PebReport:
    """Position and orientation error bounds from the FIM inverse.

    ``fixed`` lists parameter indices pinned by anchors; ``constraints``
    are additional unit directions in parameter space removed from the
    estimable subspace (e.g. the radial direction of a fixed-range
    anchor). The bound is the trace of the inverse information restricted
    to the remaining subspace.
    """
    n = fim.matrix.shape[0]
    removed = []
    for i in fixed:
        e = np.zeros(n)
        e[i] = 1.0
        removed.append(e)
    removed.extend(np.asarray(c, dtype=float) for c in constraints)
    if removed:
        R = np.array(removed).T
        q, _ = np.linalg.qr(np.hstack([R, np.eye(n)]))
        U = q[:, R.shape[1] :]
        Fr = U.T @ fim.matrix @ U
    else:
        U = np.eye(n)
        Fr = fim.matrix
    if Fr.size and np.linalg.cond(Fr) > cond_threshold:
        raise SingularFim("FIM is singular or near-singular (gauge deficiency?)")
    C = U @ np.linalg.inv(Fr) @ U.T if Fr.size else np.zeros((n, n))
    var = np.diag(C)
    peb_p = float(np.sqrt(np.sum(var[fim.position_indices()])))
    peb_omega = float(np.sqrt(np.sum(var[fim.orientation_indices()])))
    return PebReport(peb_p=peb_p, peb_omega=peb_omega)
