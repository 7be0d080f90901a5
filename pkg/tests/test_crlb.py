import numpy as np
import pytest

from lensv2v.array_model import ArrayConfig
from lensv2v.crlb import (
    FimVariant,
    Mu2Convention,
    build_fim,
    crlb_lens,
    crlb_lens_simplified,
    crlb_ula,
    lens_crlb_bounds,
    mu_vectors,
    peb,
    superiority_focal_limit,
)
from lensv2v.errors import SingularFim, SingularGeometry
from lensv2v.scenario import IntersectionSpec, VehiclePose, build_scenario


def test_ula_closed_form():
    cfg = ArrayConfig.ula(N=31)
    v = crlb_ula(cfg, 0.0, 1.0)
    assert v == pytest.approx(6.0 / (31 * (31**2 - 1) * 0.25))
    # textbook variant adds the (2 pi)^2 phase factor
    assert crlb_ula(cfg, 0.0, 1.0, textbook=True) == pytest.approx(v / (2 * np.pi) ** 2)


def test_ula_endfire_singular():
    cfg = ArrayConfig.ula(N=15)
    with pytest.raises(SingularGeometry):
        crlb_ula(cfg, np.pi / 2, 1.0)


def test_crlb_scales_with_noise():
    cfg = ArrayConfig.lens(L=15.0, f=7.5, N=31)
    assert crlb_lens(cfg, 0.2, 2.0) == pytest.approx(2 * crlb_lens(cfg, 0.2, 1.0))
    assert crlb_lens_simplified(cfg, 0.2, 2.0) == pytest.approx(
        2 * crlb_lens_simplified(cfg, 0.2, 1.0)
    )


def test_simplified_two_sided_matches_full():
    # with the full two-sided derivative energy the closed form tracks the
    # exact determinant bound closely away from endfire
    for N in (31, 61):
        L = (N - 1) / 2
        cfg = ArrayConfig.lens(L=L, f=L / 2, N=N)
        for theta in np.deg2rad([-50, -20, 0, 15, 45]):
            full = crlb_lens(cfg, theta, 1.0)
            simp = crlb_lens_simplified(cfg, theta, 1.0, Mu2Convention.TWO_SIDED)
            assert simp == pytest.approx(full, rel=0.05)


def test_sandwich_contains_default_convention():
    cfg = ArrayConfig.lens(L=15.0, f=7.5, N=31)
    for theta in np.deg2rad([-55, 0, 40]):
        lo, hi = lens_crlb_bounds(cfg, theta, 1.0)
        assert lo < crlb_lens_simplified(cfg, theta, 1.0) < hi
        assert hi == pytest.approx(2 * lo)


def test_mu_identities():
    cfg = ArrayConfig.lens(L=30.0, f=15.0, N=61)
    mv = mu_vectors(cfg, 0.21)
    assert mv.mu1 @ mv.mu1 == pytest.approx(1.0, abs=0.05)
    e_per_side = mv.mu2_energy(Mu2Convention.PER_SIDE)
    assert 1.0 < e_per_side < 2.0
    assert mv.mu2_energy(Mu2Convention.TWO_SIDED) == pytest.approx(2 * e_per_side)


def test_superiority_limit_value():
    # L=10: 12 L^3 / ((2L+1)(L+1)) = 12000/231
    assert superiority_focal_limit(10.0) == pytest.approx(12000.0 / 231.0)
    assert superiority_focal_limit(10.0) > 5 * 10.0


def _two_vehicle_scene():
    spec = IntersectionSpec()
    poses = [
        VehiclePose(p=np.array([0.0, 0.0]), omega=0.0),
        VehiclePose(p=np.array([10.0, 5.0]), omega=np.pi),
    ]
    return build_scenario(poses, spec)


def test_fim_paper_exact_entries():
    sc = _two_vehicle_scene()
    s2 = 1e-4
    smap = {(l.k, l.j): s2 for l in sc.links}
    fim = build_fim(sc, smap, FimVariant.PAPER_EXACT)
    A = 1.0 / (np.sqrt(2 * np.pi) * s2**1.5)
    dx, dy, d2 = 10.0, 5.0, 125.0
    nv = 2
    F = fim.matrix
    assert F[0, 0] == pytest.approx(A * dy**2 / d2**2)
    assert F[nv, nv] == pytest.approx(A * dx**2 / d2**2)
    assert F[0, nv] == pytest.approx(A * dx * dy / d2**2)
    assert F[0, 2 * nv] == pytest.approx(-A * dy / d2)
    assert F[nv, 2 * nv] == pytest.approx(-A * dx / d2)
    assert F[2 * nv, 2 * nv] == pytest.approx(A)
    # per-vehicle decoupling: no cross-vehicle blocks
    assert F[0, 1] == 0.0
    assert F[2 * nv, 2 * nv + 1] == 0.0


def test_fim_textbook_has_cross_coupling_and_gauge_nullspace():
    sc = _two_vehicle_scene()
    smap = {(l.k, l.j): 1e-4 for l in sc.links}
    fim = build_fim(sc, smap, FimVariant.TEXTBOOK)
    F = fim.matrix
    assert F[0, 1] != 0.0
    # bearing-only similarity gauge: translation x/y, rotation, scale
    w = np.linalg.eigvalsh(F)
    assert np.sum(np.abs(w) < 1e-6 * np.max(w)) >= 4
    with pytest.raises(SingularFim):
        peb(fim)


def test_peb_reduction_matches_direct_inverse():
    rng = np.random.default_rng(2)
    spec = IntersectionSpec()
    poses = [
        VehiclePose(p=rng.uniform(-20, 20, 2), omega=rng.uniform(0, 2 * np.pi))
        for _ in range(4)
    ]
    sc = build_scenario(poses, spec)
    smap = {(l.k, l.j): 1e-5 for l in sc.links}
    fim = build_fim(sc, smap, FimVariant.TEXTBOOK)
    nv = 4
    d = poses[1].p - poses[0].p
    u = d / np.linalg.norm(d)
    c = np.zeros(3 * nv)
    c[1], c[nv + 1] = u[0], u[1]
    rep = peb(fim, fixed=(0, nv, 2 * nv), constraints=(c,))
    assert rep.peb_p > 0 and rep.peb_omega > 0
    # oracle: delete the fixed rows/cols and the constraint direction via
    # an explicit orthonormal basis, invert, re-embed
    n = 3 * nv
    R = np.zeros((n, 4))
    R[0, 0] = R[nv, 1] = R[2 * nv, 2] = 1.0
    R[:, 3] = c
    q, _ = np.linalg.qr(np.hstack([R, np.eye(n)]))
    U = q[:, 4:]
    C = U @ np.linalg.inv(U.T @ fim.matrix @ U) @ U.T
    var = np.diag(C)
    assert rep.peb_p == pytest.approx(float(np.sqrt(var[: 2 * nv].sum())))
    assert rep.peb_omega == pytest.approx(float(np.sqrt(var[2 * nv :].sum())))
