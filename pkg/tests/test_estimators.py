import numpy as np
import pytest

from lensv2v.array_model import ArrayConfig
from lensv2v.errors import DomainError, RankError
from lensv2v.estimators import (
    Dictionary,
    Method,
    max_select,
    ml_grid,
    ml_refined,
    ms_estimate,
    multi_no_sic,
    music,
    r2sa,
    r2sa_opcount,
    sic_multi,
)
from lensv2v.signal_model import PathSpec, Snapshot, synthesize

CFG = ArrayConfig.lens(L=15.0, f=7.5, N=31)


def _noiseless(*thetas):
    return synthesize(CFG, [PathSpec(theta=t) for t in thetas], 0.0)


def test_max_select_basic():
    y = np.zeros(31)
    y[7 + 15] = 1.0
    assert max_select(Snapshot(y=y, sigma2=0.0)) == 7


def test_max_select_tie_break():
    y = np.ones(31)
    assert max_select(Snapshot(y=y, sigma2=0.0)) == 0


def test_ms_estimate():
    assert ms_estimate(CFG, 0).theta_hat == 0.0
    assert ms_estimate(CFG, 5).theta_hat == pytest.approx(np.arcsin(1.0 / 3.0))
    with pytest.raises(DomainError):
        ms_estimate(CFG, 20)


def test_r2sa_exact_right_offset():
    theta = np.arcsin(5.3 / 15.0)
    est = r2sa(CFG, _noiseless(theta))
    assert est.n_star == 5
    assert est.e_hat == pytest.approx(0.3, abs=1e-12)
    assert est.theta_hat == pytest.approx(theta, abs=1e-12)


def test_r2sa_exact_left_offset():
    theta = np.arcsin((5 - 0.4) / 15.0)
    est = r2sa(CFG, _noiseless(theta))
    assert est.n_star == 5
    assert est.e_hat == pytest.approx(-0.4, abs=1e-12)
    assert est.theta_hat == pytest.approx(theta, abs=1e-12)


def test_r2sa_critical_angle():
    theta = np.arcsin(5.0 / 15.0)
    est = r2sa(CFG, _noiseless(theta))
    assert est.e_hat == pytest.approx(0.0, abs=1e-9)
    assert est.theta_hat == pytest.approx(theta, abs=1e-9)


def test_estimates_invariant_to_phase_and_scale():
    theta = np.arcsin(-3.7 / 15.0)
    snap = _noiseless(theta)
    rotated = Snapshot(y=5.0 * np.exp(1j * 1.234) * snap.y, sigma2=0.0)
    assert r2sa(CFG, rotated).theta_hat == pytest.approx(r2sa(CFG, snap).theta_hat)
    assert max_select(rotated) == max_select(snap)


def test_sic_single_target_equals_r2sa():
    theta = np.arcsin(2.6 / 15.0)
    snap = _noiseless(theta)
    single = sic_multi(CFG, snap, 1)
    assert len(single) == 1
    assert single[0].theta_hat == pytest.approx(r2sa(CFG, snap).theta_hat)
    assert single[0].method is Method.R2SA_SIC


def test_sic_two_critical_angles_exact():
    t1, t2 = np.arcsin(4.0 / 15.0), np.arcsin(-7.0 / 15.0)
    ests = sorted(e.theta_hat for e in sic_multi(CFG, _noiseless(t1, t2), 2))
    assert ests[0] == pytest.approx(t2, abs=1e-9)
    assert ests[1] == pytest.approx(t1, abs=1e-9)


def test_sic_two_paths_within_quantization_cells():
    # separated noiseless paths land within 1.5 sin-domain cells of truth
    rng = np.random.default_rng(0)
    for _ in range(60):
        s1 = rng.uniform(-0.8, 0.8)
        s2 = s1 + rng.uniform(1.0 / CFG.L, 0.5) * rng.choice([-1, 1])
        if abs(s2) > 0.95:
            continue
        t1, t2 = np.arcsin(s1), np.arcsin(s2)
        ests = sorted(e.theta_hat for e in sic_multi(CFG, _noiseless(t1, t2), 2))
        tr = sorted([t1, t2])
        for e, t in zip(ests, tr):
            assert abs(np.sin(e) - np.sin(t)) < 1.5 / CFG.L


def test_sic_rejects_bad_target_count():
    with pytest.raises(DomainError):
        sic_multi(CFG, _noiseless(0.1), 0)
    with pytest.raises(DomainError):
        multi_no_sic(CFG, _noiseless(0.1), CFG.N + 1)


def test_opcount():
    assert r2sa_opcount(31, 1) == 64
    assert r2sa_opcount(121, 1) == 244
    assert r2sa_opcount(31, 0) == 0
    with pytest.raises(DomainError):
        r2sa_opcount(0, 1)


def test_music_single_source():
    d = Dictionary.build(CFG, resolution_deg=0.5)
    theta = np.arcsin(3.0 / 15.0)
    rng = np.random.default_rng(1)
    snaps = [
        synthesize(CFG, [PathSpec(theta=theta, h=np.exp(1j * rng.uniform(0, 2 * np.pi)))], 1e-6, rng)
        for _ in range(50)
    ]
    est = music(CFG, snaps, 1, d)[0]
    assert abs(est.theta_hat - theta) <= np.deg2rad(0.5)


def test_music_two_sources():
    d = Dictionary.build(CFG, resolution_deg=0.25)
    rng = np.random.default_rng(2)
    t1, t2 = np.deg2rad(-30.0), np.deg2rad(30.0)
    snaps = []
    for _ in range(60):
        paths = [
            PathSpec(theta=t, h=np.exp(1j * rng.uniform(0, 2 * np.pi))) for t in (t1, t2)
        ]
        snaps.append(synthesize(CFG, paths, 1e-5, rng))
    ests = sorted(e.theta_hat for e in music(CFG, snaps, 2, d))
    assert ests[0] == pytest.approx(t1, abs=np.deg2rad(0.5))
    assert ests[1] == pytest.approx(t2, abs=np.deg2rad(0.5))


def test_music_needs_enough_snapshots():
    d = Dictionary.build(CFG, resolution_deg=1.0)
    with pytest.raises(DomainError):
        music(CFG, [_noiseless(0.1)], 1, d)


def test_music_pure_noise_flagged():
    d = Dictionary.build(CFG, resolution_deg=1.0)
    rng = np.random.default_rng(3)
    snaps = [synthesize(CFG, [], 1.0, rng) for _ in range(400)]
    try:
        ests = music(CFG, snaps, 1, d)
        assert ests[0].low_confidence
    except RankError:
        pass


def test_ml_grid_on_and_off_grid():
    d = Dictionary.build(CFG, resolution_deg=0.1)
    theta = np.deg2rad(12.3)
    assert ml_grid(CFG, _noiseless(theta), d).theta_hat == pytest.approx(theta, abs=1e-9)
    off = np.deg2rad(12.34)
    assert abs(ml_grid(CFG, _noiseless(off), d).theta_hat - off) <= np.deg2rad(0.05) + 1e-12


def test_ml_refined_beats_grid_quantization():
    d = Dictionary.build(CFG, resolution_deg=0.1)
    off = np.deg2rad(12.34567)
    est = ml_refined(CFG, _noiseless(off), d)
    assert abs(est.theta_hat - off) < 1e-5


def test_ml_variance_not_worse_than_ms():
    d = Dictionary.build(CFG, resolution_deg=0.2)
    rng = np.random.default_rng(4)
    sigma2 = 0.1
    e_ml, e_ms = [], []
    for _ in range(800):
        theta = np.arcsin(rng.uniform(-0.8, 0.8))
        snap = synthesize(CFG, [PathSpec(theta=theta)], sigma2, rng)
        e_ml.append(ml_grid(CFG, snap, d).theta_hat - theta)
        e_ms.append(ms_estimate(CFG, max_select(snap)).theta_hat - theta)
    assert np.mean(np.square(e_ml)) <= np.mean(np.square(e_ms))
