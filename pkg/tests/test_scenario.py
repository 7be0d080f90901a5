import numpy as np
import pytest

from lensv2v.errors import DegenerateGeometry, DomainError
from lensv2v.scenario import (
    ArrayFace,
    IntersectionSpec,
    Scenario,
    VehiclePose,
    build_scenario,
    drop_vehicles,
    facing_array,
    pathloss_inv,
    sample_drop,
    true_aoa,
    wrap_angle,
)


def test_wrap_angle_range():
    a = np.linspace(-10, 10, 2001)
    w = wrap_angle(a)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)


def test_vehicle_pose_normalizes_heading():
    v = VehiclePose(p=np.array([1.0, 2.0]), omega=-np.pi / 2)
    assert v.omega == pytest.approx(3 * np.pi / 2)


def test_intersection_defaults():
    spec = IntersectionSpec()
    assert spec.roads == 3
    assert spec.total_lanes == 12
    assert spec.lane_width == 5.0
    assert spec.comm_radius == 50.0


def test_true_aoa_basic():
    # target straight ahead of an east-facing receiver
    assert true_aoa([0, 0], [10, 0], 0.0) == pytest.approx(0.0)
    # target due north, receiver facing east -> +90 degrees
    assert true_aoa([0, 0], [0, 10], 0.0) == pytest.approx(np.pi / 2)
    # receiver heading rotates the frame
    assert true_aoa([0, 0], [0, 10], np.pi / 2) == pytest.approx(0.0)


def test_true_aoa_coincident_raises():
    with pytest.raises(DegenerateGeometry):
        true_aoa([1.0, 1.0], [1.0, 1.0], 0.0)


def test_facing_array_mapping():
    face, local = facing_array(0.3)
    assert face is ArrayFace.FRONT and local == pytest.approx(0.3)
    face, local = facing_array(2 * np.pi / 3)
    assert face is ArrayFace.REAR
    assert local == pytest.approx(np.pi / 3)
    face, local = facing_array(-2.8)
    assert face is ArrayFace.REAR
    assert local == pytest.approx(wrap_angle(np.pi + 2.8))


def test_pathloss_free_space():
    lam = 3e8 / 28e9
    g = pathloss_inv(10.0, lam)
    assert g == pytest.approx((lam / (4 * np.pi * 10.0)) ** 2)
    # attenuation only reduces the gain
    assert pathloss_inv(10.0, lam, zeta_db_per_km=16.0) < g
    with pytest.raises(DomainError):
        pathloss_inv(0.0, lam)


def test_build_scenario_links_within_radius():
    spec = IntersectionSpec()
    poses = [
        VehiclePose(p=np.array([0.0, 0.0]), omega=0.0),
        VehiclePose(p=np.array([20.0, 0.0]), omega=np.pi),
        VehiclePose(p=np.array([200.0, 0.0]), omega=0.0),
    ]
    sc = build_scenario(poses, spec)
    pairs = {(l.k, l.j) for l in sc.links}
    assert pairs == {(0, 1), (1, 0)}
    assert sc.neighbor_sets[0] == (1,)
    assert sc.neighbor_sets[2] == ()


def test_link_invariant_theta_consistent():
    spec = IntersectionSpec()
    rng = np.random.default_rng(3)
    sc = drop_vehicles(spec, 30.0, rng)
    for l in sc.links:
        recomputed = true_aoa(sc.vehicles[l.k].p, sc.vehicles[l.j].p, l.omega_rel)
        assert recomputed == pytest.approx(l.theta)
        assert l.omega_rel == pytest.approx(sc.vehicles[l.k].omega)


def test_drop_respects_min_spacing():
    spec = IntersectionSpec()
    rng = np.random.default_rng(11)
    for _ in range(20):
        sc = drop_vehicles(spec, 60.0, rng)
        P = sc.positions()
        H = sc.headings()
        for i in range(len(P)):
            for j in range(i + 1, len(P)):
                u = np.array([np.cos(H[i]), np.sin(H[i])])
                d = P[j] - P[i]
                same_lane = (
                    abs(wrap_angle(H[i] - H[j])) < 1e-9
                    and abs(d[0] * u[1] - d[1] * u[0]) < 1e-6
                )
                if same_lane:
                    assert np.linalg.norm(P[i] - P[j]) >= 4.7 - 1e-9


def test_sample_drop_matches_drop_vehicles():
    spec = IntersectionSpec()
    P1, H1 = sample_drop(spec, 25.0, np.random.default_rng(7))
    sc = drop_vehicles(spec, 25.0, np.random.default_rng(7))
    assert np.allclose(P1, sc.positions())
    assert np.allclose(np.mod(H1, 2 * np.pi), sc.headings())


def test_csv_roundtrip():
    spec = IntersectionSpec()
    sc = drop_vehicles(spec, 20.0, np.random.default_rng(5))
    if sc.n_vehicles < 2:
        pytest.skip("empty drop")
    back = Scenario.from_csv(sc.to_csv(), spec)
    assert back.n_vehicles == sc.n_vehicles
    assert np.allclose(back.positions(), sc.positions())
    assert np.allclose(back.headings(), sc.headings())
    assert len(back.links) == len(sc.links)


def test_density_must_be_positive():
    with pytest.raises(DomainError):
        drop_vehicles(IntersectionSpec(), 0.0, np.random.default_rng(0))
