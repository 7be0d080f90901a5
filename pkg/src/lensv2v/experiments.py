"""Seeded Monte Carlo harness: metrics, figure and table sweeps."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .array_model import ArrayConfig
from .crlb import (
    FimVariant,
    build_fim,
    crlb_lens,
    crlb_ula,
    lens_crlb_bounds,
    peb,
)
from .errors import ConfigError, SingularGeometry
from .estimators import (
    Dictionary,
    Method,
    max_select,
    ml_refined,
    ms_estimate,
    multi_no_sic,
    r2sa,
    sic_multi,
)
from .localization import (
    AnchorSpec,
    AoAMeasurementSet,
    GaugeMode,
    Measurement,
    SolverOptions,
    solve_se,
)
from .scenario import (
    ArrayFace,
    IntersectionSpec,
    drop_vehicles,
    facing_array,
    sample_drop,
    wrap_angle,
)
from .signal_model import PathSpec, Snapshot, snr_to_sigma2, synthesize

DEG = np.pi / 180.0


# ---------------------------------------------------------------------------
# metrics

def rmse_position(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Mean over vehicles of the position error norm."""
    e = np.asarray(estimates, dtype=float)[:, :2] - np.asarray(truth, dtype=float)[:, :2]
    return float(np.mean(np.linalg.norm(e, axis=1)))


def rmse_orientation(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Mean over vehicles of the wrapped heading error magnitude."""
    d = wrap_angle(np.asarray(estimates)[:, 2] - np.asarray(truth)[:, 2])
    return float(np.mean(np.abs(d)))


def rmse_combined(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Mean over vehicles of the norm of the stacked (x, y, omega) error."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truth, dtype=float)
    dp = est[:, :2] - tru[:, :2]
    dw = wrap_angle(est[:, 2] - tru[:, 2])
    return float(np.mean(np.sqrt(np.sum(dp**2, axis=1) + dw**2)))


def separation_probability(
    spec: IntersectionSpec,
    density: float,
    N: int,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Probability that two incident bearings at a receiver are resolvable
    by the ratio estimator, over PPP drops.

    The estimator reads the strongest element and its refinement
    neighbor, so two bearings are separated when their sine-domain
    positions are at least 1.5 critical spacings apart: |sin a - sin b|
    >= 1.5/L with L = (N-1)/2.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    threshold = 3.0 / (N - 1)
    hits = 0
    total = 0
    for _ in range(trials):
        P, H = sample_drop(spec, density, rng)
        n = len(H)
        if n < 3:
            continue
        dx = P[None, :, 0] - P[:, None, 0]
        dy = P[None, :, 1] - P[:, None, 1]
        dist = np.hypot(dx, dy)
        sines = np.sin(np.arctan2(dy, dx) - H[:, None])
        in_range = (dist > 0) & (dist <= spec.comm_radius)
        np.fill_diagonal(in_range, False)
        for k in range(n):
            s = sines[k, in_range[k]]
            if len(s) < 2:
                continue
            diff = np.abs(s[:, None] - s[None, :])
            m = len(s)
            total += m * (m - 1)
            hits += int(np.sum(diff >= threshold))  # the diagonal is zero
    return hits / total if total else 0.0


def outage_probability(
    position_errors,
    orientation_errors,
    gamma_p: float = 1.96 * 0.2,
    gamma_omega: float = 1.96 * 2 * DEG,
) -> float:
    """Fraction of samples whose position or orientation error exceeds
    the service thresholds."""
    pe = np.asarray(position_errors, dtype=float)
    oe = np.asarray(orientation_errors, dtype=float)
    return float(np.mean((pe > gamma_p) | (np.abs(oe) > gamma_omega)))


# ---------------------------------------------------------------------------
# scene simulation helpers

def sample_connected_scene(
    spec: IntersectionSpec,
    density: float,
    n_vehicles: int,
    rng: np.random.Generator,
    max_attempts: int = 1000,
):
    """Draw PPP drops until one contains at least ``n_vehicles`` mutually
    connected vehicles; returns the truncated scenario."""
    from .scenario import build_scenario

    for _ in range(max_attempts):
        sc = drop_vehicles(spec, density, rng)
        if sc.n_vehicles >= n_vehicles:
            return build_scenario(list(sc.vehicles[:n_vehicles]), spec)
    raise ConfigError("could not draw a large enough scene")


_DICT_CACHE: dict = {}


def _dictionary_for(cfg: ArrayConfig, resolution_deg: float = 0.1) -> Dictionary:
    key = (cfg.kind, cfg.N, cfg.L, cfg.f, cfg.x, cfg.d_ula, resolution_deg)
    if key not in _DICT_CACHE:
        _DICT_CACHE[key] = Dictionary.build(cfg, resolution_deg)
    return _DICT_CACHE[key]


def measure_single_target(
    cfg: ArrayConfig,
    scenario,
    snr_db: float,
    rng: np.random.Generator,
    estimator: str = "r2sa",
    view_half_angle: float | None = None,
) -> AoAMeasurementSet:
    """Per-link AoA measurement with one target per sub-channel.

    Each link is synthesized on the receiver's front or rear array at the
    benchmark per-link SNR; the chosen estimator produces the measured
    angle, mapped back into the receiver's heading frame.
    """
    sigma2 = snr_to_sigma2(snr_db)
    view = cfg.view_half_angle if view_half_angle is None else view_half_angle
    dictionary = _dictionary_for(cfg) if estimator == "ml" else None
    entries = []
    discarded = []
    for link in scenario.links:
        face, local = facing_array(link.theta)
        if abs(local) > view:
            discarded.append((link.k, link.j))
            continue
        snap = synthesize(cfg, [PathSpec(theta=local)], sigma2, rng)
        if estimator == "r2sa":
            est = r2sa(cfg, snap)
        elif estimator == "ms":
            est = ms_estimate(cfg, max_select(snap))
        elif estimator == "ml":
            est = ml_refined(cfg, snap, dictionary)
        else:
            raise ConfigError(f"unknown estimator {estimator!r}")
        theta_hat = est.theta_hat if face is ArrayFace.FRONT else wrap_angle(np.pi - est.theta_hat)
        try:
            s2 = crlb_lens(cfg, est.theta_hat, sigma2)
        except SingularGeometry:
            s2 = np.inf
        entries.append(Measurement(k=link.k, j=link.j, theta_hat=theta_hat, sigma2_aoa=s2))
    return AoAMeasurementSet(entries=tuple(entries), discarded=tuple(discarded))


def _pair_targets(scenario, k: int, J: int) -> list[list[int]]:
    """Group receiver k's neighbors into sub-channels of up to J targets.

    Cross-road and opposite-direction vehicles first, then nearest.
    """
    own = scenario.vehicles[k].omega
    scored = []
    for link in scenario.links:
        if link.k != k:
            continue
        other = scenario.vehicles[link.j].omega
        same_direction = abs(wrap_angle(other - own)) < 1e-6
        scored.append((0 if not same_direction else 1, link.distance, link.j))
    scored.sort()
    order = [j for _, _, j in scored]
    return [order[i : i + J] for i in range(0, len(order), J)]


def measure_multi_target(
    cfg: ArrayConfig,
    scenario,
    snr_db: float,
    J: int,
    rng: np.random.Generator,
    use_sic: bool = True,
    view_half_angle: float | None = None,
) -> AoAMeasurementSet:
    """Per-receiver AoA measurement with J targets per sub-channel.

    Targets sharing a sub-channel are superimposed in one snapshot per
    array face; estimates are assigned to targets by best-matching order.
    """
    sigma2 = snr_to_sigma2(snr_db)
    view = cfg.view_half_angle if view_half_angle is None else view_half_angle
    entries = []
    discarded = []
    for k in range(scenario.n_vehicles):
        groups = _pair_targets(scenario, k, J)
        link_map = {link.j: link for link in scenario.links if link.k == k}
        for group in groups:
            faces: dict[ArrayFace, list[int]] = {}
            locals_: dict[int, float] = {}
            for j in group:
                face, local = facing_array(link_map[j].theta)
                if abs(local) > view:
                    discarded.append((k, j))
                    continue
                faces.setdefault(face, []).append(j)
                locals_[j] = local
            for face, members in faces.items():
                paths = [PathSpec(theta=locals_[j]) for j in members]
                snap = synthesize(cfg, paths, sigma2, rng)
                if use_sic:
                    ests = sic_multi(cfg, snap, len(members))
                else:
                    ests = multi_no_sic(cfg, snap, len(members))
                assign = _match_estimates([locals_[j] for j in members], [e.theta_hat for e in ests])
                for j, theta_hat_local in zip(members, assign):
                    theta_hat = (
                        theta_hat_local
                        if face is ArrayFace.FRONT
                        else wrap_angle(np.pi - theta_hat_local)
                    )
                    try:
                        s2 = crlb_lens(cfg, theta_hat_local, sigma2)
                    except SingularGeometry:
                        s2 = np.inf
                    entries.append(
                        Measurement(k=k, j=j, theta_hat=theta_hat, sigma2_aoa=s2)
                    )
    return AoAMeasurementSet(entries=tuple(entries), discarded=tuple(discarded))


def _match_estimates(truths: list[float], estimates: list[float]) -> list[float]:
    """Assign estimates to true angles minimizing the total absolute error."""
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(len(estimates))):
        cost = sum(abs(truths[i] - estimates[p]) for i, p in enumerate(perm))
        if cost < best_cost:
            best, best_cost = perm, cost
    return [estimates[p] for p in best]


def anchored_options(truth: np.ndarray, seed: int = 0, multistart: int = 4) -> SolverOptions:
    """Solver options anchoring vehicle 0's pose and vehicle 1's range
    at their true values."""
    truth = np.asarray(truth, dtype=float)
    r = float(np.linalg.norm(truth[1, :2] - truth[0, :2]))
    span = float(np.max(np.abs(truth[:, :2]))) + 10.0
    return SolverOptions(
        gauge=GaugeMode.ANCHORED,
        anchor_spec=AnchorSpec(
            anchor_vehicle=0,
            anchor_pose=(truth[0, 0], truth[0, 1], truth[0, 2]),
            range_vehicle=1,
            range_value=r,
        ),
        bounding_box=((-span, span), (-span, span)),
        multistart_count=multistart,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# sweep harness

@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    snr_db_list: tuple = (0.0, 5.0, 10.0, 15.0)
    antenna_list: tuple = (15, 31, 61)
    density_list: tuple = (10.0, 20.0, 40.0)
    aperture_list: tuple = (10.0, 20.0)
    view_deg_list: tuple = (20.0, 40.0, 60.0)
    n_vehicles: int = 4
    targets_per_subchannel: int = 2
    trials: int = 100
    seed: int = 0
    fim_variant: FimVariant = FimVariant.TEXTBOOK
    gauge: GaugeMode = GaugeMode.ANCHORED
    density: float = 10.0
    spec: IntersectionSpec = field(default_factory=IntersectionSpec)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trial count must be >= 1")


@dataclass
class ResultTable:
    columns: tuple
    rows: list

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in self.columns))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _table(rows) -> ResultTable:
    return ResultTable(
        columns=("experiment", "sweep", "metric", "value", "trials", "std_error"),
        rows=rows,
    )


def _row(exp, sweep, metric, value, trials, stderr):
    return {
        "experiment": exp,
        "sweep": sweep,
        "metric": metric,
        "value": float(value),
        "trials": trials,
        "std_error": float(stderr),
    }


def _trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, point, trial)))


def run_sweep(cfg: ExperimentConfig) -> ResultTable:
    """Dispatch one named sweep; deterministic given the master seed."""
    runners: dict[str, Callable[[ExperimentConfig], ResultTable]] = {
        "fig2": _sweep_crlb_focal,
        "fig3": _sweep_aoa_bench,
        "table1": _sweep_separation,
        "fig5": _sweep_localize_snr,
        "fig8": _sweep_localize_antennas,
        "fig9": _sweep_localize_density,
        "fig10": _sweep_outage,
        "fig11": _sweep_view_angle,
    }
    if cfg.experiment not in runners:
        raise ConfigError(f"unknown experiment id {cfg.experiment!r}")
    return runners[cfg.experiment](cfg)


def _sweep_crlb_focal(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    sigma2 = snr_to_sigma2(5.0)
    thetas = np.deg2rad(np.linspace(-60, 60, 61))
    for L in cfg.aperture_list:
        N = int(2 * L + 1)
        fgrid = np.linspace(L / 2, 6 * L, 45)
        ula = ArrayConfig.ula(N=N)
        ula_mean = float(np.mean([crlb_ula(ula, t, sigma2) for t in thetas]))
        for f in fgrid:
            lens = ArrayConfig.lens(L=L, f=float(f), N=N)
            lens_mean = float(np.mean([crlb_lens(lens, t, sigma2) for t in thetas]))
            upper_mean = float(np.mean([lens_crlb_bounds(lens, t, sigma2)[1] for t in thetas]))
            sweep = f"L={L:g};f={f:g};N={N}"
            rows.append(_row(cfg.experiment, sweep, "crlb_lens_mean", lens_mean, 0, 0.0))
            rows.append(_row(cfg.experiment, sweep, "crlb_lens_upper_mean", upper_mean, 0, 0.0))
            rows.append(_row(cfg.experiment, sweep, "crlb_ula_mean", ula_mean, 0, 0.0))
    return _table(rows)


def _sweep_aoa_bench(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    N = 31
    L = (N - 1) / 2
    lens = ArrayConfig.lens(L=L, f=L / 2, N=N)
    for p, snr in enumerate(cfg.snr_db_list):
        sigma2 = snr_to_sigma2(snr)
        errors = {"ms": [], "r2sa": [], "r2sa_sic_2": [], "r2sa_nosic_2": []}
        for t in range(cfg.trials):
            rng = _trial_rng(cfg.seed, p, t)
            s = rng.uniform(-0.8, 0.8)
            theta = np.arcsin(s)
            snap = synthesize(lens, [PathSpec(theta=theta)], sigma2, rng)
            errors["ms"].append(ms_estimate(lens, max_select(snap)).theta_hat - theta)
            errors["r2sa"].append(r2sa(lens, snap).theta_hat - theta)
            s2 = rng.uniform(-0.8, 0.8)
            while abs(np.arcsin(s2) - theta) <= 1.0 / N:
                s2 = rng.uniform(-0.8, 0.8)
            theta2 = np.arcsin(s2)
            snap2 = synthesize(lens, [PathSpec(theta=theta), PathSpec(theta=theta2)], sigma2, rng)
            for key, fn in (("r2sa_sic_2", sic_multi), ("r2sa_nosic_2", multi_no_sic)):
                ests = _match_estimates(
                    [theta, theta2], [e.theta_hat for e in fn(lens, snap2, 2)]
                )
                errors[key].append(ests[0] - theta)
                errors[key].append(ests[1] - theta2)
        for name, errs in errors.items():
            errs = np.asarray(errs)
            mse = float(np.mean(errs**2))
            se = float(np.std(errs**2, ddof=1) / np.sqrt(len(errs)))
            rows.append(
                _row(cfg.experiment, f"snr_db={snr:g};N={N}", f"mse_{name}", mse, len(errs), se)
            )
    return _table(rows)


def _sweep_separation(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    point = 0
    for N in cfg.antenna_list:
        for density in cfg.density_list:
            rng = _trial_rng(cfg.seed, point, 0)
            p = separation_probability(cfg.spec, density, N, cfg.trials, rng)
            se = np.sqrt(max(p * (1 - p), 1e-12) / cfg.trials)
            rows.append(
                _row(
                    cfg.experiment,
                    f"N={N};density={density:g}",
                    "p_sep",
                    p,
                    cfg.trials,
                    se,
                )
            )
            point += 1
    return _table(rows)


def _localization_trials(cfg, lens, snr_db, point, estimator="r2sa", J=1, use_sic=True, view=None):
    """Run localization trials; returns per-trial (rmse_p, rmse_w, rmse_l)."""
    out = []
    for t in range(cfg.trials):
        rng = _trial_rng(cfg.seed, point, t)
        sc = sample_connected_scene(cfg.spec, cfg.density, cfg.n_vehicles, rng)
        truth = np.column_stack([sc.positions(), sc.headings()])
        if J == 1:
            meas = measure_single_target(lens, sc, snr_db, rng, estimator=estimator, view_half_angle=view)
        else:
            meas = measure_multi_target(
                lens, sc, snr_db, J, rng, use_sic=use_sic, view_half_angle=view
            )
        if len(meas.entries) < 3 * cfg.n_vehicles - 4:
            continue
        opts = anchored_options(truth, seed=cfg.seed + t)
        est = solve_se(meas, opts)
        out.append(
            (
                rmse_position(est.poses, truth),
                rmse_orientation(est.poses, truth),
                rmse_combined(est.poses, truth),
            )
        )
    return np.asarray(out) if out else np.empty((0, 3))


def _summary_rows(cfg, sweep, arr):
    rows = []
    names = ("rmse_p", "rmse_omega", "rmse_l")
    for i, name in enumerate(names):
        if arr.shape[0] == 0:
            rows.append(_row(cfg.experiment, sweep, name, np.nan, 0, np.nan))
            continue
        vals = arr[:, i]
        rows.append(
            _row(
                cfg.experiment,
                sweep,
                name,
                float(np.mean(vals)),
                len(vals),
                float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0,
            )
        )
    return rows


def _default_lens(N: int) -> ArrayConfig:
    L = (N - 1) / 2
    return ArrayConfig.lens(L=L, f=L / 2, N=N)


def _sweep_localize_snr(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    lens = _default_lens(121)
    for p, snr in enumerate(cfg.snr_db_list):
        arr = _localization_trials(cfg, lens, snr, p)
        rows.extend(_summary_rows(cfg, f"snr_db={snr:g};N=121", arr))
    return _table(rows)


def _sweep_localize_antennas(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    for p, N in enumerate(cfg.antenna_list):
        arr = _localization_trials(cfg, _default_lens(int(N)), 10.0, p)
        rows.extend(_summary_rows(cfg, f"N={N};snr_db=10", arr))
    return _table(rows)


def _sweep_localize_density(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    from dataclasses import replace

    for p, density in enumerate(cfg.density_list):
        sub = replace(cfg, density=float(density))
        arr = _localization_trials(sub, _default_lens(31), 10.0, p)
        rows.extend(_summary_rows(cfg, f"density={density:g};N=31;snr_db=10", arr))
    return _table(rows)


def _sweep_outage(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    lens = _default_lens(121)
    for p, snr in enumerate(cfg.snr_db_list):
        per_trial = []
        for t in range(cfg.trials):
            rng = _trial_rng(cfg.seed, p, t)
            sc = sample_connected_scene(cfg.spec, cfg.density, cfg.n_vehicles, rng)
            truth = np.column_stack([sc.positions(), sc.headings()])
            meas = measure_multi_target(lens, sc, snr, cfg.targets_per_subchannel, rng)
            if len(meas.entries) < 3 * cfg.n_vehicles - 4:
                continue
            est = solve_se(meas, anchored_options(truth, seed=cfg.seed + t))
            pe = np.linalg.norm(est.poses[:, :2] - truth[:, :2], axis=1)
            oe = wrap_angle(est.poses[:, 2] - truth[:, 2])
            per_trial.append((pe, oe))
        if per_trial:
            pes = np.concatenate([p_ for p_, _ in per_trial])
            oes = np.concatenate([o for _, o in per_trial])
            pout = outage_probability(pes, oes)
            se = np.sqrt(max(pout * (1 - pout), 1e-12) / len(pes))
        else:
            pout, se = np.nan, np.nan
        rows.append(
            _row(cfg.experiment, f"snr_db={snr:g};N=121;J={cfg.targets_per_subchannel}", "p_out", pout, len(per_trial), se)
        )
    return _table(rows)


def _sweep_view_angle(cfg: ExperimentConfig) -> ResultTable:
    rows = []
    lens = _default_lens(61)
    point = 0
    for view_deg in cfg.view_deg_list:
        for snr in cfg.snr_db_list:
            arr = _localization_trials(
                cfg,
                lens,
                snr,
                point,
                J=cfg.targets_per_subchannel,
                view=view_deg * DEG / 2,
            )
            rows.extend(
                _summary_rows(cfg, f"view_deg={view_deg:g};snr_db={snr:g};N=61", arr)
            )
            point += 1
    return _table(rows)
