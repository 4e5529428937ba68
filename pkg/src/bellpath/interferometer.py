"""Two-sided interferometer with a shared source draw and local path sums.

Each trial draws one source fluctuation (an emission-time offset dt0 and a
transverse offset dx0) that both daughter particles carry away.  Each side
then builds its own ensemble of path phases from its own configuration
only, sums the unit phasors, and applies the half-circle threshold rule to
the resultant's angle.  An opaque barrier is the physical picture: all
interference is local to a side, and the only thing the sides share is the
source draw.

Locality is structural.  The phase computation for one side consumes that
side's config, the shared source draw, and a side-tagged random stream;
no function in this module takes the remote side's configuration or
setting.  Changing side B's phase shifter therefore cannot change side A's
outcome for a fixed seed, bit for bit.

Phases:  phi = k_wave * (L + geometry_sign*dx0 + jitter) + delta,
with delta (the externally set phase shifter) applied to the configured
shifted arm only and jitter drawn per arm replica with scale sigma_path.
The emission-time offset dt0 is drawn and recorded with every trial but
does not enter this reduced phase model; only the transverse offset feeds
the path lengths.

With one arm per side, one replica, and no jitter, a side's resultant is a
single phasor and the model reduces exactly to the synchronized-clock
hidden-variable model with theta0 = k*(L + geometry_sign*dx0); see
``degenerate_exact_scan``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .hv_models import TWO_PI, threshold_sign, wrap_angle
from .oracle import rt_coincidence_prob
from .path_engine import DEGENERATE_R, Resultant

#: Outcome value standing for "the resultant angle is undefined".
UNDETERMINED = 0

_SIDE_TAG = {"A": np.uint64(0xA11CE) << np.uint64(40), "B": np.uint64(0xB0B00) << np.uint64(40)}
_LAMBDA_TAG = np.uint64(0x5EED0) << np.uint64(40)


@dataclass(frozen=True)
class SourceSpreads:
    """Gaussian spreads of the source fluctuation (both may be zero)."""

    sigma_dt: float = 0.0
    sigma_dx: float = 0.0

    def __post_init__(self):
        if self.sigma_dt < 0 or self.sigma_dx < 0:
            raise ValueError("spreads must be nonnegative")


@dataclass(frozen=True)
class SourceLambda:
    """One shared source draw carried by both daughters."""

    dt0: float
    dx0: float


@dataclass(frozen=True)
class SideConfig:
    """Geometry and phase configuration of one side.

    ``arm_lengths`` are the nominal optical path lengths (one entry is the
    degenerate single-path case), ``n_ensemble`` replicates each arm into a
    small path ensemble, ``sigma_path`` jitters every replica's length, and
    ``phase_shifter`` adds delta to the shifted arm only.  ``geometry_sign``
    is the signed coefficient through which the shared transverse offset
    enters this side's path lengths.
    """

    arm_lengths: tuple[float, ...]
    k_wave: float
    n_ensemble: int = 1
    sigma_path: float = 0.0
    phase_shifter: float = 0.0
    geometry_sign: float = 1.0
    shifted_arm: int = 0

    def __post_init__(self):
        if len(self.arm_lengths) < 1:
            raise ValueError("need at least one arm")
        if any(length <= 0 for length in self.arm_lengths):
            raise ValueError("arm lengths must be positive")
        if self.k_wave <= 0:
            raise ValueError("k_wave must be positive")
        if self.n_ensemble < 1:
            raise ValueError("n_ensemble must be >= 1")
        if self.sigma_path < 0:
            raise ValueError("sigma_path must be nonnegative")
        if not 0 <= self.shifted_arm < len(self.arm_lengths):
            raise ValueError("shifted_arm out of range")
        object.__setattr__(self, "arm_lengths", tuple(float(x) for x in self.arm_lengths))
        object.__setattr__(self, "phase_shifter", float(wrap_angle(self.phase_shifter)))

    @property
    def n_paths(self) -> int:
        return len(self.arm_lengths) * self.n_ensemble

    def replace_shifter(self, delta: float) -> "SideConfig":
        return SideConfig(
            self.arm_lengths, self.k_wave, self.n_ensemble, self.sigma_path,
            delta, self.geometry_sign, self.shifted_arm,
        )


@dataclass(frozen=True)
class SideResultant:
    side: str
    resultant: Resultant


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    delta_a: float
    delta_b: float
    outcome_a: int
    outcome_b: int
    lam: SourceLambda
    r_a: float
    theta_a: float
    r_b: float
    theta_b: float
    seed: int


def sample_source(spreads: SourceSpreads, seed: int) -> SourceLambda:
    z = rng.normals_for_seeds(rng.trial_seeds(seed, 1) ^ _LAMBDA_TAG, 2)[0]
    return SourceLambda(spreads.sigma_dt * z[0], spreads.sigma_dx * z[1])


def _jitters(cfg: SideConfig, side: str, seed: int, n: int) -> np.ndarray:
    """Per-trial length jitter matrix (n, n_paths); side-local stream."""
    seeds = rng.trial_seeds(seed, n) ^ _SIDE_TAG[side]
    return cfg.sigma_path * rng.normals_for_seeds(seeds, cfg.n_paths)


def side_phases(cfg: SideConfig, lam: SourceLambda, seed: int, side: str = "A") -> np.ndarray:
    """Phases of every path replica on one side for one trial.

    The entry for arm m, replica e sits at index m*n_ensemble + e.  Only
    this side's configuration, the shared source draw, and the side-tagged
    jitter stream enter; congruent replicas (zero jitter) get identical
    phases.
    """
    jitter = _jitters(cfg, side, seed, 1)[0]
    lengths = np.repeat(np.asarray(cfg.arm_lengths), cfg.n_ensemble)
    phases = cfg.k_wave * (lengths + cfg.geometry_sign * lam.dx0 + jitter)
    shifted = slice(cfg.shifted_arm * cfg.n_ensemble, (cfg.shifted_arm + 1) * cfg.n_ensemble)
    phases[shifted] += cfg.phase_shifter
    return phases


def detector_outcome(sr) -> int:
    """Threshold rule on the resultant angle: +1 on [0, pi), -1 on [pi, 2pi).

    A degenerate resultant (r below 1e-12) yields UNDETERMINED (0); it is
    reported, never resolved by a coin flip.
    """
    res = sr.resultant if isinstance(sr, SideResultant) else sr
    if res.degenerate:
        return UNDETERMINED
    return int(threshold_sign(res.theta))


def _phasor_parts(cfg: SideConfig, side: str, dx0: np.ndarray, seed: int, n: int):
    """Split each trial's phasor sum into (plain, shifted-arm) parts.

    The full resultant is plain + exp(i*delta) * shifted, which lets scans
    vary the phase shifter without re-drawing anything.
    """
    jitter = _jitters(cfg, side, seed, n)
    lengths = np.repeat(np.asarray(cfg.arm_lengths), cfg.n_ensemble)
    base = cfg.k_wave * (lengths[None, :] + cfg.geometry_sign * dx0[:, None] + jitter)
    phasors = np.exp(1j * base)
    lo = cfg.shifted_arm * cfg.n_ensemble
    hi = lo + cfg.n_ensemble
    shifted = phasors[:, lo:hi].sum(axis=1)
    plain = phasors.sum(axis=1) - shifted
    return plain, shifted


def _outcomes_from_sum(total: np.ndarray):
    r = np.abs(total)
    theta = np.mod(np.angle(total), TWO_PI)
    det = threshold_sign(theta).astype(np.int8)
    out = np.where(r < DEGENERATE_R, np.int8(UNDETERMINED), det)
    return out, r, theta


def _run_batch(cfg_a: SideConfig, cfg_b: SideConfig, spreads: SourceSpreads, n: int, seed: int):
    lam_seeds = rng.trial_seeds(seed, n) ^ _LAMBDA_TAG
    z = rng.normals_for_seeds(lam_seeds, 2)
    dt0 = spreads.sigma_dt * z[:, 0]
    dx0 = spreads.sigma_dx * z[:, 1]
    plain_a, shift_a = _phasor_parts(cfg_a, "A", dx0, seed, n)
    plain_b, shift_b = _phasor_parts(cfg_b, "B", dx0, seed, n)
    total_a = plain_a + np.exp(1j * cfg_a.phase_shifter) * shift_a
    total_b = plain_b + np.exp(1j * cfg_b.phase_shifter) * shift_b
    out_a, r_a, th_a = _outcomes_from_sum(total_a)
    out_b, r_b, th_b = _outcomes_from_sum(total_b)
    return {
        "dt0": dt0, "dx0": dx0,
        "outcome_a": out_a, "outcome_b": out_b,
        "r_a": r_a, "theta_a": th_a, "r_b": r_b, "theta_b": th_b,
        "plain_a": plain_a, "shift_a": shift_a,
        "plain_b": plain_b, "shift_b": shift_b,
    }


def run_trial(cfg_a: SideConfig, cfg_b: SideConfig, spreads: SourceSpreads, seed: int, trial: int = 0) -> TrialRecord:
    """One two-sided trial; a pure function of (configs, spreads, seed+trial)."""
    batch = _run_batch(cfg_a, cfg_b, spreads, 1, seed + trial)
    return TrialRecord(
        trial=trial,
        delta_a=cfg_a.phase_shifter,
        delta_b=cfg_b.phase_shifter,
        outcome_a=int(batch["outcome_a"][0]),
        outcome_b=int(batch["outcome_b"][0]),
        lam=SourceLambda(float(batch["dt0"][0]), float(batch["dx0"][0])),
        r_a=float(batch["r_a"][0]),
        theta_a=float(batch["theta_a"][0]),
        r_b=float(batch["r_b"][0]),
        theta_b=float(batch["theta_b"][0]),
        seed=seed + trial,
    )


@dataclass(frozen=True)
class ScanRow:
    delta_a: float
    delta_b: float
    e_value: float | None
    stderr: float | None
    p_agree: float | None
    p_undetermined: float
    quantum_fringe: float
    n_trials: int


SCAN_CSV_HEADER = "delta_a,delta_b,E,stderr,p_agree,p_undetermined,quantum_fringe"


def correlation_scan(
    cfg_a: SideConfig,
    cfg_b: SideConfig,
    phase_grid,
    n_per_point: int,
    seed: int,
    spreads: SourceSpreads = SourceSpreads(0.0, 1.0),
) -> list[ScanRow]:
    """Sweep both phase shifters over ``phase_grid`` (len(grid)^2 rows).

    One trial ensemble (common random numbers) is reused for every setting
    cell, so a side's outcome column depends only on its own shifter: the
    table itself exhibits no-signaling.  The quantum fringe column is the
    closed-form coincidence prediction, reported for comparison; no claim
    is made that the empirical surface matches it.
    """
    grid = [float(wrap_angle(d)) for d in phase_grid]
    if not grid:
        raise ValueError("phase_grid must be non-empty")
    if n_per_point < 1:
        raise ValueError("n_per_point must be >= 1")
    batch = _run_batch(cfg_a, cfg_b, spreads, n_per_point, seed)
    rows = []
    for da in grid:
        total_a = batch["plain_a"] + np.exp(1j * da) * batch["shift_a"]
        out_a, _, _ = _outcomes_from_sum(total_a)
        for db in grid:
            total_b = batch["plain_b"] + np.exp(1j * db) * batch["shift_b"]
            out_b, _, _ = _outcomes_from_sum(total_b)
            rows.append(_scan_row(da, db, out_a, out_b))
    return rows


def _scan_row(da: float, db: float, out_a: np.ndarray, out_b: np.ndarray) -> ScanRow:
    n = out_a.size
    determined = (out_a != UNDETERMINED) & (out_b != UNDETERMINED)
    n_det = int(determined.sum())
    p_undet = 1.0 - n_det / n
    if n_det == 0:
        return ScanRow(da, db, None, None, None, p_undet, rt_coincidence_prob(da, db), n)
    prod = (out_a[determined].astype(np.int64) * out_b[determined]).sum()
    mean = prod / n_det
    stderr = None
    if n_det > 1:
        var = max(0.0, (1.0 - mean * mean) * n_det / (n_det - 1))
        stderr = math.sqrt(var / n_det)
    agree = int((out_a[determined] == out_b[determined]).sum()) / n_det
    return ScanRow(da, db, float(mean), stderr, agree, p_undet, rt_coincidence_prob(da, db), n)


def scan_csv_rows(rows: list[ScanRow]) -> list[str]:
    from .util import fmt17

    def opt(x):
        return "" if x is None else fmt17(x)

    return [
        ",".join([
            fmt17(r.delta_a), fmt17(r.delta_b), opt(r.e_value), opt(r.stderr),
            opt(r.p_agree), fmt17(r.p_undetermined), fmt17(r.quantum_fringe),
        ])
        for r in rows
    ]


# -- degenerate single-path configuration ------------------------------------

def is_degenerate(cfg: SideConfig) -> bool:
    return len(cfg.arm_lengths) == 1 and cfg.n_ensemble == 1 and cfg.sigma_path == 0.0


def degenerate_exact_scan(
    cfg_a: SideConfig,
    cfg_b: SideConfig,
    phase_grid,
    n_grid: int = 10_000,
) -> list[ScanRow]:
    """Exact setting-pair table for single-path sides.

    With one jitter-free path per side the only randomness is the shared
    transverse offset, which enters through the wrapped phase
    k*(L + geometry_sign*dx0).  This scan integrates over that wrapped
    phase uniform on [0, 2pi) (the rotation-invariant large-spread limit of
    the Gaussian source), which is precisely the synchronized-clock model's
    distribution: the table must match the clock model's exact tables.
    """
    if not (is_degenerate(cfg_a) and is_degenerate(cfg_b)):
        raise ValueError("exact scan requires single-path, jitter-free sides")
    grid = [float(wrap_angle(d)) for d in phase_grid]
    thetas = TWO_PI * np.arange(n_grid) / n_grid
    # invert side A's phase map so its wrapped phase runs over the grid
    dx0 = (thetas - cfg_a.k_wave * cfg_a.arm_lengths[0]) / (cfg_a.k_wave * cfg_a.geometry_sign)
    base_a = cfg_a.k_wave * (cfg_a.arm_lengths[0] + cfg_a.geometry_sign * dx0)
    base_b = cfg_b.k_wave * (cfg_b.arm_lengths[0] + cfg_b.geometry_sign * dx0)
    rows = []
    for da in grid:
        out_a = threshold_sign(base_a + da)
        for db in grid:
            out_b = threshold_sign(base_b + db)
            prod = (out_a.astype(np.int64) * out_b).sum()
            agree = int((out_a == out_b).sum()) / n_grid
            rows.append(ScanRow(da, db, prod / n_grid, 0.0, agree, 0.0,
                                rt_coincidence_prob(da, db), n_grid))
    return rows
