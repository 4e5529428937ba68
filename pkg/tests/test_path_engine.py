import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellpath import path_engine as pe

TWO_PI = 2.0 * math.pi


# -- discrete action -----------------------------------------------------------


def straight_path(u, v, t, n):
    return pe.PathSample(np.linspace(u, v, n + 1), t)


def test_action_straight_free_path():
    # constant velocity 1: S = m/2 * v^2 * t = 1/2, any slicing
    for n in (1, 7, 100):
        assert abs(pe.discrete_action(straight_path(0, 1, 1, n)) - 0.5) < 1e-12


def test_action_stationary_path():
    assert pe.discrete_action(straight_path(0, 0, 2.0, 10)) == 0.0


def test_action_straight_path_harmonic():
    # S = 1/2 - integral of x^2/2 over the line = 1/2 - 1/6 = 1/3
    s = pe.discrete_action(straight_path(0, 1, 1, 10_000), pe.harmonic(1.0))
    assert abs(s - (0.5 - 1.0 / 6.0)) < 1e-6


def test_action_scales_with_mass():
    s1 = pe.discrete_action(straight_path(0, 1, 1, 10), mass=1.0)
    s2 = pe.discrete_action(straight_path(0, 1, 1, 10), mass=3.0)
    assert abs(s2 - 3.0 * s1) < 1e-12


def test_path_sample_validation():
    with pytest.raises(ValueError):
        pe.PathSample(np.array([0.0]), 1.0)
    with pytest.raises(ValueError):
        pe.PathSample(np.array([0.0, np.inf]), 1.0)
    with pytest.raises(ValueError):
        pe.PathSample(np.array([0.0, 1.0]), 0.0)


# -- analytic propagator -------------------------------------------------------


def test_analytic_free_zero_displacement():
    # sqrt(1/(2*pi*i*t)): modulus 1/sqrt(2*pi*t), phase -pi/4
    for t in (0.5, 1.0, 3.0):
        k = pe.analytic_propagator(pe.FREE, 1.0, 1.0, 0.3, 0.3, t)
        assert abs(abs(k) - 1.0 / math.sqrt(TWO_PI * t)) < 1e-14
        assert abs(np.angle(k) + math.pi / 4) < 1e-14


def test_analytic_free_unit_displacement():
    k = pe.analytic_propagator(pe.FREE, 1.0, 1.0, 0.0, 1.0, 1.0)
    assert abs(abs(k) - 0.3989422804014327) < 1e-15  # 1/sqrt(2*pi)
    # phase = 1/2 - pi/4
    assert abs(np.angle(k) - (0.5 - math.pi / 4)) < 1e-14


def test_analytic_harmonic_caustic_raises():
    with pytest.raises(ValueError):
        pe.analytic_propagator(pe.harmonic(1.0), 1.0, 1.0, 0.0, 0.0, math.pi)


def test_analytic_harmonic_modulus():
    k = pe.analytic_propagator(pe.harmonic(1.0), 1.0, 1.0, 0.0, 0.0, 1.0)
    assert abs(abs(k) - math.sqrt(1.0 / (TWO_PI * math.sin(1.0)))) < 1e-14


def test_analytic_harmonic_small_omega_approaches_free():
    kf = pe.analytic_propagator(pe.FREE, 1.0, 1.0, 0.0, 1.0, 1.0)
    kh = pe.analytic_propagator(pe.harmonic(1e-6), 1.0, 1.0, 0.0, 1.0, 1.0)
    assert abs(kf - kh) / abs(kf) < 1e-6


# -- sliced propagator ------------------------------------------------------------


def test_one_slice_is_the_exact_free_kernel():
    spec = pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, 1, (-20, 20, 2048))
    got = pe.sliced_propagator(spec)
    ref = pe.analytic_propagator(pe.FREE, 1.0, 1.0, 0.0, 1.0, 1.0)
    assert abs(got.value - ref) <= 1e-10
    assert not got.support_warning


def test_sliced_free_accuracy_moderate_grid():
    spec = pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, 4, (-20, 20, 1024))
    got = pe.sliced_propagator(spec).value
    ref = pe.analytic_propagator(pe.FREE, 1.0, 1.0, 0.0, 1.0, 1.0)
    assert abs(abs(got) - abs(ref)) / abs(ref) < 0.05


def test_grid_doubling_halves_the_error():
    ref = pe.analytic_propagator(pe.FREE, 1.0, 1.0, 0.0, 1.0, 1.0)
    errs = []
    for n_points in (256, 512, 1024, 2048):
        spec = pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, 8, (-20, 20, n_points))
        got = pe.sliced_propagator(spec).value
        errs.append(abs(got - ref) / abs(ref))
    for coarse, fine in zip(errs, errs[1:]):
        assert fine < 0.5 * coarse


def test_slice_composition_semigroup():
    # composing k damped slices must equal one slice of the total complex
    # time; on a wide grid the grid integration reproduces that closed form
    grid = (-40.0, 40.0, 4096)
    x = np.linspace(*grid)
    dx = x[1] - x[0]
    for k in (2, 4, 8):
        spec = pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, k, grid)
        eta = 2.0 * spec.damping * dx * dx / (math.pi**2 * (1.0 / k))
        total_time = 1.0 * (1.0 - 1j * eta)
        target = np.sqrt(1.0 / (2j * np.pi * total_time)) * np.exp(
            1j * 1.0 / (2.0 * total_time))
        got = pe.sliced_propagator(spec).value
        assert abs(got - target) / abs(target) < 1e-3


def test_support_warning_fires_for_flat_kernels():
    # a free delta source fills the grid with near-constant |psi|:
    # truncation is material and must be surfaced
    spec = pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, 8, (-20, 20, 2048))
    assert pe.sliced_propagator(spec).support_warning


def test_no_support_warning_for_confined_harmonic():
    spec = pe.PropagatorSpec(1.0, pe.harmonic(1.0), 0.0, 0.0, 1.0, 32, (-20, 20, 2048))
    assert not pe.sliced_propagator(spec).support_warning


def test_spec_validation():
    with pytest.raises(ValueError):
        pe.PropagatorSpec(1.0, pe.FREE, 0.0, 30.0, 1.0, 8, (-20, 20, 2048))
    with pytest.raises(ValueError):
        pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, 0, (-20, 20, 2048))
    with pytest.raises(ValueError):
        pe.PropagatorSpec(1.0, pe.FREE, 0.0, 1.0, 1.0, 8, (-20, 20, 8))
    with pytest.raises(ValueError):
        pe.PropagatorSpec(-1.0, pe.FREE, 0.0, 1.0, 1.0, 8, (-20, 20, 2048))


# -- resultant ----------------------------------------------------------------------


def test_resultant_single_phase():
    r = pe.resultant([2.5])
    assert abs(r.r - 1.0) < 1e-15
    assert abs(r.theta - 2.5) < 1e-15
    assert not r.degenerate


def test_resultant_cancellation():
    r = pe.resultant([0.0, math.pi])
    assert r.r < 1e-12
    assert r.theta == 0.0
    assert r.degenerate


def test_resultant_two_phases():
    # e^{i0} + e^{i pi/2} has modulus sqrt(2) and angle pi/4
    r = pe.resultant([0.0, math.pi / 2])
    assert abs(r.r - math.sqrt(2)) < 1e-14
    assert abs(r.theta - math.pi / 4) < 1e-14


def test_resultant_rejects_empty():
    with pytest.raises(ValueError):
        pe.resultant([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=-10.0, max_value=10.0), min_size=1, max_size=40),
       st.integers(min_value=0, max_value=999))
def test_resultant_permutation_invariance(phases, perm_seed):
    base = pe.resultant(phases)
    perm = list(np.random.default_rng(perm_seed).permutation(phases))
    other = pe.resultant(perm)
    assert abs(base.r - other.r) < 1e-12
    if not base.degenerate and not other.degenerate and base.r > 1e-6:
        d = abs(base.theta - other.theta) % TWO_PI
        assert min(d, TWO_PI - d) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=-10.0, max_value=10.0), min_size=1, max_size=40),
       st.floats(min_value=-6.0, max_value=6.0))
def test_resultant_global_phase_equivariance(phases, shift):
    base = pe.resultant(phases)
    rotated = pe.resultant([p + shift for p in phases])
    assert abs(base.r - rotated.r) < 1e-12
    if not base.degenerate and base.r > 1e-6:
        d = abs((base.theta + shift) % TWO_PI - rotated.theta) % TWO_PI
        assert min(d, TWO_PI - d) < 1e-11


# -- path sampling --------------------------------------------------------------------


def test_paths_pinned_exactly():
    paths = pe.sample_paths(0.3, -1.7, 2.0, 16, 200, jitter_scale=0.5, seed=5)
    assert len(paths) == 200
    for p in paths:
        assert p.positions[0] == 0.3
        assert p.positions[-1] == -1.7


def test_zero_jitter_gives_straight_lines():
    paths = pe.sample_paths(0.0, 1.0, 1.0, 8, 5, jitter_scale=0.0, seed=1)
    base = np.linspace(0, 1, 9)
    for p in paths:
        assert np.allclose(p.positions, base, atol=1e-15)


def test_paths_deterministic_per_seed_offset():
    a = pe.sample_paths(0.0, 1.0, 1.0, 8, 10, 0.5, seed=100)
    b = pe.sample_paths(0.0, 1.0, 1.0, 8, 3, 0.5, seed=107)
    assert np.array_equal(a[7].positions, b[0].positions)


def test_straight_line_minimizes_free_action():
    straight = pe.discrete_action(straight_path(0, 1, 1, 16))
    paths = pe.sample_paths(0.0, 1.0, 1.0, 16, 10_000, jitter_scale=0.5, seed=9)
    actions = np.array([pe.discrete_action(p) for p in paths])
    assert actions.min() >= straight - 1e-9
    assert actions.mean() > straight
