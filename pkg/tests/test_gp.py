# tests/test_gp.py
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from core.errors import ArgumentError, NumericalError, PlanningError
from core.gp import (
    LENGTH_SCALE_GRID,
    argmax_lowest,
    ei_closed_form,
    expected_improvement,
    gp_fit,
    select_length_scale,
)
from core.planner import PlannerState, select_next


def _matern(r):
    return (1 + math.sqrt(5) * r + 5 * r * r / 3) * np.exp(-math.sqrt(5) * r)


# ----------------- posterior -----------------

def test_single_observation_is_interpolated():
    model = gp_fit([[0.5, 0.5]], [3.0])
    mu, var = model.predict([0.5, 0.5])
    assert mu[0] == pytest.approx(3.0)
    assert var[0] < 1e-5


def test_far_points_revert_to_prior():
    model = gp_fit([[0.1, 0.1], [0.2, 0.2]], [1.0, 3.0], length_scale=0.1)
    mu, var = model.predict([[5.0, 5.0]])
    assert mu[0] == pytest.approx(2.0, abs=1e-9)
    assert var[0] == pytest.approx(model.signal_variance, rel=1e-6)


def test_posterior_matches_dense_formula_1d():
    x = np.linspace(0.05, 0.95, 6)
    y = np.sin(6 * x) + 0.3 * x
    ls, lam = 0.2, 1e-6
    model = gp_fit(x, y, length_scale=ls, noise=lam)

    mean, scale = y.mean(), y.std()
    kmat = _matern(np.abs(x[:, None] - x[None, :]) / ls) + lam * np.eye(x.size)
    xq = np.linspace(0, 1, 37)
    kq = _matern(np.abs(xq[:, None] - x[None, :]) / ls)
    mu_ref = mean + scale * kq @ np.linalg.solve(kmat, (y - mean) / scale)
    var_ref = scale ** 2 * (1 - np.sum(kq * np.linalg.solve(kmat, kq.T).T, axis=1))

    mu, var = model.predict(xq)
    assert np.allclose(mu, mu_ref, atol=1e-8)
    assert np.allclose(var, np.maximum(var_ref, 0.0), atol=1e-8)


def test_duplicate_observations_still_factor():
    model = gp_fit([[0.3, 0.3], [0.3, 0.3], [0.6, 0.1]], [1.0, 1.0, 2.0])
    mu, var = model.predict([[0.3, 0.3]])
    assert np.isfinite(mu).all() and np.isfinite(var).all()


def test_negative_noise_exhausts_jitter():
    with pytest.raises(NumericalError):
        gp_fit([[0.1, 0.1], [0.5, 0.5], [0.9, 0.2]], [1.0, 2.0, 3.0], noise=-1.0)


def test_gp_fit_rejects_bad_input():
    with pytest.raises(ArgumentError):
        gp_fit(np.zeros((0, 2)), [])
    with pytest.raises(ArgumentError):
        gp_fit([[0.1, 0.1]], [1.0], length_scale=0.0)


def test_length_scale_comes_from_grid():
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 1, (10, 2))
    y = np.cos(3 * x[:, 0]) + x[:, 1]
    assert select_length_scale(x, y) in LENGTH_SCALE_GRID


# ----------------- EI -----------------

@pytest.mark.parametrize(
    "mu, s, t_best, expected",
    [
        (0.0, 1.0, 0.0, 0.398942),
        (0.0, 2.0, 0.0, 0.797885),
        (1.0, 0.0, 0.0, 1.0),
        (-1.0, 0.0, 0.0, 0.0),
    ],
)
def test_ei_examples(mu, s, t_best, expected):
    assert ei_closed_form(mu, s, t_best) == pytest.approx(expected, abs=1e-6)


def test_ei_matches_monte_carlo():
    rng = np.random.default_rng(42)
    for _ in range(20):
        mu, s, t_best = rng.normal(0, 1), rng.uniform(0.1, 2.0), rng.normal(0, 1)
        samples = np.maximum(rng.normal(mu, s, 1_000_000) - t_best, 0.0)
        se = samples.std() / math.sqrt(samples.size)
        assert abs(ei_closed_form(mu, s, t_best) - samples.mean()) <= 3 * se + 1e-12


@given(
    mu=st.floats(-50, 50),
    s=st.floats(0, 20),
    t_best=st.floats(-50, 50),
    xi=st.floats(0, 1),
)
def test_ei_is_non_negative(mu, s, t_best, xi):
    assert ei_closed_form(mu, s, t_best, xi) >= 0.0


def test_ei_large_improvement_is_delta():
    # Δ/s grande => EI ≈ Δ
    assert ei_closed_form(10.0, 0.1, 0.0) == pytest.approx(10.0, rel=1e-9)
    assert ei_closed_form(0.0, 1.0, 0.0) == pytest.approx(norm.pdf(0.0))


def test_expected_improvement_rejects_negative_xi():
    model = gp_fit([[0.5, 0.5]], [1.0])
    with pytest.raises(ArgumentError):
        expected_improvement(model, [0.5, 0.5], 1.0, xi=-0.1)


# ----------------- selección -----------------

def test_argmax_lowest_breaks_ties_low():
    assert argmax_lowest(np.array([1.0, 3.0, 3.0, 2.0])) == 1
    assert argmax_lowest(np.array([1.0, 3.0, 3.0]), np.array([True, False, True])) == 2
    assert argmax_lowest(np.array([1.0, 2.0]), np.array([False, False])) == -1


def test_select_next_matches_brute_force():
    rng = np.random.default_rng(9)
    cands = rng.uniform(0, 1, (20, 2))
    def y_of(p):
        return -np.sum((p - 0.6) ** 2)

    state = PlannerState(seed=0)
    state.occupied.add(13)
    for idx in (0, 4, 7, 11, 18):
        state.observe(idx, y_of(cands[idx]))
    obs = [i for i, _ in state.observations]
    model = gp_fit(cands[obs], np.array([v for _, v in state.observations]), length_scale=0.2)

    chosen = select_next(model, cands, state, xi=0.0)

    best, best_ei = None, -1.0
    for i in range(20):
        if i in obs or i == 13:
            continue
        ei = expected_improvement(model, cands[i], state.t_best)
        if ei > best_ei:
            best, best_ei = i, ei
    assert chosen == best


def test_select_next_with_nothing_left():
    cands = np.array([[0.1, 0.1], [0.9, 0.9]])
    state = PlannerState(seed=0)
    state.observe(0, 1.0)
    state.occupied.add(1)
    model = gp_fit(cands[[0]], [1.0])
    with pytest.raises(PlanningError):
        select_next(model, cands, state, xi=0.0)


def test_planner_state_best_observed_first_max():
    state = PlannerState(seed=0)
    for idx, v in ((5, 0.2), (3, 0.7), (9, 0.7)):
        state.observe(idx, v)
    assert state.best_observed() == 3
    assert state.t_best == 0.7
    assert state.queries == 3
    state.start_round()
    assert state.observations == [] and state.t_best == -np.inf
