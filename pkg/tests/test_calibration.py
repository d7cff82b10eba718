# tests/test_calibration.py
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from core.calibration import (
    AdamOptimizer,
    CalibrationProblem,
    MeasurementSet,
    associate,
    calibrate,
    initial_params,
    load_measurements,
    loss,
    loss_gradient,
    make_optimizer,
    save_measurements,
    synthesize_measurements,
)
from core.errors import ArgumentError, MeasurementError
from core.materials import MaterialParams, lower_bounds, upper_bounds
from core.propagation import rsrp


def _exact_measurements(scene, config, params, points):
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    values = np.array([rsrp(scene, config, params, scene.existing_bs[0], p) for p in points])
    return MeasurementSet(xs=xs, ys=ys, rsrp=values, bs_index=None)


@pytest.fixture(scope="module")
def ring_measurements(ring_scene, engine, ring_truth):
    return synthesize_measurements(ring_scene, engine, ring_truth, 1000, 0.0, seed=7)


@pytest.fixture
def two_building_scene(scene_factory):
    # el edificio 1 queda fuera de todos los trayectos medidos
    return scene_factory(
        buildings=[(40.0, 40.0, 60.0, 60.0, 10.0, 0), (80.0, 0.0, 95.0, 10.0, 10.0, 1)],
        bs=((10.0, 50.0, 3.0),),
        sigma=[0.1, 0.3],
        epsilon=[4.0, 2.0],
    )


# ----------------- pérdida -----------------

def test_loss_zero_at_truth(one_building_scene, engine):
    params = MaterialParams([0.1], [4.0])
    ms = _exact_measurements(one_building_scene, engine, params, [(90.0, 50.0), (20.0, 80.0), (70.0, 45.0)])
    assert loss(one_building_scene, engine, params, ms) == pytest.approx(0.0, abs=1e-18)
    g_s, g_e = loss_gradient(one_building_scene, engine, params, ms)
    assert np.allclose(g_s, 0.0) and np.allclose(g_e, 0.0)


def test_loss_by_hand(one_building_scene, engine):
    params = MaterialParams([0.1], [4.0])
    ms = _exact_measurements(one_building_scene, engine, params, [(90.0, 50.0), (20.0, 80.0)])
    ms.rsrp = ms.rsrp - np.array([3.0, -4.0])
    assert loss(one_building_scene, engine, params, ms) == pytest.approx(12.5)


def test_loss_rejects_empty(one_building_scene, engine):
    ms = MeasurementSet(xs=[], ys=[], rsrp=[], bs_index=None)
    with pytest.raises(ArgumentError):
        loss(one_building_scene, engine, MaterialParams([0.1], [4.0]), ms)


@hyp_settings(max_examples=100)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_loss_gradient_matches_fd(ring_scene, engine, ring_measurements, seed):
    params = MaterialParams.random(ring_scene.n_materials, np.random.default_rng(seed))
    g_s, g_e = loss_gradient(ring_scene, engine, params, ring_measurements)
    problem = CalibrationProblem(ring_scene, engine, ring_measurements,
                                 associate(ring_scene, engine, params, ring_measurements))
    vec = params.as_vector()
    grad = np.concatenate([g_s, g_e])
    h = 1e-5
    for i in range(vec.size):
        up, down = vec.copy(), vec.copy()
        up[i] += h
        down[i] -= h
        fd = (problem.loss(MaterialParams.from_vector(up)) - problem.loss(MaterialParams.from_vector(down))) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-4)


def test_uncrossed_material_has_zero_gradient_and_never_moves(two_building_scene, engine):
    truth = MaterialParams([0.1, 0.3], [4.0, 2.0])
    rng = np.random.default_rng(3)
    points = list(zip(rng.uniform(70, 99, 40), rng.uniform(40, 60, 40)))
    ms = _exact_measurements(two_building_scene, engine, truth, points)

    start = MaterialParams([0.5, 1.2], [2.5, 4.5])
    g_s, g_e = loss_gradient(two_building_scene, engine, start, ms)
    assert g_s[1] == 0.0 and g_e[1] == 0.0

    result = calibrate(two_building_scene, engine, start, ms, eta=0.01, epochs=30)
    assert result.report.crossings_per_material == [80, 0]
    assert result.params.sigma[1] == 1.2
    assert result.params.epsilon[1] == 4.5


# ----------------- calibrate -----------------

def test_calibrate_from_truth_is_stationary(ring_scene, engine, ring_truth, ring_measurements):
    result = calibrate(ring_scene, engine, ring_truth, ring_measurements, eta=0.01, epochs=20, optimizer="sgd")
    assert result.report.final_loss == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(result.params.sigma, ring_truth.sigma)
    assert np.allclose(result.params.epsilon, ring_truth.epsilon)


def test_synthetic_recovery_with_adam(ring_scene, engine, ring_measurements):
    params0 = MaterialParams.random(ring_scene.n_materials, np.random.default_rng(0))
    result = calibrate(ring_scene, engine, params0, ring_measurements, eta=0.01, epochs=300, optimizer="adam")
    report = result.report

    assert min(report.crossings_per_material) >= 20
    assert len(report.loss_curve) == 300
    assert report.final_loss == report.loss_curve[-1]
    assert report.final_loss <= 0.01 * report.initial_loss


def test_noisy_recovery_reaches_noise_floor(ring_scene, engine, ring_truth):
    noise_sigma = 2.0
    ms = synthesize_measurements(ring_scene, engine, ring_truth, 2000, noise_sigma, seed=11)
    start = MaterialParams(ring_truth.sigma * 1.2, ring_truth.epsilon * 0.9).projected()
    result = calibrate(ring_scene, engine, start, ms, eta=0.01, epochs=300)
    tail = float(np.mean(result.report.loss_curve[-50:]))
    assert abs(tail - noise_sigma ** 2) <= 0.1 * noise_sigma ** 2


def test_sgd_small_step_is_monotone(ring_scene, engine, ring_truth, ring_measurements):
    start = MaterialParams(ring_truth.sigma * 1.3, ring_truth.epsilon * 0.8).projected()
    result = calibrate(ring_scene, engine, start, ring_measurements, eta=1e-6, epochs=50, optimizer="sgd")
    curve = np.array(result.report.loss_curve)
    assert np.all(np.diff(curve) <= 1e-12 * curve[0])
    assert result.report.final_loss < result.report.initial_loss


def test_bounds_hold_every_epoch(ring_scene, engine, ring_measurements):
    # paso grande => la proyección tiene que actuar
    params0 = MaterialParams.random(ring_scene.n_materials, np.random.default_rng(5))
    result = calibrate(ring_scene, engine, params0, ring_measurements, eta=0.5, epochs=40, optimizer="adam")
    k = ring_scene.n_materials
    lo, hi = lower_bounds(k), upper_bounds(k)
    for s, e in zip(result.report.sigma_history, result.report.epsilon_history):
        vec = np.concatenate([s, e])
        assert np.all(vec >= lo) and np.all(vec <= hi)


def test_minibatch_is_seeded(ring_scene, engine, ring_measurements):
    params0 = MaterialParams.random(ring_scene.n_materials, np.random.default_rng(1))
    a = calibrate(ring_scene, engine, params0, ring_measurements, eta=0.01, epochs=10, batch_size=128, seed=4)
    b = calibrate(ring_scene, engine, params0, ring_measurements, eta=0.01, epochs=10, batch_size=128, seed=4)
    assert a.report.batch_size == 128
    assert a.report.loss_curve == b.report.loss_curve


@pytest.mark.parametrize("kwargs", [{"eta": 0.0, "epochs": 10}, {"eta": 0.01, "epochs": 0}])
def test_calibrate_rejects_bad_arguments(one_building_scene, engine, kwargs):
    ms = _exact_measurements(one_building_scene, engine, MaterialParams([0.1], [4.0]), [(90.0, 50.0)])
    with pytest.raises(ArgumentError):
        calibrate(one_building_scene, engine, MaterialParams([0.1], [4.0]), ms, **kwargs)


def test_unknown_optimizer():
    with pytest.raises(ArgumentError):
        make_optimizer("rmsprop", 0.01)
    assert isinstance(make_optimizer(" Adam ", 0.01), AdamOptimizer)


# ----------------- Θ⁰ -----------------

def test_initial_params_modes(scene_factory):
    scene = scene_factory(buildings=[(40.0, 40.0, 60.0, 60.0, 10.0, 0)])
    assert np.allclose(initial_params(scene, "scene", 0).sigma, [0.1])
    rnd = initial_params(scene, "auto", 0)
    assert rnd.in_bounds()
    with pytest.raises(ArgumentError):
        initial_params(scene, "labels", 0)
    with pytest.raises(ArgumentError):
        initial_params(scene, "zeros", 0)


def test_label_library_is_projected():
    params = MaterialParams.from_labels(["concrete", "metal", "Glass"], 3.5e9)
    assert params.in_bounds()
    # el metal satura σ en el borde superior
    assert params.sigma[1] == pytest.approx(2.0 - 1e-3)
    with pytest.raises(ArgumentError):
        MaterialParams.from_labels(["adobe"], 3.5e9)


# ----------------- archivo de mediciones -----------------

def test_measurements_round_trip(tmp_path, ring_scene, ring_measurements):
    path = tmp_path / "m.csv"
    save_measurements(ring_measurements, path)
    again = load_measurements(path, ring_scene)
    assert len(again) == len(ring_measurements)
    assert np.array_equal(again.rsrp, ring_measurements.rsrp)
    assert np.array_equal(again.bs_index, ring_measurements.bs_index)


def test_blank_bs_index_means_best_bs(tmp_path, one_building_scene):
    path = tmp_path / "m.csv"
    path.write_text("x,y,rsrp_dbm,bs_index\n10,10,-70,\n20,20,-75,0\n", encoding="utf-8")
    ms = load_measurements(path, one_building_scene)
    assert ms.bs_index.tolist() == [-1, 0]


@pytest.mark.parametrize(
    "content, match",
    [
        ("a,b,c\n1,2,3\n", "cabecera"),
        ("x,y,rsrp_dbm\n500,10,-70\n", "medición 0"),
        ("x,y,rsrp_dbm,bs_index\n10,10,-70,3\n", "bs_index"),
        ("x,y,rsrp_dbm\n10,abc,-70\n", "fila 0"),
        ("x,y,rsrp_dbm\n", "vacío"),
    ],
)
def test_bad_measurement_files(tmp_path, one_building_scene, content, match):
    path = tmp_path / "m.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(MeasurementError, match=match):
        load_measurements(path, one_building_scene)


def test_missing_measurement_file(tmp_path):
    with pytest.raises(MeasurementError):
        load_measurements(tmp_path / "nope.csv")


def test_synthesize_is_seeded(ring_scene, engine, ring_truth):
    a = synthesize_measurements(ring_scene, engine, ring_truth, 1494, 2.0, seed=3)
    b = synthesize_measurements(ring_scene, engine, ring_truth, 1494, 2.0, seed=3)
    assert len(a) == 1494
    assert np.array_equal(a.rsrp, b.rsrp)
    with pytest.raises(ArgumentError):
        synthesize_measurements(ring_scene, engine, ring_truth, 0, 0.0, seed=3)
