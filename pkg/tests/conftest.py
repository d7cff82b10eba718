# tests/conftest.py
import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings as hyp_settings

from core.materials import MaterialParams
from core.propagation import EngineConfig
from core.scene import build_scene

hyp_settings.register_profile(
    "default",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
hyp_settings.register_profile("fast", max_examples=10, deadline=None)
hyp_settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def scene_dict(
    buildings=(),
    size=(100.0, 100.0),
    bs=((10.0, 50.0, 3.0),),
    sigma=None,
    epsilon=None,
    rx_height=1.5,
    tx_power=43.0,
):
    """buildings: (x0, y0, x1, y1, altura, material)."""
    k = max([b[5] for b in buildings], default=-1) + 1
    k = max(k, 1)
    return {
        "region": {"xmin": 0.0, "ymin": 0.0, "xmax": size[0], "ymax": size[1]},
        "carrier_freq_hz": 3.5e9,
        "rx_height_m": rx_height,
        "buildings": [
            {"footprint": rect(*b[:4]), "height_m": b[4], "material_index": b[5]} for b in buildings
        ],
        "existing_bs": [
            {"x": x, "y": y, "z": z, "tx_power_dbm": tx_power, "antenna_gain_db": 0.0} for x, y, z in bs
        ],
        "materials": {
            "sigma": list(sigma) if sigma is not None else [0.1] * k,
            "epsilon": list(epsilon) if epsilon is not None else [4.0] * k,
        },
    }


@pytest.fixture(scope="session")
def engine():
    return EngineConfig(wall_thickness_m=0.3, min_distance_m=1.0, noise_floor_dbm=-94.0)


@pytest.fixture
def scene_factory():
    def _make(**kwargs):
        return build_scene(scene_dict(**kwargs))

    return _make


@pytest.fixture
def one_building_scene(scene_factory):
    return scene_factory(buildings=[(40.0, 40.0, 60.0, 60.0, 10.0, 0)])


# ---- anillo de 10 edificios alrededor de una BS baja (calibración) ----

RING_SIGMA = np.array([0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.2, 0.06, 0.09, 0.12])
RING_EPSILON = np.array([2.2, 2.8, 3.4, 4.0, 4.6, 5.2, 3.0, 3.7, 4.4, 5.0])


def ring_scene_dict():
    buildings = []
    for i in range(10):
        ang = math.radians(36.0 * i)
        cx, cy = 150.0 + 80.0 * math.cos(ang), 150.0 + 80.0 * math.sin(ang)
        buildings.append((round(cx - 12, 6), round(cy - 12, 6), round(cx + 12, 6), round(cy + 12, 6), 20.0, i))
    return scene_dict(
        buildings=buildings,
        size=(300.0, 300.0),
        bs=((150.0, 150.0, 3.0),),
        sigma=RING_SIGMA,
        epsilon=RING_EPSILON,
    )


# Scene es inmutable => se comparte por sesión (sirve también en tests con hypothesis)
@pytest.fixture(scope="session")
def ring_scene():
    return build_scene(ring_scene_dict())


@pytest.fixture(scope="session")
def ring_truth():
    return MaterialParams(RING_SIGMA, RING_EPSILON)


# ---- 3×3 edificios de 30×30 m, 324 candidatos a 5 m (planificación) ----

@pytest.fixture(scope="session")
def campus_scene():
    heights = [12.0, 18.0, 9.0, 22.0, 15.0, 11.0, 25.0, 8.0, 16.0]
    buildings = []
    for j, y0 in enumerate((20.0, 85.0, 150.0)):
        for i, x0 in enumerate((20.0, 85.0, 150.0)):
            n = 3 * j + i
            buildings.append((x0, y0, x0 + 30.0, y0 + 30.0, heights[n], n % 3))
    return build_scene(scene_dict(
        buildings=buildings,
        size=(200.0, 200.0),
        bs=((5.0, 5.0, 20.0),),
        sigma=[0.05, 0.1, 0.15],
        epsilon=[3.0, 4.0, 5.0],
    ))
