import numpy as np
import pytest

from splatstream import depthsort
from splatstream.bench import generate_scene
from splatstream.splats import SplatRecord


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    depthsort.warm_up()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_record(position=(0, 0, 0), rotation=(1, 0, 0, 0), log_scale=(0, 0, 0),
                opacity=0.0, f_dc=(0.0, 0.0, 0.0), degree=0):
    m = (degree + 1) ** 2
    sh = np.zeros((3, m), np.float32)
    sh[:, 0] = f_dc
    return SplatRecord(
        position=np.asarray(position, np.float32),
        raw_rotation=np.asarray(rotation, np.float32),
        raw_log_scale=np.asarray(log_scale, np.float32),
        raw_opacity=float(opacity),
        sh_coeffs=sh,
    )


def random_scene(n, seed=0, sh_degree=0, extent=10.0):
    return generate_scene(n, seed=seed, sh_degree=sh_degree, extent=extent)


@pytest.fixture
def small_scene():
    return random_scene(50, seed=5)
