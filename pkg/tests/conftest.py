import numpy as np
import pytest

import startomo as st


@pytest.fixture(scope="session")
def case():
    return {name: st.case_geometry(name) for name in st.TABLE1_CASES}


@pytest.fixture(scope="session")
def square():
    return st.make_square_phantom(1.0)


@pytest.fixture(scope="session")
def square_truth_125(square):
    return st.rasterize(square, 125)


def random_geometry(rng, K=None, min_uz=0.05):
    """Random valid geometry with rays bounded away from horizontal."""
    if K is None:
        K = int(rng.integers(1, 6))
    angles = []
    while len(angles) < K:
        t = rng.uniform(-np.pi, np.pi)
        if abs(np.cos(t)) >= min_uz:
            angles.append(t)
    weights = rng.uniform(0.2, 2.0, K) * rng.choice([-1.0, 1.0], K)
    return st.make_geometry(angles, weights, 1.0)


def interior_rel_l2(image, truth, margin=2):
    sl = slice(margin, -margin)
    diff = (image.values - truth.values)[sl, sl]
    return float(np.linalg.norm(diff) / np.linalg.norm(truth.values[sl, sl]))
