import numpy as np
import pytest


def brute_force_filter(points, mode="strong"):
    """Quadratic all-pairs nondominated filter; the reference the library's
    filter is checked against."""
    P = np.asarray(points, dtype=float)
    keep = np.ones(P.shape[0], dtype=bool)
    for i in range(P.shape[0]):
        for j in range(P.shape[0]):
            if i == j:
                continue
            if mode == "strong":
                if np.all(P[j] <= P[i]) and np.any(P[j] < P[i]):
                    keep[i] = False
                    break
            else:
                if np.all(P[j] < P[i]):
                    keep[i] = False
                    break
    return keep


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
