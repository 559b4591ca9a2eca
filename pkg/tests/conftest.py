import numpy as np
import pytest

from paucopt.data import Dataset


@pytest.fixture
def tiny_ds():
    """Five 1-feature rows, labels [1,1,0,0,0]."""
    feats = np.array([[0.9], [0.4], [0.8], [0.3], [0.1]])
    labels = np.array([1, 1, 0, 0, 0])
    return Dataset(feats, labels)


def central_diff(fn, x0, h=1e-6):
    """Central finite difference of a scalar function at x0 (1-D array)."""
    g = np.zeros_like(x0)
    for i in range(len(x0)):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g
