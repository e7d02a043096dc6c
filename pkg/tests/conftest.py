import math
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))
sys.path.insert(0, ROOT)

from spectra_gen import poschl_teller_spectrum  # noqa: E402
from spectral_core import Constants, SpectralInput, validate  # noqa: E402

# np.longdouble 在 x86-64 Linux 上是 80 位扩展精度，在部分平台上等同 double
EXTENDED_PRECISION = np.finfo(np.longdouble).eps < 1e-18


@pytest.fixture
def pt4():
    return validate(poschl_teller_spectrum(4))


@pytest.fixture
def pt1():
    return validate(poschl_teller_spectrum(1))


@pytest.fixture
def single_level():
    """κ = 1, C_1 = √2，即 x_1 = 0"""
    return validate(SpectralInput((1.0,), Constants((math.sqrt(2.0),))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_kappas(rng, n, low=0.1, high=10.0, min_gap=1e-3):
    """升序、间隔不小于 min_gap 的随机 κ"""
    while True:
        k = np.sort(rng.uniform(low, high, n))
        if n == 1 or np.min(np.diff(k)) >= min_gap:
            return [float(v) for v in k]
