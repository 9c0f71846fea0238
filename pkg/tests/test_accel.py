import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kernelquant import _accel


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2 ** 31))
def test_bidisc_paths_agree(j, l, seed):
    rng = np.random.default_rng(seed)
    z = 0.6 * (rng.uniform(-1, 1, (j, 2)) + 1j * rng.uniform(-1, 1, (j, 2)))
    w = 0.6 * (rng.uniform(-1, 1, (l, 2)) + 1j * rng.uniform(-1, 1, (l, 2)))
    np.testing.assert_allclose(_accel.bidisc_blocks_numba(z, w), _accel.bidisc_blocks_numpy(z, w), atol=1e-14)


def test_chi_paths_agree(rng):
    s = rng.normal(size=(3, 4)) + 0.5j * rng.normal(size=(3, 4))
    atoms, weights = np.array([-1.0, 0.5, 2.0]), np.array([0.2, 0.5, 0.3])
    a = _accel.discrete_chi_numba(s, atoms, weights)
    assert a.shape == (3, 4)
    np.testing.assert_allclose(a, _accel.discrete_chi_numpy(s, atoms, weights), atol=1e-14)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, KERNELQUANT_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from kernelquant import _accel; print(_accel.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_numpy_fallback_end_to_end():
    env = dict(os.environ, KERNELQUANT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-m", "kernelquant", "check", "-q"], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stdout + out.stderr
