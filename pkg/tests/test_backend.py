import subprocess
import sys

import numpy as np
import pytest

from crm import _fallback, backend

_speedups = pytest.importorskip("crm._speedups")


def _random_smoothing_inputs(seed, n=200, dim=6):
    rng = np.random.default_rng(seed)
    windows = np.ascontiguousarray(rng.uniform(0, 1, size=(n, dim)))
    target = np.ascontiguousarray(rng.uniform(0, 1, size=dim))
    return windows, target


@pytest.mark.parametrize("seed", range(5))
def test_sqexp_backends_agree(seed):
    windows, target = _random_smoothing_inputs(seed)
    args = (windows, target, 0.3, 1.2, 0.0529)
    fast = np.asarray(_speedups.sqexp_weights(*args))
    slow = _fallback.sqexp_weights(*args)
    assert fast == pytest.approx(slow, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("seed", range(5))
def test_epanechnikov_backends_agree(seed):
    windows, target = _random_smoothing_inputs(seed, dim=3)
    args = (windows, target, 0.4, 1.0)
    fast = np.asarray(_speedups.epanechnikov_weights(*args))
    slow = _fallback.epanechnikov_weights(*args)
    assert fast == pytest.approx(slow, rel=1e-12, abs=0.0)
    # the compact support must match exactly: same zero pattern
    assert np.array_equal(fast == 0.0, slow == 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_stratified_backends_agree(seed):
    rng = np.random.default_rng(100 + seed)
    n, d = 80, 4
    xs = np.ascontiguousarray(rng.uniform(0, 1, size=(n, d, 2)))
    ys = np.ascontiguousarray(rng.integers(0, 2, size=(n, d)).astype(float))
    tx = np.ascontiguousarray(rng.uniform(0, 1, size=(d, 2)))
    ty = np.ascontiguousarray(rng.integers(0, 2, size=d).astype(float))
    args = (xs, ys, tx, ty, 1.0 / 0.15 ** 2)
    fast = np.asarray(_speedups.stratified_weights(*args))
    slow = _fallback.stratified_weights(*args)
    assert fast == pytest.approx(slow, rel=1e-12, abs=1e-300)


def test_stratified_empty_stratum_zero_both_backends():
    # target has both labels, windows have only label 1: the label-0 term
    # must vanish rather than divide by zero
    n, d = 10, 2
    rng = np.random.default_rng(9)
    xs = np.ascontiguousarray(rng.uniform(0, 1, size=(n, d, 2)))
    ys = np.ones((n, d))
    tx = np.ascontiguousarray(rng.uniform(0, 1, size=(d, 2)))
    ty = np.array([1.0, 0.0])
    args = (xs, ys, tx, ty, 4.0)
    fast = np.asarray(_speedups.stratified_weights(*args))
    slow = _fallback.stratified_weights(*args)
    assert np.all(np.isfinite(fast))
    assert fast == pytest.approx(slow, rel=1e-12)


def test_compiled_backend_active_by_default():
    assert backend.HAVE_COMPILED
    assert backend.BACKEND_NAME == "compiled"


def test_env_var_forces_python_backend():
    code = ("import crm.backend as b; "
            "assert b.BACKEND_NAME == 'python', b.BACKEND_NAME; "
            "assert not b.HAVE_COMPILED")
    proc = subprocess.run([sys.executable, "-c", code],
                          env={"CRM_BACKEND": "python", "PATH": "/usr/bin:/bin"},
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_readonly_input_arrays_accepted():
    windows, target = _random_smoothing_inputs(3)
    windows.setflags(write=False)
    target.setflags(write=False)
    out = np.asarray(_speedups.sqexp_weights(windows, target, 0.2, 1.0, 1.0))
    assert out.shape == (windows.shape[0],)
