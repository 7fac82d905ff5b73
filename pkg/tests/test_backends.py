"""The compiled core and the pure-Python fallback agree on every kernel."""

import numpy as np
import pytest

from bsle import _pycore

_core = pytest.importorskip("bsle._core")

ST = np.arange(6, dtype=np.uint64)


def _same(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            _same(x, y)
    else:
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_backend_selection_names():
    from bsle._backend import NAME

    assert NAME in ("cython", "python")
    assert _pycore.NAME == "python" and _core.NAME == "cython"


def test_normals_and_tree():
    _same(_pycore.sequential_normals(1, 2, 3, 100), _core.sequential_normals(1, 2, 3, 100))
    _same(_pycore.tree_values(1, 2, 3, 0.5, 7, 40), _core.tree_values(1, 2, 3, 0.5, 7, 40))


def test_flow_real_and_complex():
    rng = np.random.default_rng(0)
    path = np.r_[0.0, np.cumsum(0.1 * rng.standard_normal(300))]
    pts = np.r_[np.linspace(0.05, 2, 15), -np.linspace(0.05, 2, 15)]
    _same(_pycore.flow_real(path, 0.003, 250, 0.001, pts), _core.flow_real(path, 0.003, 250, 0.001, pts))
    _same(_pycore.flow_real(path, 0.003, 300, 0.0, pts), _core.flow_real(path, 0.003, 300, 0.0, pts))
    zr, zi = rng.normal(size=10), rng.uniform(0.01, 2, 10)
    _same(_pycore.flow_complex(path, 0.003, 300, 0.0, zr, zi), _core.flow_complex(path, 0.003, 300, 0.0, zr, zi))


def test_occupation_taus():
    args = (4.0, np.array([0.5, 1.0, 1.5]), np.array([-0.5, -1.5]), 0.01, 1e-12, 50.0, 10 ** 6, 9, ST, 5)
    for stop in (True, False):
        _same(_pycore.occupation_taus(*args, stop), _core.occupation_taus(*args, stop))


def test_rho_lifetimes_and_trace():
    args = (4.0, -4.0, -4.0, 1.0, -1.0, 0.02, 1e-3, 1e-4, 10 ** 6)
    _same(_pycore.rho_lifetimes(*args, np.inf, 3, ST[:3], 2), _core.rho_lifetimes(*args, np.inf, 3, ST[:3], 2))
    _same(_pycore.rho_lifetimes(*args, 0.05, 3, ST[:3], 2), _core.rho_lifetimes(*args, 0.05, 3, ST[:3], 2))
    _same(_pycore.rho_trace(*args, 3, 1, 2), _core.rho_trace(*args, 3, 1, 2))


def test_bessel():
    _same(_pycore.bessel_lifetimes(2.0, 0.3, 6, 500, -1.0, 4, ST, 4), _core.bessel_lifetimes(2.0, 0.3, 6, 500, -1.0, 4, ST, 4))
    _same(_pycore.bessel_lifetimes(4.0, 0.3, 6, 500, 0.01, 4, ST, 4), _core.bessel_lifetimes(4.0, 0.3, 6, 500, 0.01, 4, ST, 4))
    _same(_pycore.bessel_trace(4.0, -0.2, 6, 300, 4, 1, 4), _core.bessel_trace(4.0, -0.2, 6, 300, 4, 1, 4))


def test_martingale():
    args = (4.0, -4.0, -4.0, 1.0, -0.5, 1e-3, [3, 10, 40], 10.0, 5, ST, 1)
    _same(_pycore.bsle_martingale(*args), _core.bsle_martingale(*args))
