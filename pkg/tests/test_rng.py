import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsle import _pycore
from bsle._backend import core
from bsle.rng import STREAM_BLOCK, RngSpec

MASK = (1 << 64) - 1


def test_philox_known_answer_against_numpy():
    # numpy's Philox4x64-10 with key (1, 2) increments its zero counter before the
    # first block, so the first four outputs are the block for counter (1, 0, 0, 0)
    bg = np.random.Philox(key=np.array([1, 2], dtype=np.uint64))
    expected = bg.random_raw(4)
    assert _pycore.philox4x64(1, 0, 0, 0, 1, 2) == tuple(int(v) for v in expected)
    assert tuple(int(v) for v in expected) == (0x4F2F4313B5536B09, 0x5B617BE3219FF32A,
                                               0x097293476F9275CB, 0xF63F3BF4962C3942)


@given(st.integers(0, MASK), st.integers(0, MASK), st.integers(0, MASK))
def test_philox_matches_numpy_on_random_keys(k0, k1, c0):
    bg = np.random.Philox(counter=np.array([c0, 0, 0, 0], dtype=np.uint64),
                          key=np.array([k0, k1], dtype=np.uint64))
    # numpy increments the counter before producing each block
    raw = bg.random_raw(4)
    assert _pycore.philox4x64((c0 + 1) & MASK, 1 if c0 == MASK else 0, 0, 0, k0, k1) == \
        tuple(int(v) for v in raw)


def test_normals_are_standard():
    z = core.sequential_normals(7, 0, 1, 200_000)
    assert abs(z.mean()) < 5 / np.sqrt(z.size)
    assert abs(z.var() - 1.0) < 5 * np.sqrt(2 / z.size)
    # Box-Muller pairs are uncorrelated
    assert abs(np.mean(z[0::2] * z[1::2])) < 5 / np.sqrt(z.size / 2)


def test_rngspec_streams_and_families():
    r = RngSpec(5, 10)
    assert list(r.streams(2, 3)) == [12, 13, 14]
    assert r.family(2).stream == 10 + 2 * STREAM_BLOCK
    assert r.offset(3) == RngSpec(5, 13)
    assert RngSpec(-1).seed == MASK
    with pytest.raises(ValueError):
        RngSpec(1, -1)


def test_domains_and_streams_are_distinct():
    a = core.sequential_normals(1, 0, 1, 50)
    assert not np.array_equal(a, core.sequential_normals(1, 1, 1, 50))
    assert not np.array_equal(a, core.sequential_normals(1, 0, 2, 50))
    assert not np.array_equal(a, core.sequential_normals(2, 0, 1, 50))
    assert np.array_equal(a, core.sequential_normals(1, 0, 1, 50))


def test_tree_values_nest_under_refinement():
    # the dyadic construction: values at level j are a subsample of level j+1
    coarse = core.tree_values(3, 4, 1, 1.0, 5, 64)
    fine = core.tree_values(3, 4, 1, 1.0, 6, 128)
    assert np.array_equal(coarse, fine[::2])


def test_tree_increments_have_brownian_variance():
    vals = np.array([core.tree_values(9, s, 1, 1.0, 4, 16) for s in range(2000)])
    inc = np.diff(vals, axis=1).ravel()
    assert abs(inc.var() / 2.0 ** -4 - 1.0) < 0.05
