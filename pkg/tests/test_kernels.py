import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nestjt import kernels

pytestmark = pytest.mark.skipif("cython" not in kernels.available(), reason="compiled kernels not built")

shapes = st.lists(st.integers(1, 4), min_size=0, max_size=4)


def _strides(shape, present):
    out, s = [], 1
    for c, keep in zip(reversed(shape), reversed(present)):
        out.append(s if keep else 0)
        if keep:
            s *= c
    return np.array(out[::-1], dtype=np.intp), s


@settings(max_examples=60, deadline=None)
@given(shape=shapes, data=st.data())
def test_multiply_backends_agree(shape, data):
    pa = data.draw(st.lists(st.booleans(), min_size=len(shape), max_size=len(shape)))
    pb = data.draw(st.lists(st.booleans(), min_size=len(shape), max_size=len(shape)))
    sa, na = _strides(shape, pa)
    sb, nb = _strides(shape, pb)
    rng = np.random.default_rng(len(shape))
    a, b = rng.random(na), rng.random(nb)
    shp = np.array(shape, dtype=np.intp)
    c = kernels.load("cython").multiply(a, sa, b, sb, shp)
    p = kernels.load("python").multiply(a, sa, b, sb, shp)
    np.testing.assert_array_equal(c, p)


@settings(max_examples=60, deadline=None)
@given(shape=shapes, data=st.data())
def test_marginalize_backends_agree(shape, data):
    keep = data.draw(st.permutations(range(len(shape))))
    keep = keep[: data.draw(st.integers(0, len(shape)))]
    rng = np.random.default_rng(7)
    p = rng.random(int(np.prod(shape)) if shape else 1)
    args = (p, np.array(shape, dtype=np.intp), np.array(keep, dtype=np.intp))
    np.testing.assert_allclose(kernels.load("cython").marginalize(*args), kernels.load("python").marginalize(*args), rtol=1e-12)


def test_oracle_kernels_agree():
    rng = np.random.default_rng(3)
    cards = np.array([2, 3, 2, 4], dtype=np.intp)
    positions = [np.array([0, 2], dtype=np.intp), np.array([3, 1, 0], dtype=np.intp)]
    tables = [rng.random(4), rng.random(24)]
    jc = kernels.load("cython").joint_product(cards, positions, tables)
    jp = kernels.load("python").joint_product(cards, positions, tables)
    np.testing.assert_array_equal(jc, jp)
    for rev in (False, True):
        keep = np.array([3, 0], dtype=np.intp)
        np.testing.assert_allclose(
            kernels.load("cython").accumulate(jc, cards, keep, rev),
            kernels.load("python").accumulate(jc, cards, keep, rev),
            rtol=1e-12,
        )


def test_forced_backend_env(monkeypatch):
    import importlib

    monkeypatch.setenv("NESTJT_KERNELS", "python")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("NESTJT_KERNELS")
        importlib.reload(kernels)
