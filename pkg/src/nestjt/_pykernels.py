"""Pure numpy fallback with the same signatures as the compiled kernels."""
import numpy as np
from numpy.lib.stride_tricks import as_strided

_F8 = np.dtype(np.float64).itemsize


def multiply(a, a_strides, b, b_strides, shape):
    shape = tuple(int(s) for s in shape)
    if not shape:
        return np.array([a[0] * b[0]])
    va = as_strided(a, shape, tuple(int(s) * _F8 for s in a_strides), writeable=False)
    vb = as_strided(b, shape, tuple(int(s) * _F8 for s in b_strides), writeable=False)
    return np.multiply(va, vb).ravel()


def marginalize(p, shape, keep_axes):
    shape = tuple(int(s) for s in shape)
    keep_axes = [int(k) for k in keep_axes]
    table = p.reshape(shape) if shape else p.reshape(())
    drop = tuple(ax for ax in range(len(shape)) if ax not in keep_axes)
    summed = table.sum(axis=drop) if drop else table
    remaining = [ax for ax in range(len(shape)) if ax in keep_axes]
    perm = [remaining.index(k) for k in keep_axes]
    return np.ascontiguousarray(np.transpose(summed, perm)).ravel()


def _digits(n, cards):
    # unravel on an explicit index vector, independent of the stride helpers
    return np.unravel_index(np.arange(n), tuple(int(c) for c in cards)) if len(cards) else ()


def joint_product(cards, positions, tables):
    cards = [int(c) for c in cards]
    n = int(np.prod(cards, dtype=np.int64)) if cards else 1
    digits = _digits(n, cards)
    out = np.ones(n)
    for pos, tab in zip(positions, tables):
        idx = np.zeros(n, dtype=np.int64)
        for j in pos:
            idx = idx * cards[j] + digits[j]
        out *= np.asarray(tab, dtype=np.float64)[idx]
    return out


def accumulate(joint, cards, keep, reverse):
    cards = [int(c) for c in cards]
    n = joint.shape[0]
    m = int(np.prod([cards[k] for k in keep], dtype=np.int64)) if len(keep) else 1
    digits = _digits(n, cards)
    idx = np.zeros(n, dtype=np.int64)
    for k in keep:
        idx = idx * cards[k] + digits[k]
    order = np.arange(n)[::-1] if reverse else np.arange(n)
    out = np.zeros(m)
    # unbuffered, so the visiting order is the accumulation order
    np.add.at(out, idx[order], joint[order])
    return out
