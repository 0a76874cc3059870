# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for potential algebra and the brute-force oracle.

All arrays are flat, row-major (last axis fastest).
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def multiply(const double[::1] a, const cnp.intp_t[::1] a_strides,
             const double[::1] b, const cnp.intp_t[::1] b_strides,
             const cnp.intp_t[::1] shape):
    cdef Py_ssize_t nd = shape.shape[0]
    cdef Py_ssize_t n = 1, i, d, j
    for d in range(nd):
        n *= shape[d]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nd == 0:
        out[0] = a[0] * b[0]
        return out_arr
    cdef Py_ssize_t inner = shape[nd - 1]
    cdef Py_ssize_t sa = a_strides[nd - 1], sb = b_strides[nd - 1]
    cdef cnp.intp_t[::1] ctr = np.zeros(nd, dtype=np.intp)
    cdef Py_ssize_t ia = 0, ib = 0
    i = 0
    while i < n:
        for j in range(inner):
            out[i + j] = a[ia + j * sa] * b[ib + j * sb]
        i += inner
        # advance the odometer over all but the last axis
        d = nd - 2
        while d >= 0:
            ctr[d] += 1
            ia += a_strides[d]
            ib += b_strides[d]
            if ctr[d] < shape[d]:
                break
            ia -= a_strides[d] * shape[d]
            ib -= b_strides[d] * shape[d]
            ctr[d] = 0
            d -= 1
    return out_arr


def marginalize(const double[::1] p, const cnp.intp_t[::1] shape, const cnp.intp_t[::1] keep_axes):
    cdef Py_ssize_t nd = shape.shape[0]
    cdef Py_ssize_t nk = keep_axes.shape[0]
    cdef Py_ssize_t n = 1, i, d, k, j
    for d in range(nd):
        n *= shape[d]
    # output stride of every input axis; summed axes get 0
    cdef cnp.intp_t[::1] ostr = np.zeros(max(nd, 1), dtype=np.intp)
    cdef Py_ssize_t s = 1
    for k in range(nk - 1, -1, -1):
        ostr[keep_axes[k]] = s
        s *= shape[keep_axes[k]]
    out_arr = np.zeros(s, dtype=np.float64)
    cdef double[::1] out = out_arr
    if nd == 0:
        out[0] = p[0]
        return out_arr
    cdef Py_ssize_t inner = shape[nd - 1]
    cdef Py_ssize_t so = ostr[nd - 1]
    cdef cnp.intp_t[::1] ctr = np.zeros(nd, dtype=np.intp)
    cdef Py_ssize_t io = 0
    cdef double acc
    i = 0
    while i < n:
        if so == 0:
            acc = 0.0
            for j in range(inner):
                acc += p[i + j]
            out[io] += acc
        else:
            for j in range(inner):
                out[io + j * so] += p[i + j]
        i += inner
        d = nd - 2
        while d >= 0:
            ctr[d] += 1
            io += ostr[d]
            if ctr[d] < shape[d]:
                break
            io -= ostr[d] * shape[d]
            ctr[d] = 0
            d -= 1
    return out_arr


def joint_product(const cnp.intp_t[::1] cards, list positions, list tables):
    """Product of factor entries for every full configuration.

    Configurations are visited in order with an odometer over the digits;
    each factor's entry index moves by that factor's own place value for
    the digit that ticks. Nothing is shared with the potential algebra.
    """
    cdef Py_ssize_t nv = cards.shape[0]
    cdef Py_ssize_t nf = len(tables)
    # place[f, v]: weight of digit v in factor f's flat index
    place_np = np.zeros((max(nf, 1), max(nv, 1)), dtype=np.intp)
    for f in range(nf):
        w = 1
        for j in reversed([int(q) for q in positions[f]]):
            place_np[f, j] = w
            w *= int(cards[j])
    tab_np = np.ascontiguousarray(
        np.concatenate([np.asarray(t, dtype=np.float64).ravel() for t in tables]) if tables else np.zeros(0))
    off_np = np.zeros(nf + 1, dtype=np.intp)
    for f in range(nf):
        off_np[f + 1] = off_np[f] + np.asarray(tables[f]).size
    cdef const cnp.intp_t[:, ::1] place = place_np
    cdef const double[::1] tab = tab_np
    cdef cnp.intp_t[::1] idx = off_np[:max(nf, 1)].copy()
    cdef Py_ssize_t n = 1, i, v, f2
    for v in range(nv):
        n *= cards[v]
    out_arr = np.ones(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef cnp.intp_t[::1] digits = np.zeros(max(nv, 1), dtype=np.intp)
    cdef double acc
    for i in range(n):
        acc = 1.0
        for f2 in range(nf):
            acc *= tab[idx[f2]]
        out[i] = acc
        v = nv - 1
        while v >= 0:
            digits[v] += 1
            if digits[v] < cards[v]:
                for f2 in range(nf):
                    idx[f2] += place[f2, v]
                break
            digits[v] = 0
            for f2 in range(nf):
                idx[f2] -= (cards[v] - 1) * place[f2, v]
            v -= 1
    return out_arr


def accumulate(const double[::1] joint, const cnp.intp_t[::1] cards, const cnp.intp_t[::1] keep, bint reverse):
    """Sum the joint onto the `keep` positions, visiting configurations
    forwards or backwards with an odometer."""
    cdef Py_ssize_t nv = cards.shape[0]
    cdef Py_ssize_t nk = keep.shape[0]
    cdef Py_ssize_t n = joint.shape[0], m = 1, t, i, v, k, idx = 0
    place_np = np.zeros(max(nv, 1), dtype=np.intp)
    for k in range(nk - 1, -1, -1):
        place_np[keep[k]] = m
        m *= cards[keep[k]]
    cdef const cnp.intp_t[::1] place = place_np
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef cnp.intp_t[::1] digits = np.zeros(max(nv, 1), dtype=np.intp)
    if reverse:
        for v in range(nv):
            digits[v] = cards[v] - 1
            idx += (cards[v] - 1) * place[v]
    for t in range(n):
        i = n - 1 - t if reverse else t
        out[idx] += joint[i]
        v = nv - 1
        while v >= 0:
            if reverse:
                if digits[v] > 0:
                    digits[v] -= 1
                    idx -= place[v]
                    break
                digits[v] = cards[v] - 1
                idx += (cards[v] - 1) * place[v]
            else:
                digits[v] += 1
                if digits[v] < cards[v]:
                    idx += place[v]
                    break
                digits[v] = 0
                idx -= (cards[v] - 1) * place[v]
            v -= 1
    return out_arr
