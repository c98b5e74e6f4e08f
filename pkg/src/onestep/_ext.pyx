# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_fallback.py`` for the reference semantics."""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log1p
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t

cnp.import_array()


def master_rhs(const double[::1] a, const double[::1] c, const double[::1] p, out=None):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t k
    if out is None:
        out = np.empty(n)
    cdef double[::1] o = out
    if n == 0:
        return out
    with nogil:
        for k in range(n):
            o[k] = -(a[k] * p[k]) - c[k] * p[k]
        for k in range(1, n):
            o[k] += a[k - 1] * p[k - 1]
        for k in range(n - 1):
            o[k] += c[k + 1] * p[k + 1]
    return out


cdef int _run(const double* a, const double* c, Py_ssize_t N, Py_ssize_t k0,
              const double* tg, Py_ssize_t G, bitgen_t* rng,
              int64_t* s1, int64_t* s2, int64_t* states) noexcept nogil:
    cdef Py_ssize_t k = k0
    cdef Py_ssize_t g = 0
    cdef double t = 0.0
    cdef double total, u, v, t_next
    while g < G:
        total = a[k] + c[k]
        if total <= 0.0:
            while g < G:
                if states != NULL:
                    states[g] = k
                else:
                    s1[g] += k
                    s2[g] += k * k
                g += 1
            break
        u = rng.next_double(rng.state)
        t_next = t - log1p(-u) / total
        while g < G and tg[g] < t_next:
            if states != NULL:
                states[g] = k
            else:
                s1[g] += k
                s2[g] += k * k
            g += 1
        if g >= G:
            break
        v = rng.next_double(rng.state)
        if v * total < a[k]:
            k += 1
        else:
            k -= 1
        if k < 0 or k > N:
            return -1
        t = t_next
    return 0


cdef bitgen_t* _bitgen(object bg) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bg.capsule, "BitGenerator")


def sample_run(a, c, Py_ssize_t k0, t_grid, seed):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=float)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=float)
    cdef const double[::1] tv = np.ascontiguousarray(t_grid, dtype=float)
    cdef Py_ssize_t G = tv.shape[0]
    states = np.zeros(G, dtype=np.int64)
    cdef int64_t[::1] sv = states
    bg = np.random.PCG64(seed)
    cdef bitgen_t* rng = _bitgen(bg)
    cdef int rc
    if G == 0:
        return []
    with nogil:
        rc = _run(&av[0], &cv[0], av.shape[0] - 1, k0, &tv[0], G, rng, NULL, NULL, &sv[0])
    if rc != 0:
        raise RuntimeError("path left the state space")
    return states.tolist()


def ssa_ensemble(a, c, Py_ssize_t k0, t_grid, seeds):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=float)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=float)
    cdef const double[::1] tv = np.ascontiguousarray(t_grid, dtype=float)
    cdef Py_ssize_t G = tv.shape[0]
    cdef Py_ssize_t N = av.shape[0] - 1
    s1 = np.zeros(G, dtype=np.int64)
    s2 = np.zeros(G, dtype=np.int64)
    cdef int64_t[::1] s1v = s1
    cdef int64_t[::1] s2v = s2
    cdef bitgen_t* rng
    cdef int rc
    if G == 0:
        return s1, s2
    for seed in seeds:
        bg = np.random.PCG64(int(seed))
        rng = _bitgen(bg)
        with nogil:
            rc = _run(&av[0], &cv[0], N, k0, &tv[0], G, rng, &s1v[0], &s2v[0], NULL)
        if rc != 0:
            raise RuntimeError("path left the state space")
    return s1, s2
