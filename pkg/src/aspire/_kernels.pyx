# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled aspiration-learning kernels; see ``_pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

cnp.import_array()

NAME = "cython"

DEF NONE = 0
DEF SPONTANEOUS = 1
DEF FORCED = 2


cdef class Tables:
    cdef readonly object table, counts, strides
    cdef readonly int n

    def __init__(self, table, counts, strides):
        self.table = np.ascontiguousarray(table, dtype=np.float64)
        self.counts = np.ascontiguousarray(counts, dtype=np.int64)
        self.strides = np.ascontiguousarray(strides, dtype=np.int64)
        self.n = len(self.counts)


def prepare(table, counts, strides):
    return Tables(table, counts, strides)


cdef inline bitgen_t* _bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _rand(bitgen_t* bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef inline Py_ssize_t _index(const long long* a, const long long* strides, int n) noexcept nogil:
    cdef Py_ssize_t k = 0
    cdef int i
    for i in range(n):
        k += a[i] * strides[i]
    return k


cdef void _step(const double* table, const long long* counts, const long long* strides, int n,
                long long* a, double* rho, double eps, double lam, double zeta, double c_phi,
                double h, double lo, double hi, int mode, bitgen_t* bg) noexcept nogil:
    cdef Py_ssize_t k = _index(a, strides, n)
    cdef const double* u = table + k * n
    cdef int who = -1
    cdef double val = 0.0
    cdef int i
    cdef double ui, ri, r, gap, x, phi
    cdef long long m, b
    if mode == FORCED:
        who = <int>(_rand(bg) * n)
        val = -zeta + 2.0 * zeta * _rand(bg)
    for i in range(n):
        ui = u[i]
        ri = rho[i]
        r = 0.0
        if mode == SPONTANEOUS:
            if _rand(bg) < lam:
                r = -zeta + 2.0 * zeta * _rand(bg)
        elif mode == FORCED and i == who:
            r = val
        gap = ui - ri
        x = ri + eps * (ui - ri) + r
        if x > hi:
            x = hi
        elif x < lo:
            x = lo
        rho[i] = x
        if gap >= 0.0:
            phi = 1.0
        else:
            phi = 1.0 + c_phi * gap
            if phi < h:
                phi = h
        if not (_rand(bg) < phi):
            m = counts[i]
            if m > 1:
                b = <long long>(_rand(bg) * (m - 1))
                if b >= a[i]:
                    b += 1
                a[i] = b


def advance(Tables tb, long long[::1] action, double[::1] rho, double eps, double lam,
            double zeta, double c_phi, double h, double lo, double hi, int mode,
            long long n_steps, rng, long long[::1] occ=None):
    cdef const double[:, ::1] table = tb.table
    cdef const long long[::1] counts = tb.counts
    cdef const long long[::1] strides = tb.strides
    cdef int n = tb.n
    cdef bitgen_t* bg = _bitgen(rng)
    cdef long long t
    cdef bint count = occ is not None
    cdef long long* occp = &occ[0] if count else NULL
    with rng.bit_generator.lock, nogil:
        for t in range(n_steps):
            if count:
                occp[_index(&action[0], &strides[0], n)] += 1
            _step(&table[0, 0], &counts[0], &strides[0], n, &action[0], &rho[0],
                  eps, lam, zeta, c_phi, h, lo, hi, mode, bg)


def absorb_row(Tables tb, start, double eps, double zeta, double c_phi, double h, double lo,
               double hi, long long samples, long long max_steps, rng, long long[::1] out):
    cdef const double[:, ::1] table = tb.table
    cdef const long long[::1] counts = tb.counts
    cdef const long long[::1] strides = tb.strides
    cdef int n = tb.n
    cdef bitgen_t* bg = _bitgen(rng)
    cdef long long[::1] s0 = np.asarray(start, dtype=np.int64).copy()
    cdef long long[::1] a = np.empty(n, dtype=np.int64)
    cdef double[::1] rho = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t k0 = _index(&s0[0], &strides[0], n)
    cdef Py_ssize_t k
    cdef long long unresolved = 0, steps = 0, taken, smp
    cdef double residual = 0.0, bound, g
    cdef const double* u
    cdef bint ok
    cdef int i
    with rng.bit_generator.lock, nogil:
        for smp in range(samples):
            for i in range(n):
                a[i] = s0[i]
                rho[i] = table[k0, i]
            _step(&table[0, 0], &counts[0], &strides[0], n, &a[0], &rho[0],
                  eps, 0.0, zeta, c_phi, h, lo, hi, FORCED, bg)
            taken = 0
            while True:
                k = _index(&a[0], &strides[0], n)
                u = &table[k, 0]
                ok = True
                bound = 0.0
                for i in range(n):
                    g = rho[i] - u[i]
                    if g > 0.0:
                        if rho[i] + eps * (u[i] - rho[i]) == rho[i]:
                            bound += c_phi * g / eps
                        else:
                            ok = False
                            break
                if ok:
                    out[k] += 1
                    if bound > residual:
                        residual = bound
                    break
                if taken >= max_steps:
                    unresolved += 1
                    break
                _step(&table[0, 0], &counts[0], &strides[0], n, &a[0], &rho[0],
                      eps, 0.0, zeta, c_phi, h, lo, hi, NONE, bg)
                taken += 1
            steps += taken
    return unresolved, residual, steps
