# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CI-test kernels.  Mirrors ``_pykernels`` exactly."""

from libc.math cimport sqrt, log, fabs, erfc, NAN
from libc.stdlib cimport malloc, free

BACKEND = "cython"

cdef double _SQRT2 = 1.4142135623730951


cdef int _partial_corr(const double[:, ::1] corr, const long long[::1] idx,
                       double tol, double* out) noexcept nogil:
    cdef Py_ssize_t q = idx.shape[0]
    cdef Py_ssize_t i, j, k
    cdef long long* order = <long long*> malloc(q * sizeof(long long))
    cdef double* a = <double*> malloc(q * q * sizeof(double))
    cdef double piv, f, sxx, syy, sxy
    cdef int status = 0
    if order == NULL or a == NULL:
        free(order)
        free(a)
        return -1
    for i in range(q - 2):
        order[i] = idx[i + 2]
    order[q - 2] = idx[0]
    order[q - 1] = idx[1]
    for i in range(q):
        for j in range(q):
            a[i * q + j] = corr[order[i], order[j]]
    for k in range(q):
        piv = a[k * q + k]
        if piv < tol:
            status = 1
            break
        if k >= q - 2:
            continue
        for i in range(k + 1, q):
            f = a[i * q + k] / piv
            if f == 0.0:
                continue
            for j in range(k + 1, i + 1):
                a[i * q + j] -= f * a[k * q + j]
            for j in range(k + 1, i + 1):
                a[j * q + i] = a[i * q + j]
    if status == 0:
        sxx = a[(q - 2) * q + (q - 2)]
        syy = a[(q - 1) * q + (q - 1)]
        sxy = a[(q - 1) * q + (q - 2)]
        if syy - sxy * sxy / sxx < tol:
            status = 1
        else:
            out[0] = sxy / sqrt(sxx * syy)
    free(order)
    free(a)
    return status


def partial_corr(const double[:, ::1] corr, const long long[::1] idx, double tol):
    cdef double r = NAN
    cdef int status
    with nogil:
        status = _partial_corr(corr, idx, tol, &r)
    if status < 0:
        raise MemoryError()
    if status == 1:
        return NAN, 1
    return r, 0


def fisher_z(double r, Py_ssize_t n, Py_ssize_t k):
    cdef double z = 0.5 * log((1.0 + r) / (1.0 - r))
    cdef double stat = sqrt(<double>(n - k - 3)) * fabs(z)
    return stat, erfc(stat / _SQRT2)
