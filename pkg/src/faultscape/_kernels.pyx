# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scoring kernels; mirrors faultscape._kernels_py operation for operation."""


def violation_terms(const double[::1] values, double tau):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double v
    out = [0.0] * n
    for i in range(n):
        v = values[i]
        if v > tau:
            out[i] = 1.0 - tau / v
    return out


def violation_score(const double[::1] values, double tau):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double v, acc = 0.0
    for i in range(n):
        v = values[i]
        if v > tau:
            acc += 1.0 - tau / v
    return acc / n


def weighted_total(const double[::1] scores, const double[::1] weights):
    cdef Py_ssize_t i, n = scores.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += weights[i] * scores[i]
    return acc


def window_sum(const double[::1] values, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(lo, hi):
        acc += values[i]
    return acc


def count_above(const double[::1] values, double tau):
    cdef Py_ssize_t i, n = values.shape[0], k = 0
    for i in range(n):
        if values[i] > tau:
            k += 1
    return k
