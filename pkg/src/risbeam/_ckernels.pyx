# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: posterior update, belief projection, one training epoch.

Operation order matches ``_pykernels`` exactly; keep the two in step.
"""

from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY

import numpy as np

BACKEND = "cython"

ctypedef signed long long i64
ctypedef unsigned char u8


cdef void _posterior(const double[::1] prior, const double[:, ::1] X, const i64[::1] labels,
                     Py_ssize_t action, double y, double eps_floor, Py_ssize_t skip,
                     double* lik, i64* counts, double[::1] out) noexcept nogil:
    cdef Py_ssize_t Nc = prior.shape[0]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t l, c
    cdef double d, total
    for c in range(Nc):
        lik[c] = 0.0
        counts[c] = 0
    for l in range(n):
        if l == skip:
            continue
        d = X[l, action] - y
        lik[labels[l]] += 1.0 / (d * d + eps_floor)
        counts[labels[l]] += 1
    total = 0.0
    for c in range(Nc):
        if counts[c] == 0:
            lik[c] = eps_floor
        lik[c] = prior[c] * lik[c]
        total += lik[c]
    for c in range(Nc):
        out[c] = lik[c] / total


cdef Py_ssize_t _project(const double[::1] b, const double[:, ::1] protos, const u8[::1] terminal_mask,
                         const i64[::1] terminal_of_class, double tau) noexcept nogil:
    cdef Py_ssize_t Nc = protos.shape[1]
    cdef Py_ssize_t S = protos.shape[0]
    cdef Py_ssize_t c, s, k, best_c = 0, best_s = -1
    cdef double top = b[0], acc, diff, best_d = INFINITY
    for c in range(1, Nc):
        if b[c] > top:
            top = b[c]
            best_c = c
    if top > tau:
        return terminal_of_class[best_c]
    for s in range(S):
        acc = 0.0
        for k in range(Nc):
            diff = b[k] - protos[s, k]
            acc += diff * diff
        if terminal_mask[s]:
            continue
        if best_s < 0 or acc < best_d:
            best_d = acc
            best_s = s
    return best_s


cdef Py_ssize_t _row_argmax(const double[:, ::1] Q, Py_ssize_t s, const u8* used,
                            double* best_value) noexcept nogil:
    # used == NULL: plain argmax; otherwise skip flagged actions
    cdef Py_ssize_t a, best = -1
    cdef double bv = 0.0
    for a in range(Q.shape[1]):
        if used != NULL and used[a]:
            continue
        if best < 0 or Q[s, a] > bv:
            bv = Q[s, a]
            best = a
    best_value[0] = bv
    return best


cdef Py_ssize_t _nth_free(const u8* used, Py_ssize_t n, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t a
    for a in range(n):
        if not used[a]:
            if j == 0:
                return a
            j -= 1
    return -1


def posterior_update_into(const double[::1] prior, const double[:, ::1] X, const i64[::1] labels,
                          Py_ssize_t action, double y, double eps_floor, double[::1] out,
                          Py_ssize_t skip=-1):
    cdef Py_ssize_t Nc = prior.shape[0]
    cdef double* lik = <double*> malloc(Nc * sizeof(double))
    cdef i64* counts = <i64*> malloc(Nc * sizeof(i64))
    if lik == NULL or counts == NULL:
        free(lik)
        free(counts)
        raise MemoryError()
    with nogil:
        _posterior(prior, X, labels, action, y, eps_floor, skip, lik, counts, out)
    free(lik)
    free(counts)


def project(const double[::1] b, const double[:, ::1] protos, const u8[::1] terminal_mask,
            const i64[::1] terminal_of_class, double tau):
    return _project(b, protos, terminal_mask, terminal_of_class, tau)


def train_epoch(double[:, ::1] Q, const double[:, ::1] X, const i64[::1] labels,
                const double[:, ::1] protos, const u8[::1] terminal_mask,
                const i64[::1] terminal_of_class, Py_ssize_t init_index,
                double tau, double eps_floor, double alpha, double epsilon,
                const i64[::1] order, const double[:, ::1] r_draws, const double[:, ::1] u_draws,
                Py_ssize_t max_L, i64[::1] lengths_out, u8[::1] reached_out,
                bint leave_one_out=True, bint no_repeat=True):
    cdef Py_ssize_t Nc = protos.shape[1]
    cdef Py_ssize_t Np = Q.shape[1]
    cdef Py_ssize_t e, k, step, s, s_next, a, c, length, n_used, n_free, j
    cdef double best_next
    cdef u8 reached
    cdef u8* mask
    b_arr = np.empty(Nc)
    n_arr = np.empty(Nc)
    cdef double[::1] b = b_arr
    cdef double[::1] nxt = n_arr
    cdef double[::1] tmp
    cdef double* lik = <double*> malloc(Nc * sizeof(double))
    cdef i64* counts = <i64*> malloc(Nc * sizeof(i64))
    cdef u8* used = <u8*> malloc(Np * sizeof(u8))
    if lik == NULL or counts == NULL or used == NULL:
        free(lik)
        free(counts)
        free(used)
        raise MemoryError()
    try:
        for e in range(order.shape[0]):
            k = order[e]
            for c in range(Nc):
                b[c] = protos[init_index, c]
            s = init_index
            length = 0
            reached = 0
            n_used = 0
            for a in range(Np):
                used[a] = 0
            for step in range(max_L):
                if no_repeat and n_used == Np:
                    for a in range(Np):
                        used[a] = 0
                    n_used = 0
                mask = used if no_repeat else NULL
                if r_draws[e, step] > epsilon:
                    a = _row_argmax(Q, s, mask, &best_next)
                else:
                    n_free = Np - n_used if no_repeat else Np
                    j = <Py_ssize_t> (u_draws[e, step] * n_free)
                    if j > n_free - 1:
                        j = n_free - 1
                    a = _nth_free(used, Np, j) if no_repeat else j
                if no_repeat:
                    used[a] = 1
                    n_used += 1
                _posterior(b, X, labels, a, X[k, a], eps_floor, k if leave_one_out else -1, lik, counts, nxt)
                tmp = b
                b = nxt
                nxt = tmp
                s_next = _project(b, protos, terminal_mask, terminal_of_class, tau)
                _row_argmax(Q, s_next, mask if no_repeat and n_used < Np else NULL, &best_next)
                Q[s, a] = (1.0 - alpha) * Q[s, a] + alpha * (-1.0 + best_next)
                length += 1
                s = s_next
                if terminal_mask[s]:
                    reached = 1
                    break
            lengths_out[e] = length
            reached_out[e] = reached
    finally:
        free(lik)
        free(counts)
        free(used)
