# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled relation-matrix kernels; see purepy.py for the contract."""

from libc.stdlib cimport calloc, free
from libc.string cimport memset

cdef enum:
    INC = 0
    LT = 1
    GT = 2


def check_strict(rel, Py_ssize_t n):
    cdef const unsigned char[::1] m = bytes(rel) if not isinstance(rel, (bytes, bytearray)) else rel
    cdef Py_ssize_t i, j, k
    cdef unsigned char a, b
    for i in range(n):
        if m[i * n + i] != INC:
            return i * n + i
        for j in range(i + 1, n):
            a = m[i * n + j]
            b = m[j * n + i]
            if (a == LT and b != GT) or (a == GT and b != LT) or (a == INC and b != INC):
                return j * n + i
    for i in range(n):
        for j in range(n):
            if m[i * n + j] == LT:
                for k in range(n):
                    if m[j * n + k] == LT and m[i * n + k] != LT:
                        return i * n + k
    return -1


def close_strict(rel, Py_ssize_t n):
    cdef unsigned char[::1] m = rel
    cdef Py_ssize_t words = (n + 63) >> 6
    cdef unsigned long long *lt = <unsigned long long *> calloc(n * words, sizeof(unsigned long long))
    if lt == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, k, w
    cdef long long out = -1
    try:
        for i in range(n):
            for j in range(n):
                if m[i * n + j] == LT:
                    lt[i * words + (j >> 6)] |= 1ULL << (j & 63)
        for k in range(n):
            for i in range(n):
                if lt[i * words + (k >> 6)] & (1ULL << (k & 63)):
                    for w in range(words):
                        lt[i * words + w] |= lt[k * words + w]
        for i in range(n):
            if lt[i * words + (i >> 6)] & (1ULL << (i & 63)):
                out = i * n + i
                break
        if out < 0:
            for i in range(n):
                for j in range(n):
                    if lt[i * words + (j >> 6)] & (1ULL << (j & 63)):
                        m[i * n + j] = LT
                        m[j * n + i] = GT
    finally:
        free(lt)
    return out


def automorphisms(rel, Py_ssize_t n, Py_ssize_t limit=0):
    cdef const unsigned char[::1] m = bytes(rel) if not isinstance(rel, (bytes, bytearray)) else rel
    cdef Py_ssize_t i, j
    cdef long long *indeg = <long long *> calloc(2 * n + 2 * n, sizeof(long long))
    if indeg == NULL:
        raise MemoryError()
    cdef long long *outdeg = indeg + n
    cdef long long *img = outdeg + n
    cdef long long *used = img + n
    result = []
    try:
        for i in range(n):
            for j in range(n):
                if m[i * n + j] == LT:
                    outdeg[i] += 1
                elif m[i * n + j] == GT:
                    indeg[i] += 1
        for i in range(n):
            img[i] = -1
        _bt(m, n, 0, indeg, outdeg, img, used, result, limit)
    finally:
        free(indeg)
    return result


cdef bint _bt(const unsigned char[::1] m, Py_ssize_t n, Py_ssize_t i,
              long long *indeg, long long *outdeg, long long *img,
              long long *used, list result, Py_ssize_t limit):
    cdef Py_ssize_t c, j
    cdef bint ok
    if i == n:
        result.append(tuple([img[j] for j in range(n)]))
        return limit <= 0 or len(result) < limit
    for c in range(n):
        if used[c] or indeg[c] != indeg[i] or outdeg[c] != outdeg[i]:
            continue
        ok = True
        for j in range(i):
            if m[i * n + j] != m[c * n + img[j]]:
                ok = False
                break
        if ok:
            img[i] = c
            used[c] = True
            if not _bt(m, n, i + 1, indeg, outdeg, img, used, result, limit):
                return False
            used[c] = False
            img[i] = -1
    return True
