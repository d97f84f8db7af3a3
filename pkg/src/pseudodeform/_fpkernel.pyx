# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row reduction over F_p.

Hot kernel behind every linear solve in the package.  The pure-Python
twin lives in ``_fpkernel_py``; both must reduce identically (smallest
pivot column first, rows swapped upward, full reduced echelon form).
"""

import numpy as np


cdef long _inv_mod(long a, long p):
    # Fermat inverse; p is prime and a != 0 mod p.
    cdef long result = 1
    cdef long base = a % p
    cdef long e = p - 2
    while e > 0:
        if e & 1:
            result = (result * base) % p
        base = (base * base) % p
        e >>= 1
    return result


def rref(long[:, ::1] m, long p):
    """Reduce ``m`` (mod p) to reduced row echelon form in place.

    Returns the list of pivot column indices, in order.
    """
    cdef Py_ssize_t rows = m.shape[0]
    cdef Py_ssize_t cols = m.shape[1]
    cdef Py_ssize_t r = 0, col, i, j, piv_row
    cdef long inv, factor, v
    pivots = []
    for col in range(cols):
        if r == rows:
            break
        piv_row = -1
        for i in range(r, rows):
            if m[i, col] % p != 0:
                piv_row = i
                break
        if piv_row < 0:
            continue
        if piv_row != r:
            for j in range(cols):
                v = m[r, j]
                m[r, j] = m[piv_row, j]
                m[piv_row, j] = v
        inv = _inv_mod(m[r, col] % p, p)
        for j in range(cols):
            m[r, j] = (m[r, j] % p) * inv % p
        for i in range(rows):
            if i == r:
                continue
            factor = m[i, col] % p
            if factor != 0:
                for j in range(cols):
                    m[i, j] = (m[i, j] - factor * m[r, j]) % p
        pivots.append(col)
        r += 1
    # normalize residues to [0, p)
    for i in range(rows):
        for j in range(cols):
            v = m[i, j] % p
            if v < 0:
                v += p
            m[i, j] = v
    return pivots


BACKEND = "cython"
