# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled exact sparse convolution on a dense GMP integer buffer.

Same contract as ``_kernels_py.convolve``. Coefficients are brought to a
common denominator per operand, products are accumulated with
``mpz_addmul`` into a buffer covering the reachable output box, and each
output is divided by the product of the two denominators once.
"""

from fractions import Fraction
from libc.stdlib cimport malloc, calloc, free

from ._kernels_py import common_denominator, convolve as _sparse_convolve

BACKEND = "cython"

cdef extern from "gmp.h" nogil:
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct* mpz_ptr
    void mpz_init(mpz_ptr)
    void mpz_clear(mpz_ptr)
    int mpz_set_str(mpz_ptr, const char*, int)
    char* mpz_get_str(char*, int, mpz_ptr)
    void mpz_addmul(mpz_ptr, mpz_ptr, mpz_ptr)
    size_t mpz_sizeinbase(mpz_ptr, int)
    int mpz_sgn(mpz_ptr)

# Dense buffers larger than this fall back to the sparse algorithm.
cdef long MAX_CELLS = 8000000


cdef int _load(list terms, __mpz_struct* vals, long* exps, int nv) except -1:
    cdef Py_ssize_t i
    cdef int j
    cdef bytes h
    for i in range(len(terms)):
        e, c = terms[i]
        for j in range(nv):
            exps[i * nv + j] = e[j]
        h = format(c, "x").encode("ascii")
        mpz_init(&vals[i])
        if mpz_set_str(&vals[i], h, 16) != 0:
            raise ValueError("bad integer conversion")
    return 0


cdef object _export(__mpz_struct* z):
    cdef size_t n = mpz_sizeinbase(z, 16) + 2
    cdef char* buf = <char*> malloc(n)
    if buf == NULL:
        raise MemoryError()
    try:
        mpz_get_str(buf, 16, z)
        return int(buf.decode("ascii"), 16)
    finally:
        free(buf)


def convolve(a, b, lo, hi):
    if not a or not b:
        return {}
    cdef int nv = len(lo)
    cdef int j
    cdef Py_ssize_t na = len(a), nb = len(b), i, p, q
    cdef long olo[8]
    cdef long ohi[8]
    cdef long stride[8]
    cdef long amin, amax, bmin, bmax
    cdef long cells = 1
    if nv > 8:
        return _sparse_convolve(a, b, lo, hi)
    for j in range(nv):
        amin = min(e[j] for e, _ in a)
        amax = max(e[j] for e, _ in a)
        bmin = min(e[j] for e, _ in b)
        bmax = max(e[j] for e, _ in b)
        olo[j] = max(<long> lo[j], amin + bmin)
        ohi[j] = min(<long> hi[j], amax + bmax + 1)
        if ohi[j] <= olo[j]:
            return {}
        cells *= ohi[j] - olo[j]
        if cells > MAX_CELLS:
            return _sparse_convolve(a, b, lo, hi)
    stride[nv - 1] = 1
    for j in range(nv - 2, -1, -1):
        stride[j] = stride[j + 1] * (ohi[j + 1] - olo[j + 1])

    ai, da = common_denominator(list(a))
    bi, db = common_denominator(list(b))

    cdef __mpz_struct* av = <__mpz_struct*> malloc(na * sizeof(__mpz_struct))
    cdef __mpz_struct* bv = <__mpz_struct*> malloc(nb * sizeof(__mpz_struct))
    cdef long* ae = <long*> malloc(na * nv * sizeof(long))
    cdef long* be = <long*> malloc(nb * nv * sizeof(long))
    cdef __mpz_struct* acc = <__mpz_struct*> malloc(cells * sizeof(__mpz_struct))
    cdef char* touched = <char*> calloc(cells, 1)
    cdef long idx, x
    cdef bint ok
    if av == NULL or bv == NULL or ae == NULL or be == NULL or acc == NULL or touched == NULL:
        free(av); free(bv); free(ae); free(be); free(acc); free(touched)
        raise MemoryError()
    cdef Py_ssize_t loaded_a = 0, loaded_b = 0
    result = {}
    try:
        _load(ai, av, ae, nv)
        loaded_a = na
        _load(bi, bv, be, nv)
        loaded_b = nb
        with nogil:
            for p in range(na):
                for q in range(nb):
                    ok = True
                    idx = 0
                    for j in range(nv):
                        x = ae[p * nv + j] + be[q * nv + j]
                        if x < olo[j] or x >= ohi[j]:
                            ok = False
                            break
                        idx += (x - olo[j]) * stride[j]
                    if not ok:
                        continue
                    if not touched[idx]:
                        mpz_init(&acc[idx])
                        touched[idx] = 1
                    mpz_addmul(&acc[idx], &av[p], &bv[q])
        d = da * db
        for idx in range(cells):
            if touched[idx]:
                if mpz_sgn(&acc[idx]) != 0:
                    e = []
                    x = idx
                    for j in range(nv):
                        e.append(olo[j] + x // stride[j])
                        x = x % stride[j]
                    result[tuple(e)] = Fraction(_export(&acc[idx]), d)
                mpz_clear(&acc[idx])
                touched[idx] = 0
    finally:
        for idx in range(cells):
            if touched[idx]:
                mpz_clear(&acc[idx])
        for p in range(loaded_a):
            mpz_clear(&av[p])
        for q in range(loaded_b):
            mpz_clear(&bv[q])
        free(av); free(bv); free(ae); free(be); free(acc); free(touched)
    return result
