# cython: boundscheck=False, wraparound=False, cdivision=True
"""C interpreter for compiled expression tables.

Same opcode set and numeric semantics as _kernel_py: IEEE floats,
nonfinite propagation, 0**negative -> nan. One call evaluates every
entry of a table at one point.
"""

from libc.math cimport cos as c_cos
from libc.math cimport exp as c_exp
from libc.math cimport isfinite
from libc.math cimport NAN
from libc.math cimport sin as c_sin
from libc.stdlib cimport free, malloc


cdef inline double _ipow(double base, int e) noexcept nogil:
    cdef double result = 1.0
    cdef unsigned int k
    if e < 0:
        if base == 0.0:
            return NAN
        base = 1.0 / base
        k = <unsigned int> (-<long> e)
    else:
        k = <unsigned int> e
    while k:
        if k & 1u:
            result *= base
        base *= base
        k >>= 1
    return result


def eval_table(int[:] ops, int[:] args, double[:] consts, double[:] point,
               double[:] out, int stack_need, int n_slots):
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t i
    cdef int op, a, sp = 0
    cdef double acc
    cdef int j
    cdef double* st = <double*> malloc((stack_need if stack_need > 0 else 1) * sizeof(double))
    cdef double* slots = NULL
    if st == NULL:
        raise MemoryError()
    if n_slots > 0:
        slots = <double*> malloc(n_slots * sizeof(double))
        if slots == NULL:
            free(st)
            raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                op = ops[i]
                a = args[i]
                if op == 0:
                    st[sp] = consts[a]
                    sp += 1
                elif op == 1:
                    st[sp] = point[a]
                    sp += 1
                elif op == 2:
                    sp -= a - 1
                    acc = st[sp - 1]
                    for j in range(a - 1):
                        acc += st[sp + j]
                    st[sp - 1] = acc
                elif op == 3:
                    sp -= a - 1
                    acc = st[sp - 1]
                    for j in range(a - 1):
                        acc *= st[sp + j]
                    st[sp - 1] = acc
                elif op == 4:
                    st[sp - 1] = _ipow(st[sp - 1], a)
                elif op == 5:
                    st[sp - 1] = -st[sp - 1]
                elif op == 6:
                    st[sp - 1] = c_sin(st[sp - 1]) if isfinite(st[sp - 1]) else NAN
                elif op == 7:
                    st[sp - 1] = c_cos(st[sp - 1]) if isfinite(st[sp - 1]) else NAN
                elif op == 8:
                    st[sp - 1] = c_exp(st[sp - 1])
                elif op == 9:
                    st[sp] = slots[a]
                    sp += 1
                elif op == 10:
                    slots[a] = st[sp - 1]
                else:
                    sp -= 1
                    out[a] = st[sp]
    finally:
        free(st)
        if slots != NULL:
            free(slots)
    return out
