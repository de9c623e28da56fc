"""Pure-Python interpreter for compiled tables.

Fallback used when the C extension is unavailable. Semantics match
_fastkernel: IEEE floats, nonfinite values propagate, 0**negative
yields nan, overflow saturates to inf. Nothing here raises on bad
numerics; callers inspect finiteness where they care.
"""

import math


def eval_table(ops, args, consts, point, out, stack_need, n_slots):
    st = [0.0] * stack_need
    slots = [0.0] * n_slots if n_slots else None
    sp = 0
    for i in range(len(ops)):
        op = ops[i]
        a = args[i]
        if op == 0:  # CONST
            st[sp] = consts[a]
            sp += 1
        elif op == 1:  # VAR
            st[sp] = point[a]
            sp += 1
        elif op == 2:  # ADD
            sp -= a - 1
            acc = st[sp - 1]
            for j in range(sp, sp + a - 1):
                acc += st[j]
            st[sp - 1] = acc
        elif op == 3:  # MUL
            sp -= a - 1
            acc = st[sp - 1]
            for j in range(sp, sp + a - 1):
                acc *= st[j]
            st[sp - 1] = acc
        elif op == 4:  # POW
            st[sp - 1] = _ipow(st[sp - 1], a)
        elif op == 5:  # NEG
            st[sp - 1] = -st[sp - 1]
        elif op == 6:  # SIN
            st[sp - 1] = math.sin(st[sp - 1]) if math.isfinite(st[sp - 1]) else math.nan
        elif op == 7:  # COS
            st[sp - 1] = math.cos(st[sp - 1]) if math.isfinite(st[sp - 1]) else math.nan
        elif op == 8:  # EXP
            x = st[sp - 1]
            try:
                st[sp - 1] = math.exp(x)
            except OverflowError:
                st[sp - 1] = math.inf
        elif op == 9:  # LOAD
            st[sp] = slots[a]
            sp += 1
        elif op == 10:  # STORE
            slots[a] = st[sp - 1]
        else:  # OUT
            sp -= 1
            out[a] = st[sp]
    return out


def _ipow(base, e):
    if e < 0:
        if base == 0.0:
            return math.nan
        base = 1.0 / base
        e = -e
    # binary powering; float ops saturate to inf without raising
    result = 1.0
    while e:
        if e & 1:
            result *= base
        base *= base
        e >>= 1
    return result
