"""Compilation of expression DAGs to flat stack-machine tables.

A CompiledTable evaluates a whole family of expressions at one point in
a single pass. Subtrees shared by identity between entries are computed
once per evaluation and kept in slots, which matters because curvature
and connection components share most of their structure.

Opcodes (one int arg each, unused args are 0):

    CONST k   push consts[k]
    VAR i     push point[i]
    ADD m     pop m values, push their sum
    MUL m     pop m values, push their product
    POW e     replace top t by t**e (integer e; 0**negative gives nan)
    NEG       negate top
    SIN COS EXP
    LOAD s    push slots[s]
    STORE s   slots[s] = top (top stays)
    OUT k     out[k] = top, pop

Float-mode only; exact rational evaluation stays on the AST walker in
expr.evaluate.
"""

from __future__ import annotations

import numpy as np

from .expr import Add, Call, Const, Expr, Mul, Neg, Pow, Var, _walk_unique, as_expr

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_MUL = 3
OP_POW = 4
OP_NEG = 5
OP_SIN = 6
OP_COS = 7
OP_EXP = 8
OP_LOAD = 9
OP_STORE = 10
OP_OUT = 11

_CALL_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP}


class CompiledTable:
    __slots__ = ("ops", "args", "consts", "n_out", "n_slots", "stack_need",
                 "max_var", "_lists")

    def __init__(self, ops, args, consts, n_out, n_slots, stack_need, max_var):
        self.ops = np.asarray(ops, dtype=np.int32)
        self.args = np.asarray(args, dtype=np.int32)
        self.consts = np.asarray(consts, dtype=np.float64)
        self.n_out = n_out
        self.n_slots = n_slots
        self.stack_need = stack_need
        self.max_var = max_var
        self._lists = None

    def as_lists(self):
        """Plain-list views for the pure-Python interpreter."""
        if self._lists is None:
            self._lists = (self.ops.tolist(), self.args.tolist(), self.consts.tolist())
        return self._lists

    def __len__(self):
        return len(self.ops)


def compile_table(exprs) -> CompiledTable:
    """Compile a family of expressions into one shared-slot table."""
    roots = [as_expr(e) for e in exprs]

    counts: dict[int, int] = {}
    kind: dict[int, Expr] = {}
    for r in roots:
        counts[id(r)] = counts.get(id(r), 0) + 1
        kind[id(r)] = r
    for node in _walk_unique(roots):
        kind[id(node)] = node
        for c in node.children():
            counts[id(c)] = counts.get(id(c), 0) + 1
    shared = {
        nid for nid, cnt in counts.items()
        if cnt >= 2 and not isinstance(kind[nid], (Const, Var))
    }

    ops: list[int] = []
    args: list[int] = []
    consts: list[float] = []
    const_ix: dict[float, int] = {}
    slot_of: dict[int, int] = {}
    max_var = -1
    depth = 0
    peak = 0

    def emit(op: int, arg: int, delta: int):
        nonlocal depth, peak
        ops.append(op)
        args.append(arg)
        depth += delta
        if depth > peak:
            peak = depth

    def emit_const(value: float):
        ix = const_ix.get(value)
        if ix is None:
            ix = len(consts)
            consts.append(value)
            const_ix[value] = ix
        emit(OP_CONST, ix, 1)

    for k, root in enumerate(roots):
        work = [(root, False)]
        while work:
            node, ready = work.pop()
            nid = id(node)
            if not ready:
                slot = slot_of.get(nid)
                if slot is not None:
                    emit(OP_LOAD, slot, 1)
                    continue
                if isinstance(node, Const):
                    emit_const(float(node.value))
                    continue
                if isinstance(node, Var):
                    if node.index > max_var:
                        max_var = node.index
                    emit(OP_VAR, node.index, 1)
                    continue
                work.append((node, True))
                for c in reversed(node.children()):
                    work.append((c, False))
            else:
                if isinstance(node, Add):
                    emit(OP_ADD, len(node.terms), 1 - len(node.terms))
                elif isinstance(node, Mul):
                    emit(OP_MUL, len(node.factors), 1 - len(node.factors))
                elif isinstance(node, Pow):
                    emit(OP_POW, node.exponent, 0)
                elif isinstance(node, Neg):
                    emit(OP_NEG, 0, 0)
                elif isinstance(node, Call):
                    emit(_CALL_OPS[node.name], 0, 0)
                else:
                    raise TypeError("cannot compile %r" % node)
                if nid in shared:
                    slot = len(slot_of)
                    slot_of[nid] = slot
                    emit(OP_STORE, slot, 0)
        emit(OP_OUT, k, -1)

    return CompiledTable(ops, args, consts, len(roots), len(slot_of), peak, max_var)


def compile_expr(e: Expr) -> CompiledTable:
    return compile_table([e])
