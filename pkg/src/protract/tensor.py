"""Dense component tensors on a single chart.

A tensor of valence (p, q) on an n-dimensional chart stores n**(p+q)
components in one flat tuple, all contravariant slots first, then all
covariant slots, each block row-major. TensorField components are Expr,
PointTensor components are numbers (Fraction or float); the algebra
below works on either because both support +, -, *.

Slot arguments are global positions 0..p+q-1 over that storage order
unless an operation says otherwise (contract takes per-block positions).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

from .expr import EvalDomainError, Expr, ZERO, as_expr, const, evaluate, power

__all__ = [
    "Tensor", "TensorField", "PointTensor",
    "contract", "tensor_product", "symmetrize", "antisymmetrize",
    "kronecker_delta", "raise_index", "lower_index",
    "trace_free_sym", "trace_free_skew",
    "sym_trace_coefficient", "skew_trace_coefficient",
    "matrix_inverse_exprs", "fraction_matrix_inverse",
    "zero_field", "is_symmetric_pair", "is_skew_pair",
]


class Tensor:
    __slots__ = ("dim", "p", "q", "components", "_table")

    def __init__(self, dim: int, p: int, q: int, components: Sequence):
        if dim < 1:
            raise ValueError("dimension must be positive")
        need = dim ** (p + q)
        comps = tuple(components)
        if len(comps) != need:
            raise ValueError("expected %d components, got %d" % (need, len(comps)))
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_table", None)

    @property
    def rank(self) -> int:
        return self.p + self.q

    def flat(self, multi: Sequence[int]) -> int:
        i = 0
        for k in multi:
            i = i * self.dim + k
        return i

    def __getitem__(self, multi):
        if isinstance(multi, int):
            multi = (multi,)
        return self.components[self.flat(multi)]

    def _with(self, p, q, components):
        return type(self)(self.dim, p, q, components)

    def __add__(self, other):
        self._check_like(other)
        return self._with(self.p, self.q,
                          [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        self._check_like(other)
        return self._with(self.p, self.q,
                          [a - b for a, b in zip(self.components, other.components)])

    def scaled(self, factor):
        return self._with(self.p, self.q, [factor * c for c in self.components])

    def _check_like(self, other):
        if (not isinstance(other, Tensor) or other.dim != self.dim
                or other.p != self.p or other.q != self.q):
            raise ValueError("tensor shape mismatch")

    def __repr__(self):
        return "<%s dim=%d valence=(%d,%d)>" % (
            type(self).__name__, self.dim, self.p, self.q)


class TensorField(Tensor):
    """Valence-(p,q) array of Expr components on an n-dimensional chart."""

    def __init__(self, dim, p, q, components):
        super().__init__(dim, p, q, [as_expr(c) for c in components])

    def at(self, point, mode: str | None = None) -> "PointTensor":
        """Evaluate every component at one point.

        Rational points (int/Fraction coordinates, or mode="rational")
        go through the exact tree walker; float points go through a
        compiled stack program cached on first use.
        """
        rational_pt = all(isinstance(x, (int, Fraction)) for x in point)
        if mode == "rational" or (mode is None and rational_pt):
            vals = [evaluate(c, point, "rational") for c in self.components]
            return PointTensor(self.dim, self.p, self.q, vals)
        table = self._table
        if table is None:
            from .program import compile_table
            table = compile_table(self.components)
            object.__setattr__(self, "_table", table)
        from .kernel import eval_table
        pt = [float(x) for x in point]
        if table.max_var >= len(pt):
            raise ValueError("point has fewer coordinates than the field uses")
        out = eval_table(table, pt)
        return PointTensor(self.dim, self.p, self.q, [float(v) for v in out])


class PointTensor(Tensor):
    """Same shape as TensorField with numeric components at one point."""

    def max_abs(self) -> float:
        return max((abs(c) for c in self.components), default=0)

    def to_json(self) -> dict:
        comps = []
        for c in self.components:
            if isinstance(c, Fraction):
                comps.append(int(c) if c.denominator == 1 else "%d/%d"
                             % (c.numerator, c.denominator))
            else:
                comps.append(float(c))
        return {"valence": [self.p, self.q], "dim": self.dim, "components": comps}

    @classmethod
    def from_json(cls, data: dict) -> "PointTensor":
        p, q = data["valence"]
        comps = []
        for c in data["components"]:
            comps.append(Fraction(c) if isinstance(c, str) else c)
        return cls(data["dim"], p, q, comps)


def zero_field(dim: int, p: int, q: int) -> TensorField:
    return TensorField(dim, p, q, [ZERO] * dim ** (p + q))


def _ranges(dim, count):
    return itertools.product(range(dim), repeat=count)


def contract(T: Tensor, upper_slot: int, lower_slot: int) -> Tensor:
    """Sum over one upper and one lower slot; valence drops to (p-1, q-1).

    upper_slot counts within the contravariant block, lower_slot within
    the covariant block.
    """
    if not 0 <= upper_slot < T.p:
        raise ValueError("upper slot out of range")
    if not 0 <= lower_slot < T.q:
        raise ValueError("lower slot out of range")
    n = T.dim
    p, q = T.p - 1, T.q - 1
    out = []
    for multi in _ranges(n, p + q):
        up = list(multi[:p])
        lo = list(multi[p:])
        total = 0
        for d in range(n):
            full = up[:upper_slot] + [d] + up[upper_slot:] \
                + lo[:lower_slot] + [d] + lo[lower_slot:]
            total = total + T.components[T.flat(full)]
        out.append(total)
    return T._with(p, q, out)


def tensor_product(S: Tensor, T: Tensor) -> Tensor:
    """Outer product; S's slots come before T's within each block."""
    if S.dim != T.dim:
        raise ValueError("dimension mismatch")
    if type(S) is not type(T):
        raise ValueError("cannot mix field and point tensors")
    n = S.dim
    p, q = S.p + T.p, S.q + T.q
    out = []
    for multi in _ranges(n, p + q):
        su = multi[:S.p]
        tu = multi[S.p:S.p + T.p]
        sl = multi[S.p + T.p:S.p + T.p + S.q]
        tl = multi[S.p + T.p + S.q:]
        out.append(S.components[S.flat(su + sl)] * T.components[T.flat(tu + tl)])
    return S._with(p, q, out)


def _check_slot_block(T: Tensor, slots):
    slots = tuple(slots)
    if len(slots) < 2 or len(set(slots)) != len(slots):
        raise ValueError("need at least two distinct slots")
    uppers = all(s < T.p for s in slots)
    lowers = all(T.p <= s < T.p + T.q for s in slots)
    if not (uppers or lowers):
        raise ValueError("slots must share variance")
    return slots


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _permute_projector(T: Tensor, slots, signed: bool) -> Tensor:
    slots = _check_slot_block(T, slots)
    n = T.dim
    k = len(slots)
    weight = Fraction(1, 1)
    for i in range(2, k + 1):
        weight /= i
    perms = [(p, _perm_sign(p) if signed else 1)
             for p in itertools.permutations(range(k))]
    cache: dict[tuple, object] = {}
    out = []
    for multi in _ranges(n, T.rank):
        key = tuple(sorted(multi[s] for s in slots)) + tuple(
            multi[i] for i in range(T.rank) if i not in slots)
        # same orbit representative object reused across positions
        canon = cache.get((key, tuple(multi[s] for s in slots))) if signed else cache.get(key)
        if canon is None:
            total = 0
            for perm, sign in perms:
                idx = list(multi)
                vals = [multi[s] for s in slots]
                for pos, s in enumerate(slots):
                    idx[s] = vals[perm[pos]]
                term = T.components[T.flat(idx)]
                total = total + (term if sign > 0 else -term)
            canon = weight * total
            if signed:
                cache[(key, tuple(multi[s] for s in slots))] = canon
            else:
                cache[key] = canon
        out.append(canon)
    return T._with(T.p, T.q, out)


def symmetrize(T: Tensor, slots) -> Tensor:
    """Average over permutations of the given same-variance slots."""
    return _permute_projector(T, slots, signed=False)


def antisymmetrize(T: Tensor, slots) -> Tensor:
    """Signed average over permutations of the given same-variance slots."""
    return _permute_projector(T, slots, signed=True)


def kronecker_delta(n: int) -> TensorField:
    comps = [const(1) if b == a else ZERO for b, a in _ranges(n, 2)]
    return TensorField(n, 1, 1, comps)


def _metric_inverse_field(g: TensorField) -> TensorField:
    rows = [[g.components[g.flat((i, j))] for j in range(g.dim)] for i in range(g.dim)]
    inv, _ = matrix_inverse_exprs(rows)
    return TensorField(g.dim, 2, 0, [inv[i][j] for i, j in _ranges(g.dim, 2)])


def lower_index(T: Tensor, slot: int, g: Tensor) -> Tensor:
    """Contract upper slot with g_ab; the new lower slot is appended last."""
    if g.p != 0 or g.q != 2:
        raise ValueError("metric must be valence (0,2)")
    return contract(tensor_product(T, _as_like(T, g)), slot, T.q)


def raise_index(T: Tensor, slot: int, g: Tensor) -> Tensor:
    """Contract lower slot with the exact inverse of g; new upper slot last."""
    if g.p != 0 or g.q != 2:
        raise ValueError("metric must be valence (0,2)")
    if isinstance(g, TensorField):
        ginv = _metric_inverse_field(g)
    else:
        rows = [[g.components[g.flat((i, j))] for j in range(g.dim)]
                for i in range(g.dim)]
        inv = fraction_matrix_inverse(rows)
        ginv = PointTensor(g.dim, 2, 0, [inv[i][j] for i, j in _ranges(g.dim, 2)])
    prod = tensor_product(T, _as_like(T, ginv))
    # pair T's chosen lower slot with the second upper slot of ginv
    return contract(prod, T.p, slot)


def _as_like(T: Tensor, other: Tensor) -> Tensor:
    if type(T) is type(other):
        return other
    if isinstance(T, PointTensor) and isinstance(other, TensorField):
        raise ValueError("evaluate the metric before acting on point tensors")
    return other


def sym_trace_coefficient(n: int) -> Fraction:
    """Weight removing both traces of a symmetric-pair (2,1) tensor."""
    return Fraction(1, n + 1)


def skew_trace_coefficient(n: int) -> Fraction:
    """Weight removing both traces of a skew-pair (2,1) tensor."""
    if n < 2:
        raise ValueError("needs dimension at least 2")
    return Fraction(1, n - 1)


def _trace_free(U: Tensor, k: Fraction) -> Tensor:
    n = U.dim
    # storage [b][c][a] for U_a^{bc}
    t_first = []   # U_d^{dc}, indexed by c
    t_second = []  # U_d^{bd}, indexed by b
    for c in range(n):
        total = 0
        for d in range(n):
            total = total + U.components[U.flat((d, c, d))]
        t_first.append(total)
    for b in range(n):
        total = 0
        for d in range(n):
            total = total + U.components[U.flat((b, d, d))]
        t_second.append(total)
    out = []
    for b, c, a in _ranges(n, 3):
        val = U.components[U.flat((b, c, a))]
        if a == b:
            val = val - k * t_first[c]
        if a == c:
            val = val - k * t_second[b]
        out.append(val)
    return U._with(2, 1, out)


def trace_free_sym(U: Tensor) -> Tensor:
    """Trace-free part of a (2,1) tensor whose upper pair is symmetric."""
    if (U.p, U.q) != (2, 1):
        raise ValueError("expected valence (2,1)")
    if not is_symmetric_pair(U, 0, 1):
        raise ValueError("upper pair is not symmetric")
    return _trace_free(U, sym_trace_coefficient(U.dim))


def trace_free_skew(U: Tensor) -> Tensor:
    """Trace-free part of a (2,1) tensor whose upper pair is skew."""
    if (U.p, U.q) != (2, 1):
        raise ValueError("expected valence (2,1)")
    if not is_skew_pair(U, 0, 1):
        raise ValueError("upper pair is not skew")
    return _trace_free(U, skew_trace_coefficient(U.dim))


_PROBE_SEEDS = (Fraction(3, 7), Fraction(-2, 5), Fraction(1, 3),
                Fraction(5, 11), Fraction(-4, 9))


def _probe_points(dim: int, count: int = 3):
    pts = []
    for k in range(count):
        pts.append([_PROBE_SEEDS[(k + i) % len(_PROBE_SEEDS)] + Fraction(i - k, 13)
                    for i in range(dim)])
    return pts


def _pair_relation(T: Tensor, slot_i: int, slot_j: int, sign: int,
                   count: int = 3) -> bool:
    """Check T[.. i .. j ..] == sign * T[.. j .. i ..] by evaluation."""
    n = T.dim
    if isinstance(T, TensorField):
        rational = all(is_rational_closed_component(c) for c in T.components)
        points = _probe_points(n, count) if rational else [
            [float(x) for x in pt] for pt in _probe_points(n, count)]
        fields = [T.at(pt) for pt in points]
    else:
        fields = [T]
    for F in fields:
        for multi in _ranges(n, T.rank):
            if multi[slot_i] > multi[slot_j]:
                continue
            if multi[slot_i] == multi[slot_j] and sign == 1:
                continue
            swapped = list(multi)
            swapped[slot_i], swapped[slot_j] = multi[slot_j], multi[slot_i]
            a = F.components[F.flat(multi)]
            b = F.components[F.flat(swapped)]
            if isinstance(a, Fraction) and isinstance(b, Fraction):
                if a != sign * b:
                    return False
            elif abs(a - sign * b) > 1e-12 * (1 + abs(a) + abs(b)):
                return False
    return True


def is_rational_closed_component(c) -> bool:
    from .expr import is_rational_closed
    return is_rational_closed(c) if isinstance(c, Expr) else True


def is_symmetric_pair(T: Tensor, slot_i: int, slot_j: int, count: int = 3) -> bool:
    return _pair_relation(T, slot_i, slot_j, 1, count)


def is_skew_pair(T: Tensor, slot_i: int, slot_j: int, count: int = 3) -> bool:
    return _pair_relation(T, slot_i, slot_j, -1, count)


# ---------------------------------------------------------------------------
# exact matrix inversion

def matrix_inverse_exprs(rows):
    """Adjugate-over-determinant inverse of a matrix of Expr.

    Exact in rational mode; singularity shows up at evaluation points,
    not here. Returns (inverse rows, determinant).
    """
    n = len(rows)
    memo: dict = {}

    def minor_det(row_start: int, cols: tuple) -> Expr:
        if row_start == n:
            return as_expr(1)
        key = (row_start, cols)
        got = memo.get(key)
        if got is not None:
            return got
        total = ZERO
        for pos, c in enumerate(cols):
            sub = minor_det(row_start + 1, cols[:pos] + cols[pos + 1:])
            term = rows[row_start][c] * sub
            total = total + (term if pos % 2 == 0 else -term)
        memo[key] = total
        return total

    det = minor_det(0, tuple(range(n)))
    inv = [[None] * n for _ in range(n)]
    if _is_const(det):
        if _const_value(det) == 0:
            raise EvalDomainError("singular matrix")
        det_inv = as_expr(Fraction(1) / _const_value(det))
    else:
        det_inv = power(det, -1)
    for i in range(n):
        for j in range(n):
            # cofactor expansion of the (j, i) minor gives the adjugate entry
            cols = tuple(c for c in range(n) if c != i)
            sub_rows = [rows[r] for r in range(n) if r != j]
            minor = _plain_det(sub_rows, cols)
            sign = 1 if (i + j) % 2 == 0 else -1
            adj = minor if sign > 0 else -minor
            inv[i][j] = adj * det_inv
    return inv, det


def _is_const(e) -> bool:
    from .expr import Const
    return isinstance(e, Const)


def _const_value(e) -> Fraction:
    return e.value


def _plain_det(rows, cols: tuple):
    if not cols:
        return as_expr(1)
    total = ZERO
    for pos, c in enumerate(cols):
        sub = _plain_det(rows[1:], cols[:pos] + cols[pos + 1:])
        term = rows[0][c] * sub
        total = total + (term if pos % 2 == 0 else -term)
    return total


def fraction_matrix_inverse(rows):
    """Gauss-Jordan inverse over Fractions; raises on a singular matrix."""
    n = len(rows)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(rows)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if a[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            raise EvalDomainError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]
