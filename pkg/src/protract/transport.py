"""Parallel transport, loop holonomy, and PDE-solution correspondence.

A bundle connection acting on sections with constant coefficients has no
derivative terms left, so applying it to a basis of frozen constant
sections reads off the coefficient matrices A_a(x) directly. Transport
then solves s'(u) = -v^a(u) A_a(c(u)) s(u) with classical fixed-step
RK4; since the right side is linear, whole frames transport as matrices.

Curves are expression vectors in the single parameter x0; loops are
tuples of curve segments chained end to end.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .expr import Expr, ZERO, as_expr, const, cos, diff, sin, var
from .geometry import AffineConnection, ChartGeometry, covariant_derivative
from .kernel import eval_table
from .program import compile_table
from .tensor import PointTensor, TensorField, trace_free_skew, trace_free_sym
from .tractor import (
    CotractorSection,
    S2CotractorSection,
    S2TractorSection,
    Section,
    SkewTractorSection,
    TractorSection,
    cotractor_nabla,
    flat_skew_prolong_nabla,
    metrisability_prolong_nabla,
    s2_dual_nabla,
    tractor_nabla,
)

__all__ = [
    "TransportError", "NotParallelError", "NonClosedLoopError",
    "CurveSegment", "line_segment", "circle_loop", "rectangle_loop",
    "seeded_loops", "reverse_loop", "TangentSection", "TransportBundle",
    "cotractor_bundle", "tractor_bundle", "s2_tractor_bundle",
    "s2_cotractor_bundle", "skew_bundle", "tangent_bundle",
    "transport", "holonomy_dimension", "HolonomyReport",
    "solution_correspondence", "transported_sampler", "sampled_pde_residual",
]


class TransportError(ValueError):
    pass


def _coef(x) -> Expr:
    """Accept floats for curve data by passing through exact Fractions."""
    if isinstance(x, Expr):
        return x
    if isinstance(x, float):
        return const(Fraction(x))
    return as_expr(x)


class NotParallelError(TransportError):
    pass


class NonClosedLoopError(TransportError):
    pass


# ---------------------------------------------------------------------------
# curves

class CurveSegment:
    """Chart curve c(u) with Expr components in the parameter x0."""

    __slots__ = ("dim", "components", "velocity", "u0", "u1", "_table")

    def __init__(self, components: Sequence, u0=0, u1=1):
        comps = tuple(as_expr(c) for c in components)
        self.dim = len(comps)
        self.components = comps
        self.velocity = tuple(diff(c, 0) for c in comps)
        self.u0 = u0
        self.u1 = u1
        if not float(u1) > float(u0):
            raise TransportError("segment needs u1 > u0")
        self._table = compile_table(list(comps) + list(self.velocity))

    @property
    def length(self) -> float:
        return float(self.u1) - float(self.u0)

    def sample(self, u: float):
        """Position and velocity arrays at parameter u."""
        out = eval_table(self._table, [u])
        return out[:self.dim], out[self.dim:]

    def point(self, u: float):
        return self.sample(u)[0]

    def reversed(self) -> "CurveSegment":
        u = var(0)
        total = as_expr(self.u0) + as_expr(self.u1)
        flipped = [_substitute_param(c, total - u) for c in self.components]
        return CurveSegment(flipped, self.u0, self.u1)


def _substitute_param(e: Expr, replacement: Expr) -> Expr:
    from .expr import (Add, Call, Const, Mul, Neg, Pow, Var,
                       _postorder_apply, add, mul, neg, power)

    def rebuild(node, ch):
        if isinstance(node, Var):
            return replacement if node.index == 0 else node
        if isinstance(node, Const):
            return node
        if isinstance(node, Add):
            return add(*ch)
        if isinstance(node, Mul):
            return mul(*ch)
        if isinstance(node, Pow):
            return power(ch[0], node.exponent)
        if isinstance(node, Neg):
            return neg(ch[0])
        if isinstance(node, Call):
            return node if ch[0] is node.arg else Call(node.name, ch[0])
        return node

    return _postorder_apply(e, rebuild)


def reverse_loop(curve) -> tuple:
    loop = _as_loop(curve)
    return tuple(seg.reversed() for seg in reversed(loop))


def _as_loop(curve) -> tuple:
    if isinstance(curve, CurveSegment):
        return (curve,)
    return tuple(curve)


def _check_closed(loop: tuple, tol: float = 1e-12):
    pts = []
    for seg in loop:
        a = np.asarray(seg.point(float(seg.u0)))
        b = np.asarray(seg.point(float(seg.u1)))
        pts.append((a, b))
    for i, (_, end) in enumerate(pts):
        nxt = pts[(i + 1) % len(pts)][0]
        if float(np.max(np.abs(end - nxt))) > tol:
            raise NonClosedLoopError("loop is not closed (segment %d)" % i)


def line_segment(start, end) -> CurveSegment:
    u = var(0)
    comps = []
    for a, b in zip(start, end):
        comps.append(_coef(a) + u * (_coef(b) - _coef(a)))
    return CurveSegment(comps, 0, 1)


_TAU = Fraction(math.tau)


def circle_loop(center, radius, plane=(0, 1)) -> tuple:
    """Single-segment circle of given center and radius in a coordinate
    plane, parametrised over [0, 1]."""
    u = var(0)
    i, j = plane
    comps = [_coef(c) for c in center]
    comps[i] = comps[i] + _coef(radius) * cos(const(_TAU) * u)
    comps[j] = comps[j] + _coef(radius) * sin(const(_TAU) * u)
    return (CurveSegment(comps, 0, 1),)


def rectangle_loop(corner, width, height, plane=(0, 1)) -> tuple:
    """Four linear segments tracing an axis-aligned rectangle."""
    i, j = plane
    c0 = list(corner)
    c1 = list(corner); c1[i] += width
    c2 = list(corner); c2[i] += width; c2[j] += height
    c3 = list(corner); c3[j] += height
    return (line_segment(c0, c1), line_segment(c1, c2),
            line_segment(c2, c3), line_segment(c3, c0))


def seeded_loops(box, count: int, seed: int, kinds=("circle", "rect")) -> list:
    """Reproducible loops inside an evaluation box.

    box: per-coordinate [lo, hi] pairs. Circles and rectangles alternate
    (as available) in the (0,1) plane; remaining coordinates sit at the
    box centre jittered by the same generator.
    """
    rng = random.Random(seed)
    loops = []
    lows = [float(b[0]) for b in box]
    highs = [float(b[1]) for b in box]
    for k in range(count):
        kind = kinds[k % len(kinds)]
        centre = [lo + (hi - lo) * (0.35 + 0.3 * rng.random())
                  for lo, hi in zip(lows, highs)]
        span = min(highs[0] - lows[0], highs[1] - lows[1])
        if kind == "circle":
            radius = span * (0.08 + 0.12 * rng.random())
            loops.append(circle_loop(centre, radius))
        else:
            w = span * (0.1 + 0.15 * rng.random())
            h = span * (0.1 + 0.15 * rng.random())
            corner = list(centre)
            corner[0] -= w / 2
            corner[1] -= h / 2
            loops.append(rectangle_loop(corner, w, h))
    return loops


# ---------------------------------------------------------------------------
# bundles

class TangentSection(Section):
    SLOT_SPEC = (("v", (1, 0)),)


def _tangent_nabla(geom: ChartGeometry, s: TangentSection):
    dv = covariant_derivative(geom.connection(), s.v)  # [b][a]
    n = geom.dim
    return [TangentSection(TensorField(n, 1, 0, [dv[b, a] for b in range(n)]),
                           validate=False) for a in range(n)]


def _slot_layout(section_cls, dim: int):
    """Independent-component layout: list of (slot index, flat index)."""
    layout = []
    for si, (name, (p, q)) in enumerate(section_cls.SLOT_SPEC):
        sym = section_cls.SLOT_SYM.get(name)
        rank = p + q
        if rank == 0:
            layout.append((si, 0))
        elif rank == 1:
            layout.extend((si, i) for i in range(dim))
        elif rank == 2:
            for b in range(dim):
                for c in range(dim):
                    if sym == "sym" and b > c:
                        continue
                    if sym == "skew" and b >= c:
                        continue
                    layout.append((si, b * dim + c))
        else:
            raise TransportError("unsupported slot rank %d" % rank)
    return layout


class TransportBundle:
    """A section type plus its connection, flattened for numeric work."""

    def __init__(self, name: str, section_cls, nabla: Callable, context,
                 dim: int):
        self.name = name
        self.section_cls = section_cls
        self.nabla = nabla
        self.context = context
        self.dim = dim
        self.layout = _slot_layout(section_cls, dim)
        self.rank = len(self.layout)
        self._A_table = None

    # --- section <-> coordinate vector ---

    def basis_section(self, j: int) -> Section:
        """Constant section with coordinate j set to one."""
        vec = [Fraction(0)] * self.rank
        vec[j] = Fraction(1)
        return self.constant_section(vec)

    def constant_section(self, vec) -> Section:
        fields = []
        k = 0
        dim = self.dim
        for si, (name, (p, q)) in enumerate(self.section_cls.SLOT_SPEC):
            size = dim ** (p + q)
            comps = [ZERO] * size
            sym = self.section_cls.SLOT_SYM.get(name)
            while k < len(self.layout) and self.layout[k][0] == si:
                _, flat = self.layout[k]
                val = as_expr(vec[k])
                comps[flat] = comps[flat] + val
                if p + q == 2:
                    b, c = divmod(flat, dim)
                    if sym == "sym" and b != c:
                        comps[c * dim + b] = comps[c * dim + b] + val
                    elif sym == "skew":
                        comps[c * dim + b] = comps[c * dim + b] - val
                k += 1
            fields.append(TensorField(dim, p, q, comps))
        return self.section_cls(*fields, validate=False)

    def flatten_fields(self, section: Section) -> list:
        out = []
        fields = [f for _, f in section.slots()]
        for si, flat in self.layout:
            out.append(fields[si].components[flat])
        return out

    def flatten_point(self, point_section: dict) -> np.ndarray:
        names = [name for name, _ in self.section_cls.SLOT_SPEC]
        out = np.empty(self.rank)
        for idx, (si, flat) in enumerate(self.layout):
            out[idx] = float(point_section[names[si]].components[flat])
        return out

    def unflatten_point(self, vec) -> dict:
        dim = self.dim
        out = {}
        k = 0
        for si, (name, (p, q)) in enumerate(self.section_cls.SLOT_SPEC):
            comps = [0.0] * dim ** (p + q)
            sym = self.section_cls.SLOT_SYM.get(name)
            while k < len(self.layout) and self.layout[k][0] == si:
                _, flat = self.layout[k]
                val = float(vec[k])
                comps[flat] = val
                if p + q == 2:
                    b, c = divmod(flat, dim)
                    if sym == "sym" and b != c:
                        comps[c * dim + b] = val
                    elif sym == "skew":
                        comps[c * dim + b] = -val
                k += 1
            out[name] = PointTensor(dim, p, q, comps)
        return out

    # --- connection coefficients ---

    def _build_A(self):
        n, r = self.dim, self.rank
        entries = [ZERO] * (n * r * r)
        for j in range(r):
            family = self.nabla(self.context, self.basis_section(j))
            for a in range(n):
                col = self.flatten_fields(family[a])
                for i in range(r):
                    entries[(a * r + i) * r + j] = col[i]
        self._A_table = compile_table(entries)

    def coefficients_at(self, x) -> np.ndarray:
        """A stacked (n, rank, rank) array of connection coefficients."""
        if self._A_table is None:
            self._build_A()
        flat = eval_table(self._A_table, list(x))
        return np.asarray(flat).reshape(self.dim, self.rank, self.rank)


def cotractor_bundle(geom: ChartGeometry) -> TransportBundle:
    return TransportBundle("cotractor", CotractorSection, cotractor_nabla,
                           geom, geom.dim)


def tractor_bundle(geom: ChartGeometry) -> TransportBundle:
    return TransportBundle("tractor", TractorSection, tractor_nabla,
                           geom, geom.dim)


def s2_tractor_bundle(geom: ChartGeometry) -> TransportBundle:
    return TransportBundle("metrisability", S2TractorSection,
                           metrisability_prolong_nabla, geom, geom.dim)


def s2_cotractor_bundle(geom: ChartGeometry) -> TransportBundle:
    return TransportBundle("s2dual", S2CotractorSection, s2_dual_nabla,
                           geom, geom.dim)


def skew_bundle(conn: AffineConnection) -> TransportBundle:
    def nabla(ctx, s):
        return flat_skew_prolong_nabla(s, ctx)
    return TransportBundle("skew", SkewTractorSection, nabla, conn, conn.dim)


def tangent_bundle(geom: ChartGeometry) -> TransportBundle:
    return TransportBundle("tangent", TangentSection, _tangent_nabla,
                           geom, geom.dim)


# ---------------------------------------------------------------------------
# transport

def _segment_matrix(bundle: TransportBundle, seg: CurveSegment,
                    steps: int) -> np.ndarray:
    """RK4 propagator for one segment acting on coordinate vectors."""
    r = bundle.rank
    u0, u1 = float(seg.u0), float(seg.u1)
    h = (u1 - u0) / steps
    eye = np.eye(r)

    def M(u: float) -> np.ndarray:
        x, v = seg.sample(u)
        A = bundle.coefficients_at(x)
        return -np.tensordot(np.asarray(v), A, axes=1)

    S = eye
    m_lo = M(u0)
    for k in range(steps):
        u = u0 + k * h
        m_mid = M(u + 0.5 * h)
        m_hi = M(u + h)
        k1 = m_lo
        k2 = m_mid @ (eye + 0.5 * h * k1)
        k3 = m_mid @ (eye + 0.5 * h * k2)
        k4 = m_hi @ (eye + h * k3)
        S = (eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)) @ S
        m_lo = m_hi
    return S


def _split_steps(loop: tuple, steps: int | None) -> list:
    lengths = [seg.length for seg in loop]
    total = sum(lengths)
    if steps is None:
        steps = max(1, round(1000 * total))
    out = []
    assigned = 0
    for i, L in enumerate(lengths):
        if i == len(lengths) - 1:
            out.append(max(1, steps - assigned))
        else:
            s = max(1, round(steps * L / total))
            out.append(s)
            assigned += s
    return out


def loop_matrix(bundle: TransportBundle, curve, steps: int | None = None,
                check_closed: bool = False) -> np.ndarray:
    loop = _as_loop(curve)
    if check_closed:
        _check_closed(loop)
    per_seg = _split_steps(loop, steps)
    S = np.eye(bundle.rank)
    for seg, s in zip(loop, per_seg):
        S = _segment_matrix(bundle, seg, s) @ S
    return S


def transport(bundle: TransportBundle, curve, initial,
              steps: int | None = None):
    """Transport an initial section value along a curve.

    initial: dict of PointTensors keyed by slot name (returned form), or
    a flat coordinate vector (a flat vector is returned then).
    """
    S = loop_matrix(bundle, curve, steps)
    if isinstance(initial, dict):
        return bundle.unflatten_point(S @ bundle.flatten_point(initial))
    return S @ np.asarray(initial, dtype=float)


class HolonomyReport:
    def __init__(self, rank: int, matrices: list, singular_values,
                 fixed_dim: int, seed):
        self.rank = rank
        self.matrices = matrices
        self.singular_values = [float(s) for s in singular_values]
        self.fixed_dim = fixed_dim
        self.seed = seed

    @property
    def loop_count(self) -> int:
        return len(self.matrices)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "loops": self.loop_count,
            "singular_values": self.singular_values,
            "fixed_dim": self.fixed_dim,
            "seed": self.seed,
        }


def holonomy_dimension(bundle: TransportBundle, loops, steps: int = 1000,
                       seed=None, sv_tol: float = 1e-6) -> HolonomyReport:
    """Fixed-subspace dimension of sampled loop holonomy.

    Transports the identity frame around each loop, stacks Hol_i - I,
    and counts singular values below sv_tol; that number upper-bounds
    the dimension of the parallel-section space.

    A parallel section is fixed by holonomy based at its own point, so
    loops starting elsewhere are lassoed: each holonomy is conjugated
    to the first loop's start point by transport along the straight
    connector. Without this the stacked fixed space would mix frames
    at unrelated points and the upper-bound property would be lost.
    """
    loop_list = [_as_loop(lp) for lp in loops]
    base = [float(c) for c in loop_list[0][0].point(float(loop_list[0][0].u0))]
    mats = []
    for loop in loop_list:
        hol = loop_matrix(bundle, loop, steps, check_closed=True)
        start = [float(c) for c in loop[0].point(float(loop[0].u0))]
        if max(abs(a - b) for a, b in zip(base, start)) > 1e-12:
            seg = line_segment(base, start)
            conn_steps = max(50, round((steps or 1000) * seg.length))
            T = _segment_matrix(bundle, seg, conn_steps)
            hol = np.linalg.solve(T, hol @ T)
        mats.append(hol)
    eye = np.eye(bundle.rank)
    stacked = np.vstack([m - eye for m in mats])
    sv = np.linalg.svd(stacked, compute_uv=False)
    full = np.zeros(bundle.rank)
    full[:len(sv)] = sv
    fixed = int(np.sum(full < sv_tol))
    return HolonomyReport(bundle.rank, mats, full.tolist(), fixed, seed)


# ---------------------------------------------------------------------------
# correspondence with the original PDEs

EQUATIONS = ("cotractor", "tfnu", "metrisability", "skew")


def _connection_of(context):
    if isinstance(context, ChartGeometry):
        return context.connection()
    return context


def _tf_11(M: TensorField | PointTensor):
    n = M.dim
    tr = 0
    for d in range(n):
        tr = tr + M.components[M.flat((d, d))]
    k = Fraction(1, n)
    out = []
    for c in range(n):
        for a in range(n):
            val = M.components[M.flat((c, a))]
            if a == c:
                val = val - k * tr
            out.append(val)
    return M._with(1, 1, out)


def _pde_residual_field(bundle: TransportBundle, section: Section):
    """Symbolic residual field of the source equation for the bundle."""
    ctx = bundle.context
    conn = _connection_of(ctx)
    cls = bundle.section_cls
    if cls is CotractorSection:
        d1 = covariant_derivative(conn, section.sigma)
        d2 = covariant_derivative(conn, d1)           # [a][b]
        P = ctx.pack().schouten
        n = bundle.dim
        sigma = section.sigma.components[0]
        comps = [d2[a, b] + P[a, b] * sigma
                 for a in range(n) for b in range(n)]
        return TensorField(n, 0, 2, comps)
    if cls is TractorSection:
        return _tf_11(covariant_derivative(conn, section.nu))
    if cls is S2TractorSection:
        return trace_free_sym(covariant_derivative(conn, section.t))
    if cls is SkewTractorSection:
        return trace_free_skew(covariant_derivative(conn, section.beta))
    raise TransportError("no source equation for bundle %r" % bundle.name)


def solution_correspondence(bundle: TransportBundle, section: Section,
                            points, parallel_tol: float = 1e-7) -> float:
    """Max-abs residual of the source PDE for a parallel section.

    Raises NotParallelError when the connection applied to the section
    exceeds parallel_tol at any sample point.
    """
    pts = list(points)
    family = bundle.nabla(bundle.context, section)
    worst_parallel = 0.0
    for pt in pts:
        for member in family:
            worst_parallel = max(worst_parallel,
                                 float(member.max_abs_at(pt)))
    if worst_parallel > parallel_tol:
        raise NotParallelError(
            "section is not parallel: residual %.3e" % worst_parallel)
    res = _pde_residual_field(bundle, section)
    worst = 0.0
    for pt in pts:
        worst = max(worst, float(res.at(pt).max_abs()))
    return worst


def transported_sampler(bundle: TransportBundle, base_point, initial_vec,
                        steps_per_unit: int = 200) -> Callable:
    """Extend an initial value to a function of x by straight-line
    transport from the base point; on a flat chart the result is the
    unique parallel section through the data."""
    base = [float(c) for c in base_point]
    init = np.asarray(initial_vec, dtype=float)

    def sample(x) -> np.ndarray:
        tgt = [float(c) for c in x]
        if max(abs(a - b) for a, b in zip(base, tgt)) < 1e-15:
            return init.copy()
        seg = line_segment(base, tgt)
        steps = max(20, round(steps_per_unit * _euclid(base, tgt)))
        return transport(bundle, seg, init, steps)

    return sample


def _euclid(a, b) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def sampled_pde_residual(bundle: TransportBundle, sampler: Callable,
                         points, h: float = 1e-4) -> float:
    """Source-PDE residual of a numerically sampled section.

    Partial derivatives of the leading slot come from central
    differences of the sampler; connection terms use the Christoffel
    symbols of the bundle context at each point.
    """
    conn = _connection_of(bundle.context)
    n = bundle.dim
    gamma = conn.gamma
    cls = bundle.section_cls
    lead = cls.SLOT_SPEC[0][0]
    p, q = cls.SLOT_SPEC[0][1]
    worst = 0.0
    for pt in points:
        centre = bundle.unflatten_point(sampler(pt))[lead]
        grads = []
        for a in range(n):
            hi = [float(c) for c in pt]; hi[a] += h
            lo = [float(c) for c in pt]; lo[a] -= h
            plus = bundle.unflatten_point(sampler(hi))[lead]
            minus = bundle.unflatten_point(sampler(lo))[lead]
            grads.append([(x - y) / (2 * h) for x, y in
                          zip(plus.components, minus.components)])
        gpt = gamma.at(pt)
        if cls is S2TractorSection or cls is SkewTractorSection:
            comps = []
            for b in range(n):
                for c in range(n):
                    for a in range(n):
                        val = grads[a][b * n + c]
                        for d in range(n):
                            val += float(gpt[b, a, d]) * float(centre[d, c])
                            val += float(gpt[c, a, d]) * float(centre[b, d])
                        comps.append(val)
            U = PointTensor(n, 2, 1, comps)
            tf = trace_free_sym(U) if cls is S2TractorSection \
                else trace_free_skew(U)
            worst = max(worst, tf.max_abs())
        elif cls is TractorSection:
            comps = []
            for c in range(n):
                for a in range(n):
                    val = grads[a][c]
                    for d in range(n):
                        val += float(gpt[c, a, d]) * float(centre[d])
                    comps.append(val)
            worst = max(worst, _tf_11(PointTensor(n, 1, 1, comps)).max_abs())
        else:
            raise TransportError(
                "sampled residual covers the prolongation bundles only")
    return worst
