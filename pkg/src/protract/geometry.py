"""Levi-Civita connections and the curvature stack on a single chart.

Index storage follows tensor.py: contravariant slots first. The
curvature tensor R_ab{}^c{}_d is stored as [c][a][b][d] and its sign is
fixed by the commutation rule (nabla_a nabla_b - nabla_b nabla_a) v^c =
R_ab{}^c{}_d v^d, which the test suite asserts directly so the
convention cannot drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import EvalDomainError, ZERO, diff, evaluate, is_rational_closed
from .tensor import (
    TensorField,
    contract,
    is_symmetric_pair,
    matrix_inverse_exprs,
    symmetrize,
)

__all__ = [
    "GeometryError", "SingularMetricError",
    "ChartGeometry", "AffineConnection", "CurvaturePack",
    "levi_civita", "covariant_derivative", "riemann",
    "derive_pack", "connection_pack", "verify_bianchi", "torsion",
    "cotton_weyl_relation",
]


class GeometryError(ValueError):
    pass


class SingularMetricError(GeometryError, EvalDomainError):
    pass


class AffineConnection:
    """Torsion-free connection given by Christoffel symbols gamma[c][a][b]."""

    __slots__ = ("dim", "gamma")

    def __init__(self, gamma: TensorField, validate: bool = True):
        if (gamma.p, gamma.q) != (1, 2):
            raise GeometryError("Christoffel array must have valence (1,2)")
        if validate and not is_symmetric_pair(gamma, 1, 2):
            raise GeometryError("connection coefficients must be symmetric")
        self.dim = gamma.dim
        self.gamma = gamma

    def __repr__(self):
        return "<AffineConnection dim=%d>" % self.dim


class ChartGeometry:
    """A chart metric plus lazily derived structure (inverse, connection)."""

    __slots__ = ("dim", "metric", "_cache")

    def __init__(self, metric: TensorField, validate: bool = True):
        if (metric.p, metric.q) != (0, 2):
            raise GeometryError("metric must have valence (0,2)")
        if validate and not is_symmetric_pair(metric, 0, 1, count=5):
            raise GeometryError("metric is not symmetric")
        self.dim = metric.dim
        self.metric = metric
        self._cache: dict = {}

    def metric_inverse(self) -> TensorField:
        got = self._cache.get("inverse")
        if got is None:
            n = self.dim
            rows = [[self.metric[i, j] for j in range(n)] for i in range(n)]
            inv, det = matrix_inverse_exprs(rows)
            got = TensorField(n, 2, 0, [inv[i][j] for i in range(n)
                                        for j in range(n)])
            self._cache["inverse"] = got
            self._cache["det"] = det
        return got

    def metric_determinant(self):
        self.metric_inverse()
        return self._cache["det"]

    def check_invertible_at(self, point) -> None:
        """Raise SingularMetricError when det g is negligible at the point.

        The threshold is relative: 1e-12 times the Hadamard row bound of
        the evaluated metric (or exact zero in rational mode).
        """
        det = self.metric_determinant()
        g_pt = self.metric.at(point)
        d = evaluate(det, point) if isinstance(
            g_pt.components[0], Fraction) else float(
                evaluate(det, [float(x) for x in point]))
        if isinstance(d, Fraction):
            if d == 0:
                raise SingularMetricError("metric is singular at the point")
            return
        bound = 1.0
        for i in range(self.dim):
            row = max(abs(float(g_pt[i, j])) for j in range(self.dim))
            bound *= row
        if abs(d) < 1e-12 * max(1.0, bound):
            raise SingularMetricError("metric is singular at the point")

    def connection(self) -> AffineConnection:
        got = self._cache.get("connection")
        if got is None:
            got = levi_civita(self)
            self._cache["connection"] = got
        return got

    def pack(self) -> "CurvaturePack":
        got = self._cache.get("pack")
        if got is None:
            got = derive_pack(self)
            self._cache["pack"] = got
        return got

    def is_rational(self) -> bool:
        return all(is_rational_closed(c) for c in self.metric.components)

    def __repr__(self):
        return "<ChartGeometry dim=%d>" % self.dim


@dataclass(frozen=True)
class CurvaturePack:
    riemann: TensorField   # [c][a][b][d]
    ricci: TensorField     # [a][b]
    scalar: TensorField    # single component
    schouten: TensorField  # [a][b]
    weyl: TensorField      # [c][a][b][d]
    cotton: TensorField    # [a][b][c]


def levi_civita(geom: ChartGeometry) -> AffineConnection:
    """Koszul formula: gamma^c_ab = g^cd(d_a g_db + d_b g_da - d_d g_ab)/2."""
    n = geom.dim
    g = geom.metric
    ginv = geom.metric_inverse()
    dg = [[[diff(g[i, j], k) for j in range(n)] for i in range(n)]
          for k in range(n)]
    half = Fraction(1, 2)
    comps = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                total = ZERO
                for d in range(n):
                    total = total + ginv[c, d] * (
                        dg[a][d][b] + dg[b][d][a] - dg[d][a][b])
                comps.append(half * total)
    return AffineConnection(TensorField(n, 1, 2, comps), validate=False)


def covariant_derivative(conn: AffineConnection, T: TensorField) -> TensorField:
    """Connection derivative; the new covariant slot comes first.

    Output valence is (p, q+1) with index order (uppers..., a, lowers...):
    the partial derivative plus one +gamma term per upper slot and one
    -gamma term per lower slot.
    """
    if conn.dim != T.dim:
        raise GeometryError("dimension mismatch")
    n, p, q = T.dim, T.p, T.q
    gamma = conn.gamma
    out = []
    import itertools
    for multi in itertools.product(range(n), repeat=p + q + 1):
        up = multi[:p]
        a = multi[p]
        lo = multi[p + 1:]
        val = diff(T.components[T.flat(up + lo)], a)
        for i in range(p):
            for e in range(n):
                repl = up[:i] + (e,) + up[i + 1:]
                val = val + gamma[up[i], a, e] * T.components[T.flat(repl + lo)]
        for j in range(q):
            for e in range(n):
                repl = lo[:j] + (e,) + lo[j + 1:]
                val = val - gamma[e, a, lo[j]] * T.components[T.flat(up + repl)]
        out.append(val)
    return TensorField(n, p, q + 1, out)


def riemann(conn: AffineConnection) -> TensorField:
    """Curvature of the connection, stored as [c][a][b][d]."""
    n = conn.dim
    gamma = conn.gamma
    dgamma = [[[[diff(gamma[c, a, b], k) for b in range(n)]
                for a in range(n)] for c in range(n)] for k in range(n)]
    comps = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                for d in range(n):
                    val = dgamma[a][c][b][d] - dgamma[b][c][a][d]
                    for e in range(n):
                        val = val + gamma[c, a, e] * gamma[e, b, d] \
                            - gamma[c, b, e] * gamma[e, a, d]
                    comps.append(val)
    return TensorField(n, 1, 3, comps)


def _ricci(riem: TensorField) -> TensorField:
    # R_ab = R_ca{}^c{}_b: pair the upper slot with the first lower slot
    return contract(riem, 0, 0)


def _weyl(riem: TensorField, schouten: TensorField) -> TensorField:
    n = riem.dim
    comps = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                for d in range(n):
                    val = riem[c, a, b, d]
                    if a == c:
                        val = val - schouten[b, d]
                    if b == c:
                        val = val + schouten[a, d]
                    comps.append(val)
    return TensorField(n, 1, 3, comps)


def _cotton(conn: AffineConnection, schouten: TensorField) -> TensorField:
    dP = covariant_derivative(conn, schouten)  # [a][b][c] = nabla_a P_bc
    n = conn.dim
    comps = []
    for a in range(n):
        for b in range(n):
            for c in range(n):
                comps.append(dP[a, b, c] - dP[b, a, c])
    return TensorField(n, 0, 3, comps)


def connection_pack(conn: AffineConnection) -> CurvaturePack:
    """Curvature stack for a bare connection; no metric, so no scalar.

    The Ricci tensor is symmetrized before forming Schouten, which is
    the right reduction for connections obtained by a gradient
    projective change.
    """
    n = conn.dim
    if n < 2:
        raise GeometryError("needs dimension at least 2")
    riem = riemann(conn)
    ricci = symmetrize(_ricci(riem), (0, 1))
    schouten = ricci.scaled(Fraction(1, n - 1))
    weyl = _weyl(riem, schouten)
    cotton = _cotton(conn, schouten)
    scalar = TensorField(n, 0, 0, [ZERO])
    return CurvaturePack(riem, ricci, scalar, schouten, weyl, cotton)


def derive_pack(geom: ChartGeometry) -> CurvaturePack:
    """Full curvature stack of the Levi-Civita connection of the metric."""
    n = geom.dim
    if n < 2:
        raise GeometryError("needs dimension at least 2")
    conn = geom.connection()
    riem = riemann(conn)
    ricci = _ricci(riem)
    ginv = geom.metric_inverse()
    total = ZERO
    for b in range(n):
        for d in range(n):
            total = total + ginv[b, d] * ricci[b, d]
    scalar = TensorField(n, 0, 0, [total])
    schouten = ricci.scaled(Fraction(1, n - 1))
    weyl = _weyl(riem, schouten)
    cotton = _cotton(conn, schouten)
    return CurvaturePack(riem, ricci, scalar, schouten, weyl, cotton)


def torsion(conn: AffineConnection) -> TensorField:
    n = conn.dim
    gamma = conn.gamma
    comps = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                comps.append(gamma[c, a, b] - gamma[c, b, a])
    return TensorField(n, 1, 2, comps)


def _max_abs(field_pt) -> float:
    return max((abs(c) for c in field_pt.components), default=0)


def verify_bianchi(pack: CurvaturePack, conn: AffineConnection, points) -> dict:
    """Max-abs residuals of both curvature cycle identities over points.

    first:  R_ab{}^c{}_d + R_da{}^c{}_b + R_bd{}^c{}_a
    second: nabla_e R_ab{}^c{}_d + nabla_b R_ea{}^c{}_d + nabla_a R_be{}^c{}_d
    """
    R = pack.riemann
    n = R.dim
    first = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                for d in range(n):
                    first.append(R[c, a, b, d] + R[c, d, a, b] + R[c, b, d, a])
    first_field = TensorField(n, 1, 3, first)

    dR = covariant_derivative(conn, R)  # [c][e][a][b][d] = nabla_e R_ab^c_d
    second = []
    for c in range(n):
        for e in range(n):
            for a in range(n):
                for b in range(n):
                    for d in range(n):
                        second.append(dR[c, e, a, b, d] + dR[c, b, e, a, d]
                                      + dR[c, a, b, e, d])
    second_field = TensorField(n, 1, 4, second)

    pts = list(points)
    worst1 = 0
    worst2 = 0
    for pt in pts:
        worst1 = max(worst1, _max_abs(first_field.at(pt)))
        worst2 = max(worst2, _max_abs(second_field.at(pt)))
    return {"first": worst1, "second": worst2, "points": len(pts)}


def cotton_weyl_relation(pack: CurvaturePack, conn: AffineConnection,
                         points) -> float:
    """Max-abs of (n-2) C_abd - nabla_c W_ab{}^c{}_d over points.

    The Cotton index order matches the Weyl pair (a,b); the remaining
    Schouten index d sits last. In dimension 2 both sides vanish
    identically and the residual is 0.
    """
    W = pack.weyl
    C = pack.cotton
    n = W.dim
    dW = covariant_derivative(conn, W)  # [c][e][a][b][d] = nabla_e W_ab^c_d
    comps = []
    for a in range(n):
        for b in range(n):
            for d in range(n):
                val = (n - 2) * C[a, b, d]
                div = ZERO
                for c in range(n):
                    div = div + dW[c, c, a, b, d]
                comps.append(val - div)
    field = TensorField(n, 0, 3, comps)
    worst = 0
    for pt in points:
        worst = max(worst, _max_abs(field.at(pt)))
    return worst
