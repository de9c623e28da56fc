"""Projective changes of connection and their invariants.

A projective change replaces gamma^c_ab by gamma^c_ab + delta^c_a Y_b +
delta^c_b Y_a for a one-form Y. Geodesics survive as unparametrised
curves; the Weyl and Cotton tensors survive exactly, and the tests here
verify both numerically. Only gradient one-forms Y = d(phi) keep the
changed connection inside the class where the barred Schouten tensor is
symmetric, so the invariance checker symmetrizes the barred Ricci.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import Expr, ZERO, diff
from .geometry import (
    AffineConnection,
    ChartGeometry,
    GeometryError,
    connection_pack,
    levi_civita,
)
from .tensor import TensorField

__all__ = [
    "Upsilon", "gradient_upsilon", "projective_change",
    "check_weyl_cotton_invariance", "einstein_deviation",
]


class Upsilon:
    """One-form driving a projective change."""

    __slots__ = ("dim", "field")

    def __init__(self, field: TensorField):
        if (field.p, field.q) != (0, 1):
            raise GeometryError("expected a one-form, valence (0,1)")
        self.dim = field.dim
        self.field = field

    def __getitem__(self, a: int):
        return self.field[a]

    def __repr__(self):
        return "<Upsilon dim=%d>" % self.dim


def gradient_upsilon(phi: Expr, dim: int) -> Upsilon:
    """Exact one-form d(phi); the only kind the invariance suite accepts."""
    return Upsilon(TensorField(dim, 0, 1, [diff(phi, a) for a in range(dim)]))


def projective_change(conn: AffineConnection, ups: Upsilon) -> AffineConnection:
    """gamma^c_ab + delta^c_a Y_b + delta^c_b Y_a; torsion-free stays exact."""
    if conn.dim != ups.dim:
        raise GeometryError("dimension mismatch")
    n = conn.dim
    gamma = conn.gamma
    comps = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                val = gamma[c, a, b]
                if c == a:
                    val = val + ups[b]
                if c == b:
                    val = val + ups[a]
                comps.append(val)
    return AffineConnection(TensorField(n, 1, 2, comps), validate=False)


def check_weyl_cotton_invariance(geom: ChartGeometry, ups: Upsilon,
                                 points) -> dict:
    """Max-abs difference of Weyl and Cotton across a projective change.

    The barred stack comes from connection_pack, which symmetrizes the
    barred Ricci before forming Schouten; with a gradient one-form the
    symmetrization is a no-op up to rounding.
    """
    pack = geom.pack()
    barred_conn = projective_change(geom.connection(), ups)
    barred = connection_pack(barred_conn)
    dweyl = barred.weyl - pack.weyl
    dcotton = barred.cotton - pack.cotton
    # The pair (W, C) is the true invariant: C picks up a Y.W shift when
    # the connection moves, so record the shift-corrected residual too.
    n = geom.dim
    shifted = []
    for a in range(n):
        for b in range(n):
            for c in range(n):
                shift = ZERO
                for d in range(n):
                    shift = shift + ups[d] * pack.weyl[d, a, b, c]
                shifted.append(dcotton[a, b, c] - shift)
    dcotton_pair = TensorField(n, 0, 3, shifted)
    pts = list(points)
    worst_w = 0
    worst_c = 0
    worst_pair = 0
    for pt in pts:
        worst_w = max(worst_w, dweyl.at(pt).max_abs())
        worst_c = max(worst_c, dcotton.at(pt).max_abs())
        worst_pair = max(worst_pair, dcotton_pair.at(pt).max_abs())
    return {"weyl": worst_w, "cotton": worst_c,
            "cotton_pair": worst_pair, "points": len(pts)}


def einstein_deviation(geom: ChartGeometry) -> TensorField:
    """Trace-free Ricci deviation E_ad = R_ad - g_ad R / n.

    The metric is Einstein at a point exactly when E vanishes there.
    """
    n = geom.dim
    if n < 2:
        raise GeometryError("needs dimension at least 2")
    pack = geom.pack()
    scalar = pack.scalar.components[0]
    k = Fraction(1, n)
    comps = []
    for a in range(n):
        for d in range(n):
            comps.append(pack.ricci[a, d] - k * (geom.metric[a, d] * scalar))
    return TensorField(n, 0, 2, comps)
