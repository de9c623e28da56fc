"""Connections, curvature, and the differential identities tying them together."""

from fractions import Fraction

import numpy as np
import pytest

from protract.expr import evaluate, parse
from protract.geometry import (
    AffineConnection,
    ChartGeometry,
    SingularMetricError,
    connection_pack,
    cotton_weyl_relation,
    covariant_derivative,
    derive_pack,
    levi_civita,
    riemann,
    torsion,
    verify_bianchi,
)
from protract.tensor import TensorField, contract, tensor_product, zero_field

from gen import invertible, poly_field, random_metric, rational_points, rng_for
from oracles import commutator_family, fd_christoffel, fd_curvature_stack


def _flat(n):
    comps = [parse("1" if i == j else "0", n) for i in range(n) for j in range(n)]
    return ChartGeometry(TensorField(n, 0, 2, comps))


def _np_at(field, x, shape):
    pt = field.at(x)
    return np.array([float(c) for c in pt.components]).reshape(shape)


def _tensor_nabla(conn, field):
    """Adapter giving commutator_family per-direction tensor slices."""
    import itertools

    d = covariant_derivative(conn, field)
    n, p, q = field.dim, field.p, field.q
    out = []
    for a in range(n):
        comps = []
        for idx in itertools.product(range(n), repeat=p + q):
            comps.append(d[idx[:p] + (a,) + idx[p:]])
        out.append(TensorField(n, p, q, comps))
    return out


class TestLeviCivita:
    def test_identity_metric_gamma_zero(self):
        conn = levi_civita(_flat(3))
        pt = conn.gamma.at([Fraction(1), Fraction(2), Fraction(3)])
        assert all(c == 0 for c in pt.components)

    def test_flat_covariant_derivative_is_partial(self):
        geom = _flat(2)
        conn = geom.connection()
        v = TensorField(2, 1, 0, [parse("x0^2", 2), parse("x0*x1", 2)])
        dv = covariant_derivative(conn, v)
        p = (Fraction(3), Fraction(5))
        # storage [b][a] = nabla_a v^b; at p: d(x0^2)/dx0 = 6
        assert evaluate(dv[0, 0], p) == 6
        assert evaluate(dv[0, 1], p) == 0
        assert evaluate(dv[1, 0], p) == 5
        assert evaluate(dv[1, 1], p) == 3

    def test_metric_compatibility_random_polynomial_metrics(self):
        rng = rng_for("nabla-g")
        for trial in range(10):
            n = rng.choice((2, 3))
            geom = random_metric(rng, n)
            dg = covariant_derivative(geom.connection(), geom.metric)
            for pt in rational_points(rng, n, 20):
                if not invertible(geom, pt):
                    continue
                vals = dg.at(pt)
                assert all(c == 0 for c in vals.components)

    def test_sphere_christoffel_against_finite_differences(self, sphere2):
        conn = sphere2.connection()

        def metric_fn(p):
            pt = sphere2.metric.at([float(c) for c in p])
            return np.array([float(c) for c in pt.components]).reshape(2, 2)

        rng = rng_for("koszul-fd")
        for _ in range(5):
            x = [rng.uniform(-0.7, 0.7) for _ in range(2)]
            sym = _np_at(conn.gamma, x, (2, 2, 2))
            fd = fd_christoffel(metric_fn, x, h=1e-4)
            assert np.max(np.abs(sym - fd)) < 1e-6

    def test_singular_metric_raises(self):
        g = TensorField(2, 0, 2, [parse("x0", 2), parse("0", 2),
                                  parse("0", 2), parse("1", 2)])
        geom = ChartGeometry(g)
        with pytest.raises(SingularMetricError):
            geom.check_invertible_at((Fraction(0), Fraction(1)))
        geom.check_invertible_at((Fraction(1), Fraction(1)))

    def test_asymmetric_metric_rejected(self):
        comps = [parse(s, 2) for s in ("1", "x0", "0", "1")]
        with pytest.raises(ValueError):
            ChartGeometry(TensorField(2, 0, 2, comps))


class TestCovariantDerivative:
    def test_scalar_gradient(self, sphere2):
        conn = sphere2.connection()
        f = TensorField(2, 0, 0, [parse("x0^2*x1", 2)])
        df = covariant_derivative(conn, f)
        p = (0.3, -0.4)
        assert evaluate(df[0], p) == pytest.approx(2 * 0.3 * -0.4)
        assert evaluate(df[1], p) == pytest.approx(0.09)

    def test_leibniz_rule_exact(self):
        rng = rng_for("leibniz")
        geom = random_metric(rng, 2)
        conn = geom.connection()
        u = poly_field(rng, 2, 1, 0)
        w = poly_field(rng, 2, 0, 1)
        left = covariant_derivative(conn, tensor_product(u, w))
        # product rule: nabla_a (u^b w_c) = (nabla_a u^b) w_c + u^b (nabla_a w_c)
        du = covariant_derivative(conn, u)
        dw = covariant_derivative(conn, w)
        n = 2
        for pt in rational_points(rng, n, 10):
            if not invertible(geom, pt):
                continue
            lv = left.at(pt)
            duv, uv = du.at(pt), u.at(pt)
            dwv, wv = dw.at(pt), w.at(pt)
            for b in range(n):
                for a in range(n):
                    for c in range(n):
                        # left storage [b][a][c]: derivative slot first among lowers
                        got = lv.components[(b * n + a) * n + c]
                        want = (duv.components[b * n + a] * wv.components[c]
                                + uv.components[b] * dwv.components[a * n + c])
                        assert got == want

    def test_new_slot_is_first_covariant(self):
        geom = _flat(2)
        v = TensorField(2, 0, 1, [parse("x1^3", 2), parse("0", 2)])
        dv = covariant_derivative(geom.connection(), v)
        assert (dv.p, dv.q) == (0, 2)
        p = (Fraction(2), Fraction(1))
        # [a][c] = nabla_a v_c: derivative index is the first lower slot
        assert evaluate(dv[1, 0], p) == 3
        assert evaluate(dv[0, 1], p) == 0


class TestRiemann:
    def test_flat_riemann_zero(self):
        R = riemann(_flat(3).connection())
        pt = R.at([Fraction(1), Fraction(-2), Fraction(5)])
        assert all(c == 0 for c in pt.components)

    def test_commutator_identity_on_sphere(self, sphere2):
        # (nabla_a nabla_b - nabla_b nabla_a) nu^c = R_ab^c_d nu^d
        conn = sphere2.connection()
        R = sphere2.pack().riemann
        rng = rng_for("commutator")
        n = 2
        for _ in range(20):
            nu = poly_field(rng, n, 1, 0)
            grid = commutator_family(_tensor_nabla, conn, nu, n)
            x = [rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)]
            Rv = _np_at(R, x, (n, n, n, n))
            nuv = _np_at(nu, x, (n,))
            for a in range(n):
                for b in range(n):
                    lhs = grid[a][b].at(x)
                    for c in range(n):
                        want = sum(Rv[c, a, b, d] * nuv[d] for d in range(n))
                        assert abs(float(lhs.components[c]) - want) < 1e-9

    def test_first_pair_skew_exact(self):
        rng = rng_for("skew-pair")
        geom = random_metric(rng, 3)
        R = riemann(geom.connection())
        n = 3
        pts = [p for p in rational_points(rng, n, 5) if invertible(geom, p)]
        for pt in pts:
            v = R.at(pt)
            for c in range(n):
                for a in range(n):
                    for b in range(n):
                        for d in range(n):
                            x = v.components[((c * n + a) * n + b) * n + d]
                            y = v.components[((c * n + b) * n + a) * n + d]
                            assert x + y == 0


class TestCurvaturePack:
    def test_sphere_scalar_curvature_two(self, sphere2):
        pack = sphere2.pack()
        for x in ([0.0, 0.0], [0.5, -0.3], [0.9, 0.9]):
            assert float(pack.scalar.at(x).components[0]) == pytest.approx(2.0, abs=1e-12)

    def test_sphere_ricci_equals_metric(self, sphere2):
        # round 2-sphere of curvature 1: R_ab = (n-1) g_ab = g_ab
        pack = sphere2.pack()
        x = [0.4, 0.1]
        ric = _np_at(pack.ricci, x, (2, 2))
        g = _np_at(sphere2.metric, x, (2, 2))
        assert np.max(np.abs(ric - g)) < 1e-12

    def test_weyl_vanishes_in_two_and_three_flat(self, flat3):
        pack = flat3.pack()
        pt = pack.weyl.at([Fraction(1), Fraction(2), Fraction(3)])
        assert all(c == 0 for c in pt.components)

    def test_sphere3_against_finite_difference_stack(self, sphere3):
        pack = sphere3.pack()
        conn = sphere3.connection()

        def metric_fn(p):
            pt = sphere3.metric.at([float(c) for c in p])
            return np.array([float(c) for c in pt.components]).reshape(3, 3)

        rng = rng_for("fd-stack")
        for _ in range(3):
            x = [rng.uniform(-0.6, 0.6) for _ in range(3)]
            fd = fd_curvature_stack(metric_fn, x, h=1e-3)
            for name, field, shape in (
                ("riemann", pack.riemann, (3, 3, 3, 3)),
                ("ricci", pack.ricci, (3, 3)),
                ("schouten", pack.schouten, (3, 3)),
                ("weyl", pack.weyl, (3, 3, 3, 3)),
                ("cotton", pack.cotton, (3, 3, 3)),
            ):
                sym = _np_at(field, x, shape)
                assert np.max(np.abs(sym - fd[name])) < 5e-5, name
            assert abs(float(pack.scalar.at(x).components[0]) - fd["scalar"]) < 5e-5

    def test_weyl_first_upper_trace_zero_exact(self, non_einstein3):
        pack = non_einstein3.pack()
        W = pack.weyl
        n = 3
        rng = rng_for("weyl-trace")
        for pt in rational_points(rng, n, 5):
            v = W.at(pt)
            for b in range(n):
                for d in range(n):
                    tr = sum(v.components[((c * n + c) * n + b) * n + d] for c in range(n))
                    assert tr == 0

    def test_connection_pack_matches_derive_pack(self, non_einstein3):
        via_conn = connection_pack(non_einstein3.connection())
        via_geom = non_einstein3.pack()
        pt = [Fraction(1, 3), Fraction(-1, 4), Fraction(1, 5)]
        a = via_conn.riemann.at(pt)
        b = via_geom.riemann.at(pt)
        assert a.components == b.components


class TestBianchi:
    def test_flat_exact_zero(self, flat3):
        pack = flat3.pack()
        res = verify_bianchi(pack, flat3.connection(),
                             [[Fraction(1), Fraction(2), Fraction(-1)]])
        assert res["first"] == 0 and res["second"] == 0

    def test_sphere_small_residual(self, sphere2):
        rng = rng_for("bianchi-s2")
        pts = [[rng.uniform(-0.8, 0.8) for _ in range(2)] for _ in range(20)]
        res = verify_bianchi(sphere2.pack(), sphere2.connection(), pts)
        assert res["first"] < 1e-8 and res["second"] < 1e-8
        assert res["points"] == 20

    def test_random_polynomial_metrics_rational_exact(self):
        rng = rng_for("bianchi-poly")
        for _ in range(2):
            geom = random_metric(rng, 3)
            pts = [p for p in rational_points(rng, 3, 4) if invertible(geom, p)]
            res = verify_bianchi(geom.pack(), geom.connection(), pts)
            assert res["first"] == 0
            assert res["second"] == 0


class TestCottonWeylRelation:
    def test_exact_on_polynomial_metric(self, non_einstein3):
        rng = rng_for("cw-ne3")
        pts = [p for p in rational_points(rng, 3, 6)
               if invertible(non_einstein3, p)]
        res = cotton_weyl_relation(non_einstein3.pack(), non_einstein3.connection(), pts)
        assert res == 0

    def test_random_metric_n4(self):
        rng = rng_for("cw-n4")
        geom = random_metric(rng, 4)
        pts = [p for p in rational_points(rng, 4, 3) if invertible(geom, p)]
        res = cotton_weyl_relation(geom.pack(), geom.connection(), pts)
        assert res < 1e-7

    def test_two_dimensions_identically_zero(self, non_einstein2):
        rng = rng_for("cw-n2")
        pts = [p for p in rational_points(rng, 2, 6)
               if invertible(non_einstein2, p)]
        res = cotton_weyl_relation(non_einstein2.pack(), non_einstein2.connection(), pts)
        assert res == 0


class TestTorsion:
    def test_levi_civita_torsion_free(self, non_einstein3):
        t = torsion(non_einstein3.connection())
        pt = t.at([Fraction(1), Fraction(2), Fraction(3)])
        assert all(c == 0 for c in pt.components)

    def test_hand_built_asymmetric_connection(self):
        n = 2
        comps = [parse("0", n) for _ in range(n ** 3)]
        comps[(0 * n + 0) * n + 1] = parse("1", n)  # gamma^0_{01} = 1
        conn = AffineConnection(TensorField(n, 1, 2, comps), validate=False)
        t = torsion(conn)
        pt = t.at([Fraction(0), Fraction(0)])
        # T^0_{01} = gamma^0_{01} - gamma^0_{10} = 1
        assert pt.components[(0 * n + 0) * n + 1] == 1
        assert pt.components[(0 * n + 1) * n + 0] == -1

    def test_symmetric_validation(self):
        n = 2
        comps = [parse("0", n) for _ in range(n ** 3)]
        comps[(0 * n + 0) * n + 1] = parse("x0", n)
        with pytest.raises(ValueError):
            AffineConnection(TensorField(n, 1, 2, comps))
