"""Command line driver: exit codes, report JSON, and the three subcommands.

Everything runs in process through main(argv), which returns 0 when every
check passes, 1 when a check fails, and 2 on input errors.  Argparse-level
errors (unknown suite, unknown bundle) raise SystemExit(2) instead.
"""

import contextlib
import io
import json

import pytest

from protract.cli import main


def run_cli(argv, json_path=None):
    """Invoke main() capturing streams; parse the JSON report if requested."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        rc = main(list(argv))
    report = None
    if json_path is not None:
        with open(json_path) as fh:
            report = json.load(fh)
    return rc, out.getvalue(), err.getvalue(), report


def write_spec(tmp_path, name="chart.json", **overrides):
    data = {
        "dim": 2,
        "coords": ["x0", "x1"],
        "metric": [["1", "0"], ["0", "1 + x0^2"]],
        "phi": "x0/2 + x1/3",
        "box": [[-1, 1], [-1, 1]],
        "samples": {"count": 8, "seed": 3},
        "mode": "rational",
    }
    data.update(overrides)
    for key in [k for k, v in data.items() if v is None]:
        del data[key]
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


BUNDLED = ("flat2", "flat3", "sphere2", "sphere3",
           "nonEinstein2", "nonEinstein3")


class TestCheckCommand:
    def test_flat_chart_full_suite_passes(self, tmp_path):
        path = tmp_path / "r.json"
        rc, out, err, report = run_cli(
            ["check", "--spec", "flat2", "--suite", "all",
             "--json", str(path)], json_path=path)
        assert rc == 0
        assert err == ""
        assert report["status"] == "pass"
        assert len(report["checks"]) == 15
        # flat chart in rational mode: every residual is exactly zero
        for check in report["checks"]:
            assert check["pass"] is True
            assert check["residual"] == 0.0
        names = {c["name"] for c in report["checks"]}
        assert {"bianchi_first", "duality_tractor", "weyl_invariance",
                "obstruction_identity", "metric_lift_parallel",
                "cotractor_dim_attains_rank"} <= names

    def test_report_schema_and_no_timing(self, tmp_path):
        path = tmp_path / "r.json"
        rc, out, _, report = run_cli(
            ["check", "--spec", "flat2", "--suite", "duality",
             "--json", str(path)], json_path=path)
        assert rc == 0
        assert sorted(report.keys()) == [
            "checks", "command", "metrics", "spec_digest", "status"]
        assert report["command"] == "check"
        assert len(report["spec_digest"]) == 64
        for check in report["checks"]:
            assert sorted(check.keys()) == [
                "name", "pass", "residual", "threshold"]
        # wall time goes to stdout only, never into the report
        assert "(s)" not in json.dumps(report)
        assert out.rstrip().splitlines()[-1].startswith("status: pass")
        assert out.rstrip().endswith("s)")

    def test_json_report_is_deterministic(self, tmp_path):
        argv = ["check", "--spec", "flat2", "--suite", "all", "--seed", "11"]
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(argv + ["--json", str(p1)])
        run_cli(argv + ["--json", str(p2)])
        assert p1.read_bytes() == p2.read_bytes()

    def test_sphere_einstein_suite_passes(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["check", "--spec", "sphere3", "--suite", "einstein",
             "--json", str(path)], json_path=path)
        assert rc == 0
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["obstruction_vanishes"]["pass"]
        assert by_name["obstruction_identity"]["pass"]

    def test_non_einstein_invariance_fails_with_exit_1(self, tmp_path):
        path = tmp_path / "r.json"
        rc, out, err, report = run_cli(
            ["check", "--spec", "nonEinstein3", "--suite", "invariance",
             "--json", str(path)], json_path=path)
        assert rc == 1
        assert err == ""
        assert report["status"] == "fail"
        by_name = {c["name"]: c for c in report["checks"]}
        # Weyl is insensitive to the connection change, Cotton is not
        assert by_name["weyl_invariance"]["pass"]
        assert not by_name["cotton_invariance"]["pass"]
        assert by_name["cotton_invariance"]["residual"] > 1e-3
        # the change in Cotton still equals the contracted Weyl shift
        assert report["metrics"]["cotton_weyl_shift_identity"] == 0.0
        assert "[FAIL] cotton_invariance" in out
        assert "status: fail" in out

    def test_non_einstein_obstruction_detects(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["check", "--spec", "nonEinstein3", "--suite", "einstein",
             "--json", str(path)], json_path=path)
        assert rc == 0
        by_name = {c["name"]: c for c in report["checks"]}
        detect = by_name["obstruction_detects_non_einstein"]
        assert detect["pass"]
        assert report["metrics"]["einstein_deviation_max"] > 1e-3

    def test_bundled_names_all_load(self):
        for name in BUNDLED:
            rc, out, err, _ = run_cli(["curvature", "--spec", name])
            assert rc == 0, (name, err)

    def test_unknown_suite_rejected_by_parser(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["check", "--spec", "flat2", "--suite", "nope"])
        assert exc.value.code == 2

    def test_missing_spec_flag_rejected(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["check", "--suite", "all"])
        assert exc.value.code == 2


class TestSpecLoading:
    def test_custom_spec_file_runs(self, tmp_path):
        spec = write_spec(tmp_path)
        out_path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["check", "--spec", spec, "--suite", "duality",
             "--json", str(out_path)], json_path=out_path)
        assert rc == 0
        assert all(c["residual"] == 0.0 for c in report["checks"])

    def test_invariance_needs_phi_or_upsilon(self, tmp_path):
        spec = write_spec(tmp_path, phi=None)
        rc, _, err, _ = run_cli(["check", "--spec", spec,
                                 "--suite", "invariance"])
        assert rc == 2
        assert "invariance" in err

    def test_explicit_upsilon_accepted(self, tmp_path):
        spec = write_spec(tmp_path, phi=None, upsilon=["1/2", "x0/3"])
        rc, _, err, _ = run_cli(["check", "--spec", spec,
                                 "--suite", "invariance"])
        assert rc in (0, 1)
        assert err == ""

    def test_upsilon_length_checked(self, tmp_path):
        spec = write_spec(tmp_path, upsilon=["1"])
        rc, _, err, _ = run_cli(["check", "--spec", spec, "--suite", "all"])
        assert rc == 2
        assert "upsilon" in err

    def test_asymmetric_metric_exits_2(self, tmp_path):
        spec = write_spec(tmp_path, metric=[["1", "x0"], ["0", "1"]])
        rc, _, err, _ = run_cli(["curvature", "--spec", spec])
        assert rc == 2
        assert "error:" in err

    def test_unreadable_path_exits_2(self):
        rc, _, err, _ = run_cli(["curvature", "--spec", "/no/such/file.json"])
        assert rc == 2
        assert "cannot read spec" in err

    def test_invalid_json_exits_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        rc, _, err, _ = run_cli(["curvature", "--spec", str(path)])
        assert rc == 2
        assert "not valid JSON" in err

    def test_bad_metric_entry_exits_2(self, tmp_path):
        spec = write_spec(tmp_path, metric=[["1", "0"], ["0", "x7 + 1"]])
        rc, _, err, _ = run_cli(["curvature", "--spec", spec])
        assert rc == 2
        assert "metric entry" in err


class TestTransportCommand:
    def test_flat_loop_reports_zero_deviation(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["transport", "cotractor", "circle:0,0,0.5", "--spec", "flat2",
             "--steps", "128", "--loop", "--json", str(path)],
            json_path=path)
        assert rc == 0
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["reverse_transport"]["pass"]
        assert by_name["rk4_order"]["pass"]
        assert report["metrics"]["loop_deviation"] == 0.0
        assert report["metrics"]["rank"] == 3
        assert report["metrics"]["bundle"] == "cotractor"
        assert len(report["metrics"]["initial"]) == 3
        assert sorted(report["metrics"]["final_section"]) == ["mu", "sigma"]

    def test_sphere_loop_order_near_four(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["transport", "tractor", "circle:0.2,0.1,0.55",
             "--spec", "sphere2", "--steps", "200", "--loop",
             "--json", str(path)], json_path=path)
        assert rc == 0
        assert abs(report["metrics"]["observed_order"] - 4.0) < 0.3
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["reverse_transport"]["residual"] < 1e-8

    def test_open_curve_with_loop_flag_exits_2(self):
        rc, _, err, _ = run_cli(
            ["transport", "cotractor", "line:0,0;1,1", "--spec", "flat2",
             "--loop"])
        assert rc == 2
        assert "closed" in err

    def test_open_curve_without_loop_runs(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["transport", "cotractor", "line:0,0;0.5,0.25", "--spec",
             "flat2", "--steps", "64", "--json", str(path)], json_path=path)
        assert rc == 0
        assert "loop_deviation" not in report["metrics"]

    def test_bad_curve_text_exits_2(self):
        rc, _, err, _ = run_cli(
            ["transport", "cotractor", "circle:0,0", "--spec", "flat2"])
        assert rc == 2
        assert "bad curve" in err

    def test_unknown_curve_kind_exits_2(self):
        rc, _, err, _ = run_cli(
            ["transport", "cotractor", "spiral:1,2,3", "--spec", "flat2"])
        assert rc == 2
        assert "unknown curve kind" in err

    def test_default_curve_is_seeded_and_deterministic(self, tmp_path):
        argv = ["transport", "tractor", "--spec", "flat2", "--steps", "64",
                "--seed", "9"]
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        rc1, _, _, r1 = run_cli(argv + ["--json", str(p1)], json_path=p1)
        rc2, _, _, r2 = run_cli(argv + ["--json", str(p2)], json_path=p2)
        assert rc1 == rc2 == 0
        assert p1.read_bytes() == p2.read_bytes()
        assert r1["metrics"]["rank"] == 3

    def test_bundle_choices_enforced(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["transport", "frame", "--spec", "flat2"])
        assert exc.value.code == 2

    def test_every_bundle_transports_on_flat2(self, tmp_path):
        # trivial_loop: parallel sections span the whole bundle, so any
        # initial value returns to itself around a closed curve
        for bundle, rank, trivial_loop in (
                ("cotractor", 3, True), ("tractor", 3, True),
                ("metrisability", 6, False), ("s2dual", 6, False),
                ("tangent", 2, True)):
            path = tmp_path / ("%s.json" % bundle)
            rc, _, err, report = run_cli(
                ["transport", bundle, "circle:0,0,0.4", "--spec", "flat2",
                 "--steps", "256", "--loop", "--json", str(path)],
                json_path=path)
            assert rc == 0, (bundle, err)
            assert report["metrics"]["rank"] == rank
            if trivial_loop:
                assert report["metrics"]["loop_deviation"] < 1e-10

    def test_skew_bundle_needs_three_dimensions(self):
        rc, _, err, _ = run_cli(
            ["transport", "skew", "circle:0,0,0.4", "--spec", "flat2"])
        assert rc == 2
        assert "dimension at least 3" in err

    def test_skew_bundle_on_flat3_has_holonomy(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["transport", "skew", "circle:0,0,0.4", "--spec", "flat3",
             "--steps", "256", "--loop", "--json", str(path)],
            json_path=path)
        assert rc == 0
        assert report["metrics"]["rank"] == 7
        # the parallel sections span only 6 of the 7 directions, so a
        # generic initial value does not close up around the loop
        assert report["metrics"]["loop_deviation"] > 0.1


class TestCurvatureCommand:
    def test_flat_values_vanish(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["curvature", "--spec", "flat2", "--json", str(path)],
            json_path=path)
        assert rc == 0
        values = report["metrics"]["values"]
        assert sorted(values) == ["cotton", "ricci", "riemann", "scalar",
                                  "schouten", "weyl"]
        for name, comps in values.items():
            assert all(v == 0.0 for v in comps), name

    def test_round_sphere_values_at_point(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["curvature", "--spec", "sphere2", "--point", "0.1,0.2",
             "--json", str(path)], json_path=path)
        assert rc == 0
        values = report["metrics"]["values"]
        assert abs(values["scalar"][0] - 2.0) < 1e-9
        # Einstein in two dimensions: Ricci equals the metric,
        # which at this point is 4/(1 + 0.05)^2 on the diagonal
        g00 = 4.0 / 1.05 ** 2
        assert abs(values["ricci"][0] - g00) < 1e-9
        assert abs(values["ricci"][1]) < 1e-9
        assert abs(values["ricci"][3] - g00) < 1e-9
        assert max(abs(v) for v in values["weyl"]) < 1e-12
        assert max(abs(v) for v in values["cotton"]) < 1e-12
        assert report["metrics"]["values_at"] == [0.1, 0.2]

    def test_identity_checks_included(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["curvature", "--spec", "nonEinstein2", "--json", str(path)],
            json_path=path)
        assert rc == 0
        names = {c["name"] for c in report["checks"]}
        assert {"bianchi_first", "bianchi_second",
                "cotton_weyl_relation"} <= names

    def test_point_dimension_checked(self):
        rc, _, err, _ = run_cli(
            ["curvature", "--spec", "flat3", "--point", "0.1,0.2"])
        assert rc == 2
        assert "--point" in err

    def test_mode_override_accepted(self, tmp_path):
        path = tmp_path / "r.json"
        rc, _, _, report = run_cli(
            ["curvature", "--spec", "flat2", "--mode", "float",
             "--json", str(path)], json_path=path)
        assert rc == 0
        assert all(v == 0.0 for v in report["metrics"]["values"]["riemann"])
