import json
from fractions import Fraction as F

import pytest

from kmbounds.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestWeightsCommand:
    def test_csv(self, capsys):
        code, out, err = run(capsys, "weights", "--scheme", "kras:a=1/2",
                             "--n-max", "2")
        assert code == 0 and not err
        lines = out.strip().splitlines()
        assert lines[0] == "n,i,pi"
        assert lines[-1] == "2,2,1/2"

    def test_json_doubles_as_custom_file(self, capsys, tmp_path):
        code, out, _ = run(capsys, "weights", "--scheme", "remark4",
                           "--n-max", "5", "--format", "json")
        assert code == 0
        path = tmp_path / "rows.json"
        path.write_text(out)
        code2, out2, _ = run(capsys, "table", "--scheme", f"custom:{path}",
                             "--n-max", "5")
        code3, out3, _ = run(capsys, "table", "--scheme", "remark4",
                             "--n-max", "5")
        assert code2 == code3 == 0
        assert out2.splitlines()[1:] == out3.splitlines()[1:]


class TestTableCommand:
    def test_uniform_csv_upper_triangle(self, capsys):
        code, out, err = run(capsys, "table", "--scheme", "uniform",
                             "--n-max", "6", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "m,n,d"
        assert len(lines) == 1 + 28
        assert "2,3,23/144" in lines
        assert "5,6,257219/3628800" in lines

    def test_dirac_off_diagonal_ones(self, capsys):
        code, out, _ = run(capsys, "table", "--scheme", "dirac", "--n-max", "4")
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        for m, n, d in rows:
            assert d == ("0" if m == n else "1")

    def test_json_provenance(self, capsys):
        code, out, _ = run(capsys, "table", "--scheme", "remark4",
                           "--n-max", "5", "--format", "json")
        payload = json.loads(out)
        assert payload["method"] == "lp"
        assert payload["mode"] == "exact"
        assert payload["scheme"] == "remark4"
        assert len(payload["values"]) == 21

    def test_float_mode(self, capsys):
        code, out, _ = run(capsys, "table", "--scheme", "uniform",
                           "--n-max", "4", "--mode", "float64")
        assert code == 0
        assert "0,3,0.75" in out and "0,1,0.5" in out

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "t.csv"
        code, out, _ = run(capsys, "table", "--scheme", "uniform",
                           "--n-max", "2", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_text().startswith("m,n,d\n")

    def test_byte_identical_reruns(self, capsys):
        args = ("table", "--scheme", "kras:a=2/3", "--n-max", "7",
                "--format", "json")
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args)
        assert first == second


class TestResidualsCommand:
    def test_csv_values(self, capsys):
        code, out, _ = run(capsys, "residuals", "--scheme",
                           "halpern:rule=n/(n+1)", "--n-max", "3")
        lines = out.strip().splitlines()
        assert lines[0] == "n,R_n"
        assert lines[-1] == "3,25/48"

    def test_round_trip_from_table_json(self, capsys, tmp_path):
        path = tmp_path / "table.json"
        run(capsys, "table", "--scheme", "uniform", "--n-max", "6",
            "--format", "json", "--out", str(path))
        code, direct, _ = run(capsys, "residuals", "--scheme", "uniform",
                              "--n-max", "6")
        code2, reread, _ = run(capsys, "residuals", "--from-table", str(path))
        assert code == code2 == 0
        assert direct == reread

    def test_missing_scheme_usage_error(self, capsys):
        code, _, err = run(capsys, "residuals", "--n-max", "3")
        assert code == 2
        assert err.startswith("ERROR 2:")


class TestPlanAndDual:
    def test_plan_json(self, capsys):
        code, out, _ = run(capsys, "plan", "--scheme", "uniform",
                           "--m", "1", "--n", "2", "--format", "json")
        payload = json.loads(out)
        assert payload["cost"] == "1/4"
        assert payload["simple"] and payload["nested"]
        assert [1, 2, "1/6"] in payload["entries"]

    def test_plan_csv(self, capsys):
        code, out, _ = run(capsys, "plan", "--scheme", "uniform",
                           "--m", "1", "--n", "2")
        assert out.splitlines()[0] == "i,j,z"

    def test_dual_json_objective(self, capsys):
        code, out, _ = run(capsys, "dual", "--scheme", "uniform",
                           "--m", "0", "--n", "3", "--format", "json")
        payload = json.loads(out)
        u = [F(v) for v in payload["u"]]
        assert len(u) == 4
        # value of the (0, n) dual is 1 - 1/(n+1)
        probs = [F(1, 4)] * 4
        delta = [p - (1 if i == 0 else 0) for i, p in enumerate(probs)]
        assert sum(d * v for d, v in zip(delta, u)) == F(3, 4)

    def test_lp_method_flag(self, capsys):
        code, out, _ = run(capsys, "plan", "--scheme", "uniform",
                           "--m", "2", "--n", "3", "--method", "lp",
                           "--format", "json")
        assert json.loads(out)["cost"] == "23/144"


class TestVerifyCommand:
    def test_drift_scheme_all_hold(self, capsys):
        code, out, _ = run(capsys, "verify", "--scheme", "kras:a=3/4",
                           "--n-max", "8")
        assert code == 0
        for prop in ("metric", "monotone", "quadrangle"):
            assert f"{prop},holds" in out

    def test_counterexample_violations_exit_1(self, capsys):
        code, out, _ = run(capsys, "verify", "--scheme", "remark4",
                           "--n-max", "5", "--props", "monotone,quadrangle")
        assert code == 1
        assert "monotone,violated" in out
        assert "quadrangle,violated" in out
        # witness lines carry indices and both exact side values
        assert any(line.startswith("monotone,violated,3 5,") for line in out.splitlines())

    def test_metric_still_holds_for_counterexample(self, capsys):
        code, out, _ = run(capsys, "verify", "--scheme", "remark4",
                           "--n-max", "5", "--props", "metric")
        assert code == 0

    def test_unsupported_prop_exit_3(self, capsys):
        code, out, _ = run(capsys, "verify", "--scheme", "uniform",
                           "--n-max", "4", "--props", "halpern-recursion")
        assert code == 3
        assert "unsupported" in out

    def test_row_checks_as_props(self, capsys):
        code, out, _ = run(capsys, "verify", "--scheme", "remark4",
                           "--n-max", "5", "--props", "dominance,distinct")
        assert code == 0
        code2, out2, _ = run(capsys, "verify", "--scheme", "remark4",
                             "--n-max", "5", "--props", "drift")
        assert code2 == 1
        assert "drift,violated,2 1" in out2

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "verify", "--scheme", "remark4",
                           "--n-max", "5", "--props", "monotone",
                           "--format", "json")
        assert code == 1
        payload = json.loads(out)
        report = payload["reports"][0]
        assert report["verdict"] == "violated"
        assert report["witnesses"][0]["indices"] == [3, 4]

    def test_unknown_prop_usage_error(self, capsys):
        code, _, err = run(capsys, "verify", "--scheme", "uniform",
                           "--n-max", "3", "--props", "sorcery")
        assert code == 2 and err.startswith("ERROR 2:")


class TestPolyCommand:
    def test_kras_r1(self, capsys):
        code, out, _ = run(capsys, "poly", "--family", "kras",
                           "--target", "R", "--n", "1")
        payload = json.loads(out)
        assert payload == {"target": "R", "n": 1, "coeffs": ["1", "-1", "1"]}

    def test_pair_distance(self, capsys):
        code, out, _ = run(capsys, "poly", "--family", "pair", "--target", "d",
                           "--m", "7", "--n", "3", "--threads", "2")
        payload = json.loads(out)
        assert payload["coeffs"] == ["0", "4", "-6", "4", "-1"]
        assert payload["m"] == 7

    def test_csv_format(self, capsys):
        code, out, _ = run(capsys, "poly", "--family", "kras", "--target", "R",
                           "--n", "1", "--format", "csv")
        assert out.splitlines() == ["k,coeff", "0,1", "1,-1", "2,1"]

    def test_missing_m_usage_error(self, capsys):
        code, _, err = run(capsys, "poly", "--family", "pair",
                           "--target", "d", "--n", "3")
        assert code == 2 and err.startswith("ERROR 2:")

    def test_missing_hint_usage_error(self, capsys):
        code, _, err = run(capsys, "poly", "--family", "kras",
                           "--target", "d", "--m", "1", "--n", "2")
        assert code == 2


class TestTightnessCommand:
    def test_drift_scheme_exit_0(self, capsys):
        code, out, _ = run(capsys, "tightness", "--scheme", "uniform",
                           "--n-max", "4")
        assert code == 0
        lines = out.strip().splitlines()
        assert "distance-tightness,holds,,," in lines
        assert "residual-tightness,holds,,," in lines

    def test_witness_json_payload(self, capsys):
        code, out, _ = run(capsys, "tightness", "--scheme", "kras:a=1/2",
                           "--n-max", "3", "--format", "json", "--threads", "2")
        assert code == 0
        payload = json.loads(out)
        assert payload["distance"]["verdict"] == "holds"
        assert payload["residual"]["verdict"] == "holds"
        assert len(payload["pairs"]) == 10
        assert len(payload["y"]) == 5 and len(payload["x"]) == 4
        assert "0,1" in payload["duals"]

    def test_without_drift_exit_3(self, capsys):
        code, out, _ = run(capsys, "tightness", "--scheme", "remark4",
                           "--n-max", "3")
        assert code == 3
        assert "residual-tightness,unsupported" in out
        assert "distance-tightness,holds" in out


class TestAsymptoticsCommand:
    def test_float_series(self, capsys):
        code, out, _ = run(capsys, "asymptotics", "--scheme", "uniform",
                           "--n-max", "10")
        lines = out.strip().splitlines()
        assert lines[0] == "n,R,phi,varphi"
        assert len(lines) == 11

    def test_exact_too_large_exit_3(self, capsys):
        code, _, err = run(capsys, "asymptotics", "--scheme", "uniform",
                           "--n-max", "100", "--mode", "exact")
        assert code == 3 and err.startswith("ERROR 3:")

    def test_json(self, capsys):
        code, out, _ = run(capsys, "asymptotics", "--scheme", "dirac",
                           "--n-max", "3", "--format", "json")
        payload = json.loads(out)
        assert [v[0] for v in payload["values"]] == [1, 2, 3]


class TestUsageErrors:
    def test_unknown_scheme(self, capsys):
        code, _, err = run(capsys, "table", "--scheme", "bogus", "--n-max", "3")
        assert code == 2
        assert err.startswith("ERROR 2:")

    def test_unknown_command(self, capsys):
        assert main(["conjure"]) == 2

    def test_inside_out_without_drift_exit_3(self, capsys):
        code, _, err = run(capsys, "table", "--scheme", "remark4",
                           "--n-max", "5", "--method", "inside-out")
        assert code == 3
        assert err.startswith("ERROR 3:")

    def test_negative_threads(self, capsys):
        code, _, err = run(capsys, "table", "--scheme", "uniform",
                           "--n-max", "2", "--threads", "-1")
        assert code == 2
