import csv
import io
import json
import subprocess
import sys

import pytest

from spinhist.cli import fmt, main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestFigures:
    def test_figure1_row_500(self, capsys):
        code, out, _ = run(["figure1", "--m", "1000", "--t", "1000", "--chi", "1"], capsys)
        assert code == 0
        rows = parse_csv(out)
        assert out.splitlines()[0] == "M1,p_yy,p_ny,p_yn,p_nn"
        row = next(r for r in rows if r["M1"] == "500")
        assert all(0.20 <= float(row[k]) <= 0.30 for k in ("p_yy", "p_ny", "p_yn", "p_nn"))

    def test_figure2_peak(self, capsys):
        code, out, _ = run(["figure2"], capsys)
        rows = parse_csv(out)
        best = max(rows, key=lambda r: float(r["ratio"]))
        assert code == 0 and int(best["M1"]) < 100

    def test_figure3_columns(self, capsys):
        code, out, _ = run(["figure3", "--m", "40", "--t", "10"], capsys)
        assert code == 0 and out.startswith("M1,gamma,fig3_quantity\n")
        assert len(out.splitlines()) == 40

    def test_sweep_header_and_precision(self, capsys):
        _, out, _ = run(["sweep", "--m", "20", "--t", "3"], capsys)
        lines = out.split("\n")
        assert lines[0] == "M1,p_yy,p_ny,p_yn,p_nn,re_d,im_d,ratio,fig3_quantity"
        assert lines[-1] == "" and "\r" not in out
        value = lines[1].split(",")[1]
        assert value == fmt(float(value))

    def test_json_format(self, capsys):
        _, out, _ = run(["figure1", "--m", "10", "--t", "2", "--format", "json"], capsys)
        data = json.loads(out)
        assert data["columns"][0] == "M1" and len(data["rows"]) == 9

    def test_fixed_pair_restricts_region(self, capsys):
        _, out, _ = run(["figure1", "--m", "30", "--k1", "5", "--k2", "20"], capsys)
        m1 = [int(r["M1"]) for r in parse_csv(out)]
        assert m1 == list(range(5, 20))

    def test_degenerate_placement_warns(self, capsys):
        args = ["figure3", "--m1", "500", "--k1", "250", "--k2", "750"]
        code, _, err = run(args, capsys)
        assert code == 0 and "warning" in err
        code, _, _ = run(args + ["--strict"], capsys)
        assert code == 1

    def test_deterministic(self, capsys):
        _, a, _ = run(["sweep", "--m", "200", "--t", "50"], capsys)
        _, b, _ = run(["sweep", "--m", "200", "--t", "50"], capsys)
        assert a == b


class TestCollectiveAndEpsilon:
    def test_exact_table(self, capsys):
        code, out, _ = run(["collective", "--m", "16", "--m1", "5", "--t", "2", "--n", "3"], capsys)
        rows = parse_csv(out)
        assert code == 0 and len(rows) == 64
        diag = sum(float(r["re"]) for r in rows if r["n1"] == r["n1p"])
        assert diag == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_json(self, capsys):
        code, out, _ = run(["collective", "--n", "200", "--method", "gaussian", "--sigma", "2", "--format", "json"], capsys)
        data = json.loads(out)
        assert code == 0 and {"gaussian", "smeared"} <= set(data)

    def test_gaussian_csv(self, capsys):
        code, out, _ = run(["collective", "--n", "200", "--method", "gaussian"], capsys)
        assert code == 0 and out.startswith("name,value\n") and "gaussian.alpha" in out

    def test_epsilon_grid(self, capsys):
        code, out, _ = run(["epsilon", "--n", "10", "20", "--f", "0.01", "0.02"], capsys)
        rows = parse_csv(out)
        assert code == 0 and len(rows) == 4
        assert float(rows[2]["log_epsilon"]) == pytest.approx(2 * float(rows[0]["log_epsilon"]), rel=1e-12)


class TestUsage:
    @pytest.mark.parametrize(
        "args",
        [
            ["figure1", "--k1", "3"],
            ["figure1", "--m", "1"],
            ["figure1", "--m", "10", "--m1", "10"],
            ["collective", "--n", "3", "4"],
            ["collective", "--n", "600"],
            ["collective", "--n", "5", "--sigma", "1"],
            ["collective", "--m", "10", "--m1", "4", "--k1", "6", "--k2", "8", "--n", "2"],
            ["epsilon", "--f", "0"],
            ["verify", "--steps", "0"],
        ],
    )
    def test_usage_errors(self, args, capsys):
        code, _, err = run(args, capsys)
        assert code == 2 and "error" in err

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["plot"])
        assert exc.value.code == 2


class TestOutput:
    def test_output_file(self, tmp_path, capsys):
        target = tmp_path / "f1.csv"
        code, out, _ = run(["figure1", "--m", "12", "-o", str(target)], capsys)
        assert code == 0 and out == ""
        assert target.read_text().startswith("M1,")

    def test_environment_directory(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPINHIST_OUTPUT_DIR", str(tmp_path))
        run(["figure2", "--m", "12", "--format", "json"], capsys)
        assert json.loads((tmp_path / "figure2.json").read_text())["columns"] == ["M1", "ratio"]

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "spinhist", "figure2", "--m", "8", "--t", "1"], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("M1,ratio\n")


def test_verify_command_reports_every_suite(capsys):
    code, out, _ = run(["verify", "--oracle-cap", "64"], capsys)
    lines = out.splitlines()
    assert sum(line.startswith("[") for line in lines) == 13
    assert lines[-1].endswith("checks passed")
    failed = [line for line in lines if line.startswith("[FAIL]")]
    assert code == (1 if failed else 0)
