import csv
import io
import json
import subprocess
import sys

import pytest

from qirbench.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_table_s1_golden(capsys):
    code, out, _ = run(capsys, "table-s1")
    assert code == 0
    table = rows(out)
    assert len(table) == 8
    assert all(r["status"] == "PASS" for r in table)
    this = table[0]
    assert this["name"] == "This work"
    assert float(this["r_qm_bits_per_min"]) == pytest.approx(3.56, rel=0.05)
    assert float(this["r_tau_bits_per_min"]) == pytest.approx(1.99, rel=0.05)


def test_table_s1_empty_registry(capsys, tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("memories: []\n")
    code, out, _ = run(capsys, "table-s1", "--registry", str(p))
    assert code == 0
    assert out.count("\n") == 1 and out.startswith("name,")


def test_table_s1_partial_failure(capsys, tmp_path):
    p = tmp_path / "r.yaml"
    p.write_text("""memories:
  - {name: dead, storage_efficiency: 0.0, lifetime_s: 1e-3, multiplex_n: 1,
     mode_count_m: 2, qubit_fidelity: 0.99}
  - {name: ok, storage_efficiency: 0.8, lifetime_s: 1e-3, multiplex_n: 1,
     mode_count_m: 2, qubit_fidelity: 0.99}
""")
    code, out, _ = run(capsys, "table-s1", "--registry", str(p))
    assert code == 0
    table = rows(out)
    assert table[0]["status"] == "ERROR" and table[0]["r_qm_bits_per_min"] == ""
    assert float(table[1]["r_qm_bits_per_min"]) > 0


def test_table_s1_bad_registry(capsys, tmp_path):
    p = tmp_path / "r.yaml"
    p.write_text("memories:\n  - name: x\n")
    code, _, err = run(capsys, "table-s1", "--registry", str(p))
    assert code == 1 and "r.yaml:2:" in err


def test_fig1b(capsys):
    code, out, _ = run(capsys, "fig1b", "--m-max", "8", "--eta-steps", "5")
    assert code == 0
    table = rows(out)
    assert len(table) == 3 * 8 * 5
    grid = {(float(r["p_n"]), int(r["M"]), float(r["eta_s"])): float(r["R_qm"]) for r in table}
    assert all(v == 0.0 for (p, m, e), v in grid.items() if m == 1)
    for (p, m, e), v in grid.items():
        if e < 1.0:
            assert grid[(p, m, round(e + 0.2, 10))] >= v
    assert grid[(0.01, 8, 1.0)] > grid[(0.5, 8, 1.0)]


def test_fig1b_single_point_composes(capsys):
    from qirbench.capacity import capacity_depolarizing
    from qirbench.repeater import RepeaterConfig, MemorySpec, t_tot
    code, out, _ = run(capsys, "fig1b", "--pn", "0.1", "--m-min", "5", "--m-max", "5",
                       "--eta-steps", "2", "--precision", "12")
    assert code == 0
    r = rows(out)[0]
    mem = MemorySpec("x", 0.5, 1.0, 1, 5, 0.99, pair_probability=1.0)
    expected = capacity_depolarizing(5, 0.1) * 60 / t_tot(RepeaterConfig(), mem)
    assert float(r["R_qm"]) == pytest.approx(expected, rel=1e-10)


def test_counts_fixture(capsys, fixtures):
    code, out, _ = run(capsys, "counts", str(fixtures / "counts_basic.csv"), "--json")
    assert code == 0
    report = {r["label"]: r for r in json.loads(out)}
    assert report["after/ell=+5"]["storage_efficiency"] is not None
    assert report["before/ell=+5"]["storage_efficiency"] is None


def test_counts_dead_detector(capsys, fixtures):
    code, _, err = run(capsys, "counts", str(fixtures / "counts_dead_detector.csv"))
    assert code == 2 and "infeasible" in err
    code, out, _ = run(capsys, "counts", str(fixtures / "counts_dead_detector.csv"), "--lenient")
    assert code == 0
    table = {r["label"]: r for r in rows(out)}
    assert table["dead"]["g2"] == "" and table["dead"]["error"]
    assert float(table["good"]["g2"]) == pytest.approx(0.653, abs=5e-4)


def test_counts_malformed_line_always_fails(capsys, tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("label,n1,n2,n3,n23,window_ns,accidental\nx,1,2\n")
    for extra in ((), ("--lenient",)):
        code, _, err = run(capsys, "counts", str(p), *extra)
        assert code == 1 and "c.csv:2" in err


def test_counts_qudit(capsys, fixtures):
    code, out, _ = run(capsys, "counts", str(fixtures / "counts_qudit_uniform.csv"), "--qudit")
    assert code == 0
    assert [float(r["fidelity_bound"]) for r in rows(out)] == [1.0, 1.0]


def test_crosstalk(capsys, fixtures):
    code, out, _ = run(capsys, "crosstalk", str(fixtures / "crosstalk_fig_s3.csv"))
    assert code == 0
    r = rows(out)[0]
    assert float(r["mean"]) == pytest.approx(0.004) and float(r["max"]) == pytest.approx(0.025)


def test_tomo(capsys, fixtures):
    args = ("tomo", str(fixtures / "tomo_synthetic_L.csv"), "--target", "L",
            "--resamples", "100", "--seed", "5")
    code, out, _ = run(capsys, *args)
    assert code == 0
    rec = json.loads(out)
    assert rec["fidelity"] >= 0.99 and rec["fidelity_sigma"] > 0
    assert run(capsys, *args)[1] == out


def test_eof_and_capacity(capsys):
    assert run(capsys, "eof", "--m", "2", "--pn", "0")[1] == "1\n"
    code, out, _ = run(capsys, "eof", "--m", "20", "--pn", "0.02", "--matrix", "--json",
                       "--precision", "12")
    closed = json.loads(run(capsys, "eof", "--m", "20", "--pn", "0.02", "--json",
                            "--precision", "12")[1])
    assert json.loads(out)["eof_lower_bound_ebits"] == pytest.approx(
        closed["eof_lower_bound_ebits"], abs=1e-10)
    assert float(run(capsys, "capacity", "--m", "11", "--pn", "0.0077")[1]) == pytest.approx(
        3.37601, abs=1e-5)
    code, out, _ = run(capsys, "capacity", "--m", "4", "--pn", "0.3", "--blahut-arimoto",
                       "--json")
    rec = json.loads(out)
    assert rec["ba_capacity_bits"] == pytest.approx(rec["capacity_bits"], abs=1e-6)


def test_capacity_errors(capsys):
    assert run(capsys, "capacity", "--m", "4")[0] == 1
    assert run(capsys, "capacity", "--m", "4", "--fidelity", "0.1")[0] == 1


def test_simulate(capsys, tmp_path):
    csv_path = tmp_path / "trials.csv"
    code, out, _ = run(capsys, "simulate", "--p0", "1", "--trials", "10",
                       "--per-trial-csv", str(csv_path))
    assert code == 0
    fields = dict(kv.split("=") for kv in out.split())
    assert float(fields["mean_slots"]) == 1.0 and float(fields["std_error_slots"]) == 0.0
    assert csv_path.read_text().splitlines()[1:] == [f"{i},1" for i in range(10)]
    assert run(capsys, "simulate", "--p0", "0", "--trials", "10")[0] == 2


def test_global_flags_and_output_file(capsys, tmp_path):
    out_path = tmp_path / "o.csv"
    code, out, _ = run(capsys, "--precision", "3", "--out", str(out_path), "table-s1")
    assert code == 0 and out == ""
    first = rows(out_path.read_text())[0]
    assert first["r_qm_bits_per_min"] == "3.56"
    code, out, _ = run(capsys, "table-s1", "--precision", "3")
    assert out == out_path.read_text()


def test_repeat_runs_are_byte_identical(capsys):
    a = run(capsys, "simulate", "--n", "1", "--p0", "0.05", "--trials", "2000", "--seed", "3")
    b = run(capsys, "simulate", "--n", "1", "--p0", "0.05", "--trials", "2000", "--seed", "3")
    assert a == b


def test_usage_errors(capsys):
    assert run(capsys, "eof", "--m", "x", "--pn", "0")[0] == 1
    assert run(capsys, "counts", "/nonexistent/file.csv")[0] == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qirbench.cli", "capacity", "--m", "2",
                           "--pn", "0"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "1\n"
