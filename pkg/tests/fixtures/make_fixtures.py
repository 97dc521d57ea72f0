"""Regenerate the synthetic fixtures and their exact expected values.

Expected values are computed with ``fractions.Fraction`` so they do not share
any floating-point code path with the package.

    python tests/fixtures/make_fixtures.py
"""

import csv
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
HEADER = ["label", "n1", "n2", "n3", "n23", "window_ns", "accidental"]


def write_counts(name, rows):
    with open(HERE / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)


def basic_counts():
    rows = [
        ["before/ell=+5", 100000, 1750, 1741, 20, 800, 35],
        ["after/ell=+5", 100000, 1440, 1430, 14, 800, 30],
        ["before/ell=-3", 98000, 1702, 1688, 17, 800, 33],
        ["after/ell=-3", 98000, 1401, 1399, 12, 800, 31],
        ["coherent", 50000, 2500, 2500, 125, 800, 0],
    ]
    write_counts("counts_basic.csv", rows)
    by = {r[0]: r for r in rows}
    expected = {}
    for label, n1, n2, n3, n23, _, acc in rows:
        expected[label] = {
            "g2": str(Fraction(n1 * n23, n2 * n3)),
            "heralding": str(Fraction(n2 + n3, n1)),
            "heralding_subtracted": str(Fraction(n2 + n3 - acc, n1)),
        }
    for mode in ("ell=+5", "ell=-3"):
        b, a = by[f"before/{mode}"], by[f"after/{mode}"]
        eta = Fraction(a[2] + a[3], a[1]) / Fraction(b[2] + b[3], b[1])
        expected[f"after/{mode}"]["storage_efficiency"] = str(eta)
    (HERE / "counts_basic.expected.json").write_text(json.dumps(expected, indent=2) + "\n")


def uniform_qudit():
    rows = []
    for stage in ("before", "after"):
        n_h = 3000 if stage == "before" else 2400
        for ell in range(-5, 6):
            rows.append([f"{stage}/h:{ell:+d}", 100000, n_h // 2, n_h // 2, 0, 800, 0])
            rows.append([f"{stage}/q:{ell:+d}", 1100000, n_h // 2, n_h // 2, 0, 800, 0])
        rows.append([f"{stage}/qf", 100000, n_h // 2, n_h // 2, 0, 800, 0])
    write_counts("counts_qudit_uniform.csv", rows)


def empty_detector():
    rows = [
        ["good", 100000, 1750, 1750, 20, 800, 0],
        ["dead", 100000, 0, 0, 0, 800, 0],
    ]
    write_counts("counts_dead_detector.csv", rows)


def crosstalk_fig_s3():
    labels = [f"{ell:+d}" for ell in range(-5, 6)]
    m = len(labels)
    diag = 100000
    n = np.zeros((m, m), dtype=int)
    np.fill_diagonal(n, diag)
    # one dominant cell at (in=+5, out=+4), the rest shared so the mean is exactly 0.4%
    peak = (labels.index("+5"), labels.index("+4"))
    n[peak] = 2500
    rest = [(i, j) for i in range(m) for j in range(m) if i != j and (i, j) != peak]
    remaining = int(Fraction(4, 1000) * m * (m - 1) * diag) - 2500
    base, extra = divmod(remaining, len(rest))
    for k, (i, j) in enumerate(rest):
        n[i, j] = base + (1 if k < extra else 0)
    with open(HERE / "crosstalk_fig_s3.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["in\\out"] + labels)
        for lab, row in zip(labels, n):
            w.writerow([lab] + row.tolist())


def tomo():
    with open(HERE / "tomo_pure_l1.csv", "w", newline="") as fh:
        fh.write("basis_label,counts,exposure\nL1,1000,1\nL2,0,1\nD,500,1\nL,500,1\n")
    rng = np.random.default_rng(20240601)
    probs = {"L1": 0.5, "L2": 0.5, "D": 0.5, "L": 1.0}
    with open(HERE / "tomo_synthetic_L.csv", "w", newline="") as fh:
        fh.write("basis_label,counts,exposure\n")
        for label, p in probs.items():
            fh.write(f"{label},{rng.poisson(10000 * p)},1\n")


if __name__ == "__main__":
    basic_counts()
    uniform_qudit()
    empty_detector()
    crosstalk_fig_s3()
    tomo()
