"""Command-line interface: ``qirbench <command> [options]``.

Exit codes: 0 success, 1 validation or parse failure, 2 the computation is
infeasible for the given inputs.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import capacity as cap_mod
from . import counts as counts_mod
from . import entanglement, mcsim, tomography
from .core import ValidationError
from .registry import bundled_registry_path, load_registry
from .repeater import (InfeasibleError, MemorySpec, RepeaterConfig, evaluate_memory,
                       sweep_fig1b)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2
INFEASIBLE_ERRORS = (InfeasibleError, counts_mod.EstimatorError,
                     counts_mod.InconsistentDataError, tomography.ReconstructionError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


class Output:
    """Formats numbers and routes text to stdout or ``--out``."""

    def __init__(self, args):
        self.precision = args.precision
        self.json = args.json
        self.path = args.out

    def num(self, x):
        if x is None:
            return ""
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            return str(int(x))
        return f"{float(x):.{self.precision}g}"

    def jnum(self, x):
        """Round to the output precision while staying a JSON number."""
        if x is None or isinstance(x, (str, bool)):
            return x
        if isinstance(x, (int, np.integer)):
            return int(x)
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{self.precision}g}")

    def csv_text(self, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else self.num(c) for c in row])
        return buf.getvalue()

    def json_text(self, obj):
        return json.dumps(self._round(obj), indent=2) + "\n"

    def _round(self, obj):
        if isinstance(obj, dict):
            return {k: self._round(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [self._round(v) for v in obj]
        return self.jnum(obj)

    def emit(self, text):
        if self.path:
            with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


# -- commands -------------------------------------------------------------------

def cmd_table_s1(args, out):
    registry = load_registry(args.registry or bundled_registry_path())
    cfg = registry.defaults
    header = ["name", "capacity_bits", "t_tot_s", "t_tau_s", "r_qm_bits_per_min",
              "r_tau_bits_per_min", "published_r_qm", "published_r_tau", "tolerance", "status"]
    rows, records = [], []
    for entry in registry.entries:
        mem = entry.memory
        try:
            res = evaluate_memory(cfg, mem)
        except (*INFEASIBLE_ERRORS, ValidationError) as exc:
            rows.append([mem.name, None, None, None, None, None, entry.published_r_qm,
                         entry.published_r_tau, entry.tolerance, "ERROR"])
            records.append({"name": mem.name, "status": "ERROR", "error": str(exc)})
            continue
        status = ""
        if entry.published_r_qm is not None or entry.published_r_tau is not None:
            ok = all(abs(got / ref - 1.0) <= entry.tolerance
                     for got, ref in ((res.r_qm_bits_per_min, entry.published_r_qm),
                                      (res.r_tau_bits_per_min, entry.published_r_tau))
                     if ref is not None)
            status = "PASS" if ok else "FAIL"
        rows.append([mem.name, res.capacity_bits, res.t_tot_s, res.t_tau_s,
                     res.r_qm_bits_per_min, res.r_tau_bits_per_min, entry.published_r_qm,
                     entry.published_r_tau, entry.tolerance, status])
        records.append({"name": mem.name, "capacity_bits": res.capacity_bits,
                        "t_tot_s": res.t_tot_s, "t_tau_s": res.t_tau_s,
                        "r_qm_bits_per_min": res.r_qm_bits_per_min,
                        "r_tau_bits_per_min": res.r_tau_bits_per_min,
                        "published_r_qm": entry.published_r_qm,
                        "published_r_tau": entry.published_r_tau,
                        "tolerance": entry.tolerance, "status": status})
    out.emit(out.json_text(records) if out.json else out.csv_text(header, rows))
    return EXIT_OK


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def cmd_fig1b(args, out):
    if args.m_max < 1 or args.eta_steps < 1:
        raise ValidationError("--m-max and --eta-steps must be >= 1")
    if any(not 0.0 <= p <= 1.0 for p in args.pn):
        raise ValidationError("--pn values must lie in [0, 1]")
    m_range = range(args.m_min, args.m_max + 1)
    eta_range = [k / args.eta_steps for k in range(1, args.eta_steps + 1)]
    cfg = RepeaterConfig(attenuation_length_km=args.l_att,
                         segment_length_km=args.segment_length,
                         nesting_n=args.nesting)
    rows = sweep_fig1b(m_range, eta_range, args.pn, cfg)
    header = ["p_n", "M", "eta_s", "R_qm"]
    if out.json:
        out.emit(out.json_text([dict(zip(header, r)) for r in rows]))
    else:
        out.emit(out.csv_text(header, rows))
    return EXIT_OK


def _counts_report(records, lenient):
    per_record, failures = [], []
    by_label = {r.label: r for r in records}
    for rec in records:
        row = {"label": rec.label}
        try:
            row["g2"] = counts_mod.g2_zero(rec)
            row["g2_sigma"] = counts_mod.g2_zero_sigma(rec)
        except counts_mod.EstimatorError as exc:
            row["g2"] = row["g2_sigma"] = None
            row["error"] = str(exc)
        try:
            row["heralding"] = counts_mod.heralding_rate(rec)
            row["heralding_sigma"] = counts_mod.heralding_rate_sigma(rec)
            row["heralding_subtracted"] = counts_mod.heralding_rate(rec, True)
        except counts_mod.EstimatorError as exc:
            row["heralding"] = row["heralding_sigma"] = row["heralding_subtracted"] = None
            row["error"] = str(exc)
        row["storage_efficiency"] = row["storage_efficiency_sigma"] = None
        stage, kind, mode = counts_mod.parse_label(rec.label)
        if stage == "after":
            rest = rec.label.split("/", 1)[1]
            before = by_label.get(f"before/{rest}")
            if before is not None:
                try:
                    ha, hb = counts_mod.heralding_rate(rec), counts_mod.heralding_rate(before)
                    row["storage_efficiency"] = counts_mod.storage_efficiency(ha, hb)
                    row["storage_efficiency_sigma"] = counts_mod.storage_efficiency_sigma(
                        ha, counts_mod.heralding_rate_sigma(rec),
                        hb, counts_mod.heralding_rate_sigma(before))
                except counts_mod.EstimatorError as exc:
                    row["error"] = str(exc)
        if "error" in row:
            failures.append(row["error"])
        per_record.append(row)
    if failures and not lenient:
        raise counts_mod.EstimatorError(failures[0])
    return per_record


def cmd_counts(args, out):
    records, _ = counts_mod.read_count_file(args.counts_path)
    if args.qudit:
        stages = sorted({counts_mod.parse_label(r.label)[0] for r in records
                         if counts_mod.parse_label(r.label)[1] == "qf"},
                        key=lambda s: (s is not None, s != "before", s or ""))
        if not stages:
            raise ValidationError(f"{args.counts_path}: --qudit needs qf records")
        summaries = []
        for stage in stages:
            ms = counts_mod.build_mode_set(records, stage)
            summary = counts_mod.qudit_pipeline(ms)
            summary["stage"] = stage or ""
            summaries.append(summary)
        if out.json:
            out.emit(out.json_text(summaries))
        else:
            header = ["stage", "modes", "sum_q_over_h", "g2", "q_f", "mean_heralding",
                      "p0", "p1", "p2", "fidelity_bound"]
            out.emit(out.csv_text(header, [
                [s["stage"], len(s["modes"])] + [s[k] for k in header[2:]] for s in summaries]))
        return EXIT_OK
    report = _counts_report(records, args.lenient)
    if out.json:
        out.emit(out.json_text(report))
    else:
        header = ["label", "g2", "g2_sigma", "heralding", "heralding_sigma",
                  "heralding_subtracted", "storage_efficiency", "storage_efficiency_sigma",
                  "error"]
        out.emit(out.csv_text(header, [[r.get(k) for k in header] for r in report]))
    return EXIT_OK


def cmd_crosstalk(args, out):
    with open(args.matrix_path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) < 2:
        raise ValidationError(f"{args.matrix_path}: need a header row and at least one data row")
    labels = [c.strip() for c in rows[0][1:]]
    try:
        matrix = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"{args.matrix_path}: {exc}") from None
    if matrix.shape != (len(labels), len(labels)):
        raise ValidationError(f"{args.matrix_path}: matrix must be {len(labels)}x{len(labels)}")
    ce = counts_mod.crosstalk_matrix(matrix)
    summary = counts_mod.crosstalk_summary(ce, labels)
    if out.json:
        summary["matrix"] = ce.tolist()
        summary["labels"] = labels
        out.emit(out.json_text(summary))
    else:
        out.emit(out.csv_text(["mean", "max", "max_in", "max_out"],
                              [[summary["mean"], summary["max"],
                                str(summary["max_in"]), str(summary["max_out"])]]))
    return EXIT_OK


def cmd_tomo(args, out):
    measurements = tomography.read_tomo_file(args.tomo_path)
    result = tomography.mle_reconstruct(measurements, seed=args.seed)
    target = tomography.target_state(args.target)
    fidelity = tomography.uhlmann_fidelity(result.rho, target)
    sigma = tomography.poisson_bootstrap(measurements, target, args.resamples, args.seed,
                                         workers=args.workers)
    out.emit(out.json_text({
        "rho_real": result.rho.real.tolist(),
        "rho_imag": result.rho.imag.tolist(),
        "log_likelihood": result.log_likelihood,
        "converged": result.converged,
        "target": args.target,
        "fidelity": fidelity,
        "fidelity_sigma": sigma,
        "resamples": args.resamples,
        "seed": args.seed,
    }))
    return EXIT_OK


def cmd_eof(args, out):
    max_pairs = args.m * (args.m - 1) // 2
    pairs = args.pairs if args.pairs is not None else max_pairs
    bound = entanglement.eof_closed_form_depolarizing(args.m, args.pn, pairs)
    if args.matrix:
        rho = entanglement.build_noisy_pair(args.m, args.pn)
        subset = entanglement.all_pairs(args.m)[:pairs]
        bound = entanglement.eof_lower_bound(rho, args.m, subset)
    if out.json:
        out.emit(out.json_text({"m": args.m, "p_n": args.pn, "pair_count": pairs,
                                "eof_lower_bound_ebits": bound}))
    else:
        out.emit(out.num(bound) + "\n")
    return EXIT_OK


def cmd_capacity(args, out):
    if (args.pn is None) == (args.fidelity is None):
        raise ValidationError("give exactly one of --pn or --fidelity")
    p_n = args.pn if args.pn is not None else cap_mod.fidelity_to_pn(
        args.fidelity, args.fidelity_dim)
    closed = cap_mod.capacity_depolarizing(args.m, p_n)
    record = {"m": args.m, "p_n": p_n, "capacity_bits": closed}
    if args.blahut_arimoto:
        ba = cap_mod.capacity_blahut_arimoto(cap_mod.depolarizing_channel(args.m, p_n))
        record.update(ba_capacity_bits=ba.capacity_bits, ba_iterations=ba.iterations,
                      ba_converged=ba.converged)
    if out.json:
        out.emit(out.json_text(record))
    else:
        out.emit(out.num(closed) + "\n")
    return EXIT_OK


def cmd_simulate(args, out):
    cfg = RepeaterConfig(nesting_n=args.n, segment_length_km=args.segment_length,
                         total_length_km=args.segment_length * 2 ** args.n,
                         attenuation_length_km=args.l_att,
                         detection_efficiency=args.eta_d, swap_probability=args.ps)
    mem = MemorySpec(name="cli", storage_efficiency=args.eta_s, lifetime_s=math.inf,
                     multiplex_n=args.N, mode_count_m=2, qubit_fidelity=1.0,
                     pair_probability=args.p)
    sc = mcsim.SimConfig(cfg, mem, trials=args.trials, seed=args.seed,
                         cutoff_slots=args.cutoff, p0_override=args.p0)
    res = mcsim.simulate(sc, workers=args.workers, keep_slots=bool(args.per_trial_csv))
    if args.per_trial_csv:
        with open(args.per_trial_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("trial,slots\n")
            fh.writelines(f"{i},{s}\n" for i, s in enumerate(res.slots.tolist()))
    record = {"backend": mcsim.BACKEND, "trials": res.trials, "seed": args.seed,
              "p0": mcsim.elementary_success(sc), "mean_slots": res.mean_slots,
              "std_error_slots": res.std_error_slots, "mean_time_s": res.mean_time_s,
              "std_error_s": res.std_error_s,
              "mean_attempts_per_segment": res.mean_attempts_per_segment}
    if out.json:
        out.emit(out.json_text(record))
    else:
        out.emit(" ".join(f"{k}={v if isinstance(v, str) else out.num(v)}"
                          for k, v in record.items()) + "\n")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

def _common(suppress):
    p = argparse.ArgumentParser(add_help=False)
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--out", metavar="PATH", default=d, help="write output to PATH")
    p.add_argument("--json", action="store_true", default=d or False,
                   help="machine-readable JSON output")
    p.add_argument("--precision", type=int, default=d or 6, metavar="N",
                   help="significant digits for numbers (default 6)")
    p.add_argument("--seed", type=int, default=d or 0, metavar="N",
                   help="random seed for stochastic commands (default 0)")
    p.add_argument("--lenient", action="store_true", default=d or False,
                   help="report per-row estimator failures instead of aborting")
    return p


def build_parser():
    parser = _Parser(prog="qirbench", parents=[_common(False)],
                     description="Quantum interconnect rate benchmarking toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common(True)]

    p = sub.add_parser("table-s1", parents=common, help="evaluate a memory registry")
    p.add_argument("--registry", metavar="PATH", help="registry YAML (default: bundled table)")
    p.set_defaults(func=cmd_table_s1)

    p = sub.add_parser("fig1b", parents=common, help="rate grid over modes and efficiency")
    p.add_argument("--pn", type=_float_list, default=[0.01, 0.1, 0.5],
                   help="comma-separated depolarizing strengths (default 0.01,0.1,0.5)")
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--m-max", type=int, default=32)
    p.add_argument("--eta-steps", type=int, default=20,
                   help="efficiency grid k/steps for k = 1..steps (default 20)")
    p.add_argument("--l-att", type=float, default=22.0, help="attenuation length in km")
    p.add_argument("--segment-length", type=float, default=250.0, help="L0 in km")
    p.add_argument("--nesting", type=int, default=2)
    p.set_defaults(func=cmd_fig1b)

    p = sub.add_parser("counts", parents=common, help="photon-count estimators")
    p.add_argument("counts_path")
    p.add_argument("--qudit", action="store_true", help="run the qudit fidelity-bound pipeline")
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("crosstalk", parents=common, help="crosstalk summary of a count matrix")
    p.add_argument("matrix_path")
    p.set_defaults(func=cmd_crosstalk)

    p = sub.add_parser("tomo", parents=common, help="maximum-likelihood qubit tomography")
    p.add_argument("tomo_path")
    p.add_argument("--target", default="L1", choices=sorted(tomography.BASIS_STATES))
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("eof", parents=common, help="entanglement-of-formation lower bound")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--pn", type=float, required=True)
    p.add_argument("--pairs", type=int, help="number of mode pairs (default: all)")
    p.add_argument("--matrix", action="store_true",
                   help="evaluate from the explicit density matrix")
    p.set_defaults(func=cmd_eof)

    p = sub.add_parser("capacity", parents=common, help="depolarizing memory capacity")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--pn", type=float)
    p.add_argument("--fidelity", type=float)
    p.add_argument("--fidelity-dim", type=int, default=2)
    p.add_argument("--blahut-arimoto", action="store_true",
                   help="also run the Blahut-Arimoto maximizer")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("simulate", parents=common, help="Monte-Carlo repeater simulation")
    p.add_argument("--n", type=int, default=0, help="nesting level")
    p.add_argument("--p0", type=float, help="override elementary success per slot")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--cutoff", type=int, help="memory cutoff in slots (default: none)")
    p.add_argument("--eta-s", type=float, default=1.0)
    p.add_argument("--eta-d", type=float, default=1.0)
    p.add_argument("--ps", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.7, help="pair probability")
    p.add_argument("--N", type=int, default=1, help="multiplexed modes")
    p.add_argument("--segment-length", type=float, default=250.0)
    p.add_argument("--l-att", type=float, default=22.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-trial-csv", metavar="PATH")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.precision < 1:
            parser.error("--precision must be >= 1")
    except SystemExit as exc:
        # usage errors and --help end here; report their code instead of exiting
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    out = Output(args)
    try:
        return args.func(args, out)
    except INFEASIBLE_ERRORS as exc:
        print(f"qirbench: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, ValueError, OSError) as exc:
        print(f"qirbench: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
