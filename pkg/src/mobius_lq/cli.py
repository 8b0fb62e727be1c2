"""Command-line front end.

Exit status is 0 on success, 1 on errors and 2 when a verdict is
INCONCLUSIVE.  Decimal output carries 12 significant digits; exact
rationals are written as ``p/q``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import analyzer, diophantine, measure, pressure, words
from .errors import MobiusLqError
from .ifs import attractor_cover, certify, load_ifs, shared_fixed_points, solomyak

MAX_M = 28
MIN_Q = 1.05


def fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return f"{x + 0.0:.12g}"  # + 0.0 turns -0.0 into 0.0
    return str(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return float(f"{x + 0.0:.12g}")
    return obj


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_csv(args, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    _emit(args, buf.getvalue())


def write_json(args, obj):
    _emit(args, json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def ints(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _check_q(qs):
    for q in qs:
        if q < MIN_Q:
            raise SystemExit(f"error: q must be at least {MIN_Q} (got {q})")
    return qs


def _check_m(ms):
    for m in ms:
        if not 0 <= m <= MAX_M:
            raise SystemExit(f"error: m must lie in [0, {MAX_M}] (got {m})")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise SystemExit("error: m values must be increasing")
    return ms


# --------------------------------------------------------------------------
# subcommands

def cmd_spectrum(args):
    ifs = load_ifs(args.ifs)
    q = _check_q([args.q])[0]
    rep = measure.spectrum_estimate(ifs, q, _check_m(ints(args.m)), args.oversample)
    if args.format == "json":
        write_json(args, {"q": q, "estimate": rep.estimate, "uncertainty": rep.uncertainty,
                          "method": rep.method,
                          "samples": [{"m": m, "sample": v, "fit": f}
                                      for m, v, f in rep.csv_rows()],
                          "paper_anchor": "L^q spectrum"})
    else:
        write_csv(args, ["m", "sample", "fit"], rep.csv_rows())
    print(f"tau_hat({fmt(q)}) = {fmt(rep.estimate)} +- {fmt(rep.uncertainty)}", file=sys.stderr)
    return 0


def cmd_histogram(args):
    ifs = load_ifs(args.ifs)
    m = _check_m([args.m])[0]
    h = measure.discretize(ifs, m, args.oversample, args.offset)
    write_csv(args, ["bin_index", "angle_lo", "mass"], h.csv_rows())
    return 0


def cmd_pressure(args):
    ifs = load_ifs(args.ifs)
    q = _check_q([args.q])[0]
    curve = pressure.pressure_curve(ifs, q, floats(args.s), args.n_max,
                                    threads=args.threads, cap=args.budget)
    if args.format == "json":
        write_json(args, {"q": q, "rho": curve.rho,
                          "rows": [dict(zip(("q", "s", "n", "value", "upper_bound",
                                             "lower_bound"), r)) for r in curve.csv_rows()],
                          "paper_anchor": "pressure function"})
    else:
        write_csv(args, ["q", "s", "n", "value", "upper_bound", "lower_bound"],
                  curve.csv_rows())
    return 0


def cmd_tau_tilde(args):
    ifs = load_ifs(args.ifs)
    qs = _check_q(floats(args.q))
    ests = [pressure.tau_tilde(ifs, q, args.n, args.tol, via_stopping_m=args.via_stopping,
                               threads=args.threads, cap=args.budget) for q in qs]
    if args.format == "json":
        write_json(args, [{"q": e.q, "root": e.root, "bracket": list(e.bracket),
                           "n_used": e.n_used, "via_stopping": e.via_stopping,
                           "bound_lo": e.bound_lo, "bound_hi": e.bound_hi,
                           "paper_anchor": "zero of the pressure function"} for e in ests])
    else:
        write_csv(args, ["q", "root", "bracket_lo", "bracket_hi", "via_stopping"],
                  [e.csv_row() for e in ests])
    return 0


def _q_grid(args):
    if args.q_grid:
        return _check_q(floats(args.q_grid))
    return list(analyzer.DEFAULT_Q_GRID)


def _write_verdict(args, v):
    if args.format == "csv":
        write_csv(args, ["q", "tau_hat", "tau_tilde_hat", "envelope", "gap"],
                  [(r["q"], r["tau_hat"], r["tau_tilde_hat"], r["envelope"], r["gap"])
                   for r in v.table()])
    else:
        write_json(args, v.to_dict())


def cmd_dichotomy(args):
    ifs = load_ifs(args.ifs)
    v = analyzer.dichotomy_probe(ifs, _q_grid(args), _check_m(ints(args.m)),
                                 depth=args.depth, gap_threshold=args.gap_threshold,
                                 oversample=args.oversample, threads=args.threads)
    _write_verdict(args, v)
    print(f"case: {v.case}", file=sys.stderr)
    return 2 if v.case == analyzer.INCONCLUSIVE else 0


def cmd_freeness(args):
    ifs = load_ifs(args.ifs)
    rep = diophantine.check_freeness_exhaustive(ifs.maps, args.depth, cap=args.budget)
    write_json(args, {**rep.to_dict(), "paper_anchor": "freeness of the semigroup"})
    return 0


def _certificate(n=None, t=None):
    try:
        rep = diophantine.mod4_certificate(n, t=t)
        return {**rep.to_dict(), "passed": True}, 0
    except MobiusLqError as exc:
        return {"verdict": "CERTIFICATE_FAILED", "passed": False,
                "failed_step": getattr(exc, "step", None),
                "matrix": jsonable(getattr(exc, "matrix", None)), "error": str(exc)}, 1


def cmd_mod4(args):
    t = None if args.t is None else Fraction(args.t)
    report, status = _certificate(args.n, t) if t is None else _certificate(None, t)
    write_json(args, {**report, "paper_anchor": "freeness theorem for t = 9n"})
    return status


def cmd_separation(args):
    ifs = load_ifs(args.ifs)
    prof = diophantine.separation_profile(ifs, args.n_max, cap=args.budget)
    if args.format == "json":
        write_json(args, {"rows": [{"n": n, "min_distance": d, "log2_min": l}
                                   for n, d, l in prof.csv_rows()],
                          "rate": prof.rate, "paper_anchor": "strongly Diophantine"})
    else:
        write_csv(args, ["n", "min_distance", "log2_min"], prof.csv_rows())
    return 0


def cmd_attractor(args):
    ifs = load_ifs(args.ifs)
    cert = certify(ifs)
    cover = attractor_cover(ifs, cert, args.depth)
    fps = shared_fixed_points(ifs)
    write_json(args, {
        "U0": cert.U0.as_real_intervals(), "U": cert.U.as_real_intervals(),
        "margin": cert.margin, "C1": cert.contraction_constant_C1,
        "cover_depth": args.depth, "cover": cover.as_real_intervals(),
        "cover_length": cover.total_length,
        "shared_fixed_points": [{"pair": list(s.pair), "real": fmt(s.real),
                                 "angle": s.angle, "in_attractor": s.in_attractor}
                                for s in fps.shared],
        "paper_anchor": "invariant domain and attractor",
    })
    return 0


def cmd_hausdorff(args):
    ifs = load_ifs(args.ifs)
    rep = analyzer.hausdorff_report(ifs, args.depth, args.samples, args.mc_depth, args.seed)
    write_json(args, {"entropy": rep.entropy, "chi_enumeration": rep.chi_enumeration,
                      "chi_monte_carlo": rep.chi_monte_carlo,
                      "enumeration_depth": rep.enumeration_depth,
                      "prediction": rep.prediction, "seed": args.seed,
                      "paper_anchor": "Hausdorff dimension of the Furstenberg measure"})
    return 0


def cmd_stopping(args):
    ifs = load_ifs(args.ifs)
    ss = words.stopping_set(ifs, _check_m([args.m])[0], args.budget)
    write_csv(args, ["word", "weight", "norm_sq"], ss.csv_rows())
    print(f"|Omega_{args.m}| = {len(ss)}, C = {fmt(ss.C)}", file=sys.stderr)
    return 0


def cmd_solomyak(args):
    t, p0 = Fraction(args.t), Fraction(args.p0)
    ifs = solomyak(t, p0)
    m_max = args.m_max
    m_list = _check_m([m for m in range(12, m_max + 1, 2)] or [m_max])
    grid = [q for q in analyzer.DEFAULT_Q_GRID if q <= args.q_max]
    if args.q_max not in grid:
        grid.append(float(args.q_max))
    verdict = analyzer.dichotomy_probe(ifs, grid, m_list, depth=args.depth,
                                       threads=args.threads)
    mass_m = [m for m in (12, 16, 20) if m <= m_max] or [m_max]
    cx = analyzer.counterexample_bounds(ifs, mass_m, [q for q in grid if q >= 8] or grid[-1:],
                                        spectrum_m=m_list)
    if t.denominator == 1 and t.numerator % 9 == 0:
        cert, status = _certificate(t.numerator // 9)
    else:
        rep = diophantine.check_freeness_exhaustive(ifs.maps, 8, cap=args.budget)
        cert, status = {**rep.to_dict(), "passed": rep.is_free}, 0
    write_json(args, {"t": t, "p0": p0, "dichotomy": verdict.to_dict(),
                      "counterexample": cx.to_dict(), "freeness": cert,
                      "paper_anchor": "counterexample to the natural extension"})
    print(f"case: {verdict.case}", file=sys.stderr)
    if status:
        return status
    return 2 if verdict.case == analyzer.INCONCLUSIVE else 0


# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 so that 2 stays reserved for INCONCLUSIVE verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    env_budget = int(os.environ.get("MOBIUS_LQ_BUDGET", words.DEFAULT_CAP))
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--budget", type=int, default=env_budget,
                        help="enumeration cap (default from MOBIUS_LQ_BUDGET)")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="mobius-lq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, fmt_default, **kw):
        sp = sub.add_parser(name, parents=[common], **kw)
        sp.set_defaults(func=func, fmt_default=fmt_default)
        return sp

    preset = "preset:ssc4"
    sp = add("spectrum", cmd_spectrum, "csv", help="L^q spectrum estimate")
    sp.add_argument("--ifs", default=preset)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--m", default="12,14,16,18,20")
    sp.add_argument("--oversample", type=int, default=4)

    sp = add("histogram", cmd_histogram, "csv", help="dyadic histogram of the measure")
    sp.add_argument("--ifs", default=preset)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--oversample", type=int, default=4)
    sp.add_argument("--offset", type=float, default=0.0)

    sp = add("pressure", cmd_pressure, "csv", help="partial pressures and bounds")
    sp.add_argument("--ifs", default=preset)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--s", required=True, help="comma-separated s values")
    sp.add_argument("--n-max", type=int, default=8)

    sp = add("tau-tilde", cmd_tau_tilde, "csv", help="zero of the pressure function")
    sp.add_argument("--ifs", default=preset)
    sp.add_argument("--q", required=True)
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--via-stopping", type=int, default=None, metavar="M")

    sp = add("dichotomy", cmd_dichotomy, "json", help="case I / case II probe")
    sp.add_argument("--ifs", default="preset:solomyak")
    sp.add_argument("--q-grid", default=None)
    sp.add_argument("--m", default="12,14,16,18,20")
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--gap-threshold", type=float, default=0.25)
    sp.add_argument("--oversample", type=int, default=4)

    sp = add("freeness", cmd_freeness, "json", help="exhaustive freeness check")
    sp.add_argument("--ifs", default="preset:solomyak")
    sp.add_argument("--depth", type=int, default=8)

    sp = add("mod4-cert", cmd_mod4, "json", help="mod-4 freeness certificate for t = 9n")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--t")

    sp = add("separation", cmd_separation, "csv", help="same-length separation profile")
    sp.add_argument("--ifs", default="preset:solomyak")
    sp.add_argument("--n-max", type=int, default=6)

    sp = add("attractor", cmd_attractor, "json", help="invariant domain and attractor cover")
    sp.add_argument("--ifs", default="preset:solomyak")
    sp.add_argument("--depth", type=int, default=3)

    sp = add("hausdorff", cmd_hausdorff, "json", help="dimension prediction H / 2 chi")
    sp.add_argument("--ifs", default=preset)
    sp.add_argument("--depth", type=int, default=10)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--mc-depth", type=int, default=40)

    sp = add("stopping", cmd_stopping, "csv", help="dump a stopping-word set")
    sp.add_argument("--ifs", default="preset:solomyak")
    sp.add_argument("--m", type=int, required=True)

    sp = add("solomyak", cmd_solomyak, "json", help="one-shot counterexample reproduction")
    sp.add_argument("--t", default="9")
    sp.add_argument("--p0", default="0.49")
    sp.add_argument("--q-max", type=float, default=16.0)
    sp.add_argument("--m-max", type=int, default=20)
    sp.add_argument("--depth", type=int, default=12)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.fmt_default
    if args.budget <= 0:
        parser.error("--budget must be positive")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except MobiusLqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
