"""Command-line interface: ``circlelab <subcommand> ...``.

Exit codes: 0 success, 1 invariant violation, 2 usage or input error,
3 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import budget as _budget
from .exact import frac_str, to_fraction

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


def _fraction(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _frac_list(text: str) -> list[Fraction]:
    return [_fraction(t) for t in text.split(",") if t.strip()]


class Output:
    def __init__(self, fmt: str, precision: int | None, stream=None):
        self.fmt, self.precision = fmt, precision
        self.stream = stream or sys.stdout

    def _cell(self, v):
        if isinstance(v, Fraction):
            return frac_str(v)
        if isinstance(v, float) and self.precision is not None:
            return float(f"{v:.{self.precision}g}")
        if isinstance(v, complex):
            return self._cell(v.real), self._cell(v.imag)
        return v

    def table(self, rows: list[dict]) -> None:
        rows = [{k: self._cell(v) for k, v in r.items()} for r in rows]
        if self.fmt == "json":
            self.stream.write(json.dumps(rows, indent=2) + "\n")
            return
        if not rows:
            return
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        self.stream.write(buf.getvalue())

    def record(self, obj: dict) -> None:
        if self.fmt == "json":
            self.stream.write(json.dumps(obj, indent=2, default=str) + "\n")
        else:
            self.table([{k: v for k, v in obj.items() if not isinstance(v, (list, dict))}])

    def text(self, s: str) -> None:
        self.stream.write(s + "\n")


def _system(args):
    from .pipeline import resolve_system

    return resolve_system(args.spec)


# ------------------------------------------------------------ subcommands


def cmd_count(args, out: Output) -> int:
    from .counting import count_solutions, dft_count_oracle

    sys_ = _system(args)
    rows = []
    for X in args.X:
        if args.method == "dft-oracle":
            r = dft_count_oracle(sys_, X, args.budget)
        else:
            r = count_solutions(sys_, X, args.method, args.budget, args.threads)
        rows.append({"X": X, "N": r.N, "method": r.method})
    out.table(rows)
    return EXIT_OK


def cmd_gamma(args, out: Output) -> int:
    from .counting import count_mod, factorize

    sys_ = _system(args)
    r = count_mod(sys_, args.q, args.method, args.budget)
    row = {"q": args.q, "gamma": r.gamma, "method": r.method}
    if len(factorize(args.q)) > 1:
        parts = [(p**e, count_mod(sys_, p**e, "auto", args.budget).gamma) for p, e in factorize(args.q)]
        row["crt"] = " * ".join(f"Gamma({q})" for q, _ in parts) + " = " + " * ".join(str(g) for _, g in parts)
        row["crt_ok"] = math.prod(g for _, g in parts) == r.gamma
    out.record(row)
    return EXIT_OK


def cmd_chi_p(args, out: Output) -> int:
    from .densities import chi_p

    rep = chi_p(_system(args), args.p, args.h_max, args.tol, args.budget)
    if out.fmt == "json":
        out.record(rep.to_dict())
    else:
        a = dict(rep.a_terms)
        out.table(
            [
                {"h": h, "gamma": g, "normalized": v, "A": a.get(h), "identity_residual": res}
                for (h, v), g, res in zip(rep.levels, rep.gammas, rep.identity_residuals)
            ]
        )
    return EXIT_OK


def cmd_sing_series(args, out: Output) -> int:
    from .densities import singular_series

    st = singular_series(_system(args), args.R, args.budget)
    out.table([{"s": s, "A": a, "partial": st.partial(s)} for s, a in enumerate(st.terms, start=1)])
    return EXIT_OK


def cmd_sing_integral(args, out: Output) -> int:
    from .densities import singular_integral

    it = singular_integral(_system(args), args.R, levels=args.levels)
    rows = []
    for r, v in it.truncations.items():
        rows.append({"R": r, "integral": v, "doubling_residual": it.doubling_residuals.get(r, "")})
    out.table(rows)
    return EXIT_OK


def cmd_main_term(args, out: Output) -> int:
    from .densities import major_arc_main_term

    mt = major_arc_main_term(_system(args), args.X, args.omega, args.c_prime, args.budget)
    out.record(
        {
            "X": mt.X,
            "omega": mt.omega,
            "c_prime": mt.c_prime,
            "series_R": mt.series_R,
            "integral_R": mt.integral_R,
            "series": mt.series,
            "integral": mt.integral,
            "main_term": mt.value,
        }
    )
    return EXIT_OK


def cmd_expsum(args, out: Output) -> int:
    from .expsums import DiagRow, eval_S

    sys_ = _system(args)
    rows = []
    for X in args.X:
        v = eval_S(sys_, (args.alpha_k, args.alpha_d), X, args.budget, args.threads)
        rows.append(DiagRow(X, args.alpha_k % 1, args.alpha_d % 1, v, float(2 * X + 1) ** sys_.n).as_dict())
    out.table(rows)
    return EXIT_OK


def cmd_weyl_diag(args, out: Output) -> int:
    from .expsums import golden_fraction, minor_arc_sup_diag, weyl_diag

    if args.spec:
        tab = minor_arc_sup_diag(_system(args), args.theta, args.X, args.samples, args.seed, args.budget)
    else:
        alpha = golden_fraction() if args.alpha is None else args.alpha
        tab = weyl_diag(alpha, args.X, args.k, args.theta, budget=args.budget)
    out.table([r.as_dict() for r in tab.rows])
    if tab.slope is not None:
        sys.stderr.write(f"log-log slope of ratio: {tab.slope:.6f}\n")
    return EXIT_OK


def cmd_arcs(args, out: Output) -> int:
    from .arcs import ArcParams, classify_Ma, classify_Na, classify_Pa, major_arc_list, volume_Ma

    if args.action == "classify":
        if args.kind == "Ma":
            dec = classify_Ma(args.alpha_k, args.theta, args.X[0], args.k, alpha_err=args.alpha_err)
        elif args.kind == "Na":
            params = ArcParams.build(args.theta, args.eta, args.k - 1, c=args.c)
            dec = classify_Na((args.alpha_k, args.alpha_d), params, args.X[0], args.k)
        else:
            dec = classify_Pa((args.alpha_k, args.alpha_d), args.omega, args.c_prime, args.X[0], args.k)
        row = {"kind": args.kind, "status": dec.status}
        if dec.witness is not None:
            w = dec.witness
            row.update({"q": w.q, "r": w.r, "s": w.s, "a_k": w.a_k, "a_d": w.a_d, "gamma_k": w.gamma_k,
                        "gamma_d": w.gamma_d})
        out.record(row)
    elif args.action == "volume":
        rows = []
        for X in args.X:
            for th in args.thetas:
                rows.append(volume_Ma(th, X, args.k).row())
        out.table(rows)
    else:
        arcs, scale = major_arc_list(args.theta, args.X[0], args.k)
        out.table([{"center": c, "radius": f"{frac_str(r)}*{scale.label()}"} for c, r in arcs])
    return EXIT_OK


def cmd_certify(args, out: Output) -> int:
    from .certifier import InfeasibleError, certify, feasible_kappa, threshold_n0

    n = args.n if args.n is not None else threshold_n0(args.k) + 1
    iv = feasible_kappa(args.k, n)
    if iv.empty:
        out.text(f"INFEASIBLE k={args.k} n={n}: " + " and ".join(c.describe() for c in iv.binding()))
        return EXIT_OK
    try:
        cert = certify(args.k, n, args.kappa, args.theta_star)
    except InfeasibleError as exc:
        out.text(f"INFEASIBLE k={args.k} n={n}: {exc}")
        return EXIT_OK
    if out.fmt == "json":
        out.text(cert.to_json())
    else:
        d = cert.to_dict()
        for key in ("k", "d", "n", "kappa", "kappa_interval", "theta_star", "theta_max", "eta_max", "omega", "steps"):
            val = d[key]
            out.text(f"{key}: {', '.join(val) if isinstance(val, list) else val}")
        out.text("theta_sequence: " + " > ".join(d["theta_sequence"]))
        for c in d["checks"]:
            rel = "<" if c["strict"] else "<="
            out.text(f"check {c['name']}: {c['lhs']} {rel} {c['rhs']} (margin {c['margin']})")
    return EXIT_OK


def cmd_thresholds(args, out: Output) -> int:
    from .certifier import prior_bounds

    rows = []
    for k in range(3, args.k_max + 1):
        pb = prior_bounds(k)
        rows.append({"k": k, "new": pb.new, "bp_2k_k": pb.bp_consecutive, "bhb": pb.bhb,
                     "bdhb": pb.bdhb if pb.bdhb is not None else ""})
    out.table(rows)
    return EXIT_OK


def cmd_run(args, out: Output) -> int:
    from .pipeline import load_config, run_experiment

    cfg = load_config(args.config)
    if args.output:
        cfg.output = args.output
    rep = run_experiment(cfg, threads=args.threads)
    if cfg.output:
        target = Path(cfg.output)
        if not target.is_absolute() and cfg.base_dir is not None and args.output is None:
            target = cfg.base_dir / target
        for f in rep.write(target):
            sys.stderr.write(f"wrote {f}\n")
    if out.fmt == "json":
        out.text(rep.to_json().rstrip("\n"))
    else:
        out.stream.write(rep.to_csv())
    for m in rep.missing:
        sys.stderr.write(f"MISSING {m}\n")
    for v in rep.violations:
        sys.stderr.write(f"VIOLATION {v}\n")
    return rep.exit_code


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circlelab", description=__doc__.splitlines()[0])
    p.add_argument("--budget", type=int, default=None, help="work cap per operation (default: $CIRCLELAB_BUDGET or 1e8)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--precision", type=int, default=None, help="significant digits for floats")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def spec(sp, required=True):
        sp.add_argument("--spec", required=required, help="form-spec JSON file or builtin name (n2, n4, n6)")

    s = sub.add_parser("count", help="count solutions in [-X, X]^n")
    spec(s)
    s.add_argument("--X", type=_int_list, required=True, help="comma-separated box radii")
    s.add_argument("--method", choices=("enumeration", "meet-in-middle", "dft-oracle"), default="meet-in-middle")
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("gamma", help="solutions modulo q")
    spec(s)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--method", choices=("auto", "direct", "lift", "crt"), default="auto")
    s.set_defaults(func=cmd_gamma)

    s = sub.add_parser("chi-p", help="p-adic density by lifting")
    spec(s)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--h-max", type=int, default=3)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_chi_p)

    s = sub.add_parser("sing-series", help="truncated singular series")
    spec(s)
    s.add_argument("--R", type=int, required=True)
    s.set_defaults(func=cmd_sing_series)

    s = sub.add_parser("sing-integral", help="truncated singular integral")
    spec(s)
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--levels", type=int, default=2)
    s.set_defaults(func=cmd_sing_integral)

    s = sub.add_parser("main-term", help="X^(n-k-d) S(c'X^omega) I(c'X^omega)")
    spec(s)
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--omega", type=_fraction, default=Fraction(1, 4))
    s.add_argument("--c-prime", type=_fraction, default=Fraction(1))
    s.set_defaults(func=cmd_main_term)

    s = sub.add_parser("expsum", help="evaluate S(alpha)")
    spec(s)
    s.add_argument("--X", type=_int_list, required=True)
    s.add_argument("--alpha-k", type=_fraction, required=True)
    s.add_argument("--alpha-d", type=_fraction, default=Fraction(0))
    s.set_defaults(func=cmd_expsum)

    s = sub.add_parser("weyl-diag", help="Weyl sum or minor-arc sup diagnostics")
    spec(s, required=False)
    s.add_argument("--X", type=_int_list, required=True)
    s.add_argument("--alpha", type=_fraction, default=None, help="default: fractional golden ratio")
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--theta", type=_fraction, default=Fraction(1))
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_weyl_diag)

    s = sub.add_parser("arcs", help="classify points, dump arcs, volume tables")
    s.add_argument("action", choices=("classify", "volume", "dump"))
    s.add_argument("--kind", choices=("Ma", "Na", "Pa"), default="Ma")
    s.add_argument("--X", type=_int_list, required=True)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--theta", type=_fraction, default=Fraction(1, 2))
    s.add_argument("--thetas", type=_frac_list, default=[Fraction(1, 4), Fraction(1, 2), Fraction(1)])
    s.add_argument("--eta", type=_fraction, default=Fraction(1, 2))
    s.add_argument("--omega", type=_fraction, default=Fraction(1, 4))
    s.add_argument("--c", type=_fraction, default=Fraction(1))
    s.add_argument("--c-prime", type=_fraction, default=Fraction(1))
    s.add_argument("--alpha-k", type=_fraction, default=Fraction(0))
    s.add_argument("--alpha-d", type=_fraction, default=Fraction(0))
    s.add_argument("--alpha-err", type=_fraction, default=None)
    s.set_defaults(func=cmd_arcs)

    s = sub.add_parser("certify", help="exact exponent certificate")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--kappa", type=_fraction, default=None)
    s.add_argument("--theta-star", type=_fraction, default=None)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("thresholds", help="new threshold next to earlier bounds")
    s.add_argument("--k-max", type=int, default=8)
    s.set_defaults(func=cmd_thresholds)

    s = sub.add_parser("run", help="run an experiment config")
    s.add_argument("--config", required=True)
    s.add_argument("--output", default=None)
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    from .certifier import InfeasibleError
    from .forms import FormSpecError
    from .pipeline import ConfigError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    out = Output(args.format, args.precision)
    try:
        return args.func(args, out)
    except _budget.BudgetExceeded as exc:
        sys.stderr.write(f"budget exhausted: {exc}\n")
        return EXIT_BUDGET
    except _budget.InvariantViolation as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return EXIT_INVARIANT
    except (FormSpecError, ConfigError, InfeasibleError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
