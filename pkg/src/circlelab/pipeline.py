"""Experiment configs and the count -> densities -> main term -> comparison pipeline.

A config is a JSON object::

    {
      "system": "n6_demo.json",        # path (relative to the config) or builtin name
      "X_list": [20, 40, 80],
      "R_series": 64,
      "R_integral": 32,
      "omega": "1/4", "c": "1", "c_prime": "1",
      "budgets": {"count": 100000000, "series": 10000000, "integral": 10000000000000},
      "seed": 0,
      "output": "out/n6"
    }

``{"kind": "thresholds", "k_max": 8}`` runs the exponent certifier instead.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import budget as _budget
from .arcs import volume_Ma
from .certifier import certify, feasible_kappa, prior_bounds, threshold_n0
from .counting import count_solutions, dft_count_oracle
from .densities import chi_p, singular_integral, singular_series
from .exact import floor_power, frac_str, to_fraction
from .expsums import golden_fraction, weyl_diag
from .forms import SystemSpec, load_system, parse_system

SCHEMA = "circlelab.report/1"
MISSING = "MISSING"

BUILTIN = {"n2": "n2_toy.json", "n4": "n4_demo.json", "n6": "n6_demo.json"}


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def builtin_path(name: str):
    return resources.files("circlelab") / "data" / name


def resolve_system(ref: str, base: Path | None = None) -> SystemSpec:
    """A form spec by path, or one of the shipped systems (n2, n4, n6 or a data file name)."""
    if ref in BUILTIN:
        return parse_system(builtin_path(BUILTIN[ref]).read_text(encoding="utf-8"))
    p = Path(ref)
    if not p.is_absolute() and base is not None and (base / p).exists():
        p = base / p
    if p.exists():
        return load_system(p)
    data = builtin_path(ref)
    if data.is_file():
        return parse_system(data.read_text(encoding="utf-8"))
    raise ConfigError(f"form spec {ref!r} not found", "system")


def _positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ConfigError(f"must be a positive integer, got {value!r}", name)
    return value


def _rational(value, name: str) -> Fraction:
    try:
        return to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational number: {value!r}", name) from exc


@dataclass
class ExperimentConfig:
    system: str
    X_list: list[int]
    R_series: int = 16
    R_integral: float = 4
    integral_levels: int = 2
    omega: Fraction = Fraction(1, 4)
    c: Fraction = Fraction(1)
    c_prime: Fraction = Fraction(1)
    budgets: dict[str, int] = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    bridge_primes: list[int] = field(default_factory=lambda: [2, 3])
    bridge_h: int = 2
    arc_thetas: list[Fraction] = field(default_factory=lambda: [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
    weyl_X: list[int] = field(default_factory=lambda: [50, 100, 200])
    kind: str = "system"
    k_max: int = 8
    base_dir: Path | None = None

    def budget(self, key: str) -> int | None:
        return self.budgets.get(key)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        kind = data.get("kind", "system")
        if kind == "thresholds":
            k_max = _positive_int(data.get("k_max", 8), "k_max")
            if k_max < 3:
                raise ConfigError("must be at least 3", "k_max")
            return cls(system="", X_list=[], kind=kind, k_max=k_max, output=data.get("output"), base_dir=base_dir)
        if kind != "system":
            raise ConfigError(f"unknown kind {kind!r}", "kind")
        known = {
            "kind", "system", "X_list", "R_series", "R_integral", "integral_levels", "omega", "c", "c_prime",
            "budgets", "seed", "output", "bridge_primes", "bridge_h", "arc_thetas", "weyl_X",
        }
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(f"unknown field(s) {extra}", extra[0])
        if "system" not in data:
            raise ConfigError("missing required field", "system")
        if "X_list" not in data:
            raise ConfigError("missing required field", "X_list")
        xs = data["X_list"]
        if not isinstance(xs, list) or not xs:
            raise ConfigError("must be a non-empty list of integers", "X_list")
        for i, x in enumerate(xs):
            if isinstance(x, bool) or not isinstance(x, int) or x < 0:
                raise ConfigError(f"entry {i} must be a non-negative integer, got {x!r}", "X_list")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigError("must be strictly increasing", "X_list")
        budgets = data.get("budgets", {})
        if not isinstance(budgets, dict):
            raise ConfigError("must be an object", "budgets")
        for key, v in budgets.items():
            _positive_int(v, f"budgets.{key}")
        r_int = data.get("R_integral", 4)
        if isinstance(r_int, bool) or not isinstance(r_int, (int, float)) or r_int <= 0:
            raise ConfigError(f"must be positive, got {r_int!r}", "R_integral")
        cfg = cls(
            system=str(data["system"]),
            X_list=list(xs),
            R_series=_positive_int(data.get("R_series", 16), "R_series"),
            R_integral=r_int,
            integral_levels=int(data.get("integral_levels", 2)),
            omega=_rational(data.get("omega", "1/4"), "omega"),
            c=_rational(data.get("c", 1), "c"),
            c_prime=_rational(data.get("c_prime", 1), "c_prime"),
            budgets=dict(budgets),
            seed=int(data.get("seed", 0)),
            output=data.get("output"),
            bridge_primes=list(data.get("bridge_primes", [2, 3])),
            bridge_h=_positive_int(data.get("bridge_h", 2), "bridge_h"),
            arc_thetas=[_rational(t, "arc_thetas") for t in data.get("arc_thetas", ["1/4", "1/2", "1"])],
            weyl_X=[_positive_int(x, "weyl_X") for x in data.get("weyl_X", [50, 100, 200])],
            base_dir=base_dir,
        )
        for name in ("c", "c_prime"):
            if getattr(cfg, name) <= 0:
                raise ConfigError("must be positive", name)
        return cfg

    def to_dict(self) -> dict:
        if self.kind == "thresholds":
            return {"kind": self.kind, "k_max": self.k_max}
        fs = frac_str
        return {
            "kind": self.kind,
            "system": self.system,
            "X_list": self.X_list,
            "R_series": self.R_series,
            "R_integral": self.R_integral,
            "integral_levels": self.integral_levels,
            "omega": fs(self.omega),
            "c": fs(self.c),
            "c_prime": fs(self.c_prime),
            "budgets": dict(sorted(self.budgets.items())),
            "seed": self.seed,
            "bridge_primes": self.bridge_primes,
            "bridge_h": self.bridge_h,
            "arc_thetas": [fs(t) for t in self.arc_thetas],
            "weyl_X": self.weyl_X,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(data, base_dir=path.parent)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    log: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.violations:
            return 1
        if self.missing:
            return 3
        return 0

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "config": self.config.to_dict(),
            "summary": self.summary,
            "rows": self.rows,
            "diagnostics": self.diagnostics,
            "log": self.log,
            "missing": self.missing,
            "violations": self.violations,
        }

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            cols = list(self.rows[0])
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow(r)
        return buf.getvalue()

    def provenance(self) -> dict:
        return {
            "schema": SCHEMA,
            "circlelab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "config_sha256": self.config.digest(),
            "timings_s": self.timings,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [out / "report.json", out / "report.csv", out / "provenance.json"]
        files[0].write_text(self.to_json(), encoding="utf-8")
        files[1].write_text(self.to_csv(), encoding="utf-8")
        files[2].write_text(json.dumps(self.provenance(), indent=2) + "\n", encoding="utf-8")
        return files


class _Step:
    """Times a pipeline step, records it in the log and turns failures into markers."""

    def __init__(self, report: ExperimentReport, name: str, call: str):
        self.report, self.name, self.call = report, name, call

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.report.timings[self.name] = round(time.perf_counter() - self.t0, 6)
        status = "ok"
        if exc_type is not None and issubclass(exc_type, _budget.BudgetExceeded):
            self.report.missing.append(f"{self.name}: {exc}")
            status = MISSING
        elif exc_type is not None and issubclass(exc_type, _budget.InvariantViolation):
            self.report.violations.append(f"{self.name}: {exc}")
            status = "violation"
        self.report.log.append({"step": self.name, "call": self.call, "status": status})
        return status != "ok"


def _num(x):
    return MISSING if x is None else x


def run_thresholds(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(cfg)
    for k in range(3, cfg.k_max + 1):
        pb = prior_bounds(k)
        with _Step(rep, f"thresholds k={k}", f"prior_bounds({k}); feasible_kappa({k}, {threshold_n0(k) + 1})"):
            iv = feasible_kappa(k, threshold_n0(k) + 1)
            rep.rows.append(
                {
                    "k": k,
                    "new": pb.new,
                    "bp_2k_k": pb.bp_consecutive,
                    "bhb": pb.bhb,
                    "bdhb": pb.bdhb if pb.bdhb is not None else "",
                    "kappa_interval_at_new_plus_1": iv.describe(),
                }
            )
    with _Step(rep, "certificate k=3", "certify(3)"):
        rep.diagnostics["certificate_k3"] = certify(3).to_dict()
    return rep


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Count, local densities, main term and their comparison, plus cross-checks."""
    if cfg.kind == "thresholds":
        return run_thresholds(cfg)
    rep = ExperimentReport(cfg)
    sys = resolve_system(cfg.system, cfg.base_dir)
    n, k, d = sys.n, sys.k, sys.d
    e = n - k - d
    rep.summary.update({"system": sys.name or cfg.system, "n": n, "k": k, "d": d, "exponent": e})

    series = integral = None
    with _Step(rep, "singular_series", f"singular_series(sys, {cfg.R_series})"):
        st = singular_series(sys, cfg.R_series, cfg.budget("series"))
        series = st.value
        rep.summary["series"] = series
        rep.summary["series_doubling_residuals"] = {str(r): v for r, v in sorted(st.doubling_residuals.items())}
    with _Step(rep, "singular_integral", f"singular_integral(sys, {cfg.R_integral}, levels={cfg.integral_levels})"):
        it = singular_integral(sys, cfg.R_integral, levels=cfg.integral_levels, budget=cfg.budget("integral"))
        integral = it.value
        rep.summary["integral"] = integral
        rep.summary["integral_truncations"] = {repr(r): v for r, v in it.truncations.items()}
        rep.summary["integral_doubling_residuals"] = {repr(r): v for r, v in sorted(it.doubling_residuals.items())}
    product = series * integral if series is not None and integral is not None else None
    rep.summary["series_times_integral"] = _num(product)

    for X in cfg.X_list:
        N = None
        with _Step(rep, f"count X={X}", f"count_solutions(sys, {X}, 'meet-in-middle')"):
            N = count_solutions(sys, X, "meet-in-middle", cfg.budget("count"), threads).N
        scale = float(X) ** e if X > 0 or e > 0 else None
        degenerate = X == 0 or scale in (None, 0.0)
        ratio = None if N is None or degenerate else N / scale
        main = None if product is None or degenerate else scale * product
        R_om = floor_power(X, cfg.omega, cfg.c_prime) if X >= 1 else 0
        s_om = st.partial(R_om) if series is not None and 1 <= R_om <= cfg.R_series else None
        rel = None if ratio is None or product is None else ratio / product - 1
        rep.rows.append(
            {
                "X": X,
                "N": _num(N),
                "scale": _num(scale),
                "ratio": _num(ratio),
                "series": _num(series),
                "integral": _num(integral),
                "main_term": _num(main),
                "relative_discrepancy": _num(rel),
                "R_omega": R_om,
                "series_at_R_omega": _num(s_om),
                "degenerate": degenerate,
            }
        )

    rep.diagnostics["bridge"] = []
    for p in cfg.bridge_primes:
        with _Step(rep, f"bridge p={p}", f"chi_p(sys, {p}, {cfg.bridge_h})"):
            r = chi_p(sys, p, cfg.bridge_h, budget=cfg.budget("bridge"))
            rep.diagnostics["bridge"].append(
                {"p": p, "levels": r.levels, "max_residual": max(r.identity_residuals, default=0.0), "chi_p": r.chi_p}
            )
            if r.note:
                rep.missing.append(f"bridge p={p}: {r.note}")

    small = next((X for X in cfg.X_list if X >= 1), None)
    if small is not None:
        with _Step(rep, "dft oracle", "dft_count_oracle(sys, 1)"):
            dft = dft_count_oracle(sys, 1, cfg.budget("oracle") or 10**8)
            mim = count_solutions(sys, 1, "meet-in-middle").N
            rep.diagnostics["dft_oracle"] = {"X": 1, "N": dft.N, "meet_in_middle": mim, "residual": dft.residual}
            if dft.N != mim:
                raise _budget.InvariantViolation(f"dft oracle {dft.N} != meet-in-middle {mim} at X=1")

    Xa = min(max(cfg.X_list), 100) if cfg.X_list and max(cfg.X_list) >= 2 else 10
    rep.diagnostics["arc_volumes"] = []
    for th in cfg.arc_thetas:
        with _Step(rep, f"volume_Ma theta={frac_str(th)}", f"volume_Ma({frac_str(th)}, {Xa}, {k})"):
            v = volume_Ma(th, Xa, k, q_cap=cfg.budget("arcs") or 10**5)
            rep.diagnostics["arc_volumes"].append(v.row())
            if (v.volume + v.minor_volume) != 1:
                raise _budget.InvariantViolation("major plus minor arc volume differs from 1")

    with _Step(rep, "weyl slope", f"weyl_diag(golden, {cfg.weyl_X}, {k})"):
        wd = weyl_diag(golden_fraction(), cfg.weyl_X, k, budget=cfg.budget("weyl"))
        rep.diagnostics["weyl"] = {"X": cfg.weyl_X, "ratios": [r.ratio for r in wd.rows], "slope": wd.slope}
    rep.summary["missing"] = len(rep.missing)
    return rep


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj
