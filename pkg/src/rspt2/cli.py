"""Command-line front end.

Subcommands: ``compute``, ``sumrule``, ``cascade``, ``asymptotic`` and
``matrix-fleet``.  Every option may also come from a JSON file given with
``--config``; options on the command line take precedence.

Exit codes: 0 success, 2 invalid configuration, 3 computation error,
4 acceptance-tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Any

from . import cascade, engine, matrixlab, models, sumrules
from .core import CorrectionSeries, RSPTError, Scalar

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_TOLERANCE = 0, 2, 3, 4

MODELS = ("oscillator", "hydrogen", "pib-linear", "pib-cos1", "pib-cos2", "pib-cos")

DEFAULTS: dict[str, Any] = {
    "model": None,
    "M": None,
    "omega": "1",
    "q": None,
    "matrix_seed": None,
    "dim": None,
    "gap_min": 0.1,
    "states": "0..49",
    "strategy": "auto",
    "basis": None,
    "grid_rmax": None,
    "grid_points": None,
    "format": "table",
    "output": None,
    "zero_rtol": 1e-6,
    "nmax": None,
    "p_hint": None,
    "rtol": 0.02,
    "count": None,
    "dims": "2..20",
    "seed": 1,
    "tol": 1e-12,
    "oracle_tol": 1e-6,
    "lambda_step": 1e-3,
}


class ConfigError(Exception):
    pass


# -- argument handling ------------------------------------------------------


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--model", choices=MODELS, default=S)
    p.add_argument("--M", type=int, default=S, help="perturbation power (oscillator, hydrogen)")
    p.add_argument("--omega", default=S, help="oscillator frequency: rational like 1 or 3/2, or a float")
    p.add_argument("--q", type=int, default=S, help="box perturbation cos(q pi x)")
    p.add_argument("--matrix-seed", dest="matrix_seed", type=int, default=S)
    p.add_argument("--dim", type=int, default=S)
    p.add_argument("--gap-min", dest="gap_min", type=float, default=S)


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file of option values")
    p.add_argument("--format", choices=("table", "csv", "json"), default=S)
    p.add_argument("--output", default=S, help="write to this path instead of stdout")


def _add_series_args(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--states", default=S, help="inclusive range a..b")
    p.add_argument("--strategy", choices=engine.STRATEGIES, default=S)
    p.add_argument("--basis", type=int, default=S)
    p.add_argument("--grid-rmax", dest="grid_rmax", type=float, default=S)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rspt2", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="per-state corrections")
    _add_problem_args(c), _add_series_args(c), _add_common(c)

    s = sub.add_parser("sumrule", help="prefix sums, limit and sign class")
    _add_problem_args(s), _add_series_args(s), _add_common(s)
    s.add_argument("--zero-rtol", dest="zero_rtol", type=float, default=argparse.SUPPRESS)

    k = sub.add_parser("cascade", help="beta/theta decomposition")
    _add_problem_args(k), _add_series_args(k), _add_common(k)

    a = sub.add_parser("asymptotic", help="large-n leading term")
    _add_problem_args(a), _add_common(a)
    a.add_argument("--nmax", type=int, default=argparse.SUPPRESS)
    a.add_argument("--p-hint", dest="p_hint", type=int, default=argparse.SUPPRESS)
    a.add_argument("--rtol", type=float, default=argparse.SUPPRESS)

    f = sub.add_parser("matrix-fleet", help="seeded random matrix problems")
    _add_common(f)
    f.add_argument("--count", type=int, default=argparse.SUPPRESS)
    f.add_argument("--dims", default=argparse.SUPPRESS, help="inclusive range a..b")
    f.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    f.add_argument("--gap-min", dest="gap_min", type=float, default=argparse.SUPPRESS)
    f.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    f.add_argument("--oracle-tol", dest="oracle_tol", type=float, default=argparse.SUPPRESS)
    f.add_argument("--lambda-step", dest="lambda_step", type=float, default=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    explicit = vars(args)
    given = set(explicit)
    path = explicit.get("config")
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for key, val in loaded.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = val
            given.add(key)
    cfg.update({k: v for k, v in explicit.items() if k != "config"})
    cfg["_explicit"] = given
    return cfg


def parse_range(text: str, what: str = "range") -> range:
    try:
        if isinstance(text, (list, tuple)):
            lo, hi = text
        else:
            lo, hi = str(text).split("..")
        lo, hi = int(lo), int(hi)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{what} must look like a..b, got {text!r}") from exc
    if lo < 0 or hi < lo:
        raise ConfigError(f"{what} {text!r} is empty or negative")
    return range(lo, hi + 1)


def _parse_omega(text) -> Fraction | float:
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        return text
    t = str(text).strip()
    if t in ("sqrt2", "sqrt(2)"):
        return math.sqrt(2)
    try:
        if "e" in t.lower():
            return float(t)
        return Fraction(t)
    except ValueError as exc:
        raise ConfigError(f"bad --omega {text!r}") from exc


def problem_from_config(cfg: dict):
    if cfg.get("matrix_seed") is not None:
        if cfg.get("dim") is None:
            raise ConfigError("--matrix-seed needs --dim")
        try:
            return matrixlab.random_problem(int(cfg["dim"]), int(cfg["matrix_seed"]),
                                            float(cfg["gap_min"]))
        except matrixlab.BadDimension as exc:
            raise ConfigError(str(exc)) from exc
    model = cfg.get("model")
    if model is None:
        raise ConfigError("one of --model or --matrix-seed is required")
    try:
        if model == "oscillator":
            if cfg.get("M") is None:
                raise ConfigError("--model oscillator needs --M")
            return models.Oscillator(int(cfg["M"]), _parse_omega(cfg["omega"]))
        if model == "hydrogen":
            if cfg.get("M") is None:
                raise ConfigError("--model hydrogen needs --M")
            return models.HydrogenS(int(cfg["M"]))
        if model == "pib-linear":
            return models.PIB_LINEAR
        if model == "pib-cos1":
            return models.ParticleInBox(1)
        if model == "pib-cos2":
            return models.ParticleInBox(2)
        if model == "pib-cos":
            if cfg.get("q") is None:
                raise ConfigError("--model pib-cos needs --q")
            return models.ParticleInBox(int(cfg["q"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown model {model!r}")


def _states(cfg: dict, problem, from_zero: bool) -> range:
    if isinstance(problem, matrixlab.MatrixProblem) and "states" not in cfg.get("_explicit", ()):
        return range(problem.dim)
    rng = parse_range(cfg["states"], "--states")
    if from_zero and rng.start != 0:
        raise ConfigError("range must start at 0")
    if isinstance(problem, matrixlab.MatrixProblem) and rng.stop > problem.dim:
        raise ConfigError(f"states exceed matrix dimension {problem.dim}")
    return rng


def _records(cfg: dict, problem, states: range):
    if isinstance(problem, matrixlab.MatrixProblem):
        full = matrixlab.second_order_all(problem)
        return [full.records[s] for s in states]
    grid = engine.GridSpec(cfg.get("grid_rmax"), cfg.get("grid_points"))
    kw = {"basis": cfg.get("basis"), "grid": grid}
    return [engine.second_order(problem, s, cfg["strategy"], **kw) for s in states]


def _series(cfg: dict, problem) -> CorrectionSeries:
    states = _states(cfg, problem, from_zero=True)
    return CorrectionSeries(problem, tuple(_records(cfg, problem, states)))


# -- formatting -------------------------------------------------------------


def fmt_scalar(x: Scalar) -> str:
    """Exact rationals verbatim, floats to 6 significant digits."""
    if x.is_exact:
        return str(x)
    v = x.value()
    return f"{v:.6g}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def _csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _problem_json(problem):
    return models.problem_to_json(problem)


# -- commands ---------------------------------------------------------------


def cmd_compute(cfg: dict) -> tuple[str, int]:
    problem = problem_from_config(cfg)
    states = _states(cfg, problem, from_zero=False)
    recs = _records(cfg, problem, states)
    fmt = cfg["format"]
    if fmt == "json":
        return _json({"problem": _problem_json(problem), "records": [r.to_json() for r in recs]}), 0
    if fmt == "csv":
        rows = [[r.state, repr(r.e0.value()), repr(r.e1.value()), repr(r.e2.value()),
                 str(r.e2) if r.e2.is_exact else "", repr(r.e2.error()), r.backend,
                 str(r.rigorous).lower()] for r in recs]
        return _csv(["s", "e0", "e1", "e2", "e2_exact", "err", "backend", "rigorous"], rows), 0
    rows = [[str(r.state), fmt_scalar(r.e0), fmt_scalar(r.e1), fmt_scalar(r.e2), r.backend,
             f"{r.e2.error():.2g}"] for r in recs]
    return _table(["s", "e0", "e1", "e2", "backend", "err"], rows), 0


def cmd_sumrule(cfg: dict) -> tuple[str, int]:
    problem = problem_from_config(cfg)
    series = _series(cfg, problem)
    rep = sumrules.classify(series, zero_rtol=float(cfg["zero_rtol"]))
    fmt = cfg["format"]
    if fmt == "json":
        doc = {"problem": _problem_json(problem), **rep.to_json()}
        return _json(doc), 0
    if fmt == "csv":
        return rep.to_csv(), 0
    lim = rep.limit
    lines = [
        f"states          0..{len(series) - 1}",
        f"sign class      {rep.sign_label}",
        f"verdict         {rep.verdict}",
        f"limit           {'n/a' if lim is None else f'{lim.value_:.6g} +- {lim.err:.2g}'}",
        f"ordering holds  {rep.ordering_holds}",
        f"all S_K < 0     {rep.inequality.holds}",
        "",
    ]
    shown = list(enumerate(rep.partial_sums))
    if len(shown) > 12:
        shown = shown[:6] + shown[-6:]
    rows = [[str(K), fmt_scalar(S)] for K, S in shown]
    return "\n".join(lines) + _table(["K", "S_K"], rows), 0


def cmd_cascade(cfg: dict) -> tuple[str, int]:
    problem = problem_from_config(cfg)
    series = _series(cfg, problem)
    d = cascade.decompose(series)
    diag = None
    if len(d.betas) >= 20:
        diag = cascade.product_diagnostic(d)
    fmt = cfg["format"]
    if fmt == "json":
        doc = {"problem": _problem_json(problem), **d.to_json(),
               "product_trend": diag.trend if diag else None,
               "statistics": cascade.beta_statistics(d)}
        return _json(doc), 0
    if fmt == "csv":
        return d.to_csv(), 0
    recon = cascade.reconstructed_sums(d)
    rows = []
    for k, (b, th, br) in enumerate(zip(d.betas, d.thetas, d.branches), start=1):
        rows.append([str(k), fmt_scalar(b), br, f"{th:.6g}", fmt_scalar(recon[k])])
    head = f"alpha = {fmt_scalar(d.alpha)}\nproduct trend: {diag.trend if diag else 'n/a'}\n\n"
    return head + _table(["k", "beta", "branch", "theta", "S_k"], rows), 0


def cmd_asymptotic(cfg: dict) -> tuple[str, int]:
    problem = problem_from_config(cfg)
    if isinstance(problem, matrixlab.MatrixProblem):
        raise ConfigError("asymptotic needs a model family")
    if cfg.get("nmax") is None:
        raise ConfigError("--nmax is required")
    nmax = int(cfg["nmax"])
    top = nmax if isinstance(problem, models.Oscillator) else nmax - 1
    if top < 1:
        raise ConfigError("--nmax too small")
    strategy = "auto"
    recs = [engine.second_order(problem, s, strategy) for s in range(top + 1)]
    if any(r.backend not in ("banded", "dalgarno-lewis") for r in recs):
        raise ConfigError("asymptotic needs an exact backend for this model")
    series = CorrectionSeries(problem, tuple(recs))
    fit = sumrules.asymptotic_fit(series, cfg.get("p_hint"))
    ref = sumrules.reference_leading_term(problem)
    flag = sumrules.compare_with_reference(fit, problem, float(cfg["rtol"]))
    fmt = cfg["format"]
    doc = {
        "problem": _problem_json(problem),
        "nmax": nmax,
        "p": fit.p,
        "c": fit.c,
        "err": fit.err,
        "reference_p": ref[0] if ref else None,
        "reference_c": f"{ref[1].numerator}/{ref[1].denominator}" if ref else None,
        "flag": flag,
    }
    if fmt == "json":
        return _json(doc), 0
    if fmt == "csv":
        return _csv(list(doc)[1:], [[doc[k] if doc[k] is not None else "" for k in list(doc)[1:]]]), 0
    ref_txt = f"{ref[1]} n^{ref[0]}" if ref else "none tabulated"
    return (f"fit        c n^p with p = {fit.p}, c = {fit.c:.6g} +- {fit.err:.2g}\n"
            f"reference  {ref_txt}\n"
            f"flag       {flag or 'n/a'}\n"), 0


def cmd_matrix_fleet(cfg: dict) -> tuple[str, int]:
    if cfg.get("count") is None:
        raise ConfigError("--count is required")
    count = int(cfg["count"])
    if count < 1:
        raise ConfigError("--count must be >= 1")
    dims = parse_range(cfg["dims"], "--dims")
    if dims.start < 2:
        raise ConfigError("--dims must be >= 2")
    recs = matrixlab.fleet(count, dims, int(cfg["seed"]), float(cfg["gap_min"]),
                           float(cfg["lambda_step"]))
    tol, otol = float(cfg["tol"]), float(cfg["oracle_tol"])
    summary = {
        "count": len(recs),
        "max_residual": max(r.residual for r in recs),
        "min_partial_margin": min(r.min_partial_margin for r in recs),
        "max_oracle_error": max(r.oracle_error for r in recs),
    }
    ok = (summary["max_residual"] <= tol and summary["min_partial_margin"] > 0
          and summary["max_oracle_error"] <= otol)
    summary["pass"] = ok
    code = EXIT_OK if ok else EXIT_TOLERANCE
    fmt = cfg["format"]
    if fmt == "json":
        return _json({"records": [r.to_json() for r in recs], "summary": summary}), code
    header = ["seed", "dim", "residual", "min_partial_margin", "oracle_error"]
    if fmt == "csv":
        rows = [[r.seed, r.dim, repr(r.residual), repr(r.min_partial_margin), repr(r.oracle_error)]
                for r in recs]
        return _csv(header, rows), code
    rows = [[str(r.seed), str(r.dim), f"{r.residual:.3g}", f"{r.min_partial_margin:.3g}",
             f"{r.oracle_error:.3g}"] for r in recs]
    tail = (f"\nmax residual {summary['max_residual']:.3g}  "
            f"min margin {summary['min_partial_margin']:.3g}  "
            f"max oracle error {summary['max_oracle_error']:.3g}  "
            f"{'PASS' if ok else 'FAIL'}\n")
    return _table(header, rows) + tail, code


COMMANDS = {
    "compute": cmd_compute,
    "sumrule": cmd_sumrule,
    "cascade": cmd_cascade,
    "asymptotic": cmd_asymptotic,
    "matrix-fleet": cmd_matrix_fleet,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    del args.command
    try:
        cfg = resolve_config(args)
        text, code = COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"rspt2 {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RSPTError as exc:
        print(f"rspt2 {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    out = cfg.get("output")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
