"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage or
input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import fixture_dir, fixture_names, run_golden
from .densities import DensitySpecError, parse_density
from .expr import ExprEvalError, ExprSyntaxError, UnboundIdentifierError, evaluate, parse
from .formulas import TOL_FORMULA, ChainAnalysis, hunter_matrix, mhtf2, random_target
from .ginverse import (TOL_GINV, GInverseForm, InadmissibleError, fundamental_matrix, ginverse_from_form,
                       is_ginverse, random_forms)
from .hitting import TOL_HIT, MonitoredRadiusError, first_step_residual, hitting_operators, probe_densities, tau_and_pi
from .linalg import basis_vector
from .model import TOL_MODEL, block_matrix, trace_of_action, validate
from .modelfile import LoadedModel, ModelFileError, parse_model
from .stationary import TOL_FIX, StationaryError, classify, fixed_point, limit_operator
from .trajectory import TrajectoryConfig, estimate_hitting

REPORT_SCHEMA = "qmarkov-report/1"


class UsageError(ValueError):
    pass


class CheckError(RuntimeError):
    """An analysis could not be carried out on this model."""


@dataclass
class Report:
    command: str
    model_digest: str | None = None
    model_name: str | None = None
    results: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)  # (title, headers, rows)
    checks: list = field(default_factory=list)  # (label, passed)

    @property
    def ok(self) -> bool:
        return all(p for _, p in self.checks)

    def check(self, label: str, passed: bool) -> bool:
        self.checks.append((label, bool(passed)))
        return passed


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, (complex, np.complexfloating)):
        if abs(x.imag) <= 1e-14 * max(1.0, abs(x.real)):
            return f"{x.real:.12g}"
        return f"{x.real:.12g}{x.imag:+.12g}j"
    if isinstance(x, (float, np.floating)):
        return f"{x:.12g}"
    return str(x)


def _table(title, headers, rows) -> str:
    cells = [[_fmt(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[c]) for r in cells]) for c, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    out = [title, line, "  ".join("-" * w for w in widths)]
    out += ["  ".join(c.rjust(w) if _numeric(c) else c.ljust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(out)


def _numeric(s: str) -> bool:
    try:
        complex(s)
        return True
    except ValueError:
        return False


def emit_report(report: Report, fmt: str = "human") -> str:
    """Render ``report`` as aligned text tables or as JSON."""
    if fmt == "machine":
        doc = {
            "schema_version": REPORT_SCHEMA,
            "tool_version": __version__,
            "model_digest": report.model_digest,
            "command": report.command,
            "ok": report.ok,
            "results": _jsonable(report.results),
            "residuals": _jsonable(report.residuals),
            "checks": [{"label": lbl, "passed": p} for lbl, p in report.checks],
        }
        return json.dumps(doc, indent=2, allow_nan=False)
    if fmt != "human":
        raise ValueError(f"unknown format {fmt!r}")
    parts = [f"qmarkov {__version__}  {report.command}"]
    if report.model_name is not None:
        parts[0] += f"  model={report.model_name}"
    if report.model_digest:
        parts.append(f"sha256 {report.model_digest}")
    for title, headers, rows in report.tables:
        parts.append("")
        parts.append(_table(title, headers, rows))
    if report.residuals:
        parts.append("")
        parts.append(_table("residuals", ["quantity", "value"], list(report.residuals.items())))
    if report.checks:
        parts.append("")
        parts.append(_table("checks", ["check", "result"],
                            [(lbl, "PASS" if p else "FAIL") for lbl, p in report.checks]))
    return "\n".join(parts)


# ---------------------------------------------------------------- inputs

def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"--param expects name=value, got {text!r}")
    try:
        return name.strip(), evaluate(parse(value))
    except (ExprSyntaxError, ExprEvalError) as exc:
        raise UsageError(f"--param {name}: {exc}") from exc


def _load(args) -> LoadedModel:
    path = Path(args.model)
    if not path.exists() and args.model in fixture_names():
        path = fixture_dir() / f"{args.model}.json"
    if not path.exists():
        raise UsageError(f"model file {args.model!r} not found (bundled fixtures: {', '.join(fixture_names())})")
    overrides = dict(_param(p) for p in args.param)
    return parse_model(path, overrides, tol=args.tol_model)


def _analysis(lm: LoadedModel, args) -> ChainAnalysis:
    t = block_matrix(lm.model)
    cls = classify(t)
    if not cls.ergodic:
        raise CheckError(f"chain is not ergodic ({cls.evidence})")
    st = fixed_point(t, tol_fix=args.tol_fix)
    omega = limit_operator(st.pi_vec, t.n, t.k)
    return ChainAnalysis(t=t, pi=st.pi, pi_vec=st.pi_vec, omega=omega, z=fundamental_matrix(t, omega),
                         ops=hitting_operators(t))


def _density(spec: str, k: int, an_fn) -> np.ndarray:
    return parse_density(spec, k, (lambda i: an_fn().pi.blocks[i]))


def _vertex(v: int, n: int, flag: str) -> int:
    if not 0 <= v < n:
        raise UsageError(f"{flag} {v} is out of range 0..{n - 1}")
    return v


def _blocks_rows(m: np.ndarray, n: int, d: int):
    return [(f"({i},{j})", *m[i * d + r, j * d:(j + 1) * d])
            for i in range(n) for j in range(n) for r in range(d)]


def _form(spec: str, size: int) -> GInverseForm:
    """``fundamental``, ``perturbation[:a,b]`` (basis indices of t, u) or ``random:{a,b,c}[:seed]``."""
    kind, _, arg = spec.partition(":")
    try:
        idx = [int(x) for x in arg.split(",")] if arg and kind != "random" else []
    except ValueError as exc:
        raise UsageError(f"bad g-inverse spec {spec!r}") from exc
    if any(not 0 <= v < size for v in idx):
        raise UsageError(f"basis index out of range 0..{size - 1} in {spec!r}")
    if kind == "fundamental" and not arg:
        return GInverseForm("fundamental")
    if kind == "perturbation" and len(idx) in (0, 2):
        a, b = idx or (0, 0)
        return GInverseForm("perturbation", t=basis_vector(size, a), u=basis_vector(size, b))
    if kind == "random":
        fam, _, seed = arg.partition(":")
        order = {"a": 0, "b": 1, "c": 2}
        if fam not in order:
            raise UsageError("random g-inverse family must be a, b or c")
        try:
            s = int(seed) if seed else 0
        except ValueError as exc:
            raise UsageError(f"bad seed in {spec!r}") from exc
        return random_forms(size, order[fam] + 1, seed=s)[order[fam]]
    raise UsageError(f"unknown g-inverse spec {spec!r}")


# ---------------------------------------------------------------- commands

def cmd_validate(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    r = validate(lm.model, args.tol_model)
    t = block_matrix(lm.model)
    rep.results.update(vertices=lm.model.n, internal_dim=lm.model.k, params=lm.params)
    rep.residuals.update({f"column {j}": v for j, v in enumerate(r.residuals)})
    rep.residuals["<e_I|T - <e_I|"] = t.trace_residual()
    rep.tables.append(("model", ["field", "value"],
                       [("name", lm.model.name), ("vertices", lm.model.n), ("internal_dim", lm.model.k)]
                       + [(f"param {k}", v) for k, v in lm.params.items()]))
    rep.check("trace preserving", r.ok)


def cmd_stationary(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    t = block_matrix(lm.model)
    cls = classify(t)
    rep.results["classification"] = {"irreducible": cls.irreducible, "aperiodic": cls.aperiodic,
                                      "ergodic": cls.ergodic, "evidence": cls.evidence}
    rep.tables.append(("classification", ["property", "value"],
                       [("irreducible", cls.irreducible), ("aperiodic", str(cls.aperiodic)),
                        ("ergodic", cls.ergodic), ("evidence", cls.evidence)]))
    try:
        st = fixed_point(t, tol_fix=args.tol_fix)
    except StationaryError as exc:
        raise CheckError(str(exc)) from exc
    k = t.k
    rep.results["pi"] = [np.asarray(b) for b in st.pi.blocks]
    rep.results["vertex_weights"] = [float(np.trace(b).real) for b in st.pi.blocks]
    rep.residuals["||T pi - pi||"] = st.residual
    rep.residuals["min eigenvalue of pi blocks"] = st.min_block_eigenvalue
    rows = [(v, r, *np.asarray(b)[r]) for v, b in enumerate(st.pi.blocks) for r in range(k)]
    rep.tables.append(("stationary density blocks", ["vertex", "row"] + [f"col {c}" for c in range(k)], rows))
    rep.check("fixed point residual", st.residual <= args.tol_fix)
    rep.check("faithful", st.faithful)
    rep.check("ergodic", cls.ergodic)


def cmd_fundamental(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    an = _analysis(lm, args)
    rep.results["Z"] = an.z
    eye = np.eye(an.t.order)
    rep.residuals["||Z pi - pi||"] = float(np.linalg.norm(an.z @ an.pi_vec - an.pi_vec))
    ok, r = is_ginverse(eye - an.t.matrix, an.z)
    rep.residuals["g-inverse residual"] = r
    d = an.t.d
    if args.blocks:
        rep.tables.append(("fundamental matrix by block (i,j), one row per line",
                           ["block"] + [f"c{c}" for c in range(d)], _blocks_rows(an.z, an.t.n, d)))
    else:
        rep.tables.append(("fundamental matrix", [f"c{c}" for c in range(an.t.order)],
                           [tuple(row) for row in an.z]))
    rep.check("Z pi = pi", rep.residuals["||Z pi - pi||"] <= args.tol_fix)
    rep.check("Z is a g-inverse of I - T", ok)


def cmd_hitting(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    m = lm.model
    j, i = _vertex(args.source, m.n, "--from"), _vertex(args.target, m.n, "--to")
    t = block_matrix(m)
    try:
        ops = hitting_operators(t)
    except MonitoredRadiusError as exc:
        raise CheckError(str(exc)) from exc
    rho = _density(args.rho, m.k, lambda: _analysis(lm, args))
    ht = tau_and_pi(ops, rho, j, i, tol_hit=args.tol_hit)
    rep.results.update({"from": j, "to": i, "rho": rho, "probability": ht.probability, "tau": ht.tau})
    rep.residuals["first-step identity"] = first_step_residual(t, ops)
    label = "return" if i == j else "hitting"
    rep.tables.append((f"{label} time {j} -> {i} from {args.rho}", ["quantity", "value"],
                       [("probability", ht.probability), ("tau", ht.tau)]))
    rep.check("first-step identity", rep.residuals["first-step identity"] <= args.tol_formula)


def cmd_hunter(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    an = _analysis(lm, args)
    t, ops = an.t, an.ops
    try:
        g = ginverse_from_form(t, an.pi_vec, _form(args.ginverse, t.order))
    except InadmissibleError as exc:
        raise CheckError(str(exc)) from exc
    ok, resid = is_ginverse(np.eye(t.order) - t.matrix, g, tol=args.tol_ginv)
    rep.residuals["g-inverse residual"] = resid
    if not rep.check("g-inverse", ok):
        return
    h = hunter_matrix(t, an.omega, ops.D, g)
    d = t.d
    rho = _density(args.rho, t.k, lambda: an)
    rows, worst = [], 0.0
    for i in range(t.n):
        for j in range(t.n):
            if i == j:
                continue
            blk = h[i * d:(i + 1) * d, j * d:(j + 1) * d]
            v = trace_of_action(blk, rho).real
            ref = trace_of_action(ops.kk[i][j], rho).real
            for probe in probe_densities(t.k):
                worst = max(worst, abs(trace_of_action(blk, probe) - trace_of_action(ops.kk[i][j], probe)))
            rows.append((f"{j} -> {i}", v, ref, abs(v - ref)))
    rep.results["values"] = {r[0]: r[1] for r in rows}
    rep.residuals["max disagreement vs direct"] = worst
    rep.tables.append((f"Hunter route with g-inverse {args.ginverse}, rho = {args.rho}",
                       ["pair", "hunter", "direct", "|diff|"], rows))
    rep.check("Hunter route matches direct operators", worst <= args.tol_formula)


def cmd_target(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    an = _analysis(lm, args)
    rho = _density(args.rho, an.t.k, lambda: an)
    try:
        res = random_target(an.z, an.ops, rho, 0, family=args.family, tol_formula=args.tol_formula)
    except np.linalg.LinAlgError as exc:
        raise CheckError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep.results.update(applicable=res.applicable, c=res.c, per_vertex_c=list(res.per_vertex_c),
                       t_target=res.t_target, lhs_by_start=list(res.lhs_by_start), family=res.family)
    rep.residuals["max |lhs_j - t_target|"] = max(abs(v - res.t_target) for v in res.lhs_by_start)
    rep.tables.append(("random target", ["quantity", "value"],
                       [("common scalar c", "none" if res.c is None else res.c),
                        ("per-vertex c", ", ".join("none" if c is None else f"{c:.12g}" for c in res.per_vertex_c)),
                        ("density family", res.family or "any"),
                        ("t_target", res.t_target)]
                       + [(f"sum over targets from {j}", v) for j, v in enumerate(res.lhs_by_start)]))
    rep.check("scalar hypothesis or declared family", res.applicable or res.family is not None)
    rep.check("independent of the start vertex", res.consistent)


def cmd_mhtf2(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    an = _analysis(lm, args)
    res = mhtf2(an.z, an.ops, an.pi, tol=args.tol_formula)
    rep.results["Tr(K_j,pi)"] = res.values()
    rep.results["Tr((DZ)_jj F_j,pi)"] = [r.trace_dzf for r in res.rows]
    rep.residuals["max identity residual"] = res.max_residual
    rep.tables.append(("mean hitting time from the stationary state", ["vertex j", "Tr(K_j,pi)", "Tr((DZ)_jj F_j,pi)"],
                       [(r.j, r.trace_k, r.trace_dzf) for r in res.rows]))
    rep.check("both sides agree", res.ok)


def cmd_simulate(args, rep: Report):
    lm = _load(args)
    rep.model_digest, rep.model_name = lm.digest, lm.model.name
    m = lm.model
    j, i = _vertex(args.source, m.n, "--from"), _vertex(args.target, m.n, "--to")
    t = block_matrix(m)
    try:
        ops = hitting_operators(t)
    except MonitoredRadiusError as exc:
        raise CheckError(str(exc)) from exc
    rho = _density(args.rho, m.k, lambda: _analysis(lm, args))
    cfg = TrajectoryConfig(samples=args.samples, seed=args.seed, workers=args.workers, max_steps=args.max_steps)
    est = estimate_hitting(m, (j, rho), i, cfg)
    exact = tau_and_pi(ops, rho, j, i, tol_hit=args.tol_hit).tau
    z = (est.mean - exact) / est.stderr if est.stderr > 0 else float("nan")
    rep.results.update(mean=est.mean, stderr=est.stderr, hit_fraction=est.hit_fraction, censored=est.censored,
                       samples=est.samples, seed=args.seed, analytic=exact, z_score=z)
    rep.tables.append((f"Monte Carlo {j} -> {i} from {args.rho}", ["quantity", "value"],
                       [("samples", est.samples), ("mean", est.mean), ("stderr", est.stderr),
                        ("hit fraction", est.hit_fraction), ("censored", est.censored),
                        ("analytic tau", exact), ("z score", z)]))
    rep.check(f"within {args.sigmas:g} stderr of analytic", abs(est.mean - exact) <= args.sigmas * est.stderr)


def cmd_reproduce(args, rep: Report):
    results = run_golden()
    rows = []
    for r in results:
        rows.append((r.case.label, r.expected, r.value, r.error, r.case.tol, "PASS" if r.passed else "FAIL"))
        rep.checks.append((r.case.label, r.passed))
    rep.results["cases"] = [{"case": r.case.label, "expected": r.expected, "value": r.value,
                             "error": r.error, "tol": r.case.tol, "passed": r.passed, "routes": r.routes}
                            for r in results]
    rep.results["passed"] = sum(r.passed for r in results)
    rep.results["total"] = len(results)
    rep.tables.append(("golden values", ["case", "expected", "computed", "worst route error", "tol", "result"], rows))
    rep.tables.append(("summary", ["passed", "total"], [(rep.results["passed"], len(results))]))
    rep.checks = [(f"{rep.results['passed']}/{len(results)} golden cases", rep.results["passed"] == len(results))]


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmarkov", description="Hitting times of quantum Markov chains on graphs.")
    ap.add_argument("--version", action="version", version=f"qmarkov {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "machine"), default="human")
    common.add_argument("--tol-model", type=float, default=TOL_MODEL)
    common.add_argument("--tol-fix", type=float, default=TOL_FIX)
    common.add_argument("--tol-formula", type=float, default=TOL_FORMULA)
    common.add_argument("--tol-ginv", type=float, default=TOL_GINV)
    common.add_argument("--tol-hit", type=float, default=TOL_HIT)
    with_model = argparse.ArgumentParser(add_help=False, parents=[common])
    with_model.add_argument("model", help="model JSON file or bundled fixture name")
    with_model.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                            help="override a model parameter (repeatable)")
    pair = argparse.ArgumentParser(add_help=False)
    pair.add_argument("--from", dest="source", type=int, required=True, help="start vertex (0-based)")
    pair.add_argument("--to", dest="target", type=int, required=True, help="target vertex (0-based)")
    density = argparse.ArgumentParser(add_help=False)
    density.add_argument("--rho", default="mixed",
                         help="mixed | basis:a | diag:w,.. | bloch:x,y,z | stationary:i | file:path")

    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[with_model], help="check trace preservation").set_defaults(func=cmd_validate)
    sub.add_parser("stationary", parents=[with_model], help="stationary density and classification") \
        .set_defaults(func=cmd_stationary)
    p = sub.add_parser("fundamental", parents=[with_model], help="fundamental matrix Z")
    p.add_argument("--blocks", action="store_true", help="print blockwise")
    p.set_defaults(func=cmd_fundamental)
    sub.add_parser("hitting", parents=[with_model, pair, density], help="hitting probability and mean time") \
        .set_defaults(func=cmd_hitting)
    p = sub.add_parser("hunter", parents=[with_model, density], help="Hunter route for a chosen g-inverse")
    p.add_argument("--ginverse", default="fundamental",
                   help="fundamental | perturbation[:a,b] | random:{a,b,c}[:seed]")
    p.set_defaults(func=cmd_hunter)
    p = sub.add_parser("target", parents=[with_model, density], help="random target time")
    p.add_argument("--family", choices=("diagonal",), default=None,
                   help="declare that rho belongs to this density family")
    p.set_defaults(func=cmd_target)
    sub.add_parser("mhtf2", parents=[with_model], help="mean hitting times from the stationary state") \
        .set_defaults(func=cmd_mhtf2)
    p = sub.add_parser("simulate", parents=[with_model, pair, density], help="Monte Carlo estimate vs analytic")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--sigmas", type=float, default=4.0)
    p.set_defaults(func=cmd_simulate)
    sub.add_parser("reproduce-paper", parents=[common], help="check every bundled golden value") \
        .set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rep = Report(command=args.command)
    try:
        args.func(args, rep)
    except (UsageError, ModelFileError, DensitySpecError, UnboundIdentifierError, ValueError) as exc:
        if isinstance(exc, (InadmissibleError, StationaryError, MonitoredRadiusError)):
            print(f"qmarkov: check failed: {exc}", file=sys.stderr)
            return 1
        print(f"qmarkov: error: {exc}", file=sys.stderr)
        return 2
    except (CheckError, np.linalg.LinAlgError) as exc:
        print(f"qmarkov: check failed: {exc}", file=sys.stderr)
        return 1
    print(emit_report(rep, args.format))
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
