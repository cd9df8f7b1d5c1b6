"""Problem files, CSV reports, and the command-line driver.

Problems travel as JSON documents with a `kind` of "discrete" or
"continuous", matrix fields in row-major form, set specs keyed by `type`,
and a terminal-cost spec.  Reports are CSV with a fixed header plus a
'#'-prefixed human-readable summary block.  The driver exposes solve,
dual, certify, sweep, conjugate, and oracle subcommands with stable exit
codes: 0 success, 1 unknown subcommand, 2 validation error, 3 certificate
failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .convex_kernel import (
    Affine,
    Ball,
    Box,
    ConvexFn,
    ConvexSet,
    CoordinateSelect,
    HalfSquaredNorm,
    NormOne,
    Polytope,
    Quadratic,
    Singleton,
    conjugate,
)
from .discretization import (
    ContinuousProblem,
    MeshSpec,
    PascalTransform,
    build_pda,
    phi_lift_conjugate,
)
from .duality import CertificateReport, DualVariables, certify
from .inclusion_model import DiscreteProblem, SemilinearMap, TabulatedMap
from .solvers import (
    BudgetError,
    DualSolution,
    PrimalSolution,
    SolveOptions,
    brute_dual,
    brute_primal,
    solve_dual,
    solve_primal,
)

__all__ = [
    "ProblemFileError",
    "MalformedDocumentError",
    "SchemaError",
    "ValidationError",
    "ProblemDocument",
    "parse_document",
    "parse_problem",
    "parse_dual_variables",
    "emit_problem",
    "emit_dual_variables",
    "REPORT_HEADER",
    "ReportRow",
    "render_report",
    "cmd_sweep",
    "cmd_dispatch",
    "main",
]


# ---------------------------------------------------------------------------
# Errors (all map to exit code 2; the class records which stage failed)
# ---------------------------------------------------------------------------


class ProblemFileError(Exception):
    """Base class for problem-file rejections."""


class MalformedDocumentError(ProblemFileError):
    """The document is not valid JSON."""


class SchemaError(ProblemFileError):
    """A required field is missing or has the wrong shape/type."""


class ValidationError(ProblemFileError):
    """Fields parse but violate a semantic constraint."""


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _anchor(text: str, key: str) -> str:
    ln = _line_of(text, key)
    return f"line {ln}: " if ln is not None else ""


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _field(obj: dict, key: str, text: str, *, required: bool = True, default=None):
    if key not in obj:
        if required:
            raise SchemaError(f"missing field '{key}'")
        return default
    return obj[key]


def _matrix(value, rows: int, cols: int, key: str, text: str) -> np.ndarray:
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{_anchor(text, key)}field '{key}' is not numeric: {e}")
    if a.ndim == 1 and a.size == rows * cols:
        a = a.reshape(rows, cols)
    if a.shape != (rows, cols):
        raise ValidationError(
            f"{_anchor(text, key)}field '{key}' must be {rows}x{cols}, got shape {a.shape}"
        )
    return a


def _parse_set(spec, key: str, text: str, dim: Optional[int]) -> ConvexSet:
    if not isinstance(spec, dict) or "type" not in spec:
        raise SchemaError(f"{_anchor(text, key)}set '{key}' needs a 'type' field")
    kind = spec["type"]
    try:
        if kind == "box":
            S = Box(spec["lower"], spec["upper"])
        elif kind == "ball":
            S = Ball(spec["center"], spec["radius"])
        elif kind == "polytope":
            S = Polytope(spec["vertices"])
        elif kind == "singleton":
            S = Singleton(spec["point"])
        else:
            raise SchemaError(f"{_anchor(text, key)}set '{key}' has unknown type {kind!r}")
    except KeyError as e:
        raise SchemaError(f"{_anchor(text, key)}set '{key}' missing parameter {e.args[0]!r}")
    except ValueError as e:
        raise ValidationError(f"{_anchor(text, key)}set '{key}': {e}")
    if dim is not None and S.dim != dim:
        raise ValidationError(
            f"{_anchor(text, key)}set '{key}' must have dimension {dim}, got {S.dim}"
        )
    return S


def _parse_phi(spec, text: str, dim: Optional[int]) -> ConvexFn:
    if not isinstance(spec, dict) or "type" not in spec:
        raise SchemaError(f"{_anchor(text, 'phi')}'phi' needs a 'type' field")
    kind = spec["type"]
    try:
        if kind == "affine":
            f = Affine(spec["c"], float(spec.get("b", 0.0)))
        elif kind == "quadratic":
            P = np.asarray(spec["P"], dtype=float)
            m = int(round(math.sqrt(P.size))) if P.ndim == 1 else P.shape[0]
            P = P.reshape(m, m)
            c = spec.get("c", np.zeros(m))
            f = Quadratic(P, c, float(spec.get("b", 0.0)))
        elif kind == "coordinate":
            d = int(spec["dim"]) if "dim" in spec else dim
            if d is None:
                raise SchemaError(f"{_anchor(text, 'phi')}'phi' of type coordinate needs 'dim'")
            f = CoordinateSelect(spec["indices"], d)
        elif kind == "norm1":
            f = NormOne(int(spec["dim"]) if "dim" in spec else dim)
        elif kind == "halfsq":
            f = HalfSquaredNorm(int(spec["dim"]) if "dim" in spec else dim)
        else:
            raise SchemaError(f"{_anchor(text, 'phi')}'phi' has unknown type {kind!r}")
    except KeyError as e:
        raise SchemaError(f"{_anchor(text, 'phi')}'phi' missing parameter {e.args[0]!r}")
    except ValueError as e:
        raise ValidationError(f"{_anchor(text, 'phi')}'phi': {e}")
    if dim is not None and f.dim != dim:
        raise ValidationError(
            f"{_anchor(text, 'phi')}'phi' must have dimension {dim}, got {f.dim}"
        )
    return f


def _check_delta(d, text: str) -> float:
    try:
        dv = float(d)
    except (TypeError, ValueError):
        raise SchemaError(f"{_anchor(text, 'delta_list')}delta entries must be numbers")
    frac = Fraction(dv).limit_denominator(10**6)
    if frac.numerator != 1 or abs(dv - 1.0 / frac.denominator) > 1e-12:
        raise ValidationError(f"{_anchor(text, 'delta_list')}delta must be 1/K, got {d!r}")
    return 1.0 / frac.denominator


@dataclass(frozen=True)
class ProblemDocument:
    """A parsed problem file: the problem plus sweep metadata."""

    problem: object  # DiscreteProblem | ContinuousProblem
    delta_list: Optional[tuple]
    reference: Optional[float]
    name: Optional[str]


def parse_document(text: str) -> ProblemDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocumentError(f"line {e.lineno}: malformed document: {e.msg}")
    if not isinstance(doc, dict):
        raise SchemaError("top-level document must be an object")

    kind = _field(doc, "kind", text)
    if kind not in ("discrete", "continuous"):
        raise ValidationError(f"{_anchor(text, 'kind')}kind must be 'discrete' or 'continuous'")
    try:
        n = int(_field(doc, "n", text))
    except (TypeError, ValueError):
        raise SchemaError(f"{_anchor(text, 'n')}'n' must be an integer")
    name = doc.get("name")

    if "map" in doc:
        if kind != "discrete":
            raise ValidationError(
                f"{_anchor(text, 'map')}tabulated maps are only supported for discrete problems"
            )
        spec = doc["map"]
        if not isinstance(spec, dict) or "triples" not in spec:
            raise SchemaError(f"{_anchor(text, 'map')}'map' needs a 'triples' field")
        try:
            fmap = TabulatedMap([tuple(t) for t in spec["triples"]])
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{_anchor(text, 'triples')}'map.triples': {e}")
        if fmap.n != n:
            raise ValidationError(
                f"{_anchor(text, 'triples')}'map.triples' dimension {fmap.n} != n = {n}"
            )
    else:
        try:
            r = int(_field(doc, "r", text))
        except (TypeError, ValueError):
            raise SchemaError(f"{_anchor(text, 'r')}'r' must be an integer")
        A0 = _matrix(_field(doc, "A0", text), n, n, "A0", text)
        A1 = _matrix(_field(doc, "A1", text), n, n, "A1", text)
        B = _matrix(_field(doc, "B", text), n, r, "B", text)
        U = _parse_set(_field(doc, "U", text), "U", text, r)
        try:
            fmap = SemilinearMap(A0, A1, B, U)
        except ValueError as e:
            raise ValidationError(str(e))

    Q0 = _parse_set(_field(doc, "Q0", text), "Q0", text, n)
    Q1 = _parse_set(_field(doc, "Q1", text), "Q1", text, n)
    phi = _parse_phi(_field(doc, "phi", text), text, 2 * n)

    if kind == "discrete":
        try:
            N = int(_field(doc, "N", text))
        except (TypeError, ValueError):
            raise SchemaError(f"{_anchor(text, 'N')}'N' must be an integer")
        try:
            problem = DiscreteProblem(map=fmap, phi=phi, Q0=Q0, Q1=Q1, N=N)
        except ValueError as e:
            raise ValidationError(str(e))
        return ProblemDocument(problem=problem, delta_list=None, reference=None, name=name)

    if not isinstance(fmap, SemilinearMap):
        raise ValidationError("continuous problems require a semilinear map")
    raw = _field(doc, "delta_list", text)
    if not isinstance(raw, list):
        raise SchemaError(f"{_anchor(text, 'delta_list')}'delta_list' must be a list")
    deltas = tuple(_check_delta(d, text) for d in raw)
    ref = doc.get("reference")
    if ref is not None:
        try:
            ref = float(ref)
        except (TypeError, ValueError):
            raise SchemaError(f"{_anchor(text, 'reference')}'reference' must be a number")
    try:
        problem = ContinuousProblem(map=fmap, phi=phi, Q0=Q0, Q1=Q1)
    except ValueError as e:
        raise ValidationError(str(e))
    return ProblemDocument(problem=problem, delta_list=deltas, reference=ref, name=name)


def parse_problem(text: str):
    """Parse a problem file, returning the bare problem object."""
    return parse_document(text).problem


def parse_dual_variables(text: str) -> DualVariables:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocumentError(f"line {e.lineno}: malformed document: {e.msg}")
    if not isinstance(doc, dict) or "xstar" not in doc or "mustar" not in doc:
        raise SchemaError("dual file needs 'xstar' and 'mustar' fields")
    try:
        return DualVariables(doc["xstar"], doc["mustar"])
    except (TypeError, ValueError) as e:
        raise ValidationError(f"dual variables: {e}")


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _set_spec(S: ConvexSet) -> dict:
    if isinstance(S, Box):
        return {"type": "box", "lower": S.lower.tolist(), "upper": S.upper.tolist()}
    if isinstance(S, Ball):
        return {"type": "ball", "center": S.center.tolist(), "radius": S.radius}
    if isinstance(S, Polytope):
        return {"type": "polytope", "vertices": S.vertices.tolist()}
    if isinstance(S, Singleton):
        return {"type": "singleton", "point": S.point.tolist()}
    raise ValidationError(f"set {type(S).__name__} has no file form")


def _phi_spec(f: ConvexFn) -> dict:
    if isinstance(f, Affine):
        return {"type": "affine", "c": f.c.tolist(), "b": f.b}
    if isinstance(f, Quadratic):
        return {"type": "quadratic", "P": f.P.tolist(), "c": f.c.tolist(), "b": f.b}
    if isinstance(f, CoordinateSelect):
        return {"type": "coordinate", "indices": list(f.indices), "dim": f.dim}
    if isinstance(f, NormOne):
        return {"type": "norm1", "dim": f.dim}
    if isinstance(f, HalfSquaredNorm):
        return {"type": "halfsq", "dim": f.dim}
    raise ValidationError(f"terminal cost {type(f).__name__} has no file form")


def emit_problem(doc) -> str:
    """Serialize a ProblemDocument (or bare problem) back to JSON text."""
    if not isinstance(doc, ProblemDocument):
        doc = ProblemDocument(problem=doc, delta_list=None, reference=None, name=None)
    p = doc.problem
    out: dict = {}
    if doc.name is not None:
        out["name"] = doc.name
    if isinstance(p, DiscreteProblem):
        out["kind"] = "discrete"
        out["n"] = p.n
        if p.semilinear:
            F: SemilinearMap = p.map
            out["r"] = F.r
            out["A0"] = F.A0.tolist()
            out["A1"] = F.A1.tolist()
            out["B"] = F.B.tolist()
            out["U"] = _set_spec(F.U)
        else:
            T: TabulatedMap = p.map
            out["map"] = {
                "triples": [
                    [T.xs[i].tolist(), T.ys[i].tolist(), T.zs[i].tolist()]
                    for i in range(len(T.xs))
                ]
            }
        out["N"] = p.N
    elif isinstance(p, ContinuousProblem):
        out["kind"] = "continuous"
        out["n"] = p.n
        out["r"] = p.r
        out["A0"] = p.map.A0.tolist()
        out["A1"] = p.map.A1.tolist()
        out["B"] = p.map.B.tolist()
        out["U"] = _set_spec(p.map.U)
        out["delta_list"] = list(doc.delta_list or ())
        if doc.reference is not None:
            out["reference"] = doc.reference
    else:
        raise ValidationError(f"cannot serialize {type(p).__name__}")
    out["Q0"] = _set_spec(p.Q0)
    out["Q1"] = _set_spec(p.Q1)
    out["phi"] = _phi_spec(p.phi)
    return json.dumps(out, indent=2) + "\n"


def emit_dual_variables(dv: DualVariables) -> str:
    return json.dumps(
        {"xstar": [v.tolist() for v in dv.xstar], "mustar": [v.tolist() for v in dv.mustar]},
        indent=2,
    ) + "\n"


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


REPORT_HEADER = (
    "delta,primal,dual,gap,el_residual_max,trans_residual_max,"
    "fenchel_residual,iterations,converged"
)


@dataclass(frozen=True)
class ReportRow:
    delta: Optional[float] = None
    primal: Optional[float] = None
    dual: Optional[float] = None
    el_residual_max: Optional[float] = None
    trans_residual_max: Optional[float] = None
    fenchel_residual: Optional[float] = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None

    @property
    def gap(self) -> Optional[float]:
        if self.primal is None or self.dual is None:
            return None
        return self.primal - self.dual

    def render(self) -> str:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "True" if v else "False"
            if isinstance(v, int):
                return str(v)
            return repr(float(v))

        return ",".join(
            cell(v)
            for v in (
                self.delta,
                self.primal,
                self.dual,
                self.gap,
                self.el_residual_max,
                self.trans_residual_max,
                self.fenchel_residual,
                self.iterations,
                self.converged,
            )
        )


def render_report(rows: Sequence[ReportRow], summary: Sequence[str] = ()) -> str:
    lines = [REPORT_HEADER]
    lines.extend(row.render() for row in rows)
    lines.extend(f"# {s}" for s in summary)
    return "\n".join(lines) + "\n"


def _row_from_certificate(
    rep: CertificateReport, delta: Optional[float], iterations: int, converged: bool
) -> ReportRow:
    el_max = max((max(pair) for pair in rep.el_residuals), default=0.0)
    return ReportRow(
        delta=delta,
        primal=float(rep.primal_value),
        dual=float(rep.dual_value),
        el_residual_max=el_max,
        trans_residual_max=max(rep.trans0, rep.trans1),
        fenchel_residual=rep.fenchel_terminal,
        iterations=iterations,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Sweep driver
# ---------------------------------------------------------------------------


def _solve_and_certify(
    p: DiscreteProblem, opts: SolveOptions, tol: float
) -> tuple[PrimalSolution, DualSolution, CertificateReport]:
    ps = solve_primal(p, opts)
    try:
        oracle = brute_primal(p, opts)
        if oracle.value.is_finite and float(oracle.value) < float(ps.value):
            ps = oracle
    except BudgetError:
        pass
    ds = solve_dual(p, opts)
    rep = certify(p, ps, DualVariables.from_dual_solution(ds), tol=tol)
    return ps, ds, rep


def cmd_sweep(
    cp: ContinuousProblem,
    delta_list: Sequence[float],
    opts: SolveOptions = SolveOptions(),
    tol: float = 1e-8,
    reference: Optional[float] = None,
) -> tuple[str, bool]:
    """Run the mesh sweep and return (report text, all certificates passed)."""
    deltas = sorted(set(float(d) for d in delta_list), reverse=True)
    rows: list[ReportRow] = []
    summary: list[str] = []
    errs: list[tuple[float, float]] = []
    all_pass = True
    for d in deltas:
        try:
            mesh = MeshSpec(d)
            p = build_pda(cp, mesh)
            ps, ds, rep = _solve_and_certify(p, opts, tol)
        except (BudgetError, ValueError) as e:
            rows.append(ReportRow(delta=d, converged=False))
            summary.append(f"delta={d!r}: error: {e}")
            all_pass = False
            continue
        rows.append(
            _row_from_certificate(rep, d, ps.iterations, ps.converged and ds.converged)
        )
        if not rep.passed:
            summary.append(f"delta={d!r}: certificate FAIL")
            all_pass = False
        if reference is not None and rep.primal_value.is_finite:
            err = abs(float(rep.primal_value) - reference)
            if err > 0:
                errs.append((d, err))
    if reference is not None:
        summary.append(f"reference: {reference!r}")
        if len(errs) >= 2:
            ld = np.log([d for d, _ in errs])
            le = np.log([e for _, e in errs])
            order = float(np.polyfit(ld, le, 1)[0])
            summary.append(f"empirical_order: {order:.3f}")
    return render_report(rows, summary), all_pass


# ---------------------------------------------------------------------------
# Command-line driver
# ---------------------------------------------------------------------------


USAGE = (
    "usage: incdual <solve|dual|certify|sweep|conjugate|oracle> [flags] [problem-file]\n"
)

_COMMANDS = ("solve", "dual", "certify", "sweep", "conjugate", "oracle")


def _add_common(sp: argparse.ArgumentParser, problem_arg: bool = True):
    if problem_arg:
        sp.add_argument("problem", help="problem file (JSON)")
    sp.add_argument("--tol", type=float, default=1e-8, help="certificate tolerance")
    sp.add_argument("--seed", type=int, default=0, help="RNG seed")
    sp.add_argument("--max-iter", type=int, default=2000, help="solver iteration cap")
    sp.add_argument("--grid", type=int, default=41, help="oracle grid resolution per axis")
    sp.add_argument("--out", default=None, help="write output to this path")
    sp.add_argument("--format", choices=("csv", "text"), default="text")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="incdual", usage=USAGE.strip()[7:])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve the primal problem")
    _add_common(sp)
    sp.add_argument("--delta", type=float, default=None, help="mesh for continuous problems")

    sp = sub.add_parser("dual", help="solve the dual problem")
    _add_common(sp)
    sp.add_argument("--delta", type=float, default=None)

    sp = sub.add_parser("certify", help="check the optimality certificate")
    _add_common(sp)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--dual", dest="dual_file", default=None, help="dual variables file")

    sp = sub.add_parser("sweep", help="mesh sweep over delta_list")
    _add_common(sp)
    sp.add_argument("--reference", type=float, default=None, help="limit value for order fit")

    sp = sub.add_parser("conjugate", help="conjugate / transform evaluations")
    sp.add_argument("--pascal", type=int, default=None, metavar="M", help="transform order")
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--in", dest="values", default=None, help="comma-separated input values")
    sp.add_argument("--expr", default=None, help="expression file (JSON)")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("oracle", help="brute-force enumeration runs")
    _add_common(sp)
    sp.add_argument("--delta", type=float, default=None)
    return ap


def _load(args) -> ProblemDocument:
    with open(args.problem, "r", encoding="utf-8") as fh:
        return parse_document(fh.read())


def _discrete_from(args, doc: ProblemDocument) -> DiscreteProblem:
    p = doc.problem
    if isinstance(p, DiscreteProblem):
        return p
    delta = args.delta
    if delta is None:
        if not doc.delta_list:
            raise ValidationError("continuous problem needs --delta or a delta_list")
        delta = doc.delta_list[0]
    return build_pda(p, MeshSpec(delta))


def _opts(args) -> SolveOptions:
    return SolveOptions(
        max_iter=args.max_iter, rng_seed=args.seed, grid_resolution=args.grid
    )


def _write(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _vector_lines(label: str, vecs) -> list[str]:
    return [f"{label}[{i}] = {np.asarray(v).tolist()}" for i, v in enumerate(vecs)]


def _cmd_solve(args) -> int:
    doc = _load(args)
    p = _discrete_from(args, doc)
    ps = solve_primal(p, _opts(args))
    if args.format == "csv":
        row = ReportRow(
            delta=args.delta,
            primal=float(ps.value),
            iterations=ps.iterations,
            converged=ps.converged,
        )
        _write(args, render_report([row]))
        return 0
    lines = [
        f"primal value: {float(ps.value)!r}",
        f"iterations: {ps.iterations}",
        f"converged: {ps.converged}",
        f"feasible: {ps.feasible}",
    ]
    if ps.trajectory is not None:
        lines += _vector_lines("x", ps.trajectory.states)
    _write(args, "\n".join(lines) + "\n")
    return 0


def _cmd_dual(args) -> int:
    doc = _load(args)
    p = _discrete_from(args, doc)
    ds = solve_dual(p, _opts(args))
    if args.format == "csv":
        row = ReportRow(delta=args.delta, dual=float(ds.value), converged=ds.converged)
        _write(args, render_report([row]))
        return 0
    lines = [f"dual value: {float(ds.value)!r}", f"converged: {ds.converged}"]
    lines += _vector_lines("xstar", ds.xstar)
    lines += _vector_lines("mustar", ds.mustar)
    _write(args, "\n".join(lines) + "\n")
    return 0


def _cmd_certify(args) -> int:
    doc = _load(args)
    p = _discrete_from(args, doc)
    opts = _opts(args)
    ps = solve_primal(p, opts)
    if args.dual_file:
        with open(args.dual_file, "r", encoding="utf-8") as fh:
            dv = parse_dual_variables(fh.read())
    else:
        dv = DualVariables.from_dual_solution(solve_dual(p, opts))
    rep = certify(p, ps, dv, tol=args.tol)
    if args.format == "csv":
        row = _row_from_certificate(rep, args.delta, ps.iterations, ps.converged)
        _write(args, render_report([row]))
    else:
        _write(args, "\n".join(rep.summary_lines()) + "\n")
    return 0 if rep.passed else 3


def _cmd_sweep(args) -> int:
    doc = _load(args)
    if not isinstance(doc.problem, ContinuousProblem):
        raise ValidationError("sweep needs a continuous problem file")
    reference = args.reference if args.reference is not None else doc.reference
    text, ok = cmd_sweep(
        doc.problem,
        doc.delta_list or (),
        _opts(args),
        tol=args.tol,
        reference=reference,
    )
    _write(args, text)
    return 0 if ok else 3


def _format_values(values) -> str:
    vecs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in values]
    if all(len(v) == 1 for v in vecs):
        return ",".join("%g" % v[0] for v in vecs)
    return ";".join(",".join("%g" % x for x in v) for v in vecs)


def _cmd_conjugate(args) -> int:
    if args.pascal is not None:
        if args.delta is None or args.values is None:
            raise ValidationError("conjugate --pascal needs --delta and --in")
        vals = [float(s) for s in args.values.split(",") if s.strip()]
        if len(vals) != args.pascal + 1:
            raise ValidationError(
                f"conjugate --pascal {args.pascal} needs {args.pascal + 1} input values"
            )
        out = PascalTransform(args.pascal, args.delta).apply([[v] for v in vals])
        text = _format_values(out) + "\n"
    elif args.expr is not None:
        with open(args.expr, "r", encoding="utf-8") as fh:
            try:
                doc = json.loads(fh.read())
            except json.JSONDecodeError as e:
                raise MalformedDocumentError(f"line {e.lineno}: malformed document: {e.msg}")
        op = doc.get("op")
        if op == "conjugate":
            phi = _parse_phi(doc.get("phi"), "", None)
            val = conjugate(phi, np.asarray(doc["at"], dtype=float))
            text = "%g\n" % float(val)
        elif op == "lift_conjugate":
            phi = _parse_phi(doc.get("phi"), "", None)
            at = np.asarray(doc["at"], dtype=float)
            half = len(at) // 2
            val = phi_lift_conjugate(phi, float(doc["delta"]), at[:half], at[half:])
            text = "%g\n" % float(val)
        elif op == "pascal":
            out = PascalTransform(int(doc["m"]), float(doc["delta"])).apply(
                [np.atleast_1d(np.asarray(v, dtype=float)) for v in doc["in"]]
            )
            text = _format_values(out) + "\n"
        else:
            raise ValidationError(f"unknown conjugate op {op!r}")
    else:
        raise ValidationError("conjugate needs --pascal or --expr")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle(args) -> int:
    doc = _load(args)
    p = _discrete_from(args, doc)
    opts = _opts(args)
    ps = brute_primal(p, opts)
    lines = [f"oracle primal: {float(ps.value)!r}"]
    if p.semilinear and p.n <= 2:
        ds = brute_dual(p, opts)
        lines.append(f"oracle dual: {float(ds.value)!r}")
    _write(args, "\n".join(lines) + "\n")
    return 0


_HANDLERS = {
    "solve": _cmd_solve,
    "dual": _cmd_dual,
    "certify": _cmd_certify,
    "sweep": _cmd_sweep,
    "conjugate": _cmd_conjugate,
    "oracle": _cmd_oracle,
}


def cmd_dispatch(argv: Sequence[str]) -> int:
    argv = list(argv)
    if not argv or (argv[0] not in _COMMANDS and argv[0] not in ("-h", "--help")):
        sys.stderr.write(USAGE)
        return 1
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    try:
        return _HANDLERS[args.command](args)
    except ProblemFileError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except BudgetError as e:
        sys.stderr.write(f"error: {e}\n")
        return 4
    except (ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


def main() -> None:
    sys.exit(cmd_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
