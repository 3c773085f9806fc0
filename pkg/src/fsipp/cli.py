"""Batch front end: problem files in, reports out.

Four commands operate on a JSON problem document (schema shipped with the
package): ``classify`` prints the solver route for the instance,
``solve`` runs the relaxation hierarchy and writes a run report,
``certify`` runs the feasibility/stationarity check at a given point, and
``pareto`` runs the sequential efficient-point scheme for files with an
objectives list.  Reports are canonical JSON (sorted keys, two-space
indent, trailing newline) so that byte-identical round-trips hold; trace
rows and image grids can additionally be exported as CSV.  Exit status is
0 for the CERTIFIED, INCONCLUSIVE and INFEASIBLE verdicts and 2 for
ERROR (bad files, bad arguments, failed runs).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft7Validator

from .certify import certify_point, feasibility_check
from .errors import OptimumKnownSignal
from .multiobj import MultiFsippProblem, epsilon_constraint_solve, image_grid
from .poly import BivariatePoly, Polynomial
from .relax import (CaseTag, FsippProblem, Interval, QuadraticSet,
                    RelaxOptions, Semialgebraic, choose_R_gstar,
                    classify_case, convexity_findings, solve_hierarchy)

_SCHEMAS: dict[str, dict] = {}


class CliError(Exception):
    """A user-facing failure; carries one message line per finding."""

    def __init__(self, *lines: str):
        super().__init__("\n".join(lines))
        self.lines = list(lines)


def _schema(name: str) -> dict:
    if name not in _SCHEMAS:
        text = (resources.files("fsipp") / "schemas" /
                f"{name}.schema.json").read_text(encoding="utf-8")
        _SCHEMAS[name] = json.loads(text)
    return _SCHEMAS[name]


def validate_document(doc, name: str) -> list[str]:
    """Schema findings as ``<json-pointer>: <message>`` lines (empty = valid)."""
    validator = Draft7Validator(_schema(name))
    out = []
    for err in sorted(validator.iter_errors(doc),
                      key=lambda e: [str(p) for p in e.absolute_path]):
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        out.append(f"{pointer}: {err.message}")
    return out


# --------------------------------------------------------------------------
# problem-file parsing
# --------------------------------------------------------------------------


def _poly(nvars: int, pairs) -> Polynomial:
    return Polynomial.from_pairs(nvars, pairs)


def _family(items, n_x: int, n_y: int) -> BivariatePoly:
    slices: dict[tuple[int, ...], Polynomial] = {}
    for item in items:
        ymono = tuple(int(e) for e in item["y_monomial"])
        if len(ymono) != n_y:
            raise CliError(f"/p: y_monomial {list(ymono)} does not have "
                           f"length {n_y}")
        px = _poly(n_x, item["coeffs"])
        slices[ymono] = slices[ymono] + px if ymono in slices else px
    return BivariatePoly(n_x, n_y, slices)


def _index_set(doc, n_y: int, options: dict):
    kind = doc["kind"]
    if kind == "interval":
        if n_y != 1:
            raise CliError("/index_set: the interval index set is univariate "
                           f"but vars_y is {n_y}")
        return Interval()
    if kind == "quadratic":
        return QuadraticSet(_poly(n_y, doc["phi"]),
                            tuple(float(c) for c in doc["interior_point"]))
    gens = tuple(_poly(n_y, g) for g in doc["generators"])
    hint = doc.get("archimedean_hint", options.get("archimedean_hint"))
    return Semialgebraic(gens, archimedean_hint=hint)


class ParsedProblem:
    """A problem document resolved into solver inputs."""

    def __init__(self, doc: dict, args=None):
        findings = validate_document(doc, "problem")
        if findings:
            raise CliError(*[f"schema error at {line}" for line in findings])
        self.doc = doc
        n_x, n_y = int(doc["vars_x"]), int(doc["vars_y"])
        options = dict(doc.get("options", {}))
        self.hints = dict(doc.get("hints", {}))
        psis = tuple(_poly(n_x, q) for q in doc.get("psis", []))
        p = _family(doc["p"], n_x, n_y)
        index_set = _index_set(doc["index_set"], n_y, options)

        for field in ("k_min", "k_max", "tau", "tol"):
            flag = getattr(args, field, None) if args is not None else None
            if flag is not None:
                options[field if field != "tol" else "sdp_tol"] = flag
        override = options.get("case_override")
        self.opts = RelaxOptions(
            R=options.get("R"), g_star=options.get("g_star"),
            k=options.get("k_max"),
            case_override=CaseTag(override) if override else None,
            tau=options.get("tau", 1e-3),
            sdp_tol=options.get("sdp_tol", 1e-8))
        k_min, k_max = options.get("k_min"), options.get("k_max")
        if k_min is not None:
            self.k_range = (int(k_min), int(max(k_min, k_max or k_min)))
        else:
            self.k_range = None  # default span up to opts.k

        self.single: FsippProblem | None = None
        self.multi: MultiFsippProblem | None = None
        if "objective" in doc:
            f = _poly(n_x, doc["objective"]["f"])
            g = _poly(n_x, doc["objective"]["g"])
            self.single = FsippProblem(f, g, psis, p, index_set)
        else:
            pairs = tuple((_poly(n_x, o["f"]), _poly(n_x, o["g"]))
                          for o in doc["objectives"])
            self.multi = MultiFsippProblem(pairs, p, index_set, psis)

    def require_single(self, command: str) -> FsippProblem:
        if self.single is None:
            raise CliError(f"{command} needs a single objective; "
                           "this file declares an objectives list")
        return self.single

    def require_multi(self, command: str) -> MultiFsippProblem:
        if self.multi is None:
            raise CliError(f"{command} needs an objectives list; "
                           "this file declares a single objective")
        return self.multi


def _index_set_doc(index_set) -> dict:
    if isinstance(index_set, Interval):
        return {"kind": "interval"}
    if isinstance(index_set, QuadraticSet):
        return {"kind": "quadratic", "phi": index_set.phi.to_pairs(),
                "interior_point": [float(c) for c in index_set.interior_point]}
    doc = {"kind": "semialgebraic",
           "generators": [g.to_pairs() for g in index_set.generators]}
    if index_set.archimedean_hint is not None:
        doc["archimedean_hint"] = float(index_set.archimedean_hint)
    return doc


def problem_to_doc(problem, options: dict | None = None,
                   hints: dict | None = None) -> dict:
    """Encode a single- or multi-objective problem as a problem-file
    document (the inverse of parsing)."""
    p = problem.p
    doc = {
        "vars_x": p.n_x,
        "vars_y": p.n_y,
        "psis": [q.to_pairs() for q in problem.psis],
        "p": [{"y_monomial": list(ymono), "coeffs": px.to_pairs()}
              for ymono, px in sorted(p.slices.items())],
        "index_set": _index_set_doc(problem.index_set),
    }
    if isinstance(problem, MultiFsippProblem):
        doc["objectives"] = [{"f": f.to_pairs(), "g": g.to_pairs()}
                             for f, g in problem.objectives]
    else:
        doc["objective"] = {"f": problem.f.to_pairs(),
                            "g": problem.g.to_pairs()}
    if options:
        doc["options"] = dict(options)
    if hints:
        doc["hints"] = dict(hints)
    return doc


def _load(path: str) -> dict:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not JSON: {exc}") from exc


def problem_sha256(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# report emission
# --------------------------------------------------------------------------


def _plain(obj):
    """Make a structure JSON-clean: numpy scalars/arrays to Python types,
    tuples to lists, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def render_report(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"


def _write_out(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_path(out: str) -> Path:
    path = Path(out)
    if path.suffix == ".csv":
        return path.with_suffix(".rows.csv")
    return path.with_suffix(".csv")


def _write_csv(path: Path, header: list[str], rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


EXIT_BY_VERDICT = {"CERTIFIED": 0, "INCONCLUSIVE": 0, "INFEASIBLE": 1,
                   "ERROR": 2}


def _finish(report: dict, out: str | None) -> int:
    _write_out(render_report(report), out)
    return EXIT_BY_VERDICT[report["verdict"]]


def _error_report(command: str, doc, message: str, started: float) -> dict:
    sha = problem_sha256(doc) if isinstance(doc, dict) else "0" * 64
    return {"command": command, "problem_sha256": sha, "verdict": "ERROR",
            "error": message, "timing_seconds": time.perf_counter() - started}


def _row_doc(row) -> dict:
    return {
        "k": row.k,
        "r_primal": row.r_primal if np.isfinite(row.r_primal) else None,
        "r_dual": row.r_dual if np.isfinite(row.r_dual) else None,
        "dual_status": row.dual_status,
        "primal_status": row.primal_status,
        "dual_iterations": row.dual_iterations,
        "primal_iterations": row.primal_iterations,
        "error": row.error,
    }


def _solve_verdict(trace) -> str:
    if ((trace.certificate is not None and trace.certificate.passed)
            or (trace.kkt is not None and trace.kkt.passes)):
        return "CERTIFIED"
    if trace.rows and all(r.dual_status == "PrimalInfeasible"
                          for r in trace.rows):
        return "INFEASIBLE"
    return "INCONCLUSIVE"


def _trace_doc(trace) -> dict:
    atoms = None
    if trace.atoms is not None:
        atoms = [{"point": pt, "weight": w} for pt, w in trace.atoms]
    return {
        "tag": trace.tag.value,
        "rows": [_row_doc(r) for r in trace.rows],
        "r_dual": trace.r_dual if np.isfinite(trace.r_dual) else None,
        "r_primal": trace.r_primal if np.isfinite(trace.r_primal) else None,
        "candidate": trace.candidate,
        "atoms": atoms,
        "certificate":
            trace.certificate.as_dict() if trace.certificate else None,
        "kkt": trace.kkt.as_dict() if trace.kkt else None,
        "hessian_pd": trace.hessian_pd,
        "stop_reason": trace.stop_reason,
        "solver": {
            "orders_solved": len(trace.rows),
            "total_iterations": sum(r.dual_iterations + r.primal_iterations
                                    for r in trace.rows),
        },
    }


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def run_classify(args) -> int:
    doc = _load(args.problem)
    parsed = ParsedProblem(doc, args)
    prob = parsed.single if parsed.single is not None \
        else parsed.multi.base_problem(1)
    lines = []
    if parsed.multi is not None:
        lines.append(f"classifying objective 1 of {parsed.multi.t}")
    override = parsed.opts.case_override
    if override is not None:
        lines.append(f"override: {override.value}")
    elif isinstance(prob.index_set, Interval) or (
            isinstance(prob.index_set, QuadraticSet) and prob.p.d_y <= 2):
        for name, ok in convexity_findings(prob):
            lines.append(
                f"{name}: {'sos-convex' if ok else 'not sos-convex'}")
    elif isinstance(prob.index_set, Semialgebraic):
        hint = prob.index_set.archimedean_hint
        lines.append("index set: semialgebraic, archimedean hint "
                     + (f"M={hint}" if hint is not None else "not declared"))
    tag = classify_case(prob, override)
    lines.append(tag.value)
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _resolved_options(parsed: ParsedProblem, prob: FsippProblem):
    """Fill R/g_star from the hint recipes when the route needs them."""
    opts = parsed.opts
    if opts.R is not None or "bound" not in parsed.hints:
        return opts
    tag = classify_case(prob, opts.case_override)
    if tag in (CaseTag.CASE1, CaseTag.CASE2):
        return opts
    R, g_star = choose_R_gstar(prob, parsed.hints)
    return RelaxOptions(R=R, g_star=opts.g_star if opts.g_star is not None
                        else g_star, k=opts.k,
                        case_override=opts.case_override, tau=opts.tau,
                        rank_tol=opts.rank_tol, sdp_tol=opts.sdp_tol)


def run_solve(args) -> int:
    started = time.perf_counter()
    try:
        doc = _load(args.problem)
        parsed = ParsedProblem(doc, args)
        prob = parsed.require_single("solve")
        try:
            opts = _resolved_options(parsed, prob)
            trace = solve_hierarchy(prob, opts, parsed.k_range)
        except OptimumKnownSignal as sig:
            report = {"command": "solve", "problem_sha256": problem_sha256(doc),
                      "tag": classify_case(prob, parsed.opts.case_override).value,
                      "rows": [], "r_dual": sig.r_star, "r_primal": sig.r_star,
                      "candidate": sig.point, "atoms": None,
                      "certificate": None, "kkt": None, "hessian_pd": None,
                      "stop_reason": "known-optimum",
                      "solver": {"orders_solved": 0, "total_iterations": 0},
                      "verdict": "CERTIFIED",
                      "timing_seconds": time.perf_counter() - started}
            return _finish(report, args.out)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return _finish(_error_report("solve", locals().get("doc"),
                                     str(exc), started), args.out)
    except Exception as exc:  # noqa: BLE001 - surfaced as ERROR verdict
        return _finish(_error_report("solve", locals().get("doc"),
                                     f"{type(exc).__name__}: {exc}", started),
                       args.out)
    report = {"command": "solve", "problem_sha256": problem_sha256(doc),
              **_trace_doc(trace), "verdict": _solve_verdict(trace),
              "timing_seconds": time.perf_counter() - started}
    code = _finish(report, args.out)
    if args.out:
        _write_csv(_csv_path(args.out),
                   ["k", "r_primal", "r_dual", "dual_status", "primal_status",
                    "dual_iterations", "primal_iterations", "error"],
                   [[r.k,
                     repr(r.r_primal) if np.isfinite(r.r_primal) else "",
                     repr(r.r_dual) if np.isfinite(r.r_dual) else "",
                     r.dual_status, r.primal_status, r.dual_iterations,
                     r.primal_iterations, r.error or ""]
                    for r in trace.rows])
    return code


def _parse_point(text: str, m: int, what: str) -> np.ndarray:
    try:
        values = [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise CliError(f"{what} must be comma-separated numbers") from exc
    if len(values) != m:
        raise CliError(f"{what} has {len(values)} coordinates; expected {m}")
    return np.array(values)


def run_certify(args) -> int:
    started = time.perf_counter()
    try:
        doc = _load(args.problem)
        parsed = ParsedProblem(doc, args)
        prob = parsed.require_single("certify")
        point = _parse_point(args.point, prob.m, "point")
        kkt = certify_point(point, prob, tau=parsed.opts.tau,
                            sdp_tol=parsed.opts.sdp_tol)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return _finish(_error_report("certify", locals().get("doc"),
                                     str(exc), started), args.out)
    except Exception as exc:  # noqa: BLE001
        return _finish(_error_report("certify", locals().get("doc"),
                                     f"{type(exc).__name__}: {exc}", started),
                       args.out)
    report = {"command": "certify", "problem_sha256": problem_sha256(doc),
              "point": point, "kkt": kkt.as_dict(),
              "verdict": "CERTIFIED" if kkt.passes else "INCONCLUSIVE",
              "timing_seconds": time.perf_counter() - started}
    return _finish(report, args.out)


def _parse_box(text: str, m: int) -> list[tuple[float, float]]:
    try:
        values = [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise CliError("--box must be comma-separated numbers") from exc
    if len(values) != 2 * m:
        raise CliError(f"--box needs {2 * m} numbers (lo,hi per variable); "
                       f"got {len(values)}")
    box = list(zip(values[0::2], values[1::2]))
    if any(lo >= hi for lo, hi in box):
        raise CliError("--box intervals must have lo < hi")
    return box


def run_pareto(args) -> int:
    started = time.perf_counter()
    try:
        doc = _load(args.problem)
        parsed = ParsedProblem(doc, args)
        mprob = parsed.require_multi("pareto")
        if args.u0 is not None:
            u0 = _parse_point(args.u0, mprob.m, "u0")
        elif "feasible_point" in parsed.hints:
            u0 = np.asarray(parsed.hints["feasible_point"], dtype=float)
        else:
            raise CliError("pareto needs an initial point: pass u0 on the "
                           "command line or hints.feasible_point in the file")
        ok, margin = feasibility_check(u0, mprob.base_problem(1),
                                       tau=parsed.opts.tau)
        if not ok:
            raise CliError(f"initial point infeasible: constraint margin "
                           f"{margin:.3e} > {parsed.opts.tau}")
        result = epsilon_constraint_solve(mprob, u0, parsed.opts,
                                          parsed.k_range)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return _finish(_error_report("pareto", locals().get("doc"),
                                     str(exc), started), args.out)
    except Exception as exc:  # noqa: BLE001
        return _finish(_error_report("pareto", locals().get("doc"),
                                     f"{type(exc).__name__}: {exc}", started),
                       args.out)
    certified = (result.stopped_by == "Uniqueness"
                 or all(t.stop_reason in ("single", "rank", "kkt")
                        for t in result.traces))
    report = {
        "command": "pareto", "problem_sha256": problem_sha256(doc),
        "stages": [{"stage": i, "point": u,
                    "value": r if np.isfinite(r) else None,
                    "tag": result.traces[i - 1].tag.value,
                    "stop_reason": result.traces[i - 1].stop_reason}
                   for i, u, r in result.path],
        "final_point": result.final_point,
        "objective_vector": result.objective_vector,
        "stopped_by": result.stopped_by,
        "verdict": "CERTIFIED" if certified else "INCONCLUSIVE",
        "timing_seconds": time.perf_counter() - started,
    }
    code = _finish(report, args.out)
    if args.out and args.box is not None:
        box = _parse_box(args.box, mprob.m)
        pts, feas, vals = image_grid(mprob, box, grid_size=args.grid)
        header = ([f"x{i + 1}" for i in range(mprob.m)] + ["feasible"]
                  + [f"objective{i + 1}" for i in range(mprob.t)])
        rows = [[repr(float(c)) for c in pts[n]] + [int(feas[n])]
                + [repr(float(v)) for v in vals[n]]
                for n in range(len(pts))]
        _write_csv(_csv_path(args.out), header, rows)
    return code


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsipp",
        description="Solve fractional semi-infinite polynomial programs "
                    "from JSON problem files.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem JSON file")
        p.add_argument("--k-min", dest="k_min", type=int, default=None,
                       help="lowest relaxation order")
        p.add_argument("--k-max", dest="k_max", type=int, default=None,
                       help="highest relaxation order")
        p.add_argument("--tau", type=float, default=None,
                       help="feasibility/stationarity tolerance")
        p.add_argument("--tol", type=float, default=None,
                       help="interior-point solver tolerance")
        p.add_argument("--out", default=None, help="write the report here "
                       "instead of stdout (CSV exports go next to it)")

    p = sub.add_parser("classify", help="print the solver route for a file")
    common(p)
    p.set_defaults(handler=run_classify)

    p = sub.add_parser("solve", help="run the relaxation hierarchy")
    common(p)
    p.set_defaults(handler=run_solve)

    # let coordinate literals such as "-0.5,-0.5" parse as positional values
    point_matcher = re.compile(r"^-\d+(?:\.\d+)?(?:,-?\d+(?:\.\d+)?)*$")

    p = sub.add_parser("certify",
                       help="check feasibility and stationarity at a point")
    p._negative_number_matcher = point_matcher
    common(p)
    p.add_argument("point", help="comma-separated coordinates, e.g. 0.7,0.6")
    p.set_defaults(handler=run_certify)

    p = sub.add_parser("pareto",
                       help="sequential efficient-point scheme for files "
                            "with an objectives list")
    p._negative_number_matcher = point_matcher
    common(p)
    p.add_argument("u0", nargs="?", default=None,
                   help="initial feasible point (falls back to "
                        "hints.feasible_point)")
    p.add_argument("--grid", type=int, default=200,
                   help="image-grid resolution per axis for the CSV export")
    p.add_argument("--box", default=None,
                   help="bounding box as lo,hi pairs, e.g. -1,1,-1,1")
    p.set_defaults(handler=run_pareto)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
