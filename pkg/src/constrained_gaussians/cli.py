"""Command-line front end: problem files in, JSON reports out.

Exit codes: 0 success, 2 invalid input, 3 numerical routes disagree,
4 infeasible request (degenerate projection, moving constraints, ...).
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

from . import dynamics, gaussian, germ, oracle, stability, symplectic
from .errors import (
    ConsistencyError, DegenerateProjectionError, EquivalenceNotPreservedError,
    IntegrabilityError, InvalidGermError, InvalidInputError, NumericalDegeneracyError,
    OracleError,
)
from .problem import load_problem

EXIT_OK, EXIT_INVALID, EXIT_INCONSISTENT, EXIT_INFEASIBLE = 0, 2, 3, 4
SIGNIFICANT_DIGITS = 12

_EXIT_BY_ERROR = (
    (ConsistencyError, EXIT_INCONSISTENT),
    (NumericalDegeneracyError, EXIT_INCONSISTENT),
    (DegenerateProjectionError, EXIT_INFEASIBLE),
    (EquivalenceNotPreservedError, EXIT_INFEASIBLE),
    (IntegrabilityError, EXIT_INFEASIBLE),
    (OracleError, EXIT_INFEASIBLE),
    (InvalidGermError, EXIT_INVALID),
    (InvalidInputError, EXIT_INVALID),
)


def report_schema():
    """The JSON schema every report validates against."""
    text = resources.files(__package__).joinpath("report_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def exit_code_for(exc):
    for cls, code in _EXIT_BY_ERROR:
        if isinstance(exc, cls):
            return code
    raise exc


def _round(x):
    x = float(x)
    if not math.isfinite(x):
        return None
    x = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if x == 0 else x


def jsonable(obj):
    """Convert results to JSON-ready values: complex as ``[re, im]``, rounded floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round(obj.real), _round(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return _round(obj)
    return obj


def _need(problem, *parts):
    for part in parts:
        if getattr(problem, part) is None:
            raise InvalidInputError(f"{problem.source}: problem has no '{part}' section")


def _time(problem, args):
    if args.t is not None:
        return float(args.t)
    return float(problem.time.get("t_final", 1.0))


def cmd_validate(p, args):
    L = p.constraints
    out = {"n": p.n, "k": p.k, "valid": True,
           "constraints": {"rank": L.k, "measure_scale": L.measure_scale,
                           "isotropy_residual": float(np.max(np.abs(
                               symplectic.skew_gram(L.basis, L.basis)))) if L.k else 0.0}}
    if p.gaussian is not None:
        out["gaussian"] = {"im_A_min_eigenvalue":
                           float(np.linalg.eigvalsh(p.gaussian.A.imag)[0])}
    if p.hamiltonian is not None:
        red = dynamics.reduce_hamiltonian(p.hamiltonian, L, tol=args.tol)
        out["hamiltonian"] = {"compatible": red.compatible, "compatibility_residual": red.residual}
    return out, {"checks": "schema, isotropy, rank, Im A > 0, symmetry"}


def cmd_gauge(p, args):
    L = p.constraints
    G = symplectic.build_gauge_plane(L)
    pairing = symplectic.skew_gram(L.basis, G.basis)
    iso = float(np.max(np.abs(symplectic.skew_gram(G.basis, G.basis)))) if L.k else 0.0
    Q = stability.quotient_space(L, G)
    return ({"gauge_basis": G.basis, "pairing": pairing, "gauge_isotropy_residual": iso,
             "quotient_representatives": Q.representatives},
            {"gauge_basis": "minimum-norm dual with isotropy correction"})


def cmd_germ(p, args):
    _need(p, "gaussian")
    A, L = p.gaussian.A, p.constraints
    s = germ.nu_orthonormalize(germ.s_germ_from_matrix(A, args.tol))
    hg = germ.h_germ(A, L, args.tol)
    pm = germ.p_minus(A, L, args.tol)
    return ({"s_germ": s.vectors, "h_germ": hg.vectors, "h_germ_split": list(hg.split_sizes),
             "delta_C": germ.coordinate_jacobian(A), "delta_P_minus": pm.jacobian,
             "p_minus": pm.matrix, "s_germ_axioms": germ.germ_residuals(s),
             "h_germ_axioms": germ.germ_residuals(hg)},
            {"s_germ": "nu-orthonormalized rows (A^T, I)",
             "h_germ": "nu-orthonormal r_perp followed by constraint basis"})


def cmd_norm(p, args):
    _need(p, "gaussian")
    rep = gaussian.norm_report(p.gaussian, p.constraints, args.route_tol)
    return ({"norm": rep.value, "germ_route": rep.germ_route,
             "coordinate_route": rep.coordinate_route, "delta_C": rep.delta_C,
             "delta_P_minus": rep.delta_P_minus, "M": rep.M, "K": rep.K},
            {"norm": rep.coordinate_method, "cross_check": "germ"})


def cmd_project(p, args):
    _need(p, "gaussian")
    pg = gaussian.project_eta(p.gaussian, p.constraints, args.eta_tol)
    d = pg.diagnostics
    return ({"A_check": pg.A_check, "c_check": pg.c_check,
             "c_check_germ": d.get("c_check_germ", pg.c_check), "M": d.get("M"),
             "slope_residual": d.get("slope_residual", 0.0)},
            {"c_check": "sqrt det M" if d["route"] == "M" else d["route"],
             "cross_check": "germ" if d["route"] == "M" else "none"})


def cmd_evolve(p, args):
    _need(p, "gaussian", "hamiltonian")
    g0, H, L = p.gaussian, p.hamiltonian, p.constraints
    t = _time(p, args)
    point = dynamics.evolve_gaussian_full(g0, H, t)
    B, C = dynamics.riccati_frame(H, g0.A, t, p.time.get("dt"))
    A_ric = np.linalg.solve(C.T, B.T).T
    out = {"t": t, "A": point.state.A, "c": point.state.c, "flow": point.flow.u,
           "symplectic_residual": dynamics.symplectic_residual(point.flow.u),
           "riccati_agreement": float(np.max(np.abs(A_ric - point.state.A)))}
    prov = {"A": "germ transport by exp(t generator)", "c": "tracked sqrt det C branch",
            "cross_check": "Riccati frame RK4"}
    if L.k:
        out["unitarity"] = dynamics.check_evolution_unitarity(H, L, [t], g0=g0)
        try:
            pe = dynamics.evolve_projected(g0, H, L, t)
            out["projected"] = {"A_check": pe.projected.A_check, "c_check": pe.c_check_direct,
                                "c_check_transport": pe.c_check_formula,
                                "jacobian": pe.jacobian, "germ_residual": pe.germ_residual}
            prov["projected"] = "H-germ transport, cross-checked by projecting A(t)"
        except (EquivalenceNotPreservedError, DegenerateProjectionError) as exc:
            out["projected"] = None
            out["projected_error"] = str(exc)
    return out, prov


def cmd_stability(p, args):
    _need(p, "hamiltonian")
    H, L = p.hamiltonian, p.constraints
    res, Q, Gr, modes, A = stability.analyse(H, L, args.tol)
    out = {"stable": res.stable, "eigenvalues": res.eigenvalues,
           "max_real_part": res.max_real_part, "eigvec_condition": res.eigvec_condition,
           "quotient_dim": Q.dim, "reduced_generator": Gr}
    if res.stable:
        out.update({"betas": modes.betas, "modes": modes.vectors, "ground_A": A,
                    "mode_residuals": stability.mode_residuals(modes, Gr),
                    "reconstruction_residual":
                        stability.gamma_reconstruct_residual(modes, H, L)})
    return out, {"quotient": "complement of L + G", "modes": "nu-normalized eigenvectors"}


def cmd_spectrum(p, args):
    _need(p, "hamiltonian")
    if args.levels < 1:
        raise InvalidInputError("--levels must be at least 1")
    rep = stability.spectrum_report(p.hamiltonian, p.constraints, args.levels - 1, args.tol)
    return ({"stable": rep.stable, "betas": list(rep.betas), "ground_A": rep.ground_A,
             "levels": [{"N": list(N), "value": v} for N, v in rep.levels],
             "energy_offset": float(np.real(p.hamiltonian.epsilon))},
            {"levels": "sum beta (N + 1/2) over total occupation < levels, offset excluded"})


def cmd_oracle_compare(p, args):
    _need(p, "gaussian")
    g, L = p.gaussian, p.constraints
    if p.n > 2:
        raise OracleError("oracles support n <= 2")
    closed = gaussian.norm_report(g, L, args.route_tol)
    quad = oracle.quadrature_constrained_norm(g, L, alpha_box=p.oracle.get("box"))
    rel = abs(quad - closed.value) / abs(closed.value)
    out = {"norm": {"closed_form": closed.value, "quadrature": quad, "relative_error": rel}}
    prov = {"norm": closed.coordinate_method, "oracle": "Gauss-Legendre over constraint shifts"}
    if rel > args.oracle_tol:
        raise ConsistencyError(f"norm oracle disagrees (relative error {rel:.3e})")
    if p.hamiltonian is not None:
        t = _time(p, args)
        grid = oracle.split_step_evolve(g, p.hamiltonian, t, points=p.oracle.get("grid_points"))
        exact = oracle.sample(dynamics.evolve_gaussian(g, p.hamiltonian, t), grid.axes)
        fid = oracle.fidelity(grid, exact)
        out["evolution"] = {"t": t, "fidelity": fid, "steps": grid.info["steps"],
                            "points": grid.info["points"]}
        prov["evolution"] = "Strang split-step on a grid"
        if 1 - fid > args.oracle_tol:
            raise ConsistencyError(f"split-step oracle disagrees (1 - fidelity {1 - fid:.3e})")
    return out, prov


COMMANDS = {
    "validate": cmd_validate, "gauge": cmd_gauge, "germ": cmd_germ, "norm": cmd_norm,
    "project": cmd_project, "evolve": cmd_evolve, "stability": cmd_stability,
    "spectrum": cmd_spectrum, "oracle-compare": cmd_oracle_compare,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="constrained-gaussians",
                                     description="Gaussian states under linear constraints.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", action="append", required=True,
                        help="problem JSON file (repeatable)")
        sp.add_argument("--tol", type=float, default=1e-9, help="validation and route tolerance")
        sp.add_argument("--route-tol", type=float, default=gaussian.ROUTE_TOL,
                        help="allowed relative disagreement of the norm routes")
        sp.add_argument("--eta-tol", type=float, default=gaussian.ETA_ROUTE_TOL,
                        help="projection route tolerance")
        sp.add_argument("--oracle-tol", type=float, default=1e-5,
                        help="allowed closed-form vs oracle discrepancy")
        sp.add_argument("--levels", type=int, default=3, help="number of occupation shells")
        sp.add_argument("--t", type=float, default=None, help="evolution time")
        sp.add_argument("--pretty", action="store_true", help="indented output")
        sp.add_argument("--jobs", type=int, default=1, help="problem files run concurrently")
    return parser


def run_one(command, path, args):
    """Report dict and exit code for one problem file; errors become report entries."""
    report = {"command": command, "input": path, "tolerance": args.tol}
    try:
        problem = load_problem(path, args.tol)
        with np.errstate(all="ignore"):
            result, provenance = COMMANDS[command](problem, args)
        report.update(result)
        report.update({"status": "ok", "exit_code": EXIT_OK, "provenance": provenance})
    except (InvalidInputError, InvalidGermError, ConsistencyError, NumericalDegeneracyError,
            DegenerateProjectionError, EquivalenceNotPreservedError, IntegrabilityError,
            OracleError, np.linalg.LinAlgError) as exc:
        code = EXIT_INCONSISTENT if isinstance(exc, np.linalg.LinAlgError) else exit_code_for(exc)
        report.update({"status": "error", "exit_code": code,
                       "error": {"type": type(exc).__name__, "message": str(exc)}})
    return jsonable(report)


def _run_star(item):
    return run_one(*item)


def run_command(argv=None, stdout=None, stderr=None):
    """Parse ``argv``, run the command and write the JSON report; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("tol", "route_tol", "eta_tol", "oracle_tol"):
        if not getattr(args, name) >= 0:
            parser.error(f"--{name.replace('_', '-')} must be non-negative")
    items = [(args.command, path, args) for path in args.input]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(items), os.cpu_count() or 1)) as ex:
            reports = list(ex.map(_run_star, items))
    else:
        reports = [_run_star(item) for item in items]
    for rep in reports:
        if rep["exit_code"]:
            print(f"error: {rep['error']['message']}", file=stderr)
    doc = reports[0] if len(reports) == 1 else {"reports": reports}
    json.dump(doc, stdout, sort_keys=True, indent=2 if args.pretty else None,
              separators=None if args.pretty else (",", ":"), allow_nan=False)
    stdout.write("\n")
    return max(rep["exit_code"] for rep in reports)


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
