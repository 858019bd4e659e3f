"""Command-line front end.

Subcommands: ``plan``, ``solve``, ``sharpness``, ``bihari`` and ``rerun``.
Every run that writes files also writes ``<prefix>.manifest.json`` with
enough detail for ``rerun`` to reproduce the outputs byte for byte.

Exit codes: 0 success, 2 bad parameters, 3 numerical failure,
4 violated sharpness precondition.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import check_sharpness_preconditions, fit_growth_exponent, verify_sharpness
from .bihari import GSpec, eval_W
from .errors import (
    FracVolterraError,
    NumericalError,
    ParameterError,
    PreconditionViolation,
)
from .kernels import get_backend
from .mesh import build_geometric_tail_mesh, build_graded_mesh, default_grading
from .param_plan import build_plan, default_plan, strictly_less, validate_orders
from .problems import ProblemSpec, make_sharpness
from .solver import ContractionConfig, solve_picard, solve_step

EXIT_OK, EXIT_PARAM, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 2, 3, 4
OUT_ENV = "FRACVOLTERRA_OUT"


def _phrase(exc) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", " ", type(exc).__name__).lower()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)


def _resolve_prefix(prefix: str) -> Path:
    p = Path(prefix)
    if not p.is_absolute():
        p = Path(os.environ.get(OUT_ENV, ".")) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_manifest(prefix: Path, command: str, args: dict, started: float, **extra) -> Path:
    manifest = {
        "command": command,
        "args": args,
        "version": __version__,
        "duration_s": time.perf_counter() - started,
        **extra,
    }
    path = prefix.with_name(prefix.name + ".manifest.json")
    path.write_text(_dump(manifest) + "\n")
    return path


def _build_mesh(args: dict, alpha: float):
    r = args.get("grading")
    if args.get("mesh", "graded") == "geometric":
        return build_geometric_tail_mesh(args["T"], alpha, args.get("nodes_per_decade", 2048),
                                         args.get("graded_nodes", 512), r=r)
    return build_graded_mesh(args["T"], args["nodes"], default_grading(alpha) if r is None else r)


def _solve(problem, mesh, mode, backend):
    if mode == "picard":
        return solve_picard(problem, mesh, ContractionConfig.default(problem.alpha), backend=backend)
    return solve_step(problem, mesh, backend=backend)


# ---------------------------------------------------------------------------
# commands; each takes a plain dict of arguments so manifests can replay them
# ---------------------------------------------------------------------------

def cmd_plan(a: dict) -> int:
    plan, defaulted = default_plan(a["alpha"], a["lambda"], a.get("p2"), a.get("zeta"),
                                   strict=a.get("strict", False))
    out = plan.to_dict()
    out.update({"defaulted": defaulted, "growth_exponent": plan.growth_exponent,
                "strict": bool(a.get("strict", False))})
    print(_dump(out))
    return EXIT_OK


def cmd_solve(a: dict) -> int:
    started = time.perf_counter()
    doc = a.get("problem_doc")
    if doc is None:
        try:
            doc = json.loads(Path(a["problem"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read problem file {a['problem']!r}: {exc}") from None
    problem = ProblemSpec.from_dict(doc)
    mesh = _build_mesh(a, problem.alpha)
    path = _solve(problem, mesh, a.get("mode", "step"), a.get("backend"))
    prefix = _resolve_prefix(a.get("out") or "solve")
    csv = prefix.with_name(prefix.name + ".csv")
    path.to_csv(csv)
    man = _write_manifest(prefix, "solve", {k: v for k, v in a.items() if k != "problem_doc"}, started,
                          problem=problem.to_dict(), plan=None, mesh=mesh.to_dict(),
                          tolerances=path.tolerances, outputs={"csv": str(csv)},
                          backend=path.backend, summary=path.summary())
    print(f"wrote {csv} ({mesh.nodes.size} nodes, x(T)={float(path.values[-1])!r})")
    print(f"wrote {man}")
    return EXIT_OK


def _sharpness_gate(alpha, lam, epsilon):
    # checked before plan construction so the failure is reported as a precondition
    if not (strictly_less(1.5 * alpha, 1.0) and strictly_less(2.0 * lam, alpha)):
        raise PreconditionViolation("strict regime: need 1 > 3*alpha/2 and alpha > 2*lambda",
                                    inequality="strict regime")
    if not 0.0 < epsilon < 1.0:
        raise PreconditionViolation("epsilon too large: need 0 < epsilon < 1", inequality="epsilon too large")


def cmd_sharpness(a: dict) -> int:
    started = time.perf_counter()
    alpha, lam, eps = a["alpha"], a["lambda"], a["epsilon"]
    _sharpness_gate(alpha, lam, eps)
    orders = validate_orders(alpha, lam, strict=True)
    plan = build_plan(orders, a["p2"], a["zeta"])
    check_sharpness_preconditions(plan, eps, T=a["T"])
    problem = make_sharpness(a.get("x0", 1.0), alpha, lam, a["p2"], eps)
    mesh = build_geometric_tail_mesh(a["T"], alpha, a.get("nodes_per_decade", 2048), a.get("graded_nodes", 512))
    path = _solve(problem, mesh, a.get("mode", "step"), a.get("backend"))
    report = verify_sharpness(path, plan, eps, a.get("eta0", 0.9))

    prefix = _resolve_prefix(a.get("out") or "sharpness")
    files = {
        "csv": prefix.with_name(prefix.name + ".csv"),
        "report": prefix.with_name(prefix.name + ".report.json"),
        "ratio_upper": prefix.with_name(prefix.name + ".ratio_upper.csv"),
        "ratio_fitted": prefix.with_name(prefix.name + ".ratio_fitted.csv"),
    }
    path.to_csv(files["csv"])
    files["report"].write_text(_dump(report.to_dict()) + "\n")
    report.upper_check.to_csv(files["ratio_upper"])
    report.overclaim_check.to_csv(files["ratio_fitted"])
    man = _write_manifest(prefix, "sharpness", dict(a), started, problem=problem.to_dict(),
                          plan=plan.to_dict(), mesh=mesh.to_dict(), tolerances=path.tolerances,
                          outputs={k: str(v) for k, v in files.items()}, backend=path.backend,
                          summary=path.summary())
    v = report.verdict
    print(f"fitted exponent {report.fit.exponent:.6f} in window {report.fit.window}")
    print(f"lower bound {report.lower_exponent:.6f}: {v['lower_bound']}")
    print(f"upper estimate at {report.upper_exponent:.6f}: {v['upper_estimate']}")
    print(f"no over-claim at fitted exponent: {v['no_overclaim']}")
    print(f"omega check: {v['omega']}")
    print(f"verdict: {'pass' if report.passed else 'fail'}")
    print(f"wrote {files['report']}")
    print(f"wrote {man}")
    return EXIT_OK


def cmd_bihari(a: dict) -> int:
    started = time.perf_counter()
    plan, _ = default_plan(a["alpha"], a["lambda"], a.get("p2"), a.get("zeta"))
    g = GSpec.from_plan(plan)
    u = np.logspace(np.log10(a["umin"]), np.log10(a["umax"]), a["points"])
    prof = eval_W(g, a.get("x0", 1.0), plan.p3, u)
    prefix = _resolve_prefix(a.get("out") or "bihari")
    csv = prefix.with_name(prefix.name + ".csv")
    prof.to_csv(csv)
    fit = fit_growth_exponent((u, prof.W), (u[-1] / 1e4, u[-1])) if a["umax"] / a["umin"] >= 1e4 else None
    man = _write_manifest(prefix, "bihari", dict(a), started, plan=plan.to_dict(), g=g.to_dict(),
                          outputs={"csv": str(csv)}, backend=get_backend(a.get("backend")).BACKEND,
                          slope=None if fit is None else fit.to_dict())
    if fit is not None:
        print(f"log-log slope of W over the last four decades: {fit.exponent:.6f} (a = {plan.a:.6f})")
    print(f"wrote {csv}")
    print(f"wrote {man}")
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "solve": cmd_solve, "sharpness": cmd_sharpness, "bihari": cmd_bihari}


def cmd_rerun(a: dict) -> int:
    try:
        manifest = json.loads(Path(a["manifest"]).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read manifest {a['manifest']!r}: {exc}") from None
    command = manifest.get("command")
    if command not in COMMANDS:
        raise ParameterError(f"manifest names unknown command {command!r}")
    args = dict(manifest["args"])
    if command == "solve":
        args["problem_doc"] = manifest["problem"]
    if a.get("out"):
        args["out"] = a["out"]
    return COMMANDS[command](args)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracvolterra",
                                 description="Fractional Volterra equations: plans, solves and growth checks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def backend_opt(p):
        p.add_argument("--backend", choices=["cython", "python"], default=None,
                       help="kernel backend (default: compiled when available)")

    p = sub.add_parser("plan", help="compute the exponent plan (a, p1, p2, p3) and print it as JSON")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, required=True)
    p.add_argument("--p2", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--strict", action="store_true", help="also require 1 > 3 alpha/2 and alpha > 2 lambda")

    p = sub.add_parser("solve", help="solve a problem given as JSON")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--nodes", type=int, default=1024, help="intervals of the graded mesh")
    p.add_argument("--grading", type=float, default=None, help="grading exponent r (default 2/alpha)")
    p.add_argument("--mesh", choices=["graded", "geometric"], default="graded")
    p.add_argument("--nodes-per-decade", type=int, default=2048)
    p.add_argument("--graded-nodes", type=int, default=512)
    p.add_argument("--mode", choices=["step", "picard"], default="step")
    p.add_argument("--out", default=None, help="output prefix (relative to $%s)" % OUT_ENV)
    backend_opt(p)

    p = sub.add_parser("sharpness", help="run the slowly-decaying growth experiment")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.2)
    p.add_argument("--p2", type=float, default=6.0)
    p.add_argument("--zeta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--eta0", type=float, default=0.9)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1e4)
    p.add_argument("--nodes-per-decade", type=int, default=2048)
    p.add_argument("--graded-nodes", type=int, default=512)
    p.add_argument("--mode", choices=["step", "picard"], default="step")
    p.add_argument("--out", default=None)
    backend_opt(p)

    p = sub.add_parser("bihari", help="tabulate the Bihari integral W(u) for a plan")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, required=True)
    p.add_argument("--p2", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--umin", type=float, default=1.0)
    p.add_argument("--umax", type=float, default=1e8)
    p.add_argument("--points", type=int, default=161)
    p.add_argument("--out", default=None)
    backend_opt(p)

    p = sub.add_parser("rerun", help="replay a run manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="new output prefix")
    return ap


def _args_dict(ns) -> dict:
    d = {k: v for k, v in vars(ns).items() if k != "command"}
    if "lambda_" in d:
        d["lambda"] = d.pop("lambda_")
    return d


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    handler = cmd_rerun if ns.command == "rerun" else COMMANDS[ns.command]
    try:
        return handler(_args_dict(ns))
    except PreconditionViolation as exc:
        print(f"error: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ParameterError as exc:
        msg = str(exc)
        head = _phrase(exc)
        print(f"error: {msg}" if msg.lower().startswith(head) else f"error: {head}: {msg}", file=sys.stderr)
        return EXIT_PARAM
    except NumericalError as exc:
        node = getattr(exc, "node", None)
        where = f" at node {node}" if node is not None else ""
        print(f"error: numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FracVolterraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
