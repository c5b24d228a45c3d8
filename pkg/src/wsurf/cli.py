"""Command-line entry point: ``wsurf <subcommand> ...``.

Structured results go to stdout (or ``--out``) as sorted, indented JSON;
per-sample series go to CSV files.  Exit status is 0 on success, 1 for
invalid input and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import axisym as ax
from . import flow as fl
from . import mesh as ms
from . import surface as sf
from . import variational as va
from .errors import InvalidParams, ValidationError, WsurfError
from .functional import FunctionalSpec, classify_scaling, default_sampler


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of printed (exit 1, not 2)."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------
def _load_json_arg(text, what):
    if text is None:
        raise InvalidParams(f"--{what} is required")
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"--{what}: not valid JSON ({exc.msg})") from exc


def _functional(args):
    return FunctionalSpec.from_dict(_load_json_arg(args.functional, "functional"))


def _surface(args):
    return sf.patch_from_dict(_load_json_arg(args.surface, "surface"))


def _floats(text, n=None, what="value"):
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidParams(f"bad {what} list {text!r}") from exc
    if n is not None and len(vals) != n:
        raise InvalidParams(f"{what} needs {n} comma-separated numbers")
    return vals


def _threads(args):
    n = args.threads
    if n is None:
        n = int(os.environ.get("WSURF_THREADS", "1") or 1)
    if n < 1:
        raise InvalidParams("--threads must be at least 1")
    return n


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _emit(args, payload):
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_classify(args):
    spec = _functional(args)
    H, K = default_sampler(args.samples, seed=args.seed)
    return classify_scaling(spec, (H, K)).to_dict()


def cmd_el_residual(args):
    spec, patch = _functional(args), _surface(args)
    geo, res = va.el_residual_grid(spec, patch, args.order)
    W = np.asarray(res.W)
    if args.csv:
        sf.export_geometry_csv(geo, args.csv, extra={"W": W})
    return {"sup": float(np.max(np.abs(W))), "n_samples": int(W.size), "order": args.order}


def cmd_stress_check(args):
    spec, patch = _functional(args), _surface(args)
    chk = va.stress_divergence_check(
        spec, patch, steps=_floats(args.fd_steps, what="fd-steps"), grid=args.grid, precision=args.precision
    )
    out = chk.to_dict()
    out["min_order"] = chk.min_order()
    return out


def cmd_flux(args):
    spec, patch = _functional(args), _surface(args)
    direction = _floats(args.direction, 3, "direction") if args.direction else None
    if args.kind in ("translation", "rotation") and direction is None:
        raise InvalidParams(f"--direction is required for kind {args.kind!r}")
    rep = va.flux_check(spec, patch, args.kind, direction, _floats(args.origin, 3, "origin"), order=args.order)
    out = rep.to_dict()
    out["critical"] = bool(abs(rep.residual) <= args.tol)
    return out


def cmd_bc(args):
    spec, patch = _functional(args), _surface(args)
    sets = tuple(args.set or ("fixed", "closure"))
    normals = None
    if args.support_normals:
        normals = np.asarray(_load_json_arg(args.support_normals, "support-normals"), dtype=float)
    rep = va.boundary_conditions(spec, patch, support_normal=normals, order=args.order, sets=sets)
    return rep.to_dict(samples=args.samples)


def _initial(args):
    return (args.f0, args.u0, args.H0, args.m0)


def _integrate(args, t_end):
    return ax.integrate(
        _initial(args), t_end, controller=args.controller, step=args.step, rtol=args.rtol, atol=args.atol, f_min=args.f_min
    )


def cmd_axisym(args):
    if args.axisym_cmd == "integrate":
        tr = _integrate(args, args.t_end)
        if args.csv:
            tr.to_csv(args.csv)
        return tr.summary()
    if args.axisym_cmd == "shoot":
        res = ax.shoot(
            H0_range=_floats(args.H0_range, 2, "H0-range"),
            m0_range=_floats(args.m0_range, 2, "m0-range"),
            T_window=_floats(args.T_window, 2, "T-window"),
            grid=tuple(int(g) for g in _floats(args.grid, 2, "grid")),
            n_t=args.n_t,
            rtol=args.rtol,
            atol=args.atol,
            verify_tol=args.verify_tol,
            threads=_threads(args),
        )
        return res.to_dict()
    tr = _integrate(args, args.T)
    if args.axisym_cmd == "check-c4":
        r1, r2 = ax.c4_boundary_residual(tr, args.T)
        return {"T": args.T, "second": r1, "third": r2}
    y = tr(args.T)
    res = ax.constant_h_residual(y[0], y[1], ax.ode_rhs(y)[1], args.c)
    return {"T": args.T, "c": args.c, "residual": res, "shape": ax.classify_constant_h(tr)}


def cmd_flow(args):
    spec = _functional(args)
    if args.mesh:
        mesh = ms.load_mesh(args.mesh)
    elif args.bump_disk:
        res, amp = _floats(args.bump_disk, 2, "bump-disk")
        mesh = fl.bump_disk(int(res), amp)
    else:
        raise InvalidParams("either --mesh or --bump-disk is required")
    cfg = _load_json_arg(args.config, "config") if args.config else {}
    if args.max_steps is not None:
        cfg["max_steps"] = args.max_steps
    config = fl.FlowConfig.from_dict(cfg, spec=spec)
    trace = fl.run_flow(spec, mesh, config)
    if args.trace_csv:
        trace.to_csv(args.trace_csv)
    if args.final_mesh:
        ms.save_mesh(trace.mesh, args.final_mesh)
    out = trace.summary()
    if trace.natural:
        out["natural_condition_final"] = trace.natural[-1]
    return out


def _summ(rep):
    return {k: v for k, v in rep.items() if k in ("max_error", "scale", "rel_error")}


def cmd_variation_check(args):
    patch = _surface(args)
    X = va.named_field(args.field, patch, seed=args.seed)
    if args.which == "firstvar":
        spec = _functional(args)
        an = va.first_variation(spec, patch, X, order=args.order)
        fd = va.fd_first_variation(spec, patch, X, eps=args.eps, order=args.order)
        err = abs(an["total"] - fd)
        return {"analytic": an, "fd": fd, "abs_error": err, "rel_error": err / abs(fd) if fd != 0 else err}
    if args.which == "curve":
        edge = args.edge or (patch.boundary_edges[0] if patch.boundary_edges else None)
        if edge is None:
            raise InvalidParams("surface has no boundary edge")
        rep = va.curve_variation_check(patch, edge, X, eps=args.eps)
        out = _summ(rep)
        out["edge"] = edge
        return out
    rep = va.variation_formula_check(patch, X, eps=args.eps, which=(args.which,))
    return {args.which: _summ(rep[args.which])}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
def _common(p, functional=True, surface=True):
    if functional:
        p.add_argument("--functional", help="functional JSON (inline or file path)")
    if surface:
        p.add_argument("--surface", help="surface JSON (inline or file path)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")


def _ode_flags(p):
    p.add_argument("--f0", type=float, default=1.0)
    p.add_argument("--u0", type=float, default=0.0)
    p.add_argument("--H0", type=float, default=0.0)
    p.add_argument("--m0", type=float, default=0.0)
    p.add_argument("--controller", choices=("rk4", "rk45"), default="rk4")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--f-min", type=float, default=ax.F_MIN)
    p.add_argument("--out", help="write the JSON report here instead of stdout")


def build_parser():
    top = _Parser(prog="wsurf", description="Curvature-functional verification and solvers.")
    top.add_argument("--json-errors", action="store_true", help="also print errors as a JSON object on stdout")
    top.add_argument("--threads", type=int, default=None, help="worker cap (default: WSURF_THREADS or 1)")
    sub = top.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("classify", help="scaling class of a functional")
    _common(p, surface=False)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("el-residual", help="Euler-Lagrange residual on a patch")
    _common(p)
    p.add_argument("--order", type=int, default=16)
    p.add_argument("--csv", help="per-sample CSV output")
    p.set_defaults(fn=cmd_el_residual)

    p = sub.add_parser("stress-check", help="div T + W n convergence table")
    _common(p)
    p.add_argument("--fd-steps", default="2e-3,1e-3,5e-4")
    p.add_argument("--grid", type=int, default=6)
    p.add_argument("--precision", choices=("extended", "double"), default="extended")
    p.set_defaults(fn=cmd_stress_check)

    p = sub.add_parser("flux", help="translation/scaling/rotation flux identity")
    _common(p)
    p.add_argument("--kind", choices=("translation", "scaling", "rotation"), required=True)
    p.add_argument("--direction")
    p.add_argument("--origin", default="0,0,0")
    p.add_argument("--order", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-8, help="criticality tolerance on the residual")
    p.set_defaults(fn=cmd_flux)

    p = sub.add_parser("bc", help="boundary-condition report")
    _common(p)
    p.add_argument("--set", action="append", choices=("fixed", "free", "closure"))
    p.add_argument("--support-normals", help="JSON array of support normals, one per boundary sample")
    p.add_argument("--order", type=int, default=16)
    p.add_argument("--samples", action="store_true", help="include per-sample values")
    p.set_defaults(fn=cmd_bc)

    p = sub.add_parser("axisym", help="axisymmetric meridian ODE")
    asub = p.add_subparsers(dest="axisym_cmd", parser_class=_Parser)
    asub.required = True
    q = asub.add_parser("integrate")
    _ode_flags(q)
    q.add_argument("--t-end", type=float, default=2.0)
    q.add_argument("--csv", help="trajectory CSV (t,f,u,H,m)")
    q = asub.add_parser("shoot")
    _ode_flags(q)
    q.add_argument("--H0-range", default="-1,1")
    q.add_argument("--m0-range", default="-1,1")
    q.add_argument("--T-window", default="0.5,2")
    q.add_argument("--grid", default="5,5")
    q.add_argument("--n-t", type=int, default=41)
    q.add_argument("--verify-tol", type=float, default=1e-8)
    q = asub.add_parser("check-c4")
    _ode_flags(q)
    q.add_argument("--T", type=float, required=True)
    q = asub.add_parser("check-consth")
    _ode_flags(q)
    q.add_argument("--T", type=float, required=True)
    q.add_argument("--c", type=float, required=True)
    p.set_defaults(fn=cmd_axisym)

    p = sub.add_parser("flow", help="gradient flow on a triangle mesh")
    _common(p, surface=False)
    p.add_argument("--mesh", help="OFF/OBJ input mesh")
    p.add_argument("--bump-disk", help="RES,AMP: generate a bumped flat disk instead of --mesh")
    p.add_argument("--config", help="flow config JSON (inline or file path)")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--trace-csv")
    p.add_argument("--final-mesh")
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("variation-check", help="analytic variation formulas vs finite differences")
    _common(p)
    p.add_argument("--which", choices=("dg", "dmu", "dH", "dK", "dlap", "firstvar", "curve"), required=True)
    p.add_argument("--field", choices=va.FIELD_NAMES, default="random")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--edge")
    p.add_argument("--order", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_variation_check)
    return top


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    json_errors = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
        _threads(args)
        _emit(args, args.fn(args))
        return 0
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except WsurfError as exc:
        code = exc.exit_code
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    except (ValueError, TypeError, KeyError) as exc:
        code = 1
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        code = 2
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(f"wsurf: {err['error']}: {err['message']}\n")
    if json_errors:
        sys.stdout.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
