"""Command-line front end: ``curvem {energy,certify,minimize,hausdorff,sample-info}``.

Results are printed as JSON with floats written to 17 significant digits.
Exit codes: 0 success or certified, 3 not certified, 1 error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from typing import List, Optional

import numpy as np

from . import manifold as mf
from .energy import EnergySpec, QuadratureConfig, evaluate, resolve_threads
from .isotopy import EPS_CERT, certify_isotopy, count_isotopy_types
from .minimize import FlowOptions, initial_state, descend
from .regularity import verify_class

EXIT_OK, EXIT_ERROR, EXIT_FALSE = 0, 1, 3


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def format_json(obj) -> str:
    """Compact JSON with every float written as a 17-significant-digit decimal."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return "{:.17g}".format(x)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(json.dumps(str(k)) + ": " + format_json(v) for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_json(v) for v in obj) + "]"
    raise TypeError("cannot serialize {}".format(type(obj).__name__))


def _spec(args, m: int) -> EnergySpec:
    return EnergySpec(args.kind, args.p, m=m, l=args.l)


def _quad(args) -> QuadratureConfig:
    mode = "monte_carlo" if args.quad == "mc" else args.quad
    return QuadratureConfig(mode=mode, samples=args.samples, seed=args.seed,
                            density=args.density, threads=args.threads)


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "timing")}
    cfg["threads"] = resolve_threads(args.threads)
    return cfg


def cmd_energy(args, out):
    M = mf.load(args.input, args.format)
    spec = _spec(args, M.m)
    t0 = time.perf_counter()
    res = evaluate(M, spec, _quad(args))
    doc = {"value": res.value, "kind": spec.kind, "p": spec.p, "l": spec.l, "p0": spec.p0,
           "alpha": spec.alpha, "quadrature": res.quadrature, "node_count": res.node_count,
           "stderr": res.stderr_estimate}
    if args.timing:
        doc["wall_time"] = time.perf_counter() - t0
    doc["config"] = _config(args)
    out.write(format_json(doc) + "\n")
    return EXIT_OK


def cmd_certify(args, out):
    if args.mode == "count":
        if args.E is None or args.d is None:
            raise CliError("count mode needs --E and --d")
        m, n = args.m, args.n
        if args.inputs:
            M = mf.load(args.inputs[0], args.format)
            m, n = M.m, M.n
        spec = EnergySpec(args.kind, args.p, m=m, l=args.l)
        cb = count_isotopy_types(args.E, args.d, spec, n, args.c1 or 1.0, args.c2 or 1.0,
                                 args.c_phi, args.r_G)
        doc = {"mode": "count", "certificate": asdict(cb), "config": _config(args)}
        out.write(format_json(doc) + "\n")
        return EXIT_OK
    for name in ("R", "L", "d", "alpha"):
        if getattr(args, name) is None:
            raise CliError("{} mode needs --R, --L, --d and --alpha".format(args.mode))
    need = 1 if args.mode == "class" else 2
    if len(args.inputs) != need:
        raise CliError("{} mode takes {} input file(s)".format(args.mode, need))
    Ms = [mf.load(p, args.format) for p in args.inputs]
    if args.mode == "class":
        cert = verify_class(Ms[0], args.R, args.L, args.d, args.alpha, method=args.method)
        doc, ok = cert.to_dict(), cert.verdict
    else:
        cert = certify_isotopy(Ms[0], Ms[1], args.R, args.L, args.d, args.alpha,
                               epsilon=args.epsilon, r_G=args.r_G, c1=args.c1, c2=args.c2)
        doc, ok = cert.to_dict(), cert.verdict
    out.write(format_json({"mode": args.mode, "certificate": doc, "config": _config(args)}) + "\n")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_minimize(args, out):
    M = mf.load(args.input, args.format)
    spec = _spec(args, M.m)
    opts = FlowOptions(sigma=args.sigma, constraint=args.constraint,
                       quad=QuadratureConfig(density=args.density, seed=args.seed))
    state = initial_state(M, spec, opts)
    E0 = state.energy
    trace = open(args.trace, "w") if args.trace else None
    try:
        for _ in range(args.max_iters):
            new = descend(state, spec, opts)
            if new.converged:
                state = new
                break
            state = new
            h = state.history[-1]
            if trace:
                trace.write(format_json({"iteration": h.iteration, "energy": h.energy, "step": h.step,
                                         "d_h_from_previous": h.d_h_from_previous}) + "\n")
    finally:
        if trace:
            trace.close()
    if args.output:
        mf.save(state.manifold, args.output)
    doc = {"initial_energy": E0, "final_energy": state.energy, "ratio": state.energy / E0,
           "iterations": state.iteration, "converged": state.converged,
           "constraint": state.constraint, "constraint_value": state.target,
           "config": _config(args)}
    out.write(format_json(doc) + "\n")
    return EXIT_OK


def cmd_hausdorff(args, out):
    A, B = (mf.load(p, args.format) for p in (args.input1, args.input2))
    d = mf.hausdorff_distance(A, B, resolution=args.resolution, convention=args.convention)
    out.write(format_json({"hausdorff": d, "convention": args.convention, "config": _config(args)}) + "\n")
    return EXIT_OK


def cmd_sample_info(args, out):
    M = mf.load(args.input, args.format)
    S = mf.sample(M, args.density)
    doc = {"m": M.m, "n": M.n, "vertices": len(M.vertices), "cells": len(M.cells),
           "components": int(M.components.max()) + 1, "total_measure": M.total_measure,
           "diameter": M.diameter, "resolution": M.resolution,
           "min_nonadjacent_distance": M.min_nonadjacent_distance,
           "node_count": len(S), "config": _config(args)}
    out.write(format_json(doc) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="curvem", description="Curvature energies and isotopy certificates for discrete manifolds.")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["curve-json", "obj"], default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--timing", action="store_true", help="add wall-clock time to the output")
    energy = _Parser(add_help=False)
    energy.add_argument("--kind", choices=["menger", "tp", "tpg"], default="tp")
    energy.add_argument("--p", type=float, default=4.0)
    energy.add_argument("--l", type=int, default=None)
    energy.add_argument("--density", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("energy", parents=[common, energy])
    e.add_argument("input")
    e.add_argument("--quad", choices=["exhaustive", "mc", "monte_carlo"], default="exhaustive")
    e.add_argument("--samples", type=int, default=100000)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_energy)

    c = sub.add_parser("certify", parents=[common, energy])
    c.add_argument("inputs", nargs="*")
    c.add_argument("--mode", choices=["class", "isotopy", "count"], required=True)
    for name in ("R", "L", "d", "alpha", "E"):
        c.add_argument("--" + name, type=float, default=None)
    c.add_argument("--c1", type=float, default=None)
    c.add_argument("--c2", type=float, default=None)
    c.add_argument("--c-phi", dest="c_phi", type=float, default=1.0)
    c.add_argument("--r-G", dest="r_G", type=float, default=0.5)
    c.add_argument("--epsilon", type=float, default=EPS_CERT)
    c.add_argument("--method", choices=["tangent", "lstsq"], default="tangent")
    c.add_argument("--m", type=int, default=1)
    c.add_argument("--n", type=int, default=3)
    c.set_defaults(func=cmd_certify)

    mn = sub.add_parser("minimize", parents=[common, energy])
    mn.add_argument("input")
    mn.add_argument("--constraint", choices=["fixed_total_measure", "fixed_diameter"],
                    default="fixed_total_measure")
    mn.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    mn.add_argument("--sigma", type=float, default=0.5)
    mn.add_argument("--seed", type=int, default=0)
    mn.add_argument("--trace", default=None, help="JSON-lines trace path")
    mn.add_argument("--output", default=None, help="path for the final manifold")
    mn.set_defaults(func=cmd_minimize)

    h = sub.add_parser("hausdorff", parents=[common])
    h.add_argument("input1")
    h.add_argument("input2")
    h.add_argument("--convention", choices=["sum", "max"], default="sum")
    h.add_argument("--resolution", type=float, default=None)
    h.set_defaults(func=cmd_hausdorff)

    s = sub.add_parser("sample-info", parents=[common])
    s.add_argument("input")
    s.add_argument("--density", type=int, default=1)
    s.set_defaults(func=cmd_sample_info)
    return p


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except (CliError, ValueError, OSError, ArithmeticError) as exc:
        err.write("curvem: error: {}\n".format(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
