"""Command-line driver for the grid demos and the protocol daemon."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import demos
from .errors import DomainError, GridKitError
from .grid import PartitionKind
from .gridfunction import gridFunctionFromGlobal, gridFunctionFromLocal
from .io import writeVTK
from .parcomm import (CommOp, buildRankViews, communicate,
                      partitionByCoordinate)
from .quadrature import quadratureRules
from .registry import defaultRegistry
from .schemes import (applyDirichlet, boundaryDofsP2, cgSolve, femAssembleP2,
                      fvInitialize, fvLayout, fvStep, l2Norm2, l2Norm2Loop,
                      p2Function)

DEFAULT_STATE = "gridkit-state.json"

EXIT_USAGE = 2
EXIT_FAILURE = 3


def _parseVector(text):
    return [float(part) for part in text.split(",")]


def _parseCells(text):
    return [int(part) for part in text.split(",")]


def _gridSpecFromArgs(args):
    if getattr(args, "cartesian", None):
        lower, upper, cells = args.cartesian
        return {"kind": "cartesian", "lower": _parseVector(lower),
                "upper": _parseVector(upper), "cells": _parseCells(cells)}
    if getattr(args, "json", None):
        from .io import readGridJSON
        from .structured import CartesianDomain
        data = readGridJSON(args.json)
        if isinstance(data, CartesianDomain):
            return {"kind": "cartesian", "lower": list(data.lower),
                    "upper": list(data.upper), "cells": list(data.cells)}
        return {"kind": getattr(args, "kind", "conform"),
                "vertices": data.vertices.tolist(),
                "simplices": data.simplices.tolist()}
    return None


def _buildGrid(spec):
    if spec["kind"] == "cartesian":
        return defaultRegistry.resolveFactory(
            "structuredGrid", {"lower": spec["lower"], "upper": spec["upper"],
                               "cells": spec["cells"]})
    factory = "conformGrid" if spec["kind"] == "conform" else "simplexGrid"
    return defaultRegistry.resolveFactory(
        factory, {"vertices": spec["vertices"],
                  "simplices": spec["simplices"]})


def _loadGrid(args, default=None):
    spec = _gridSpecFromArgs(args)
    if spec is None:
        statePath = getattr(args, "state", DEFAULT_STATE)
        try:
            with open(statePath, "r", encoding="utf-8") as handle:
                spec = json.load(handle)
        except FileNotFoundError:
            spec = default
    if spec is None:
        raise DomainError(
            "no grid prepared; run make-grid or pass --cartesian/--json")
    return _buildGrid(spec)


def _fanSpec():
    return {"kind": "conform",
            "vertices": [list(v) for v in demos.FAN_VERTICES],
            "simplices": [list(t) for t in demos.FAN_TRIANGLES]}


def _cartesianSpec15x4():
    return {"kind": "cartesian", "lower": [0.0, 0.0], "upper": [1.0, 0.25],
            "cells": [15, 4]}


def cmdMakeGrid(args):
    spec = _gridSpecFromArgs(args)
    if spec is None:
        print("make-grid needs --cartesian or --json", file=sys.stderr)
        return EXIT_USAGE
    view = _buildGrid(spec)
    with open(args.state, "w", encoding="utf-8") as handle:
        json.dump(spec, handle)
    print(f"elements={view.size(0)} vertices={view.size(view.dimension)}")
    return 0


def cmdL2Error(args):
    view = _loadGrid(args, default=_fanSpec())
    if args.refine:
        view.hierarchicalGrid.globalRefine(args.refine)
    start = time.time()
    if args.mode == "kernel":
        value = demos.interpolationErrorKernel(view, args.order)
        callbacks = 0
    else:
        _, _, error, _, _ = demos.interpolationErrorSetup(view)
        rules = quadratureRules(args.order)
        compute = l2Norm2 if args.mode == "batch" else l2Norm2Loop
        value = math.sqrt(compute(view, error, rules))
        callbacks = error.callbackCount
    elapsed = time.time() - start
    print(f"l2error={value:.17g} callbacks={callbacks}")
    if args.timings:
        print(f"mode={args.mode} time={elapsed:.3f}s", file=sys.stderr)
    return 0


def cmdFemPoisson(args):
    source = gridFunctionFromGlobal
    print("h,dofs,l2error,rate")
    previous = None
    for level in range(1, args.refine + 1):
        view = _buildGrid({"kind": "simplex",
                           "vertices": [list(v) for v in
                                        demos.UNIT_SQUARE_VERTICES],
                           "simplices": [list(t) for t in
                                         demos.UNIT_SQUARE_TRIANGLES]})
        view.hierarchicalGrid.globalRefine(level)
        f = source(view, demos.manufacturedPoissonSource)
        A, load, mapper = femAssembleP2(view, f)
        applyDirichlet(A, load, boundaryDofsP2(view, mapper), 0.0)
        solution, _ = cgSolve(A, load, tol=1e-10)
        uh = p2Function(view, mapper, solution)
        exact = gridFunctionFromGlobal(view, demos.manufacturedPoissonSolution)
        diff = gridFunctionFromLocal(
            view, lambda e, x: uh(e, x) - exact(e, x))
        err = math.sqrt(l2Norm2(view, diff, quadratureRules(5)))
        rate = "" if previous is None else f"{math.log2(previous / err):.3f}"
        print(f"{2.0 ** -level:.6g},{mapper.size},{err:.12e},{rate}")
        previous = err
    return 0


def cmdFvTransport(args):
    view = _loadGrid(args, default={"kind": "cartesian",
                                    "lower": [0.0, 0.0], "upper": [1.0, 1.0],
                                    "cells": [args.cells, args.cells]})
    if args.refine:
        view.hierarchicalGrid.globalRefine(args.refine)
    mapper = fvLayout(view)
    if args.constant is not None:
        value = args.constant
        initial = (lambda x: value + 0.0 * x[..., 0])
        boundary = (lambda t, x: value)
    else:
        initial = demos.annulusInitial
        boundary = demos.transportBoundary
    c0 = gridFunctionFromGlobal(view, initial)
    state = fvInitialize(view, mapper, c0)
    volumes = np.array([e.geometry.volume for e in view.elements])

    def solutionField():
        return gridFunctionFromLocal(
            view, lambda e, x: state.data[mapper.index(e)]
            * np.ones_like(x[..., 0]))

    print("step,t,tau,mass,min,max")
    step = 0

    def report():
        mass = float(state.data @ volumes)
        print(f"{step},{state.t:.12g},{state.tau:.12g},{mass:.12e},"
              f"{state.data.min():.12e},{state.data.max():.12e}")

    report()
    if args.vtk_every:
        writeVTK(view, f"{args.prefix}_{step:04d}",
                 celldata={"concentration": solutionField()})
    while state.t < args.tend:
        fvStep(state, view, boundary, args.cfl)
        step += 1
        report()
        if args.vtk_every and step % args.vtk_every == 0:
            writeVTK(view, f"{args.prefix}_{step:04d}",
                     celldata={"concentration": solutionField()})
    return 0


def cmdPartitionDemo(args):
    view = _loadGrid(args, default=_cartesianSpec15x4())
    ranks = args.ranks
    partition = partitionByCoordinate(view, ranks)
    views = buildRankViews(view, partition)
    from .geometry import vertex
    mappers = [rv.mapper({vertex: 1}) for rv in views]
    data = [np.full(m.size, float(rv.rank))
            for m, rv in zip(mappers, views)]
    communicate(mappers, PartitionKind.interiorBorder, PartitionKind.all,
                CommOp.min, data)

    # brute-force verification of the minimum-owner property
    topo = view._topology()
    owners = {}
    for e, corners in enumerate(topo.elements):
        for v in corners:
            owners.setdefault(int(v), set()).add(int(partition.elementRank[e]))
    failures = 0
    for rv, m, arr in zip(views, mappers, data):
        rows = []
        for v in rv.vertices:
            value = arr[m.index(v)]
            rows.append(f"{v.index},{rv.rank},{value:.17g}")
            if rv.rank in owners[v.index] and value != min(owners[v.index]):
                failures += 1
        path = f"{args.prefix}_rank{rv.rank}.csv"
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("vertexGlobalIndex,rank,value\n")
            handle.write("\n".join(rows) + "\n")

    minRank = np.array([float(min(owners[v])) for v in range(view.size(2))])
    combined = gridFunctionFromLocal(
        view, lambda e, x: _vertexInterpolate(view, minRank, e, x))
    writeVTK(view, f"{args.prefix}_minrank", pointdata={"minRank": combined})
    if failures:
        print(f"verification FAILED for {failures} vertex copies")
        return EXIT_FAILURE
    print(f"verified ranks={ranks} vertices={view.size(2)}")
    return 0


def _vertexInterpolate(view, nodal, e, x):
    idx = view.indexSet.subIndices(e, view.dimension)
    values = nodal[list(idx)]
    if e.type.isSimplex:
        bary = np.stack([1.0 - x[..., 0] - x[..., 1], x[..., 0], x[..., 1]],
                        axis=-1)
        return bary @ values
    wx, wy = x[..., 0], x[..., 1]
    weights = np.stack([(1 - wx) * (1 - wy), wx * (1 - wy),
                        (1 - wx) * wy, wx * wy], axis=-1)
    return weights @ values


def cmdAdaptDemo(args):
    view = _buildGrid(_fanSpec())
    view.hierarchicalGrid.globalRefine(2)
    print(f"round=0 elements={view.size(0)}")
    for i in range(1, args.rounds + 1):
        view.hierarchicalGrid.adapt(demos.radiusMarker(0.64 ** i))
        print(f"round={i} elements={view.size(0)}")
        if args.vtk:
            writeVTK(view, f"{args.prefix}_round{i}")
    return 0


def cmdServe(args):
    from .protocol import serveStdio, serveTcp
    if args.tcp is not None:
        serveTcp(args.tcp)
    else:
        serveStdio()
    return 0


def buildParser():
    parser = argparse.ArgumentParser(
        prog="gridkit", description="grid-based PDE toolkit demos")
    sub = parser.add_subparsers(dest="command", required=True)

    def addGridArgs(p, kinds=("conform", "simplex")):
        p.add_argument("--cartesian", nargs=3, metavar=("L", "U", "CELLS"),
                       help="lower, upper, cells as comma-separated values")
        p.add_argument("--json", help="grid description file")
        p.add_argument("--kind", choices=kinds, default="conform")
        p.add_argument("--state", default=DEFAULT_STATE,
                       help="grid state file")

    p = sub.add_parser("make-grid", help="construct a grid and persist it")
    addGridArgs(p)
    p.set_defaults(func=cmdMakeGrid)

    p = sub.add_parser("l2error",
                       help="P1 interpolation error of the demo function")
    addGridArgs(p)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--mode", choices=("loop", "batch", "kernel"),
                   default="batch")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmdL2Error)

    p = sub.add_parser("fem-poisson", help="P2 Poisson convergence study")
    p.add_argument("--refine", type=int, default=3)
    p.set_defaults(func=cmdFemPoisson)

    p = sub.add_parser("fv-transport", help="upwind transport of an annulus")
    addGridArgs(p)
    p.add_argument("--cells", type=int, default=30)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--tend", type=float, default=0.5)
    p.add_argument("--cfl", type=float, default=0.45)
    p.add_argument("--vtk-every", type=int, default=0)
    p.add_argument("--constant", type=float, default=None,
                   help="replace initial and inflow data by a constant")
    p.add_argument("--prefix", default="transport")
    p.set_defaults(func=cmdFvTransport)

    p = sub.add_parser("partition-demo",
                       help="simulated multi-rank minimum-owner exchange")
    addGridArgs(p)
    p.add_argument("--ranks", type=int, default=5)
    p.add_argument("--prefix", default="partition")
    p.set_defaults(func=cmdPartitionDemo)

    p = sub.add_parser("adapt-demo", help="shrinking-radius local refinement")
    p.add_argument("--rounds", type=int, default=4)
    p.add_argument("--vtk", action="store_true")
    p.add_argument("--prefix", default="adapt")
    p.set_defaults(func=cmdAdaptDemo)

    p = sub.add_parser("serve", help="run the NDJSON protocol daemon")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--stdio", action="store_true", default=True)
    group.add_argument("--tcp", type=int, default=None, metavar="PORT")
    p.set_defaults(func=cmdServe)

    return parser


def main(argv=None):
    parser = buildParser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GridKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
