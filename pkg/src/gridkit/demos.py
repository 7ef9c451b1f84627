"""Built-in demo problems shared by the CLI, the protocol server and tests."""

from __future__ import annotations

import numpy as np

from .geometry import Vector
from .grid import Marker
from .gridfunction import gridFunctionFromGlobal, gridFunctionFromLocal, interpolateP1
from .simplexgrid import SimplexGridData, conformGrid, simplexGrid

# eight-vertex fan around the origin, six macro triangles
FAN_VERTICES = [(0, 0), (1, 0), (1, 0.6), (0, 0.6),
                (-1, 0.6), (-1, 0), (-1, -0.6), (0, -0.6)]
FAN_TRIANGLES = [(2, 0, 1), (0, 2, 3), (4, 0, 3),
                 (0, 4, 5), (6, 0, 5), (0, 6, 7)]

UNIT_SQUARE_VERTICES = [(0, 0), (1, 0), (1, 1), (0, 1)]
UNIT_SQUARE_TRIANGLES = [(2, 0, 1), (0, 2, 3)]


def fanGridData() -> SimplexGridData:
    return SimplexGridData(FAN_VERTICES, FAN_TRIANGLES)


def unitSquareData() -> SimplexGridData:
    return SimplexGridData(UNIT_SQUARE_VERTICES, UNIT_SQUARE_TRIANGLES)


def oscillation(x):
    """The interpolation-demo function cos(2*pi / (0.3 + |x0*x1|))."""
    return np.cos(2.0 * np.pi / (0.3 + np.abs(x[..., 0] * x[..., 1])))


def radiusMarker(radius):
    def mark(e):
        x = e.geometry.center
        return Marker.refine if x.two_norm < radius else Marker.keep
    return mark


def adaptedFanGrid(rounds: int = 4, preRefine: int = 2):
    """Locally refined fan: global passes plus shrinking-radius marking."""
    view = conformGrid(fanGridData())
    view.hierarchicalGrid.globalRefine(preRefine)
    for i in range(1, rounds + 1):
        view.hierarchicalGrid.adapt(radiusMarker(0.64 ** i))
    return view


def rebuildAsQuartering(view):
    """Copy a leaf view into a quartering grid via coordinates and indices."""
    vertices = view.coordinates()
    triangles = [view.indexSet.subIndices(e, 2) for e in view.elements]
    return simplexGrid({"vertices": vertices, "simplices": triangles})


def interpolationErrorSetup(view):
    """Exact function, P1 interpolant and pointwise error on a grid."""
    from .errors import CapabilityError
    from .geometry import triangle
    if view.indexSet.types(0)[0] != triangle:
        raise CapabilityError("the interpolation demo needs a triangle grid")
    f = gridFunctionFromGlobal(view, oscillation)
    mapper, data = interpolateP1(view, f)

    def p1Evaluate(e, x):
        bary = np.stack([1.0 - x[..., 0] - x[..., 1], x[..., 0], x[..., 1]],
                        axis=-1)
        idx = mapper.subIndices(e, 2)
        return bary @ data[idx]

    discrete = gridFunctionFromLocal(view, p1Evaluate)

    def errorFn(e, x):
        return np.abs(discrete(e, x) - f(e, x))

    error = gridFunctionFromLocal(view, errorFn)
    return f, discrete, error, mapper, data


def interpolationErrorKernel(view, order: int = 5) -> float:
    """L2 interpolation error of the demo function, fully array-based.

    Mirrors the batched pipeline but runs on raw topology arrays with no
    grid-function callbacks at all.
    """
    from .errors import CapabilityError
    from .geometry import triangle
    from .quadrature import quadratureRule
    topo = view._topology()
    if topo.elementType != triangle:
        raise CapabilityError("the interpolation demo needs a triangle grid")
    coords = topo.vertices
    data = oscillation(coords)
    positions, weights = quadratureRule(triangle, order).get()
    bary = np.stack([1.0 - positions[:, 0] - positions[:, 1],
                     positions[:, 0], positions[:, 1]], axis=-1)
    elements = topo.elements
    cornerCoords = coords[elements]
    p1Values = data[elements] @ bary.T
    origins = cornerCoords[:, 0, :]
    tangents = cornerCoords[:, 1:, :] - origins[:, None, :]
    world = origins[:, None, :] + np.einsum("qd,ndk->nqk", positions, tangents)
    exact = oscillation(world)
    integrationElements = np.abs(np.linalg.det(tangents))
    perElement = ((p1Values - exact) ** 2 @ weights) * integrationElements
    return float(np.sqrt(perElement.sum()))


def annulusInitial(x):
    """Characteristic function of the ring 0.125 < |x| < 0.5."""
    r = Vector(x).two_norm
    return np.where((r > 0.125) & (r < 0.5), 1.0, 0.0)


def transportBoundary(t, x):
    """Inflow data translating the annulus along the velocity (1, ..., 1)."""
    return float(annulusInitial(np.asarray(x, dtype=float) - t))


def manufacturedPoissonSolution(x):
    """u = x0 x1 (1 - x0)(1 - x1), zero on the unit-square boundary."""
    x0, x1 = x[..., 0], x[..., 1]
    return x0 * x1 * (1.0 - x0) * (1.0 - x1)


def manufacturedPoissonSource(x):
    """-Laplace(u) for the manufactured solution above."""
    x0, x1 = x[..., 0], x[..., 1]
    return 2.0 * x0 * (1.0 - x0) + 2.0 * x1 * (1.0 - x1)
