"""Grid input and output: JSON reader, tessellation export, VTK writer."""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import CapabilityError, ConstructionError, DomainError
from .geometry import cube, simplex, triangle
from .simplexgrid import SimplexGridData
from .structured import cartesianDomain

# VTK cell type ids plus the corner reorder from our canonical cube numbering
_VTK_CELLS = {
    simplex(1): (3, (0, 1)),
    triangle: (5, (0, 1, 2)),
    cube(2): (9, (0, 1, 3, 2)),
    cube(3): (12, (0, 1, 3, 2, 4, 5, 7, 6)),
}


def readGridJSON(path):
    """Read a grid description: simplex data or a Cartesian domain."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConstructionError(
                f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ConstructionError(f"{path}: expected a JSON object at top level")
    if "vertices" in raw or "simplices" in raw:
        try:
            return SimplexGridData(raw["vertices"], raw["simplices"])
        except KeyError as exc:
            raise ConstructionError(f"{path}: missing key {exc}") from exc
    if {"lower", "upper", "cells"} <= set(raw):
        return cartesianDomain(raw["lower"], raw["upper"], raw["cells"])
    raise ConstructionError(
        f"{path}: expected vertices/simplices or lower/upper/cells keys, "
        f"got {sorted(raw)}")


class Triangulation:
    """Flat triangle tessellation of a 2d grid view."""

    def __init__(self, points, triangles):
        self.points = np.asarray(points, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)

    @property
    def cells(self):
        return self.triangles

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def __repr__(self):
        return (f"Triangulation(points={len(self.points)}, "
                f"triangles={len(self.triangles)})")


def _refTrianglePoints(n):
    pts, index = [], {}
    for j in range(n + 1):
        for i in range(n + 1 - j):
            index[(i, j)] = len(pts)
            pts.append((i / n, j / n))
    cells = []
    for j in range(n):
        for i in range(n - j):
            cells.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
            if i + j < n - 1:
                cells.append((index[(i + 1, j)], index[(i + 1, j + 1)],
                              index[(i, j + 1)]))
    return np.array(pts), np.array(cells)


def _refQuadPoints(n):
    pts = [(i / n, j / n) for j in range(n + 1) for i in range(n + 1)]
    cells = []
    for j in range(n):
        for i in range(n):
            a = i + (n + 1) * j
            b = a + 1
            c = a + (n + 1)
            d = c + 1
            cells.append((a, b, d))
            cells.append((a, d, c))
    return np.array(pts), np.array(cells)


def samplingScheme(view, level):
    """Shared tessellation sampler behind triangulation and pointData.

    Returns ``(points, triangles, perElement)`` where ``perElement`` is a
    list of ``(elementIndex, localCoords, pointOffset)`` rows describing how
    the point rows are produced; triangulation and pointData stay row-aligned
    by construction.
    """
    if view.dimension != 2:
        raise CapabilityError("tessellation export needs a 2d grid view")
    if level < 0:
        raise DomainError(f"subsampling level must be >= 0, got {level}")
    topo = view._topology()
    isSimplex = topo.elementType.isSimplex

    if level == 0:
        points = topo.vertices.copy()
        if isSimplex:
            triangles = topo.elements.copy()
        else:
            quads = topo.elements
            triangles = np.concatenate(
                [quads[:, (0, 1, 3)], quads[:, (0, 3, 2)]], axis=0)
        # each vertex sampled once, through its first owning element
        perElement = []
        byElement = {}
        for v, (e, corner) in enumerate(topo.vertexOwner):
            byElement.setdefault(int(e), []).append((v, int(corner)))
        from .geometry import referenceElement
        refCorners = referenceElement(topo.elementType).cornerArray
        for e in sorted(byElement):
            entries = byElement[e]
            local = refCorners[[corner for _, corner in entries]]
            pointRows = np.array([v for v, _ in entries])
            perElement.append((e, local, pointRows))
        return points, triangles, perElement

    n = 2 ** level
    refPts, refCells = (_refTrianglePoints(n) if isSimplex else _refQuadPoints(n))
    nPts, nCells = len(refPts), len(refCells)
    nE = topo.size(0)
    points = np.empty((nE * nPts, 2))
    triangles = np.empty((nE * nCells, 3), dtype=np.int64)
    perElement = []
    for e in view.elements:
        offset = e.index * nPts
        points[offset:offset + nPts] = e.geometry.toGlobalBatch(refPts)
        triangles[e.index * nCells:(e.index + 1) * nCells] = refCells + offset
        perElement.append((e.index, refPts,
                           np.arange(offset, offset + nPts)))
    return points, triangles, perElement


def triangulation(view, level: int = 0) -> Triangulation:
    points, triangles, _ = samplingScheme(view, level)
    return Triangulation(points, triangles)


def pointData(gf, level: int = 0) -> np.ndarray:
    """Grid-function values at the rows of ``triangulation(view, level)``."""
    view = gf.view
    points, _, perElement = samplingScheme(view, level)
    values = np.empty((len(points), gf.rangeDim))
    elements = {e.index: e for e in view.elements}
    for index, local, rows in perElement:
        values[rows] = gf.evalBatch(elements[index], local)
    return values


def _fmt(x):
    return "%.17g" % x


def _dataArrayXML(name, values, indent):
    values = np.asarray(values)
    if values.ndim == 1:
        comps = 1
        flat = values
    else:
        comps = values.shape[1]
        flat = values.reshape(-1)
    if flat.dtype.kind in "iu":
        text = " ".join(str(int(v)) for v in flat)
        dtype = "Int64"
    else:
        text = " ".join(_fmt(float(v)) for v in flat)
        dtype = "Float64"
    pad = " " * indent
    attrs = f'type="{dtype}" Name="{name}" format="ascii"'
    if comps != 1:
        attrs += f' NumberOfComponents="{comps}"'
    return f"{pad}<DataArray {attrs}>\n{pad}  {text}\n{pad}</DataArray>\n"


def _sampleAtVertices(gf, view):
    topo = view._topology()
    from .geometry import referenceElement
    refCorners = referenceElement(topo.elementType).cornerArray
    values = np.empty((len(topo.vertices), gf.rangeDim))
    elements = {e.index: e for e in view.elements}
    byElement = {}
    for v, (e, corner) in enumerate(topo.vertexOwner):
        byElement.setdefault(int(e), []).append((v, int(corner)))
    for e, entries in byElement.items():
        local = refCorners[[corner for _, corner in entries]]
        rows = [v for v, _ in entries]
        values[rows] = gf.evalBatch(elements[e], local)
    return values


def writeVTK(view, name, pointdata=None, celldata=None, subsampling: int = 0):
    """Write an ASCII XML unstructured-grid file ``<name>.vtu``."""
    pointdata = dict(pointdata or {})
    celldata = dict(celldata or {})
    for label in set(pointdata) & set(celldata):
        raise DomainError(f"label {label!r} used for both point and cell data")

    topo = view._topology()
    if subsampling > 0:
        points, cells, perElement = samplingScheme(view, subsampling)
        cellTypes = np.full(len(cells), 5, dtype=np.int64)
        nRefCells = len(cells) // topo.size(0)
        cellOwner = np.repeat(np.arange(topo.size(0)), nRefCells)
        pointValues = {label: pointData(gf, subsampling)
                       for label, gf in pointdata.items()}
    else:
        points = topo.vertices
        vtkType, reorder = _VTK_CELLS.get(topo.elementType, (None, None))
        if vtkType is None:
            raise CapabilityError(f"no VTK cell type for {topo.elementType}")
        cells = topo.elements[:, reorder]
        cellTypes = np.full(len(cells), vtkType, dtype=np.int64)
        cellOwner = np.arange(topo.size(0))
        pointValues = {label: _sampleAtVertices(gf, view)
                       for label, gf in pointdata.items()}

    from .geometry import referenceElement
    bary = referenceElement(topo.elementType).barycenter
    cellValues = {}
    for label, gf in celldata.items():
        perCell = np.array([gf.evalDirect(e, bary) for e in view.elements])
        cellValues[label] = perCell[cellOwner]

    coords3 = np.zeros((len(points), 3))
    coords3[:, :points.shape[1]] = points
    connectivity = cells.reshape(-1)
    offsets = np.arange(1, len(cells) + 1) * cells.shape[1]

    path = name if name.endswith(".vtu") else name + ".vtu"
    with open(path, "w", encoding="utf-8") as out:
        out.write('<?xml version="1.0"?>\n')
        out.write('<VTKFile type="UnstructuredGrid" version="0.1" '
                  'byte_order="LittleEndian">\n')
        out.write('  <UnstructuredGrid>\n')
        out.write(f'    <Piece NumberOfPoints="{len(points)}" '
                  f'NumberOfCells="{len(cells)}">\n')
        out.write('      <Points>\n')
        out.write(_dataArrayXML("Coordinates", coords3, 8))
        out.write('      </Points>\n')
        out.write('      <Cells>\n')
        out.write(_dataArrayXML("connectivity", connectivity, 8))
        out.write(_dataArrayXML("offsets", offsets, 8))
        out.write(_dataArrayXML("types", cellTypes, 8))
        out.write('      </Cells>\n')
        out.write('      <PointData>\n')
        for label, values in pointValues.items():
            out.write(_dataArrayXML(label, values, 8))
        out.write('      </PointData>\n')
        out.write('      <CellData>\n')
        for label, values in cellValues.items():
            out.write(_dataArrayXML(label, values, 8))
        out.write('      </CellData>\n')
        out.write('    </Piece>\n')
        out.write('  </UnstructuredGrid>\n')
        out.write('</VTKFile>\n')
    return os.path.abspath(path)
