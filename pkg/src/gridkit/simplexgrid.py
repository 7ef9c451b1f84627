"""Unstructured 2d triangle grids with two refinement flavours.

``conformGrid`` refines by conforming newest-vertex bisection and supports
marker-driven adaptation; ``simplexGrid`` refines by quartering every
triangle through its edge midpoints.
"""

from __future__ import annotations

import numpy as np

from .errors import ConstructionError, DomainError
from .geometry import triangle
from .grid import GridView, HierarchicalGrid, LeafTopology, Marker

# reference edges of the triangle, in subentity order
_EDGES = ((0, 1), (0, 2), (1, 2))

_MAX_CLOSURE_PASSES = 10000


class SimplexGridData:
    """Vertex coordinates plus triangle connectivity."""

    def __init__(self, vertices, simplices):
        self.vertices = np.asarray(vertices, dtype=float)
        self.simplices = np.asarray(simplices, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ConstructionError(
                f"vertices must be an (N, 2) array, got shape {self.vertices.shape}")
        if self.simplices.ndim != 2 or self.simplices.shape[1] != 3:
            raise ConstructionError(
                f"simplices must be an (M, 3) array, got shape {self.simplices.shape}")
        nV = len(self.vertices)
        for m, tri in enumerate(self.simplices):
            if tri.min() < 0 or tri.max() >= nV:
                raise ConstructionError(
                    f"simplex {m} references vertex {int(tri.max())} "
                    f"of {nV} vertices")
            if len(set(int(v) for v in tri)) != 3:
                raise ConstructionError(f"simplex {m} has repeated corners")

    @classmethod
    def coerce(cls, data):
        if isinstance(data, SimplexGridData):
            return data
        if isinstance(data, dict):
            try:
                return cls(data["vertices"], data["simplices"])
            except KeyError as exc:
                raise ConstructionError(f"missing grid data key {exc}") from exc
        raise ConstructionError(
            "simplex grid data must be SimplexGridData or a "
            "{'vertices':..., 'simplices':...} mapping")


def _signedArea(p0, p1, p2):
    return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1])
                  - (p2[0] - p0[0]) * (p1[1] - p0[1]))


class _SimplexHierarchicalGrid(HierarchicalGrid):
    """Shared storage for the two triangle grid flavours."""

    def __init__(self, data):
        super().__init__(2)
        data = SimplexGridData.coerce(data)
        self._coords = [tuple(float(x) for x in p) for p in data.vertices]
        scale = max(
            1.0, float(np.abs(data.vertices).max()) if len(data.vertices) else 1.0)
        self._corners = []
        self._levels = []
        self._isLeaf = []
        for m, tri in enumerate(data.simplices):
            c = tuple(int(v) for v in tri)
            area = _signedArea(*(self._coords[v] for v in c))
            if abs(area) <= 1e-14 * scale * scale:
                raise ConstructionError(f"simplex {m} is degenerate (zero area)")
            if area < 0.0:
                c = (c[0], c[2], c[1])
            self._corners.append(c)
            self._levels.append(0)
            self._isLeaf.append(True)
        # midpoint vertex of every split edge, keyed by sorted vertex pair
        self._midpoints = {}

    def _midpoint(self, a, b):
        key = (a, b) if a < b else (b, a)
        mid = self._midpoints.get(key)
        if mid is None:
            pa, pb = self._coords[a], self._coords[b]
            self._coords.append(((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0))
            mid = self._midpoints[key] = len(self._coords) - 1
        return mid

    def _leafIds(self):
        return [i for i, leaf in enumerate(self._isLeaf) if leaf]

    def _buildTopology(self) -> LeafTopology:
        leaves = self._leafIds()
        return LeafTopology(
            2,
            np.asarray(self._coords, dtype=float),
            np.asarray([self._corners[i] for i in leaves], dtype=np.int64),
            triangle,
            np.asarray([self._levels[i] for i in leaves], dtype=np.int64))


class BisectionHierarchicalGrid(_SimplexHierarchicalGrid):
    """Conforming newest-vertex bisection grid.

    The macro refinement edge is the longest edge of each triangle, ties
    broken towards the smallest sorted vertex-index pair; children refine
    the edge opposite the newly created midpoint vertex.
    """

    def __init__(self, data):
        super().__init__(data)
        self._refEdge = [self._longestEdge(c) for c in self._corners]

    def _longestEdge(self, corners):
        best, bestKey = 0, None
        for k, (i, j) in enumerate(_EDGES):
            a, b = corners[i], corners[j]
            pa, pb = self._coords[a], self._coords[b]
            length2 = (pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2
            pair = (a, b) if a < b else (b, a)
            key = (length2, (-pair[0], -pair[1]))
            if bestKey is None or key > bestKey:
                best, bestKey = k, key
        return best

    def _bisect(self, el):
        corners = self._corners[el]
        i, j = _EDGES[self._refEdge[el]]
        opp = 3 - i - j
        # counter-clockwise cycle starting at the vertex opposite the
        # refinement edge keeps child orientation positive
        n, a, b = (corners[opp], corners[(opp + 1) % 3], corners[(opp + 2) % 3])
        m = self._midpoint(a, b)
        level = self._levels[el] + 1
        for child in ((m, n, a), (m, b, n)):
            self._corners.append(child)
            self._levels.append(level)
            self._isLeaf.append(True)
            self._refEdge.append(2)
        self._isLeaf[el] = False

    def _refEdgePair(self, el):
        i, j = _EDGES[self._refEdge[el]]
        a, b = self._corners[el][i], self._corners[el][j]
        return (a, b) if a < b else (b, a)

    def _closure(self):
        for _ in range(_MAX_CLOSURE_PASSES):
            pending = []
            for el in self._leafIds():
                corners = self._corners[el]
                for i, j in _EDGES:
                    a, b = corners[i], corners[j]
                    key = (a, b) if a < b else (b, a)
                    if key in self._midpoints:
                        pending.append(el)
                        break
            if not pending:
                return
            for el in pending:
                self._bisect(el)
        raise RuntimeError("conforming closure did not terminate")

    def _refineOnce(self):
        for el in self._leafIds():
            self._bisect(el)
        self._closure()

    def adapt(self, mark):
        marked = []
        for e in self.leafView.elements:
            marker = mark(e)
            if marker not in (Marker.refine, Marker.keep):
                raise DomainError(
                    f"adapt callback must return Marker.refine or Marker.keep, "
                    f"got {marker!r}")
            if marker is Marker.refine:
                marked.append(e.index)
        leaves = self._leafIds()
        for idx in marked:
            self._bisect(leaves[idx])
        if marked:
            self._closure()
            self._invalidate()


class QuarteringHierarchicalGrid(_SimplexHierarchicalGrid):
    """Triangle grid splitting every triangle into four on refinement."""

    def _refineOnce(self):
        for el in self._leafIds():
            c0, c1, c2 = self._corners[el]
            m01 = self._midpoint(c0, c1)
            m02 = self._midpoint(c0, c2)
            m12 = self._midpoint(c1, c2)
            level = self._levels[el] + 1
            for child in ((c0, m01, m02), (m01, c1, m12),
                          (m02, m12, c2), (m12, m02, m01)):
                self._corners.append(child)
                self._levels.append(level)
                self._isLeaf.append(True)
            self._isLeaf[el] = False


def conformGrid(data) -> GridView:
    """Triangle grid with conforming bisection refinement and adaptivity."""
    return BisectionHierarchicalGrid(data).leafView


def simplexGrid(data) -> GridView:
    """Triangle grid with quartering refinement (no adaptivity)."""
    return QuarteringHierarchicalGrid(data).leafView
