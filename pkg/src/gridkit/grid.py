"""Implementation-independent grid interface.

A hierarchical grid owns the refinable element tree; the attached
:class:`GridView` exposes the current leaf as entities, intersections and
index sets. Topology is rebuilt after every refinement and outstanding
entities are invalidated through a generation counter.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import CapabilityError, ConstructionError, DomainError, InvalidationError
from .geometry import (AffineGeometry, GeometryType, Vector, referenceElement,
                       vertex)


class PartitionType(enum.Enum):
    interior = "interior"
    border = "border"
    overlap = "overlap"
    front = "front"
    ghost = "ghost"


class PartitionKind(enum.Enum):
    interior = "interior"
    interiorBorder = "interiorBorder"
    overlap = "overlap"
    overlapFront = "overlapFront"
    all = "all"


INCLUDED_TYPES = {
    PartitionKind.interior: frozenset({PartitionType.interior}),
    PartitionKind.interiorBorder: frozenset({PartitionType.interior,
                                             PartitionType.border}),
    PartitionKind.overlap: frozenset({PartitionType.interior,
                                      PartitionType.border,
                                      PartitionType.overlap}),
    PartitionKind.overlapFront: frozenset({PartitionType.interior,
                                           PartitionType.border,
                                           PartitionType.overlap,
                                           PartitionType.front}),
    PartitionKind.all: frozenset(PartitionType),
}


class Marker(enum.Enum):
    refine = 1
    keep = 0


class LeafTopology:
    """Immutable snapshot of the leaf entities of a hierarchical grid."""

    def __init__(self, dim, vertices, elements, elementType, elementLevels=None):
        self.dim = dim
        self.vertices = np.asarray(vertices, dtype=float)
        self.elements = np.asarray(elements, dtype=np.int64)
        self.elementType = elementType
        nE = len(self.elements)
        nV = len(self.vertices)
        self.elementLevels = (np.zeros(nE, dtype=np.int64)
                              if elementLevels is None
                              else np.asarray(elementLevels, dtype=np.int64))
        self.worldDim = self.vertices.shape[1]

        used = np.zeros(nV, dtype=bool)
        used[self.elements.reshape(-1)] = True
        if not used.all():
            missing = int(np.nonzero(~used)[0][0])
            raise ConstructionError(f"vertex {missing} not referenced by any element")

        ref = referenceElement(elementType)

        # entityCorners[c]: corner vertex ids per codim-c entity
        # elementSub[c]: per element, entity index of each reference subentity
        self.entityCorners = {0: self.elements, dim: np.arange(nV).reshape(-1, 1)}
        self.elementSub = {0: np.arange(nE).reshape(-1, 1),
                           dim: self.elements}
        self.types = {0: elementType, dim: vertex}
        for c in range(1, dim):
            refSubs = np.asarray(ref.subEntityCornerIds(c))
            subVerts = self.elements[:, refSubs]          # (nE, nSub, k)
            flat = subVerts.reshape(-1, refSubs.shape[1])
            keys = np.sort(flat, axis=1)
            uniqueKeys, first, inverse = np.unique(
                keys, axis=0, return_index=True, return_inverse=True)
            nSub = refSubs.shape[0]
            if c == dim - 1:
                # facet-like entities keep the sorted corner order (1d facets)
                corners = uniqueKeys if refSubs.shape[1] == 2 else flat[first]
            else:
                corners = flat[first]
            self.entityCorners[c] = corners
            self.elementSub[c] = inverse.reshape(nE, nSub)
            self.types[c] = ref.subEntityType(c)

        # facet -> (element, local facet) incidence, at most two entries
        nFacets = len(self.entityCorners[1]) if dim >= 1 else 0
        self.facetElements = [[] for _ in range(nFacets)]
        sub = self.elementSub[1]
        for e in range(nE):
            for k in range(sub.shape[1]):
                f = int(sub[e, k])
                if len(self.facetElements[f]) >= 2:
                    raise ConstructionError(
                        f"facet {f} shared by more than two elements")
                self.facetElements[f].append((e, k))

        # entity levels: minimum level of any adjacent element
        self.entityLevels = {0: self.elementLevels}
        for c in range(1, dim + 1):
            levels = np.full(len(self.entityCorners[c]), np.iinfo(np.int64).max)
            perElement = np.broadcast_to(
                self.elementLevels[:, None], self.elementSub[c].shape)
            np.minimum.at(levels, self.elementSub[c].reshape(-1),
                          perElement.reshape(-1))
            self.entityLevels[c] = levels

        # first (element, local corner) owning each vertex, for sampling
        flatCorners = self.elements.reshape(-1)
        _, firstPos = np.unique(flatCorners, return_index=True)
        self.vertexOwner = np.stack(
            [firstPos // self.elements.shape[1],
             firstPos % self.elements.shape[1]], axis=1)

    def size(self, codim):
        if not 0 <= codim <= self.dim:
            raise DomainError(f"codim {codim} outside [0, {self.dim}]")
        return len(self.entityCorners[codim])

    def entityCornerCoords(self, codim, index):
        return self.vertices[self.entityCorners[codim][index]]


class Entity:
    """Value-like handle to one leaf entity of a grid view."""

    __slots__ = ("grid", "codim", "index", "generation", "partitionType")

    def __init__(self, grid, codim, index, partitionType=PartitionType.interior):
        self.grid = grid
        self.codim = codim
        self.index = index
        self.generation = grid.generation
        self.partitionType = partitionType

    def _topo(self):
        self.grid._checkEntity(self)
        return self.grid._topology()

    @property
    def type(self) -> GeometryType:
        return self._topo().types[self.codim]

    @property
    def dimension(self):
        return self.grid.dimension - self.codim

    @property
    def level(self):
        return int(self._topo().entityLevels[self.codim][self.index])

    @property
    def geometry(self) -> AffineGeometry:
        topo = self._topo()
        return AffineGeometry(topo.types[self.codim],
                              topo.entityCornerCoords(self.codim, self.index))

    @property
    def referenceElement(self):
        return referenceElement(self.type)

    def subEntity(self, i, c) -> "Entity":
        topo = self._topo()
        if self.codim != 0:
            raise DomainError("subEntity is only available on elements")
        if not 0 <= c <= topo.dim:
            raise DomainError(f"codim {c} outside [0, {topo.dim}]")
        sub = topo.elementSub[c]
        if not 0 <= i < sub.shape[1]:
            raise DomainError(
                f"subentity {i} outside [0, {sub.shape[1]}) for codim {c}")
        return Entity(self.grid, c, int(sub[self.index, i]))

    def __eq__(self, other):
        return (isinstance(other, Entity)
                and self.grid is other.grid
                and self.codim == other.codim
                and self.index == other.index
                and self.generation == other.generation)

    def __hash__(self):
        return hash((id(self.grid), self.codim, self.index, self.generation))

    def __repr__(self):
        return f"Entity(codim={self.codim}, index={self.index})"


class Intersection:
    """One facet of an element, seen from that element."""

    def __init__(self, view, inside, facetIndex, indexInInside, outside):
        self._view = view
        self.inside = inside
        self.outside = outside
        self.indexInInside = indexInInside
        self._facetIndex = facetIndex

    @property
    def boundary(self):
        return self.outside is None

    @property
    def geometry(self) -> AffineGeometry:
        topo = self._view._topology()
        return AffineGeometry(topo.types[1],
                              topo.entityCornerCoords(1, self._facetIndex))

    @property
    def centerUnitOuterNormal(self) -> Vector:
        topo = self._view._topology()
        corners = topo.entityCornerCoords(1, self._facetIndex)
        dim = topo.worldDim
        if dim == 1:
            n = np.array([1.0])
        elif dim == 2:
            t = corners[1] - corners[0]
            n = np.array([t[1], -t[0]])
        else:
            n = np.cross(corners[1] - corners[0], corners[2] - corners[0])
        n = n / np.sqrt((n * n).sum())
        insideCenter = self.inside.geometry.center
        facetCenter = corners.mean(axis=0)
        if float(n @ (np.asarray(facetCenter) - np.asarray(insideCenter))) < 0.0:
            n = -n
        return Vector(n)

    def __repr__(self):
        return (f"Intersection(inside={self.inside.index}, "
                f"outside={None if self.outside is None else self.outside.index})")


class IndexSet:
    """Consecutive per-geometry-type leaf indices of a grid view."""

    def __init__(self, view):
        self._view = view

    def index(self, e: Entity) -> int:
        self._view._checkEntity(e)
        return e.index

    def subIndices(self, e: Entity, c: int):
        topo = self._view._topology()
        self._view._checkEntity(e)
        if e.codim != 0:
            raise DomainError("subIndices is only available on elements")
        if not e.codim <= c <= topo.dim:
            raise DomainError(f"codim {c} outside [{e.codim}, {topo.dim}]")
        return tuple(int(i) for i in topo.elementSub[c][e.index])

    def size(self, codim: int) -> int:
        return self._view._topology().size(codim)

    def types(self, codim: int):
        return (self._view._topology().types[codim],)


class PartitionView:
    """Filtered iteration over the entities of one partition-type set."""

    def __init__(self, view, kind: PartitionKind):
        self._view = view
        self.kind = kind
        self.includedTypes = INCLUDED_TYPES[kind]

    def entities(self, codim):
        for e in self._view.entities(codim):
            if e.partitionType in self.includedTypes:
                yield e

    @property
    def elements(self):
        return self.entities(0)

    @property
    def facets(self):
        return self.entities(1)

    @property
    def edges(self):
        return self.entities(self._view.dimension - 1)

    @property
    def vertices(self):
        return self.entities(self._view.dimension)


class GridView:
    """Read-only leaf view over a hierarchical grid."""

    def __init__(self, hierarchicalGrid):
        self.hierarchicalGrid = hierarchicalGrid
        self._indexSet = IndexSet(self)

    @property
    def dimension(self):
        return self.hierarchicalGrid.dimension

    @property
    def dimWorld(self):
        return self._topology().worldDim

    @property
    def generation(self):
        return self.hierarchicalGrid.generation

    def _topology(self) -> LeafTopology:
        return self.hierarchicalGrid.topology

    def _checkEntity(self, e: Entity):
        if e.grid is not self:
            raise DomainError("entity belongs to a different grid view")
        if e.generation != self.generation:
            raise InvalidationError(
                "entity predates the last grid modification")

    @property
    def indexSet(self) -> IndexSet:
        return self._indexSet

    def size(self, codim: int) -> int:
        return self._topology().size(codim)

    def sizeByType(self, gt: GeometryType) -> int:
        topo = self._topology()
        for c in range(topo.dim + 1):
            if topo.types[c] == gt:
                return topo.size(c)
        return 0

    def entities(self, codim: int):
        topo = self._topology()
        if not 0 <= codim <= topo.dim:
            raise DomainError(f"codim {codim} outside [0, {topo.dim}]")
        for i in range(topo.size(codim)):
            yield Entity(self, codim, i)

    @property
    def elements(self):
        return self.entities(0)

    @property
    def facets(self):
        return self.entities(1)

    @property
    def edges(self):
        return self.entities(self.dimension - 1)

    @property
    def vertices(self):
        return self.entities(self.dimension)

    def intersections(self, e: Entity):
        topo = self._topology()
        self._checkEntity(e)
        if e.codim != 0:
            raise DomainError("intersections are only defined for elements")
        for k in range(topo.elementSub[1].shape[1]):
            f = int(topo.elementSub[1][e.index, k])
            adj = topo.facetElements[f]
            outside = None
            for other, _ in adj:
                if other != e.index:
                    outside = Entity(self, 0, other)
            yield Intersection(self, e, f, k, outside)

    def coordinates(self) -> np.ndarray:
        return self._topology().vertices.copy()

    def mapper(self, layout):
        from .mapper import MCMGMapper
        return MCMGMapper(self, layout)

    def partitionView(self, kind: PartitionKind) -> PartitionView:
        return PartitionView(self, kind)

    @property
    def interiorPartition(self):
        return PartitionView(self, PartitionKind.interior)

    @property
    def interiorBorderPartition(self):
        return PartitionView(self, PartitionKind.interiorBorder)

    @property
    def overlapPartition(self):
        return PartitionView(self, PartitionKind.overlap)

    @property
    def overlapFrontPartition(self):
        return PartitionView(self, PartitionKind.overlapFront)

    @property
    def allPartition(self):
        return PartitionView(self, PartitionKind.all)

    def triangulation(self, level: int = 0):
        from . import io
        return io.triangulation(self, level)

    def writeVTK(self, name, pointdata=None, celldata=None, subsampling=0):
        from . import io
        return io.writeVTK(self, name, pointdata=pointdata, celldata=celldata,
                           subsampling=subsampling)

    def __repr__(self):
        topo = self._topology()
        return (f"GridView(dim={self.dimension}, elements={topo.size(0)}, "
                f"vertices={topo.size(self.dimension)})")


class HierarchicalGrid:
    """Base class for refinable grids; owns generation counting."""

    def __init__(self, dimension):
        self.dimension = dimension
        self.generation = 0
        self._topo = None
        self._view = GridView(self)

    @property
    def leafView(self) -> GridView:
        return self._view

    @property
    def topology(self) -> LeafTopology:
        if self._topo is None:
            self._topo = self._buildTopology()
        return self._topo

    def _invalidate(self):
        self.generation += 1
        self._topo = None

    def globalRefine(self, n: int = 1):
        if n < 0:
            raise DomainError("number of refinement passes must be >= 0")
        for _ in range(n):
            self._refineOnce()
            self._invalidate()

    def adapt(self, mark):
        raise CapabilityError(
            f"{type(self).__name__} does not support marker-driven adaptation")

    def _refineOnce(self):
        raise NotImplementedError

    def _buildTopology(self) -> LeafTopology:
        raise NotImplementedError
