"""Geometry types, reference elements, and affine geometry mappings.

Coordinate conventions used throughout the package:

* a single point is a 1-D float64 array of length ``dim``,
* a batch of points is a 2-D float64 array of shape ``(N, dim)`` so that
  ``x[..., i]`` addresses the i-th coordinate in both layouts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericError

MAX_DIM = 3


class Vector(np.ndarray):
    """Small dense float vector with the geometric ``two_norm`` property.

    Behaves like a numpy array; for batches of points (shape ``(N, dim)``)
    ``two_norm`` reduces over the coordinate axis and returns one norm per
    point.
    """

    def __new__(cls, data):
        return np.asarray(data, dtype=float).view(cls)

    @property
    def two_norm(self):
        norm = np.sqrt((np.asarray(self) ** 2).sum(axis=-1))
        return float(norm) if norm.ndim == 0 else norm

    def __str__(self):
        if self.ndim == 1:
            return "(" + ", ".join("%f" % c for c in self) + ")"
        return np.ndarray.__str__(self)


SIMPLEX = "simplex"
CUBE = "cube"


@dataclass(frozen=True)
class GeometryType:
    """Shape tag of an entity: basic shape plus dimension.

    Dimensions 0 and 1 are canonicalized to the simplex shape since point
    and line are shared by both families.
    """

    dim: int
    shape: str

    def __post_init__(self):
        if not 0 <= self.dim <= MAX_DIM:
            raise DomainError(f"geometry dimension {self.dim} outside [0, {MAX_DIM}]")
        if self.shape not in (SIMPLEX, CUBE):
            raise DomainError(f"unknown shape {self.shape!r}")
        if self.dim <= 1 and self.shape != SIMPLEX:
            object.__setattr__(self, "shape", SIMPLEX)

    @property
    def isSimplex(self):
        return self.shape == SIMPLEX

    @property
    def isCube(self):
        # dim <= 1: line/vertex belong to both families
        return self.shape == CUBE or self.dim <= 1

    def __str__(self):
        names = {(0, SIMPLEX): "vertex", (1, SIMPLEX): "line",
                 (2, SIMPLEX): "triangle", (2, CUBE): "quadrilateral"}
        return names.get((self.dim, self.shape), f"{self.shape}({self.dim})")

    __repr__ = __str__


def simplex(dim: int) -> GeometryType:
    return GeometryType(dim, SIMPLEX)


def cube(dim: int) -> GeometryType:
    return GeometryType(dim, CUBE)


vertex = simplex(0)
line = simplex(1)
triangle = simplex(2)
quadrilateral = cube(2)


def _cubeCorners(dim):
    return np.array([[(i >> a) & 1 for a in range(dim)]
                     for i in range(2 ** dim)], dtype=float)


def _simplexCorners(dim):
    corners = np.zeros((dim + 1, dim))
    for i in range(dim):
        corners[i + 1, i] = 1.0
    return corners


def _simplexSubEntities(dim, codim):
    # faces of dimension dim-codim = corner subsets of size dim-codim+1
    return tuple(itertools.combinations(range(dim + 1), dim - codim + 1))

def _cubeSubEntities(dim, codim):
    subs = []
    for freeAxes in itertools.combinations(range(dim), dim - codim):
        fixedAxes = [a for a in range(dim) if a not in freeAxes]
        for fixedBits in range(2 ** len(fixedAxes)):
            base = 0
            for k, a in enumerate(fixedAxes):
                base |= ((fixedBits >> k) & 1) << a
            corners = []
            for freeBits in range(2 ** len(freeAxes)):
                cid = base
                for k, a in enumerate(freeAxes):
                    cid |= ((freeBits >> k) & 1) << a
                corners.append(cid)
            subs.append(tuple(corners))
    return tuple(subs)


class ReferenceElement:
    """Corner coordinates and subentity topology of a geometry type."""

    def __init__(self, gt: GeometryType):
        self.type = gt
        dim = gt.dim
        if gt.isSimplex:
            self._corners = _simplexCorners(dim)
            self._subEntities = tuple(_simplexSubEntities(dim, c)
                                      for c in range(dim + 1))
            self.volume = 1.0
            for d in range(1, dim + 1):
                self.volume /= d
        else:
            self._corners = _cubeCorners(dim)
            self._subEntities = tuple(_cubeSubEntities(dim, c)
                                      for c in range(dim + 1))
            self.volume = 1.0

    @property
    def dimension(self):
        return self.type.dim

    @property
    def corners(self):
        return tuple(Vector(c) for c in self._corners)

    @property
    def cornerArray(self):
        return self._corners

    def size(self, codim: int) -> int:
        self._checkCodim(codim)
        return len(self._subEntities[codim])

    def subEntityCornerIds(self, codim: int):
        """Per subentity of the given codimension, its corner indices."""
        self._checkCodim(codim)
        return self._subEntities[codim]

    def subEntityType(self, codim: int) -> GeometryType:
        d = self.dimension - codim
        return GeometryType(d, self.type.shape) if d > 1 else simplex(d)

    @property
    def barycenter(self):
        return Vector(self._corners.mean(axis=0))

    def _checkCodim(self, codim):
        if not 0 <= codim <= self.dimension:
            raise DomainError(
                f"codim {codim} outside [0, {self.dimension}] for {self.type}")

    def __repr__(self):
        return f"ReferenceElement({self.type})"


@lru_cache(maxsize=None)
def referenceElement(gt: GeometryType) -> ReferenceElement:
    return ReferenceElement(gt)


class AffineGeometry:
    """Affine mapping from a reference element into world coordinates.

    Covers every geometry this package constructs: simplex maps and
    axis-aligned cube maps. ``affine`` is therefore always true and the
    Jacobian is constant over the element.
    """

    def __init__(self, gt: GeometryType, corners):
        corners = np.asarray(corners, dtype=float)
        if corners.ndim == 1:
            corners = corners.reshape(1, -1) if gt.dim == 0 else corners.reshape(-1, 1)
        ref = referenceElement(gt)
        if corners.shape[0] != len(ref.subEntityCornerIds(gt.dim)):
            raise DomainError(
                f"{gt} expects {ref.size(gt.dim)} corners, got {corners.shape[0]}")
        self.type = gt
        self._corners = corners
        self.worldDim = corners.shape[1]
        dim = gt.dim
        if gt.isSimplex:
            tangents = corners[1:] - corners[0]
        else:
            tangents = np.array([corners[1 << a] - corners[0] for a in range(dim)])
        self._origin = corners[0]
        self._jt = tangents.reshape(dim, self.worldDim)
        if dim == 0:
            self._ie = 0.0
        else:
            gram = self._jt @ self._jt.T
            det = float(np.linalg.det(gram))
            self._ie = float(np.sqrt(det)) if det > 0.0 else 0.0

    @property
    def affine(self):
        return True

    @property
    def referenceElement(self):
        return referenceElement(self.type)

    @property
    def corners(self):
        return tuple(Vector(c) for c in self._corners)

    @property
    def center(self):
        return Vector(self._corners.mean(axis=0))

    @property
    def volume(self):
        return self.referenceElement.volume * self._ie if self.type.dim > 0 else 0.0

    def _checkLocal(self, local):
        local = np.asarray(local, dtype=float)
        if local.shape[-1:] != (self.type.dim,):
            raise DomainError(
                f"local coordinate of length {self.type.dim} expected, "
                f"got shape {local.shape}")
        return local

    def toGlobal(self, local) -> Vector:
        local = self._checkLocal(local)
        return Vector(self._origin + local @ self._jt)

    def toGlobalBatch(self, locals) -> np.ndarray:
        locals = np.asarray(locals, dtype=float).reshape(-1, self.type.dim)
        return np.asarray(self._origin + locals @ self._jt)

    def toLocal(self, globalPos) -> Vector:
        globalPos = np.asarray(globalPos, dtype=float)
        if globalPos.shape[-1:] != (self.worldDim,):
            raise DomainError(
                f"global coordinate of length {self.worldDim} expected, "
                f"got shape {globalPos.shape}")
        rhs = globalPos - self._origin
        if self.type.dim == self.worldDim:
            try:
                sol = np.linalg.solve(self._jt.T, np.asarray(rhs).reshape(-1, self.worldDim).T)
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"singular geometry map: {exc}") from exc
            out = sol.T.reshape(globalPos.shape[:-1] + (self.type.dim,))
        else:
            if self._ie == 0.0:
                raise NumericError("degenerate geometry map has no local inverse")
            sol, *_ = np.linalg.lstsq(self._jt.T, np.atleast_2d(rhs).T, rcond=None)
            out = sol.T.reshape(globalPos.shape[:-1] + (self.type.dim,))
        return Vector(out)

    def jacobianTransposed(self, local=None) -> np.ndarray:
        return self._jt.copy()

    def jacobianInverseTransposed(self, local=None) -> np.ndarray:
        if self.type.dim != self.worldDim:
            return np.linalg.pinv(self._jt)
        try:
            inv = np.linalg.inv(self._jt)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular geometry map: {exc}") from exc
        return inv

    def integrationElement(self, local=None):
        if local is not None:
            local = np.asarray(local, dtype=float)
            if local.ndim == 2:
                return self.integrationElementBatch(local)
        return self._ie

    def integrationElementBatch(self, locals) -> np.ndarray:
        locals = np.asarray(locals, dtype=float).reshape(-1, self.type.dim)
        return np.full(locals.shape[0], self._ie)

    def __repr__(self):
        return f"AffineGeometry({self.type}, corners={len(self._corners)})"
