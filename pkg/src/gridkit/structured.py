"""Axis-aligned Cartesian hierarchical grids in 1-3 dimensions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import cube
from .grid import GridView, HierarchicalGrid, LeafTopology


@dataclass(frozen=True)
class CartesianDomain:
    lower: tuple
    upper: tuple
    cells: tuple

    def __post_init__(self):
        lower = tuple(float(x) for x in self.lower)
        upper = tuple(float(x) for x in self.upper)
        cells = tuple(int(n) for n in self.cells)
        if not len(lower) == len(upper) == len(cells):
            raise DomainError("lower, upper and cells must have equal length")
        if not 1 <= len(cells) <= 3:
            raise DomainError("Cartesian domains support 1 to 3 dimensions")
        for lo, up in zip(lower, upper):
            if not up > lo:
                raise DomainError(f"upper bound {up} not above lower bound {lo}")
        for n in cells:
            if n < 1:
                raise DomainError(f"cell count {n} must be >= 1")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "cells", cells)

    @property
    def dimension(self):
        return len(self.cells)


def cartesianDomain(lower, upper, cells) -> CartesianDomain:
    return CartesianDomain(tuple(lower), tuple(upper), tuple(cells))


class StructuredHierarchicalGrid(HierarchicalGrid):
    """Cartesian grid; global refinement halves every cell per axis."""

    def __init__(self, domain: CartesianDomain):
        super().__init__(domain.dimension)
        self.domain = domain
        self._cells = np.array(domain.cells, dtype=np.int64)

    @property
    def cells(self):
        return tuple(int(n) for n in self._cells)

    def _refineOnce(self):
        self._cells = self._cells * 2

    def _buildTopology(self) -> LeafTopology:
        dim = self.dimension
        lower = np.array(self.domain.lower)
        upper = np.array(self.domain.upper)
        cells = self._cells
        nPoints = cells + 1

        axes = [np.linspace(lower[a], upper[a], nPoints[a]) for a in range(dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        # axis 0 runs fastest in the flattened vertex order
        vertices = np.stack([g.reshape(-1, order="F") for g in grids], axis=-1)

        nE = int(np.prod(cells))
        cellIdx = np.arange(nE)
        multi = []
        rest = cellIdx
        for a in range(dim):
            multi.append(rest % cells[a])
            rest = rest // cells[a]

        strides = np.cumprod(np.concatenate(([1], nPoints[:-1])))
        corners = np.zeros((nE, 2 ** dim), dtype=np.int64)
        for bit in range(2 ** dim):
            vid = np.zeros(nE, dtype=np.int64)
            for a in range(dim):
                vid += (multi[a] + ((bit >> a) & 1)) * strides[a]
            corners[:, bit] = vid

        return LeafTopology(dim, vertices, corners, cube(dim))


def structuredGrid(*args) -> GridView:
    """Leaf view of a Cartesian grid.

    Accepts either a :class:`CartesianDomain` or the triple
    ``(lower, upper, cells)``.
    """
    if len(args) == 1:
        domain = args[0]
        if not isinstance(domain, CartesianDomain):
            raise DomainError("structuredGrid expects a CartesianDomain")
    elif len(args) == 3:
        domain = cartesianDomain(*args)
    else:
        raise DomainError("structuredGrid takes a domain or (lower, upper, cells)")
    return StructuredHierarchicalGrid(domain).leafView
