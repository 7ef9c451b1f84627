"""Layout-driven assignment of contiguous index blocks to grid entities."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InvalidationError
from .geometry import CUBE, GeometryType


def _resolveLayout(view, layout):
    """Normalize a layout (sequence, mapping or callable) to counts per type."""
    dim = view.dimension
    codimTypes = [view.indexSet.types(c)[0] for c in range(dim + 1)]
    perType = {}
    if callable(layout) and not isinstance(layout, dict):
        for gt in codimTypes:
            perType[gt] = layout(gt)
    elif isinstance(layout, dict):
        perType = dict(layout)
    elif isinstance(layout, (list, tuple)):
        if len(layout) != dim + 1:
            raise DomainError(
                f"per-codim layout needs {dim + 1} entries, got {len(layout)}")
        for c, count in enumerate(layout):
            perType[codimTypes[c]] = count
    else:
        raise DomainError(f"unsupported layout {layout!r}")

    resolved = {}
    for gt, count in perType.items():
        if isinstance(count, bool):
            count = 1 if count else 0
        count = int(count)
        if count < 0:
            raise DomainError(f"negative dof count {count} for {gt}")
        if count > 0:
            resolved[gt] = count
    return resolved


def _typeOrder(gt: GeometryType, dim: int):
    # elements first (codim ascending), simplex before cube within a codim
    return (dim - gt.dim, 0 if gt.shape != CUBE else 1)


class MCMGMapper:
    """Maps entities to contiguous dof blocks, grouped by geometry type."""

    def __init__(self, view, layout):
        self.view = view
        self.generation = view.generation
        self.layout = _resolveLayout(view, layout)
        dim = view.dimension
        self.offsets = {}
        offset = 0
        for gt in sorted(self.layout, key=lambda t: _typeOrder(t, dim)):
            count = self.layout[gt]
            n = view.sizeByType(gt)
            if n == 0:
                continue
            self.offsets[gt] = offset
            offset += count * n
        self.size = offset

    def _check(self, e):
        if self.generation != self.view.generation:
            raise InvalidationError("mapper predates the last grid modification")
        self.view._checkEntity(e)

    def _blockStart(self, gt, leafIndex):
        count = self.layout.get(gt, 0)
        if count == 0 or gt not in self.offsets:
            raise DomainError(f"layout assigns no dofs to {gt}")
        return self.offsets[gt] + count * leafIndex

    def index(self, e) -> int:
        """First index of the entity's dof block."""
        self._check(e)
        localIndex = self.view.indexSet.index(e)
        return self._blockStart(e.type, localIndex)

    def subIndices(self, e, c) -> np.ndarray:
        """Dof indices of all codim-c subentities, in reference order."""
        self._check(e)
        topoIndices = self.view.indexSet.subIndices(e, c)
        gt = self.view.indexSet.types(c)[0]
        count = self.layout.get(gt, 0)
        if count == 0 or gt not in self.offsets:
            raise DomainError(f"layout assigns no dofs to {gt}")
        base = self.offsets[gt]
        out = np.empty(len(topoIndices) * count, dtype=np.int64)
        pos = 0
        for s in topoIndices:
            start = base + count * s
            out[pos:pos + count] = np.arange(start, start + count)
            pos += count
        return out

    def __call__(self, e) -> np.ndarray:
        """All dof indices attached to the element, vertices first."""
        self._check(e)
        dim = self.view.dimension
        parts = []
        for c in range(dim, -1, -1):
            gt = self.view.indexSet.types(c)[0]
            if self.layout.get(gt, 0) > 0 and gt in self.offsets:
                parts.append(self.subIndices(e, c))
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(parts)

    def __repr__(self):
        return f"MCMGMapper(size={self.size}, layout={self.layout})"


def makeMapper(view, layout) -> MCMGMapper:
    return MCMGMapper(view, layout)
