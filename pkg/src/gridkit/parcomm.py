"""Simulated multi-rank partitioning and gather-scatter communication.

Ranks are simulated in one process: a coordinate-sorted partition assigns
each element to a rank, per-rank views carry one layer of vertex-neighbor
ghost elements, and ``communicate`` exchanges mapper-addressed data between
partition types with a deterministic processing order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IllegalPartitionError, InvalidationError
from .grid import (INCLUDED_TYPES, Entity, PartitionKind, PartitionType,
                   PartitionView)


@dataclass(frozen=True)
class SimPartition:
    nRanks: int
    elementRank: np.ndarray

    def rankElements(self, rank):
        return np.nonzero(self.elementRank == rank)[0]


def partitionByCoordinate(view, nRanks: int) -> SimPartition:
    """Sort elements by center coordinates and cut into balanced strips."""
    if nRanks < 1:
        raise DomainError(f"rank count must be >= 1, got {nRanks}")
    topo = view._topology()
    centers = topo.vertices[topo.elements].mean(axis=1)
    keys = [np.arange(len(centers))]
    for axis in range(centers.shape[1] - 1, -1, -1):
        keys.append(centers[:, axis])
    order = np.lexsort(tuple(keys))
    ranks = np.empty(len(centers), dtype=np.int64)
    base, extra = divmod(len(centers), nRanks)
    start = 0
    for r in range(nRanks):
        count = base + (1 if r < extra else 0)
        ranks[order[start:start + count]] = r
        start += count
    return SimPartition(nRanks, ranks)


class RankIndexSet:
    """Per-rank consecutive indices over the entities known to the rank."""

    def __init__(self, rankView):
        self._rankView = rankView

    def index(self, e: Entity) -> int:
        self._rankView._checkEntity(e)
        return int(self._rankView._globalToLocal[e.codim][e.index])

    def subIndices(self, e: Entity, c: int):
        baseSubs = self._rankView.baseView.indexSet.subIndices(e, c)
        lookup = self._rankView._globalToLocal[c]
        out = []
        for g in baseSubs:
            local = int(lookup[g])
            if local < 0:
                raise DomainError(
                    f"subentity {g} of codim {c} is not known to rank "
                    f"{self._rankView.rank}")
            out.append(local)
        return tuple(out)

    def size(self, codim: int) -> int:
        return len(self._rankView._localIds[codim])

    def types(self, codim: int):
        return self._rankView.baseView.indexSet.types(codim)


class RankView:
    """Restriction of a grid view to one rank's interior plus ghosts."""

    def __init__(self, baseView, partition, rank, localIds, partitionTypes):
        self.baseView = baseView
        self.partition = partition
        self.rank = rank
        self._localIds = localIds          # codim -> sorted global ids
        self._types = partitionTypes       # codim -> PartitionType per local id
        self._globalToLocal = {}
        for c, ids in localIds.items():
            lookup = np.full(baseView.size(c), -1, dtype=np.int64)
            lookup[ids] = np.arange(len(ids))
            self._globalToLocal[c] = lookup
        self._indexSet = RankIndexSet(self)

    @property
    def dimension(self):
        return self.baseView.dimension

    @property
    def generation(self):
        return self.baseView.generation

    @property
    def hierarchicalGrid(self):
        return self.baseView.hierarchicalGrid

    @property
    def indexSet(self):
        return self._indexSet

    def _topology(self):
        return self.baseView._topology()

    def _checkEntity(self, e: Entity):
        self.baseView._checkEntity(e)
        if self._globalToLocal[e.codim][e.index] < 0:
            raise DomainError(
                f"entity {e.index} of codim {e.codim} is not known to rank "
                f"{self.rank}")

    def partitionTypeOf(self, codim, globalIndex) -> PartitionType:
        local = self._globalToLocal[codim][globalIndex]
        if local < 0:
            raise DomainError(f"entity not known to rank {self.rank}")
        return self._types[codim][local]

    def size(self, codim: int) -> int:
        return len(self._localIds[codim])

    def sizeByType(self, gt) -> int:
        for c in range(self.dimension + 1):
            if self.baseView.indexSet.types(c)[0] == gt:
                return self.size(c)
        return 0

    def entities(self, codim: int):
        for local, g in enumerate(self._localIds[codim]):
            yield Entity(self.baseView, codim, int(g),
                         partitionType=self._types[codim][local])

    @property
    def elements(self):
        return self.entities(0)

    @property
    def vertices(self):
        return self.entities(self.dimension)

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

    def mapper(self, layout):
        from .mapper import MCMGMapper
        return MCMGMapper(self, layout)

    def __repr__(self):
        return f"RankView(rank={self.rank}, elements={self.size(0)})"


def buildRankViews(view, partition: SimPartition):
    """Per-rank entity sets, ghost layers and partition types."""
    topo = view._topology()
    dim = topo.dim
    nRanks = partition.nRanks
    elementRank = partition.elementRank

    # ranks adjacent to each entity, per codim
    adjacentRanks = {}
    for c in range(dim + 1):
        mat = np.zeros((topo.size(c), nRanks), dtype=bool)
        sub = topo.elementSub[c]
        ranksPerRow = np.repeat(elementRank, sub.shape[1])
        mat[sub.reshape(-1), ranksPerRow] = True
        adjacentRanks[c] = mat

    # vertex -> elements incidence for the ghost layer
    nV = topo.size(dim)
    vertexRanks = adjacentRanks[dim]

    views = []
    for r in range(nRanks):
        owned = elementRank == r
        ghostVerts = vertexRanks[:, r]
        touchesOwnedVertex = ghostVerts[topo.elements].any(axis=1)
        present = owned | touchesOwnedVertex

        localIds = {0: np.nonzero(present)[0]}
        partitionTypes = {0: [PartitionType.interior if owned[g] else PartitionType.ghost
                              for g in localIds[0]]}
        for c in range(1, dim + 1):
            subIds = np.unique(topo.elementSub[c][present].reshape(-1))
            localIds[c] = subIds
            types = []
            for g in subIds:
                ranks = np.nonzero(adjacentRanks[c][g])[0]
                if r in ranks and len(ranks) >= 2:
                    types.append(PartitionType.border)
                elif r in ranks:
                    types.append(PartitionType.interior)
                else:
                    types.append(PartitionType.ghost)
            partitionTypes[c] = types
        views.append(RankView(view, partition, r, localIds, partitionTypes))
    return views


class CommOp(enum.Enum):
    set = "set"
    add = "add"
    min = "min"
    max = "max"


_OP_FUNCTIONS = {
    CommOp.set: lambda local, remote: remote,
    CommOp.add: lambda local, remote: local + remote,
    CommOp.min: np.minimum,
    CommOp.max: np.maximum,
}


def _normalizeKind(spec) -> PartitionKind:
    if isinstance(spec, PartitionView):
        return spec.kind
    if isinstance(spec, PartitionKind):
        return spec
    raise DomainError(f"expected a partition or partition kind, got {spec!r}")


def _checkLegalPair(fromKind: PartitionKind, toKind: PartitionKind):
    if PartitionKind.interior in (fromKind, toKind):
        raise IllegalPartitionError(
            "cannot send or receive on the interior partition")
    overlapKinds = {PartitionKind.overlap, PartitionKind.overlapFront}
    if (fromKind is PartitionKind.interiorBorder and toKind in overlapKinds) or \
       (toKind is PartitionKind.interiorBorder and fromKind in overlapKinds):
        raise IllegalPartitionError(
            "interiorBorder cannot be combined with overlap partitions")


def communicate(mappers, fromPartition, toPartition, op, *dataSets):
    """Exchange mapper-addressed data between partition types.

    ``mappers`` holds one mapper per rank over sibling rank views and each
    data set one array per rank. For every entity held as ``from``-type on
    rank A and ``to``-type on rank B (A != B), B's block becomes
    ``op(local, remote)``; exchanges run in ascending (sender rank, entity
    global id) order. For ``set`` the highest sending rank wins everywhere,
    including on lower-ranked senders, which makes a set exchange idempotent.
    """
    fromKind = _normalizeKind(fromPartition)
    toKind = _normalizeKind(toPartition)
    _checkLegalPair(fromKind, toKind)
    fromTypes = INCLUDED_TYPES[fromKind]
    toTypes = INCLUDED_TYPES[toKind]
    opFn = _OP_FUNCTIONS[op] if isinstance(op, CommOp) else op
    if not callable(opFn):
        raise DomainError(f"unsupported reduction {op!r}")
    includeSelf = op is CommOp.set

    views = [m.view for m in mappers]
    nRanks = len(views)
    if any(m.generation != m.view.generation for m in mappers):
        raise InvalidationError("mapper predates the last grid modification")
    for data in dataSets:
        if len(data) != nRanks:
            raise DomainError("one data array per rank expected")
        for r, arr in enumerate(data):
            if len(arr) != mappers[r].size:
                raise DomainError(
                    f"rank {r}: array of length {mappers[r].size} expected, "
                    f"got {len(arr)}")

        snapshots = [np.array(arr, dtype=float, copy=True) for arr in data]
        dim = views[0].dimension
        for sender in range(nRanks):
            senderView = views[sender]
            for c in range(dim + 1):
                gt = senderView.indexSet.types(c)[0]
                count = mappers[sender].layout.get(gt, 0)
                if count == 0:
                    continue
                offsetS = mappers[sender].offsets[gt]
                for localS, g in enumerate(senderView._localIds[c]):
                    if senderView._types[c][localS] not in fromTypes:
                        continue
                    blockS = snapshots[sender][offsetS + count * localS:
                                               offsetS + count * (localS + 1)]
                    for receiver in range(nRanks):
                        if receiver == sender and not includeSelf:
                            continue
                        rview = views[receiver]
                        localR = rview._globalToLocal[c][g]
                        if localR < 0:
                            continue
                        if rview._types[c][localR] not in toTypes:
                            continue
                        offsetR = mappers[receiver].offsets[gt]
                        sl = slice(offsetR + count * localR,
                                   offsetR + count * (localR + 1))
                        data[receiver][sl] = opFn(data[receiver][sl], blockS)


def communicateSet(mappers, fromPartition, toPartition, *dataSets):
    communicate(mappers, fromPartition, toPartition, CommOp.set, *dataSets)


def communicateAdd(mappers, fromPartition, toPartition, *dataSets):
    communicate(mappers, fromPartition, toPartition, CommOp.add, *dataSets)
