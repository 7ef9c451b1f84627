"""Demo solvers: P2 finite elements for the Laplacian and upwind finite
volumes for linear transport, plus the batched L2-norm kernel."""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, ConvergenceError, DomainError
from .geometry import Vector, line, referenceElement, triangle, vertex
from .gridfunction import GridFunction
from .quadrature import quadratureRule


class SparseMatrix:
    """Triplet-accumulated square sparse matrix with a CSR final form."""

    def __init__(self, rows: int, cols: int):
        self.rows = rows
        self.cols = cols
        self._i = []
        self._j = []
        self._v = []
        self._csr = None

    def add(self, i, j, value):
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise DomainError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
        self._i.append(int(i))
        self._j.append(int(j))
        self._v.append(float(value))
        self._csr = None

    def addBlock(self, rowIndices, colIndices, dense):
        dense = np.asarray(dense, dtype=float)
        for a, i in enumerate(rowIndices):
            for b, j in enumerate(colIndices):
                self.add(i, j, dense[a, b])

    def filterTriplets(self, keep):
        """Keep triplets with ``keep(i, j, value)`` true; drops the CSR form."""
        kept = [(i, j, v) for i, j, v in zip(self._i, self._j, self._v)
                if keep(i, j, v)]
        self._i = [t[0] for t in kept]
        self._j = [t[1] for t in kept]
        self._v = [t[2] for t in kept]
        self._csr = None

    def columnEntries(self):
        return zip(self._i, self._j, self._v)

    def finalize(self):
        """Row-compressed form with sorted, deduplicated (summed) columns."""
        if self._csr is not None:
            return self._csr
        i = np.asarray(self._i, dtype=np.int64)
        j = np.asarray(self._j, dtype=np.int64)
        v = np.asarray(self._v, dtype=float)
        order = np.lexsort((j, i))
        i, j, v = i[order], j[order], v[order]
        if len(i):
            newGroup = np.ones(len(i), dtype=bool)
            newGroup[1:] = (i[1:] != i[:-1]) | (j[1:] != j[:-1])
            starts = np.nonzero(newGroup)[0]
            data = np.add.reduceat(v, starts)
            rows = i[starts]
            cols = j[starts]
        else:
            data = v
            rows = i
            cols = j
        indptr = np.zeros(self.rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        self._csr = (indptr, cols, data)
        return self._csr

    def matvec(self, x):
        indptr, cols, data = self.finalize()
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.rows)
        np.add.at(out, np.repeat(np.arange(self.rows),
                                 np.diff(indptr)), data * x[cols])
        return out

    def __matmul__(self, x):
        return self.matvec(x)

    def toDense(self):
        indptr, cols, data = self.finalize()
        dense = np.zeros((self.rows, self.cols))
        for r in range(self.rows):
            for pos in range(indptr[r], indptr[r + 1]):
                dense[r, cols[pos]] += data[pos]
        return dense

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz<={len(self._v)})"


def cgSolve(A, b, tol: float = 1e-10, maxIter: int | None = None):
    """Conjugate gradients for symmetric positive definite systems."""
    b = np.asarray(b, dtype=float)
    n = len(b)
    if maxIter is None:
        maxIter = 10 * n + 100
    x = np.zeros(n)
    r = b - A @ x
    normB = float(np.sqrt(r @ r))
    if normB == 0.0:
        return x, 0
    p = r.copy()
    rr = float(r @ r)
    for it in range(1, maxIter + 1):
        Ap = A @ p
        alpha = rr / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rrNew = float(r @ r)
        if np.sqrt(rrNew) <= tol * normB:
            return x, it
        p = r + (rrNew / rr) * p
        rr = rrNew
    raise ConvergenceError(
        f"cg did not converge in {maxIter} iterations "
        f"(residual {np.sqrt(rr):.3e})",
        residual=float(np.sqrt(rr)), iterations=maxIter)


# -- second order Lagrange elements on triangles ---------------------------

_EDGES = ((0, 1), (0, 2), (1, 2))
_GRAD_BARY = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def p2ShapeValues(hatxs) -> np.ndarray:
    """Values of the six nodal shape functions; (N, 6)."""
    hatxs = np.asarray(hatxs, dtype=float).reshape(-1, 2)
    x, y = hatxs[:, 0], hatxs[:, 1]
    lam = np.stack([1.0 - x - y, x, y], axis=-1)
    out = np.empty((len(hatxs), 6))
    for i in range(3):
        out[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
    for k, (i, j) in enumerate(_EDGES):
        out[:, 3 + k] = 4.0 * lam[:, i] * lam[:, j]
    return out


def p2ShapeGradients(hatxs) -> np.ndarray:
    """Reference gradients of the six shape functions; (N, 6, 2)."""
    hatxs = np.asarray(hatxs, dtype=float).reshape(-1, 2)
    x, y = hatxs[:, 0], hatxs[:, 1]
    lam = np.stack([1.0 - x - y, x, y], axis=-1)
    out = np.empty((len(hatxs), 6, 2))
    for i in range(3):
        out[:, i, :] = (4.0 * lam[:, i, None] - 1.0) * _GRAD_BARY[i]
    for k, (i, j) in enumerate(_EDGES):
        out[:, 3 + k, :] = 4.0 * (lam[:, i, None] * _GRAD_BARY[j]
                                  + lam[:, j, None] * _GRAD_BARY[i])
    return out


def p2Mapper(view):
    return view.mapper({vertex: 1, line: 1})


def p2ElementDofs(mapper, e) -> np.ndarray:
    """Global dofs in local order: three corners, then three edges."""
    return np.concatenate([mapper.subIndices(e, 2), mapper.subIndices(e, 1)])


def p2ElementStiffness(geo, rule=None) -> np.ndarray:
    if rule is None:
        rule = quadratureRule(triangle, 4)
    positions, weights = rule.get()
    grads = p2ShapeGradients(positions)
    jit = geo.jacobianInverseTransposed()
    ie = geo.integrationElement()
    world = grads @ jit.T
    local = np.zeros((6, 6))
    for n in range(len(weights)):
        g = world[n]
        local += weights[n] * ie * (g @ g.T)
    return local


def _batchValues(f, e, geo, positions):
    if isinstance(f, GridFunction):
        return f.evalBatch(e, positions)[:, 0]
    return np.asarray(f(Vector(geo.toGlobalBatch(positions))), dtype=float)


def femAssembleP2(view, f):
    """Stiffness matrix and load vector for second order Lagrange elements.

    The source term is evaluated with a single batched callback per element.
    """
    topo = view._topology()
    if topo.elementType != triangle:
        raise CapabilityError("P2 assembly needs a 2d triangle grid")
    mapper = p2Mapper(view)
    A = SparseMatrix(mapper.size, mapper.size)
    load = np.zeros(mapper.size)
    rule = quadratureRule(triangle, 4)
    positions, weights = rule.get()
    shapes = p2ShapeValues(positions)
    refGrads = p2ShapeGradients(positions)
    for e in view.elements:
        geo = e.geometry
        jit = geo.jacobianInverseTransposed()
        ie = geo.integrationElement()
        world = refGrads @ jit.T
        localA = np.einsum("n,nsd,ntd->st", weights * ie, world, world)
        fvals = _batchValues(f, e, geo, positions)
        localL = (weights * ie * fvals) @ shapes
        dofs = p2ElementDofs(mapper, e)
        A.addBlock(dofs, dofs, localA)
        np.add.at(load, dofs, localL)
    return A, load, mapper


def boundaryDofsP2(view, mapper):
    """Dirichlet dofs with their node positions, via boundary intersections."""
    ref = referenceElement(triangle)
    found = {}
    for e in view.elements:
        corners = None
        vdofs = edofs = None
        for isect in view.intersections(e):
            if not isect.boundary:
                continue
            if corners is None:
                corners = e.geometry.corners
                vdofs = mapper.subIndices(e, 2)
                edofs = mapper.subIndices(e, 1)
            k = isect.indexInInside
            for c in ref.subEntityCornerIds(1)[k]:
                found[int(vdofs[c])] = np.asarray(corners[c])
            found[int(edofs[k])] = np.asarray(isect.geometry.center)
    dofs = sorted(found)
    return dofs, [Vector(found[d]) for d in dofs]


def applyDirichlet(A: SparseMatrix, load, boundaryDofs, g):
    """Symmetric row and column elimination for Dirichlet constraints.

    ``boundaryDofs`` is the (dofs, positions) pair from ``boundaryDofsP2``;
    ``g`` may be a grid function, a plain callable of the position, or a
    constant.
    """
    dofs, positions = boundaryDofs
    if isinstance(g, GridFunction):
        values = [float(g.evalGlobal(p)) for p in positions]
    elif callable(g):
        values = [float(g(p)) for p in positions]
    else:
        values = [float(g)] * len(dofs)
    boundary = dict(zip(dofs, values))
    for i, j, v in A.columnEntries():
        if j in boundary and i not in boundary:
            load[i] -= v * boundary[j]
    A.filterTriplets(lambda i, j, v: i not in boundary and j not in boundary)
    for d, value in boundary.items():
        A.add(d, d, 1.0)
        load[d] = value


def p2Function(view, mapper, data) -> GridFunction:
    """Grid function evaluating a P2 dof vector."""
    from .gridfunction import gridFunctionFromLocal
    data = np.asarray(data, dtype=float)

    def evaluate(e, hatxs):
        values = p2ShapeValues(hatxs) @ data[p2ElementDofs(mapper, e)]
        return values if np.asarray(hatxs).ndim == 2 else float(values[0])

    return gridFunctionFromLocal(view, evaluate)


def l2Norm2(view, gf, rules) -> float:
    """Squared L2 norm via one batched evaluation per element."""
    total = 0.0
    for e in view.elements:
        rule = rules(e.type)
        positions, weights = rule.get()
        factors = weights * e.geometry.integrationElementBatch(positions)
        values = gf.evalBatch(e, positions)
        total += float(factors @ (values * values).sum(axis=1))
    return total


def l2Norm2Loop(view, gf, rules) -> float:
    """Squared L2 norm with one evaluation per quadrature point."""
    total = 0.0
    for e in view.elements:
        geo = e.geometry
        for p in rules(e.type):
            value = gf.evalDirect(e, p.position)
            weight = p.weight * geo.integrationElement(p.position)
            total += weight * float((value * value).sum())
    return total


# -- first order upwind finite volumes -------------------------------------

class FVState:
    """Piecewise constant transport state: one dof per element."""

    def __init__(self, mapper, data, t=0.0):
        self.mapper = mapper
        self.data = np.asarray(data, dtype=float)
        self.t = float(t)
        self.tau = 0.0
        self._cache = None

    def __repr__(self):
        return f"FVState(t={self.t}, cells={len(self.data)})"


def fvLayout(view):
    return view.mapper(lambda gt: gt.dim == view.dimension)


def fvInitialize(view, mapper, c0) -> FVState:
    """Cell data from the initial function, midpoint rule per cell."""
    data = np.zeros(mapper.size)
    for e in view.elements:
        bary = referenceElement(e.type).barycenter
        if isinstance(c0, GridFunction):
            value = float(c0.evalDirect(e, bary)[0])
        else:
            value = float(c0(e.geometry.center))
        data[mapper.index(e)] = value
    return FVState(mapper, data)


class _FVGeometry:
    """Per-generation cache of cell volumes and facet data."""

    def __init__(self, view, mapper):
        self.generation = view.generation
        dim = view.dimension
        b = np.ones(dim)
        nE = view.size(0)
        facetsPerCell = len(referenceElement(
            view.indexSet.types(0)[0]).subEntityCornerIds(1))
        self.volume = np.zeros(nE)
        self.neighbor = np.full((nE, facetsPerCell), -1, dtype=np.int64)
        self.bdotn = np.zeros((nE, facetsPerCell))
        self.area = np.zeros((nE, facetsPerCell))
        self.center = np.zeros((nE, facetsPerCell, dim))
        for e in view.elements:
            row = mapper.index(e)
            self.volume[row] = e.geometry.volume
            for k, isect in enumerate(view.intersections(e)):
                normal = isect.centerUnitOuterNormal
                geo = isect.geometry
                self.bdotn[row, k] = float(b @ np.asarray(normal))
                self.area[row, k] = geo.volume if dim > 1 else 1.0
                self.center[row, k] = np.asarray(geo.center)
                if isect.outside is not None:
                    self.neighbor[row, k] = mapper.index(isect.outside)
        self.outflow = (self.area * np.maximum(self.bdotn, 0.0)).sum(axis=1)


def fvStep(state: FVState, view, boundary, cfl: float = 0.45) -> float:
    """One explicit upwind step; returns the time step taken."""
    if state._cache is None or state._cache.generation != view.generation:
        state._cache = _FVGeometry(view, state.mapper)
    cache = state._cache
    tau = cfl * float(np.min(cache.volume / cache.outflow))

    u = state.data
    uOut = np.where(cache.neighbor >= 0, u[cache.neighbor], 0.0)
    isBoundary = cache.neighbor < 0
    for row, k in zip(*np.nonzero(isBoundary)):
        uOut[row, k] = float(boundary(state.t, Vector(cache.center[row, k])))

    up = np.maximum(cache.bdotn, 0.0)
    down = np.minimum(cache.bdotn, 0.0)
    flux = cache.area * (up * u[:, None] + down * uOut)
    state.data = u - (tau / cache.volume) * flux.sum(axis=1)
    state.t += tau
    state.tau = tau
    return tau


def fvRun(view, c0, boundary, tEnd: float, cfl: float = 0.45,
          observer=None) -> FVState:
    """Run the upwind scheme until ``t >= tEnd`` (last step not truncated)."""
    if tEnd <= 0.0:
        raise DomainError(f"end time must be > 0, got {tEnd}")
    mapper = fvLayout(view)
    state = fvInitialize(view, mapper, c0)
    if observer is not None:
        observer(0, state)
    step = 0
    while state.t < tEnd:
        fvStep(state, view, boundary, cfl)
        step += 1
        if observer is not None:
            observer(step, state)
    return state
