"""Bindable grid functions with direct and batched evaluation.

User callables follow the package-wide point convention: they receive a
single point as a length-``dim`` vector or a batch as an ``(N, dim)`` array,
so ``x[..., i]`` addresses the i-th coordinate in both cases.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, DomainError, ShapeError, StateError
from .geometry import Vector, referenceElement, vertex as vertexType


class GridFunction:
    """Element-bindable field over a grid view.

    ``callbackCount`` counts invocations of the backing user callable and is
    the instrument behind the vectorization-economy checks.
    """

    def __init__(self, view, rangeDim=None):
        self.view = view
        self.callbackCount = 0
        if rangeDim is None:
            first = next(iter(view.elements))
            bary = referenceElement(first.type).barycenter
            probe = np.atleast_1d(np.asarray(self.evalDirect(first, bary), dtype=float))
            rangeDim = probe.shape[0]
            self.callbackCount = 0
        self.rangeDim = rangeDim

    # -- single-point and batched evaluation ------------------------------

    def evalDirect(self, e, hatx):
        """Value at local coordinate ``hatx`` of element ``e``; shape (r,)."""
        hatx = np.asarray(hatx, dtype=float)
        return np.atleast_1d(np.asarray(self._evaluate(e, hatx), dtype=float))

    def evalBatch(self, e, hatxs) -> np.ndarray:
        """Values at an (N, dim) batch of local coordinates; shape (N, r)."""
        hatxs = np.asarray(hatxs, dtype=float).reshape(-1, self.view.dimension)
        n = hatxs.shape[0]
        if n == 0:
            return np.empty((0, self.rangeDim))
        values = np.asarray(self._evaluateBatch(e, hatxs), dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.shape != (n, self.rangeDim):
            raise ShapeError(
                f"backing returned shape {values.shape}, "
                f"expected ({n}, {self.rangeDim})")
        return values

    def evalGlobal(self, x):
        raise CapabilityError(
            "global evaluation requires a globally backed grid function")

    def localFunction(self) -> "LocalFunction":
        return LocalFunction(self)

    def __call__(self, *args):
        if len(args) == 1:
            return self.evalGlobal(args[0])
        if len(args) != 2:
            raise DomainError("grid functions take (x) or (element, x)")
        e, x = args
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            values = self.evalBatch(e, x)
            return values[:, 0] if self.rangeDim == 1 else values
        values = self.evalDirect(e, x)
        return float(values[0]) if self.rangeDim == 1 else values

    @property
    def grid(self):
        return self.view

    def pointData(self, level: int = 0) -> np.ndarray:
        from . import io
        return io.pointData(self, level)

    # -- backing hooks -----------------------------------------------------

    def _evaluate(self, e, hatx):
        raise NotImplementedError

    def _evaluateBatch(self, e, hatxs):
        raise NotImplementedError


class _GlobalBackedGridFunction(GridFunction):

    def __init__(self, view, fn):
        self._fn = fn
        super().__init__(view)

    def evalGlobal(self, x):
        self.callbackCount += 1
        return self._fn(Vector(x))

    def _evaluate(self, e, hatx):
        self.callbackCount += 1
        return self._fn(e.geometry.toGlobal(hatx))

    def _evaluateBatch(self, e, hatxs):
        self.callbackCount += 1
        return self._fn(Vector(e.geometry.toGlobalBatch(hatxs)))


class _LocalBackedGridFunction(GridFunction):

    def __init__(self, view, fn):
        self._fn = fn
        super().__init__(view)

    def _evaluate(self, e, hatx):
        self.callbackCount += 1
        return self._fn(e, Vector(hatx))

    def _evaluateBatch(self, e, hatxs):
        self.callbackCount += 1
        return self._fn(e, Vector(hatxs))


class _P1GridFunction(GridFunction):
    """Piecewise linear function from vertex dofs via barycentric weights."""

    def __init__(self, view, mapper, data):
        from .geometry import triangle
        if view.indexSet.types(0)[0] != triangle:
            raise CapabilityError(
                "p1 functions are implemented for triangle grids")
        if mapper.layout != {vertexType: 1}:
            raise DomainError("p1 functions need a {vertex: 1} dof layout")
        data = np.asarray(data, dtype=float)
        if data.shape != (mapper.size,):
            raise DomainError(
                f"dof vector of length {mapper.size} expected, got {data.shape}")
        self.mapper = mapper
        self.data = data
        self.dofReads = 0
        super().__init__(view, rangeDim=1)

    def _gather(self, e):
        idx = self.mapper.subIndices(e, self.view.dimension)
        self.dofReads += len(idx)
        return self.data[idx]

    @staticmethod
    def _barycentric(hatxs):
        x, y = hatxs[..., 0], hatxs[..., 1]
        return np.stack([1.0 - x - y, x, y], axis=-1)

    def _evaluate(self, e, hatx):
        return self._barycentric(hatx) @ self._gather(e)

    def _evaluateBatch(self, e, hatxs):
        return self._barycentric(hatxs) @ self._gather(e)


class LocalFunction:
    """Mutable evaluation cursor bound to one element at a time."""

    def __init__(self, gridFunction):
        self.gridFunction = gridFunction
        self._element = None
        self._dofs = None

    def bind(self, e):
        self.gridFunction.view._checkEntity(e)
        self._element = e
        if isinstance(self.gridFunction, _P1GridFunction):
            self._dofs = self.gridFunction._gather(e)

    def unbind(self):
        self._element = None
        self._dofs = None

    def __call__(self, hatx):
        if self._element is None:
            raise StateError("local function is not bound to an element")
        gf = self.gridFunction
        hatx = np.asarray(hatx, dtype=float)
        if self._dofs is not None:
            values = gf._barycentric(hatx) @ self._dofs
            if hatx.ndim == 2:
                return values
            return float(values)
        return gf(self._element, hatx)


def gridFunctionFromGlobal(view, fn) -> GridFunction:
    return _GlobalBackedGridFunction(view, fn)


def gridFunctionFromLocal(view, fn) -> GridFunction:
    return _LocalBackedGridFunction(view, fn)


def gridFunction(view):
    """Decorator turning ``f(x)`` or ``f(element, hatx)`` into a grid function."""

    def wrap(fn):
        import inspect
        try:
            arity = len(inspect.signature(fn).parameters)
        except (TypeError, ValueError):
            arity = 1
        if arity == 1:
            return _GlobalBackedGridFunction(view, fn)
        if arity == 2:
            return _LocalBackedGridFunction(view, fn)
        raise DomainError(
            f"grid functions take (x) or (element, hatx), got {arity} parameters")

    return wrap


def p1Function(view, mapper, data) -> GridFunction:
    return _P1GridFunction(view, mapper, data)


def interpolateP1(view, fn):
    """Vertex interpolation; returns the {vertex: 1} mapper and dof vector."""
    mapper = view.mapper({vertexType: 1})
    coords = view.coordinates()
    if isinstance(fn, GridFunction):
        values = np.asarray(fn.evalGlobal(Vector(coords)), dtype=float)
    else:
        values = np.asarray(fn(Vector(coords)), dtype=float)
    values = values.reshape(-1)
    if values.shape != (len(coords),):
        raise ShapeError(
            f"interpolation callable returned shape {values.shape}, "
            f"expected ({len(coords)},)")
    data = np.zeros(mapper.size)
    for v in view.vertices:
        data[mapper.index(v)] = values[view.indexSet.index(v)]
    return mapper, data


def integrate(rules, e, integrand):
    """Quadrature integral of ``integrand`` over one element.

    ``integrand`` is a grid function or an ``(element, batch)`` callable; it
    is evaluated with a single batched call.
    """
    rule = rules(e.type) if callable(rules) else rules
    positions, weights = rule.get()
    factors = weights * e.geometry.integrationElementBatch(positions)
    if isinstance(integrand, GridFunction):
        values = integrand.evalBatch(e, positions)
        result = factors @ values
        return float(result[0]) if integrand.rangeDim == 1 else result
    values = np.asarray(integrand(e, Vector(positions)), dtype=float)
    if values.ndim == 1:
        return float(factors @ values)
    return factors @ values
