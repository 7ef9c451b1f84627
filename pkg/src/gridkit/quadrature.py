"""Quadrature rules on reference elements.

Line and cube rules are tensor products of 1-D Gauss-Legendre rules
(exact up to order 13). Triangle rules are tabulated symmetric rules for
orders 0-5; the order-3 rule is the classic 4-point rule with the negative
center weight.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CapabilityError, DomainError
from .geometry import SIMPLEX, GeometryType, Vector, referenceElement

MAX_GAUSS_ORDER = 13
MAX_TRIANGLE_ORDER = 5


class QuadraturePoint:

    __slots__ = ("position", "weight")

    def __init__(self, position, weight):
        self.position = Vector(position)
        self.weight = float(weight)

    def __repr__(self):
        return f"QuadraturePoint({self.position}, {self.weight})"


class QuadratureRule:
    """Positions and weights integrating polynomials up to ``order`` exactly."""

    def __init__(self, gt: GeometryType, order: int, positions, weights):
        self.type = gt
        self.order = order
        self._weights = np.asarray(weights, dtype=float)
        if gt.dim == 0:
            self._positions = np.zeros((len(self._weights), 0))
        else:
            self._positions = np.asarray(positions, dtype=float).reshape(-1, gt.dim)

    def __iter__(self):
        for pos, w in zip(self._positions, self._weights):
            yield QuadraturePoint(pos, w)

    def __len__(self):
        return len(self._weights)

    def get(self):
        """Positions as an (N, dim) array plus the length-N weight array."""
        return self._positions.copy(), self._weights.copy()

    def __repr__(self):
        return f"QuadratureRule({self.type}, order={self.order}, points={len(self)})"


def _gauss1d(order):
    if order > MAX_GAUSS_ORDER:
        raise CapabilityError(
            f"Gauss-Legendre rules tabulated up to order {MAX_GAUSS_ORDER}, "
            f"got {order}")
    n = order // 2 + 1
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _tensorRule(gt, order):
    x1, w1 = _gauss1d(order)
    dim = gt.dim
    grids = np.meshgrid(*([x1] * dim), indexing="ij")
    # axis 0 runs fastest in the flattened point list
    positions = np.stack([g.reshape(-1, order="F") for g in grids], axis=-1)
    weights = np.ones(len(positions))
    wgrids = np.meshgrid(*([w1] * dim), indexing="ij")
    for g in wgrids:
        weights = weights * g.reshape(-1, order="F")
    return positions, weights


def _triangleRule(order):
    if order > MAX_TRIANGLE_ORDER:
        raise CapabilityError(
            f"triangle rules tabulated up to order {MAX_TRIANGLE_ORDER}, "
            f"got {order}")
    third = 1.0 / 3.0
    if order <= 1:
        return [(third, third)], [0.5]
    if order == 2:
        s, t = 1.0 / 6.0, 2.0 / 3.0
        return [(s, s), (t, s), (s, t)], [1.0 / 6.0] * 3
    if order == 3:
        w = 25.0 / 96.0
        return ([(third, third), (0.6, 0.2), (0.2, 0.6), (0.2, 0.2)],
                [-9.0 / 32.0, w, w, w])
    # 7-point rule, exact to order 5
    sqrt15 = math.sqrt(15.0)
    a = (6.0 + sqrt15) / 21.0
    b = (6.0 - sqrt15) / 21.0
    wa = (155.0 + sqrt15) / 2400.0
    wb = (155.0 - sqrt15) / 2400.0
    positions = [(third, third),
                 (a, a), (1.0 - 2.0 * a, a), (a, 1.0 - 2.0 * a),
                 (b, b), (1.0 - 2.0 * b, b), (b, 1.0 - 2.0 * b)]
    return positions, [9.0 / 80.0, wa, wa, wa, wb, wb, wb]


def quadratureRule(gt: GeometryType, order: int) -> QuadratureRule:
    if order < 0:
        raise DomainError(f"quadrature order must be >= 0, got {order}")
    if gt.dim == 0:
        return QuadratureRule(gt, order, np.zeros((1, 0)), [1.0])
    if gt.shape == SIMPLEX and gt.dim >= 3:
        raise CapabilityError("quadrature for 3d simplices is not supported")
    if gt.shape == SIMPLEX and gt.dim == 2:
        positions, weights = _triangleRule(order)
    else:
        positions, weights = _tensorRule(gt, order)
    return QuadratureRule(gt, order, positions, weights)


class Rules:
    """Order-bound set of quadrature rules with a lazy per-type cache."""

    def __init__(self, order: int):
        if order < 0:
            raise DomainError(f"quadrature order must be >= 0, got {order}")
        self.order = order
        self._cache = {}

    def __call__(self, gt: GeometryType) -> QuadratureRule:
        rule = self._cache.get(gt)
        if rule is None:
            rule = self._cache[gt] = quadratureRule(gt, self.order)
        return rule

    __getitem__ = __call__

    def __repr__(self):
        return f"Rules(order={self.order}, cached={list(self._cache)})"


def quadratureRules(order: int) -> Rules:
    return Rules(order)


def referenceVolume(gt: GeometryType) -> float:
    return referenceElement(gt).volume
