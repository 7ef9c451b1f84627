import numpy as np
import pytest

from gridkit import (CapabilityError, DomainError, cartesianDomain, cube,
                     structuredGrid, vertex)


def test_domain_validation():
    domain = cartesianDomain([0, 0], [1, 0.25], [15, 4])
    assert domain.dimension == 2
    with pytest.raises(DomainError):
        cartesianDomain([0, 0], [0, 1], [1, 1])
    with pytest.raises(DomainError):
        cartesianDomain([0], [1], [0])
    with pytest.raises(DomainError):
        cartesianDomain([0, 0], [1], [1, 1])


def test_counts_15x4():
    view = structuredGrid([0, 0], [1, 0.25], [15, 4])
    assert view.size(0) == 60
    assert view.size(1) == 139
    assert view.size(2) == 80
    assert view.sizeByType(cube(2)) == 60
    assert view.sizeByType(vertex) == 80


def test_counts_1d():
    view = structuredGrid([0], [1], [1])
    assert view.size(0) == 1
    assert view.size(1) == 2


def test_counts_3d():
    view = structuredGrid([0, 0, 0], [1, 1, 1], [4, 4, 4])
    assert view.size(0) == 64
    assert view.size(1) == 240
    assert view.size(3) == 125


def test_global_refine_doubles_per_axis():
    view = structuredGrid([0, 0], [1, 0.25], [15, 4])
    view.hierarchicalGrid.globalRefine()
    assert view.size(0) == 240
    assert view.size(2) == 31 * 9
    view.hierarchicalGrid.globalRefine(2)
    assert view.size(0) == 60 * 2 ** (3 * 2)


def test_cell_geometry():
    view = structuredGrid([0, 0], [1, 0.25], [15, 4])
    first = next(iter(view.elements))
    corners = np.array(first.geometry.corners)
    assert np.allclose(corners[0], [0.0, 0.0], atol=0)
    assert np.allclose(corners[3] - corners[0], [1 / 15, 0.0625], atol=1e-15)
    volumes = [e.geometry.volume for e in view.elements]
    assert np.allclose(volumes, (1 / 15) * 0.0625, atol=1e-15)


def test_volume_partition_of_unity():
    view = structuredGrid([0, 0], [1, 0.25], [15, 4])
    view.hierarchicalGrid.globalRefine(2)
    total = sum(e.geometry.volume for e in view.elements)
    assert total == pytest.approx(0.25, abs=1e-10)


def test_facet_normals_axis_aligned():
    view = structuredGrid([0, 0], [1, 0.25], [15, 4])
    boundaryCount = 0
    for e in view.elements:
        for isect in view.intersections(e):
            n = np.asarray(isect.centerUnitOuterNormal)
            assert np.isclose(np.abs(n).max(), 1.0, atol=1e-12)
            assert np.isclose(np.abs(n).sum(), 1.0, atol=1e-12)
            if isect.boundary:
                boundaryCount += 1
    assert boundaryCount == 2 * (15 + 4)


def test_adapt_rejected():
    view = structuredGrid([0, 0], [1, 1], [2, 2])
    with pytest.raises(CapabilityError):
        view.hierarchicalGrid.adapt(lambda e: None)


def test_structured_grid_argument_forms():
    domain = cartesianDomain([0, 0], [1, 1], [2, 2])
    assert structuredGrid(domain).size(0) == 4
    assert structuredGrid([0, 0], [1, 1], [2, 2]).size(0) == 4
    with pytest.raises(DomainError):
        structuredGrid([0, 0], [1, 1])
