import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gridkit import (CapabilityError, CartesianDomain, ConstructionError,
                     DomainError, SimplexGridData, conformGrid,
                     gridFunctionFromGlobal, gridFunctionFromLocal,
                     readGridJSON, structuredGrid, triangulation,
                     writeVTK)
from gridkit.demos import (FAN_TRIANGLES, FAN_VERTICES, oscillation,
                           unitSquareData)


def shoelace(points, tris):
    p = points[tris]
    return 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


class TestReadGridJSON:

    def test_simplex_file(self, tmp_path):
        path = tmp_path / "fan.json"
        path.write_text(json.dumps({"vertices": FAN_VERTICES,
                                    "simplices": FAN_TRIANGLES}))
        data = readGridJSON(path)
        assert isinstance(data, SimplexGridData)
        assert data.simplices.shape == (6, 3)

    def test_cartesian_file(self, tmp_path):
        path = tmp_path / "box.json"
        path.write_text(json.dumps({"lower": [0, 0], "upper": [1, 0.25],
                                    "cells": [15, 4]}))
        domain = readGridJSON(path)
        assert isinstance(domain, CartesianDomain)
        assert domain.cells == (15, 4)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vertices": FAN_VERTICES}))
        with pytest.raises(ConstructionError):
            readGridJSON(path)

    def test_parse_error_has_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"vertices": [\n  [0, 0],\n  oops\n]}')
        with pytest.raises(ConstructionError) as info:
            readGridJSON(path)
        assert ":3" in str(info.value)


class TestTriangulation:

    def test_level0_counts(self):
        view = conformGrid(unitSquareData())
        tri = triangulation(view, 0)
        assert tri.points.shape == (4, 2)
        assert tri.triangles.shape == (2, 3)

    def test_level1_counts(self):
        view = conformGrid(unitSquareData())
        tri = triangulation(view, 1)
        assert tri.triangles.shape == (8, 3)

    def test_level2_scaling(self):
        view = conformGrid(unitSquareData())
        base = triangulation(view, 0)
        fine = triangulation(view, 2)
        assert len(fine.triangles) == 16 * len(base.triangles)

    def test_quads_split_into_triangles(self):
        view = structuredGrid([0, 0], [1, 1], [3, 2])
        tri = triangulation(view, 0)
        assert tri.triangles.shape == (12, 3)

    def test_areas_cover_domain(self):
        for level in (0, 1, 2):
            view = conformGrid(unitSquareData())
            tri = triangulation(view, level)
            assert shoelace(tri.points, tri.triangles).sum() == \
                pytest.approx(1.0, abs=1e-8)

    def test_dimension_guard(self):
        view = structuredGrid([0], [1], [4])
        with pytest.raises(CapabilityError):
            triangulation(view, 0)
        square = structuredGrid([0, 0], [1, 1], [2, 2])
        with pytest.raises(DomainError):
            triangulation(square, -1)


class TestWriteVTK:

    @staticmethod
    def parse(path):
        tree = ET.parse(path)
        piece = tree.getroot().find("UnstructuredGrid/Piece")
        arrays = {a.get("Name"): a for a in piece.iter("DataArray")}
        points = np.fromstring(arrays["Coordinates"].text, sep=" ").reshape(-1, 3)
        connectivity = np.fromstring(arrays["connectivity"].text,
                                     sep=" ", dtype=int)
        offsets = np.fromstring(arrays["offsets"].text, sep=" ", dtype=int)
        types = np.fromstring(arrays["types"].text, sep=" ", dtype=int)
        return piece, arrays, points, connectivity, offsets, types

    def test_geometry_only_file(self, tmp_path):
        view = conformGrid(unitSquareData())
        path = writeVTK(view, str(tmp_path / "plain"))
        piece, arrays, points, conn, offsets, types = self.parse(path)
        assert int(piece.get("NumberOfPoints")) == len(points) == 4
        assert int(piece.get("NumberOfCells")) == len(types) == 2
        assert conn.max() < len(points)
        assert set(types) == {5}

    def test_point_and_cell_data(self, tmp_path):
        view = conformGrid(unitSquareData())
        f = gridFunctionFromGlobal(view, oscillation)
        hat0 = gridFunctionFromLocal(view,
                                     lambda e, x: 1.0 - x[..., 0] - x[..., 1])
        path = writeVTK(view, str(tmp_path / "data"),
                        pointdata={"exact": f, "hat": hat0},
                        celldata={"marker": hat0})
        piece, arrays, points, conn, offsets, types = self.parse(path)
        assert "exact" in arrays and "hat" in arrays and "marker" in arrays
        exact = np.fromstring(arrays["exact"].text, sep=" ")
        assert len(exact) == len(points)
        marker = np.fromstring(arrays["marker"].text, sep=" ")
        assert len(marker) == 2

    def test_quad_corner_reorder(self, tmp_path):
        view = structuredGrid([0, 0], [2, 0.5], [2, 1])
        path = writeVTK(view, str(tmp_path / "quads"))
        piece, arrays, points, conn, offsets, types = self.parse(path)
        assert set(types) == {9}
        # VTK quad corners must walk the perimeter
        quad = points[conn[:4]][:, :2]
        forward = np.roll(quad, -1, axis=0) - quad
        lengths = np.sqrt((forward ** 2).sum(axis=1))
        assert lengths == pytest.approx([1.0, 0.5, 1.0, 0.5], abs=1e-12)

    def test_hexahedron_type(self, tmp_path):
        view = structuredGrid([0, 0, 0], [1, 1, 1], [2, 2, 2])
        path = writeVTK(view, str(tmp_path / "hex"))
        *_, types = self.parse(path)
        assert set(types) == {12}

    def test_subsampling_areas_and_counts(self, tmp_path):
        view = conformGrid(unitSquareData())
        f = gridFunctionFromGlobal(view, oscillation)
        for level in (1, 2):
            path = writeVTK(view, str(tmp_path / f"sub{level}"),
                            pointdata={"exact": f}, subsampling=level)
            piece, arrays, points, conn, offsets, types = self.parse(path)
            n = 2 ** level
            pointsPerElement = (n + 1) * (n + 2) // 2
            assert len(points) == 2 * pointsPerElement
            tris = conn.reshape(-1, 3)
            assert shoelace(points[:, :2], tris).sum() == \
                pytest.approx(1.0, abs=1e-8)

    def test_subsampling_level2_point_count_per_triangle(self, tmp_path):
        view = conformGrid({"vertices": [(0, 0), (1, 0), (0, 1)],
                            "simplices": [(0, 1, 2)]})
        path = writeVTK(view, str(tmp_path / "s2"), subsampling=2)
        piece, *_ = self.parse(path)
        assert int(piece.get("NumberOfPoints")) == 15

    def test_duplicate_label_rejected(self, tmp_path):
        view = conformGrid(unitSquareData())
        f = gridFunctionFromGlobal(view, oscillation)
        with pytest.raises(DomainError):
            writeVTK(view, str(tmp_path / "dup"),
                     pointdata={"f": f}, celldata={"f": f})

    def test_unwritable_path(self):
        view = conformGrid(unitSquareData())
        with pytest.raises(OSError):
            writeVTK(view, "/nonexistent-dir/file")
