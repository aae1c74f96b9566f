import json

import pytest

from polybilliards import obtuse_tetrahedron, regular_tetrahedron
from polybilliards.errors import PreconditionError
from polybilliards.scan import VertexRange, scan_around_regular, scan_vertex_ranges


class TestVertexRange:
    def test_parse(self):
        r = VertexRange.parse("D.x=-0.01:0.01")
        assert r == VertexRange("D", 0, -0.01, 0.01)
        assert r.name == "D.x"
        assert VertexRange.parse("3.z=0:1").vertex == "3"

    @pytest.mark.parametrize("text", ["D=0:1", "D.w=0:1", "D.x=1:0", "D.x=a:b"])
    def test_parse_errors(self, text):
        with pytest.raises((PreconditionError, ValueError)):
            VertexRange.parse(text)


class TestScan:
    def test_neighbourhood_of_regular_all_periodic(self):
        grid = scan_around_regular(1e-2, 5)
        assert len(grid.cells) == 125
        assert grid.fraction("unique_point") == 1.0
        assert grid.axes == ("D.x", "D.y", "D.z")

    def test_obtuse_single_cell(self):
        grid = scan_vertex_ranges(obtuse_tetrahedron(), [], 1)
        assert len(grid.cells) == 1
        assert grid.cells[0].kind == "nonexistent"
        assert grid.cells[0].point is None

    def test_single_resolution_uses_midpoint(self):
        grid = scan_vertex_ranges(regular_tetrahedron(), [VertexRange("D", 2, 0.0, 0.02)], 1)
        assert grid.cells[0].params == (0.01,)

    def test_zero_resolution(self):
        with pytest.raises(PreconditionError):
            scan_around_regular(1e-2, 0)

    def test_unknown_vertex(self):
        with pytest.raises(PreconditionError):
            scan_vertex_ranges(regular_tetrahedron(), [VertexRange("Q", 0, 0, 1)], 2)

    def test_invalid_cells_are_kept(self):
        # pulling D onto the plane of ABC flattens the tetrahedron
        base = regular_tetrahedron()
        d = base.vertices[3]
        normal = base.plane("d").normal
        height = float(d @ normal - base.plane("d").offset)
        axis = int(abs(normal).argmax())
        shift = -height / normal[axis]
        grid = scan_vertex_ranges(base, [VertexRange("D", axis, shift, shift)], 1)
        assert grid.cells[0].kind == "invalid" and not grid.cells[0].valid

    def test_parallel_matches_serial(self):
        serial = scan_around_regular(1e-2, 3, workers=1)
        parallel = scan_around_regular(1e-2, 3, workers=3)
        assert parallel.to_csv() == serial.to_csv()
        assert [c.index for c in parallel.cells] == list(range(27))

    def test_exports(self):
        grid = scan_around_regular(1e-2, 2)
        rows = grid.to_csv().splitlines()
        assert rows[0] == "cell,D.x,D.y,D.z,valid,kind,px,py,pz,dx,dy,dz,diagnostic"
        assert len(rows) == 9
        data = json.loads(json.dumps(grid.to_dict()))
        assert data["counts"] == {"unique_point": 8}
        assert data["tag"] == "around-regular:D"
