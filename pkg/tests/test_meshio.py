import numpy as np
import pytest

from vantage.errors import ParseError
from vantage.meshio import Mesh, load_obj, load_ply, save_obj, save_ply
from vantage.primitives import make_box, make_building, make_icosphere


class TestMesh:
    def test_degenerate_faces_dropped(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.5, 0.5, 0.0]])
        faces = np.array([[0, 1, 2], [0, 1, 1], [0, 1, 0]])
        mesh = Mesh(verts, faces)
        assert mesh.n_faces == 1

    def test_zero_area_face_dropped(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]])
        faces = np.array([[0, 1, 2], [0, 1, 3]])  # first is collinear
        mesh = Mesh(verts, faces)
        assert mesh.n_faces == 1

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            Mesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))

    def test_bounding_sphere(self):
        box = make_box(size=(2, 2, 2))
        assert box.bounding_sphere_radius() == pytest.approx(np.sqrt(3))

    def test_area_of_box(self):
        box = make_box(size=(1, 2, 3))
        assert box.total_area() == pytest.approx(2 * (1 * 2 + 2 * 3 + 1 * 3))


class TestObjIO:
    def test_roundtrip_with_colors(self, tmp_path):
        mesh = make_building()
        path = tmp_path / "b.obj"
        save_obj(mesh, path)
        loaded = load_obj(path)
        assert loaded.n_vertices == mesh.n_vertices
        assert loaded.n_faces == mesh.n_faces
        assert np.allclose(loaded.vertices, mesh.vertices, atol=1e-6)
        assert np.allclose(loaded.colors, mesh.colors, atol=1e-6)

    def test_polygon_triangulation(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text(
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        )
        mesh = load_obj(path)
        assert mesh.n_faces == 2

    def test_slash_syntax_and_negative_indices(self, tmp_path):
        path = tmp_path / "s.obj"
        path.write_text(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\nf -3 -2 -1\n"
        )
        mesh = load_obj(path)
        assert mesh.n_faces == 2

    def test_bad_vertex_line(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 1 2\n")
        with pytest.raises(ParseError) as exc:
            load_obj(path)
        assert exc.value.line == 1


class TestPlyIO:
    def test_roundtrip(self, tmp_path):
        mesh = make_icosphere(radius=1.0, subdivisions=1)
        path = tmp_path / "s.ply"
        save_ply(mesh, path)
        loaded = load_ply(path)
        assert loaded.n_vertices == mesh.n_vertices
        assert loaded.n_faces == mesh.n_faces
        assert np.allclose(loaded.vertices, mesh.vertices, atol=1e-6)

    def test_color_roundtrip(self, tmp_path):
        mesh = make_building()
        path = tmp_path / "b.ply"
        save_ply(mesh, path)
        loaded = load_ply(path)
        assert np.allclose(loaded.colors, mesh.colors, atol=1.0 / 255)

    def test_not_ply(self, tmp_path):
        path = tmp_path / "x.ply"
        path.write_text("nope\n")
        with pytest.raises(ParseError):
            load_ply(path)

    def test_truncated_body(self, tmp_path):
        path = tmp_path / "t.ply"
        path.write_text(
            "ply\nformat ascii 1.0\nelement vertex 5\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 0\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0\n1 1 1\n"
        )
        with pytest.raises(ParseError):
            load_ply(path)
