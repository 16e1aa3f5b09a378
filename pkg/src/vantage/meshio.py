"""Triangle meshes and OBJ / ASCII-PLY readers and writers.

Vertex colors are optional RGB in [0, 1]. OBJ colors use the common
"v x y z r g b" extension. Faces with repeated vertex indices or
numerically zero area are dropped when the mesh is built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ParseError


@dataclass(eq=False)
class Mesh:
    vertices: np.ndarray
    faces: np.ndarray
    colors: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        f = np.asarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        self.vertices = v
        self.faces = _drop_degenerate_faces(v, f)
        if self.colors is not None:
            c = np.clip(np.asarray(self.colors, dtype=float), 0.0, 1.0)
            if c.shape != (len(v), 3):
                raise ValueError("colors must be (n_vertices, 3)")
            self.colors = c

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def centroid(self):
        if self.n_vertices == 0:
            raise DegenerateInputError("empty mesh has no centroid")
        return self.vertices.mean(axis=0)

    def bounding_sphere_radius(self):
        d = self.vertices - self.centroid()
        r = float(np.sqrt((d * d).sum(axis=1).max()))
        if r <= 0:
            raise DegenerateInputError("mesh has zero spatial extent")
        return r

    def face_corners(self):
        """(m, 3, 3) array of the three corner positions per face."""
        return self.vertices[self.faces]

    def face_areas(self):
        c = self.face_corners()
        cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return 0.5 * np.linalg.norm(cr, axis=1)

    def face_normals(self):
        c = self.face_corners()
        cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        n = np.linalg.norm(cr, axis=1)
        n[n == 0] = 1.0
        return cr / n[:, None]

    def total_area(self):
        return float(self.face_areas().sum())

    def transformed(self, fn):
        """New mesh with vertices mapped through ``fn`` (array -> array)."""
        return Mesh(np.asarray(fn(self.vertices), dtype=float), self.faces.copy(),
                    None if self.colors is None else self.colors.copy())


def _drop_degenerate_faces(vertices, faces):
    if len(faces) == 0:
        return faces
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 0] != faces[:, 2])
    )
    c = vertices[faces]
    areas = 0.5 * np.linalg.norm(
        np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1
    )
    scale = max(float(np.abs(vertices).max()), 1.0) if len(vertices) else 1.0
    keep &= areas > 1e-14 * scale * scale
    return faces[keep]


def load_mesh(path):
    """Load an OBJ or ASCII PLY mesh by file extension."""
    p = str(path)
    if p.lower().endswith(".obj"):
        return load_obj(p)
    if p.lower().endswith(".ply"):
        return load_ply(p)
    raise ParseError(f"unsupported mesh extension: {p}")


def load_obj(path):
    vertices, colors, faces = [], [], []
    any_color = False
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                vals = [float(x) for x in parts[1:]]
                if len(vals) not in (3, 6):
                    raise ParseError(
                        f"bad vertex line ({len(vals)} numbers)", line=lineno
                    )
                vertices.append(vals[:3])
                if len(vals) == 6:
                    colors.append(vals[3:])
                    any_color = True
                else:
                    colors.append([1.0, 1.0, 1.0])
            elif tag == "f":
                idx = []
                for tok in parts[1:]:
                    s = tok.split("/")[0]
                    i = int(s)
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                if len(idx) < 3:
                    raise ParseError("face with fewer than 3 vertices", line=lineno)
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not vertices:
        raise ParseError(f"no vertices found in {path}")
    return Mesh(
        np.array(vertices),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        np.array(colors) if any_color else None,
    )


def save_obj(mesh: Mesh, path):
    with open(path, "w") as fh:
        for i, v in enumerate(mesh.vertices):
            if mesh.colors is not None:
                c = mesh.colors[i]
                fh.write(
                    f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g} "
                    f"{c[0]:.9g} {c[1]:.9g} {c[2]:.9g}\n"
                )
            else:
                fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def load_ply(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("not a PLY file", line=1)
    n_vertex = n_face = 0
    vprops = []
    in_vertex_element = False
    body_start = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise ParseError("only ASCII PLY is supported", line=lineno)
        elif parts[0] == "element":
            in_vertex_element = parts[1] == "vertex"
            if parts[1] == "vertex":
                n_vertex = int(parts[2])
            elif parts[1] == "face":
                n_face = int(parts[2])
        elif parts[0] == "property" and in_vertex_element:
            vprops.append(parts[-1])
        elif parts[0] == "end_header":
            body_start = lineno  # 0-based index into `lines` is lineno because of offset
            break
    if body_start is None:
        raise ParseError("missing end_header")
    for name in ("x", "y", "z"):
        if name not in vprops:
            raise ParseError(f"vertex property {name!r} missing")
    ix = [vprops.index(n) for n in ("x", "y", "z")]
    has_color = all(n in vprops for n in ("red", "green", "blue"))
    ic = [vprops.index(n) for n in ("red", "green", "blue")] if has_color else None

    vertices = np.zeros((n_vertex, 3))
    colors = np.zeros((n_vertex, 3)) if has_color else None
    faces = []
    row = body_start
    try:
        for i in range(n_vertex):
            vals = lines[row].split()
            row += 1
            vertices[i] = [float(vals[j]) for j in ix]
            if has_color:
                c = np.array([float(vals[j]) for j in ic])
                colors[i] = c / 255.0 if c.max() > 1.0 else c
        for _ in range(n_face):
            vals = [int(x) for x in lines[row].split()]
            row += 1
            cnt, idx = vals[0], vals[1:]
            if len(idx) < cnt or cnt < 3:
                raise ParseError("bad face row", line=row)
            for k in range(1, cnt - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    except (IndexError, ValueError) as exc:
        raise ParseError(f"truncated or malformed PLY body: {exc}", line=row + 1)
    return Mesh(vertices, np.array(faces, dtype=np.int64).reshape(-1, 3), colors)


def save_ply(mesh: Mesh, path):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.n_vertices}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        if mesh.colors is not None:
            fh.write(
                "property uchar red\nproperty uchar green\nproperty uchar blue\n"
            )
        fh.write(f"element face {mesh.n_faces}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        for i, v in enumerate(mesh.vertices):
            if mesh.colors is not None:
                c = np.clip(np.round(mesh.colors[i] * 255), 0, 255).astype(int)
                fh.write(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g} {c[0]} {c[1]} {c[2]}\n")
            else:
                fh.write(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
