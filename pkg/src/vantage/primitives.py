"""Procedural meshes used by demos, fixtures, and tests."""

from __future__ import annotations

import numpy as np

from .meshio import Mesh


def make_box(center=(0, 0, 0), size=(1, 1, 1), color=None):
    """Axis-aligned box, 12 triangles, outward-facing winding."""
    cx, cy, cz = center
    hx, hy, hz = np.asarray(size, dtype=float) / 2.0
    corners = np.array(
        [
            [cx - hx, cy - hy, cz - hz],
            [cx + hx, cy - hy, cz - hz],
            [cx + hx, cy + hy, cz - hz],
            [cx - hx, cy + hy, cz - hz],
            [cx - hx, cy - hy, cz + hz],
            [cx + hx, cy - hy, cz + hz],
            [cx + hx, cy + hy, cz + hz],
            [cx - hx, cy + hy, cz + hz],
        ]
    )
    quads = [
        (0, 3, 2, 1),  # z-
        (4, 5, 6, 7),  # z+
        (0, 1, 5, 4),  # y-
        (2, 3, 7, 6),  # y+
        (0, 4, 7, 3),  # x-
        (1, 2, 6, 5),  # x+
    ]
    faces = []
    for a, b, c, d in quads:
        faces.append([a, b, c])
        faces.append([a, c, d])
    colors = None
    if color is not None:
        colors = np.tile(np.asarray(color, dtype=float), (8, 1))
    return Mesh(corners, np.array(faces), colors)


def make_quad(p0, p1, p2, p3, color=None):
    """Two-triangle quad through four corner points (in order)."""
    v = np.array([p0, p1, p2, p3], dtype=float)
    f = np.array([[0, 1, 2], [0, 2, 3]])
    colors = np.tile(np.asarray(color, dtype=float), (4, 1)) if color is not None else None
    return Mesh(v, f, colors)


def make_icosphere(radius=1.0, subdivisions=3, center=(0, 0, 0)):
    """Subdivided icosahedron with vertices projected onto the sphere."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.array(verts[i]) + np.array(verts[j])
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius + np.asarray(center, dtype=float)
    return Mesh(v, np.array(faces))


def make_grid_patch(nx=10, ny=10, size=1.0, z=0.0):
    """Flat triangulated rectangle in the z=... plane (interior vertices flat)."""
    xs = np.linspace(-size / 2, size / 2, nx + 1)
    ys = np.linspace(-size / 2, size / 2, ny + 1)
    verts = np.array([[x, y, z] for y in ys for x in xs])
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b = a + 1
            c = a + nx + 1
            d = c + 1
            faces.append([a, b, d])
            faces.append([a, d, c])
    return Mesh(verts, np.array(faces))


def _concat(meshes):
    verts, faces, colors = [], [], []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        colors.append(
            m.colors if m.colors is not None else np.ones((m.n_vertices, 3))
        )
        offset += m.n_vertices
    return Mesh(np.vstack(verts), np.vstack(faces), np.vstack(colors))


def make_building():
    """Small colored "building": slab, main hall, tower, roofs, portico.

    Model up is +y. Roughly 2 units tall and 3 units wide; used as the
    bundled recommendation fixture and in demos.
    """
    parts = [
        # ground slab
        make_box((0, 0.05, 0), (3.6, 0.1, 2.6), color=(0.45, 0.55, 0.35)),
        # main hall
        make_box((0, 0.7, 0), (2.4, 1.2, 1.5), color=(0.82, 0.74, 0.58)),
        # side wing
        make_box((-1.45, 0.45, 0), (0.9, 0.7, 1.1), color=(0.75, 0.66, 0.52)),
        # tower
        make_box((0.95, 1.55, -0.35), (0.55, 1.9, 0.55), color=(0.62, 0.6, 0.58)),
        # entrance portico
        make_box((0, 0.45, 0.95), (0.9, 0.7, 0.45), color=(0.55, 0.3, 0.25)),
    ]
    # gabled roof on the main hall
    ridge_y, eave_y = 1.75, 1.3
    roof = Mesh(
        np.array(
            [
                [-1.25, eave_y, -0.8], [1.25, eave_y, -0.8],
                [1.25, eave_y, 0.8], [-1.25, eave_y, 0.8],
                [-1.25, ridge_y, 0.0], [1.25, ridge_y, 0.0],
            ]
        ),
        np.array(
            [
                [0, 1, 5], [0, 5, 4],          # back slope
                [3, 4, 5], [3, 5, 2],          # front slope
                [0, 4, 3], [1, 2, 5],          # gable ends
            ]
        ),
        np.tile([0.65, 0.22, 0.18], (6, 1)),
    )
    # pyramid cap on the tower
    cap = Mesh(
        np.array(
            [
                [0.95 - 0.33, 2.5, -0.35 - 0.33], [0.95 + 0.33, 2.5, -0.35 - 0.33],
                [0.95 + 0.33, 2.5, -0.35 + 0.33], [0.95 - 0.33, 2.5, -0.35 + 0.33],
                [0.95, 3.0, -0.35],
            ]
        ),
        np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4],
                  [0, 2, 1], [0, 3, 2]]),
        np.tile([0.3, 0.32, 0.45], (5, 1)),
    )
    # colored door panel for hue variety
    door = make_quad(
        [-0.25, 0.1, 1.176], [0.25, 0.1, 1.176],
        [0.25, 0.75, 1.176], [-0.25, 0.75, 1.176],
        color=(0.15, 0.25, 0.55),
    )
    return _concat(parts + [roof, cap, door])
