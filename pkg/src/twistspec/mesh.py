"""Triangulated tube surfaces in legacy ASCII VTK polydata."""

import numpy as np

from .geometry import map_point


def tube_surface(omega, profile, x_range, slices, boundary_samples):
    """Vertices (slices x samples, slice-major) and triangles of the swept boundary."""
    xs = np.linspace(x_range[0], x_range[1], slices)
    ring = omega.boundary_points(boundary_samples)
    straight = np.empty((slices, boundary_samples, 3))
    straight[..., 0] = xs[:, None]
    straight[..., 1:] = ring[None, :, :]
    points = map_point(profile, straight).reshape(-1, 3)
    tris = []
    m = boundary_samples
    for i in range(slices - 1):
        for j in range(m):
            a, b = i * m + j, i * m + (j + 1) % m
            c, d = a + m, b + m
            tris.append((a, b, d))
            tris.append((a, d, c))
    return points, np.asarray(tris, dtype=np.int64)


def write_vtk(path, points, triangles, title="twisted tube surface"):
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(points)} double\n")
        for p in points:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write(f"POLYGONS {len(triangles)} {4 * len(triangles)}\n")
        for t in triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
