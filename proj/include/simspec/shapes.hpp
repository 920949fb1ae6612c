#pragma once

#include "simspec/mesh.hpp"

namespace simspec::shapes {

/// Subdivided icosahedron projected to the sphere of the given radius.
/// Level 0 has 12 vertices; level L has 10 * 4^L + 2.
TriMesh icosphere(int level, double radius = 1.0);

/// Regular icosahedron with edge length `edge`, vertices not re-projected.
TriMesh icosahedron(double edge = 1.0);

/// Open cylinder around the z axis, z in [-height/2, height/2].
TriMesh cylinder(double radius, double height, int n_around, int n_along);

/// Rectangular grid in the xy-plane spanning [x0, x0 + width] x [y0, y0 + depth]
/// with (nx + 1) x (ny + 1) vertices. Vertex (i, j) has index j * (nx + 1) + i.
/// Cells are split along alternating diagonals.
TriMesh grid(double width, double depth, int nx, int ny, double x0 = 0.0, double y0 = 0.0);

} // namespace simspec::shapes
