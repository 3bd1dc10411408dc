#pragma once

#include "mcflab/mesh.hpp"

namespace mcflab::shapes {

/// Subdivided icosahedron projected onto the sphere of the given radius,
/// centred at the origin, embedded in the first three coordinates of R^dim.
TriMesh icosphere(int subdivisions, double radius = 1.0, int dim = 3);

/// Icosphere with coordinates scaled by the semi-axes (a, b, c).
TriMesh ellipsoid(int subdivisions, double a, double b, double c, int dim = 3);

/// Torus of revolution about the z axis (major radius R, minor radius r).
TriMesh torus(double major_radius, double minor_radius, int n_major, int n_minor, int dim = 3);

/// Geodesic sphere of geodesic radius `geodesic_radius` in the round 3-sphere of
/// radius `rho` in R^4, centred at the pole rho * e4.
TriMesh geodesic_sphere_s3(int subdivisions, double geodesic_radius, double rho);

/// Product of circles S^1(r1) x S^1(r2) in R^4.
TriMesh clifford_torus(double r1, double r2, int n1, int n2);

/// Open n x n grid in the plane z = 0 of R^3 covering [-1, 1]^2.
TriMesh flat_patch(int n);

TriMesh translated(const TriMesh& mesh, const Vec& offset);
TriMesh scaled(const TriMesh& mesh, double factor);

}  // namespace mcflab::shapes
