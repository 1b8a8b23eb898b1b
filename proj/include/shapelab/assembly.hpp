#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shapelab/geometry.hpp"

namespace shapelab::assembly {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric sparse matrix in full (both triangles) compressed storage.
struct SparseSymMatrix {
    SparseMatrix matrix;
    bool symmetric = true;

    [[nodiscard]] int size() const { return static_cast<int>(matrix.rows()); }
    [[nodiscard]] Vector apply(const Vector& u) const { return matrix * u; }
    [[nodiscard]] double quadratic_form(const Vector& u) const { return u.dot(matrix * u); }
};

/// Scalar data on the boundary: piecewise constant per boundary edge, or
/// piecewise linear given by values at boundary vertices (indexed by mesh
/// vertex; interior entries are ignored).
struct BoundaryTrace {
    enum class Kind { PerEdge, PerVertex };
    Kind kind = Kind::PerEdge;
    std::vector<double> values;

    static BoundaryTrace per_edge(std::vector<double> v) { return {Kind::PerEdge, std::move(v)}; }
    static BoundaryTrace per_vertex(std::vector<double> v) { return {Kind::PerVertex, std::move(v)}; }

    /// Value at the midpoint of boundary edge e.
    [[nodiscard]] double edge_value(const geometry::TriMesh& mesh, int e) const;
    /// Evaluate f at boundary vertices (PerVertex) of the mesh.
    static BoundaryTrace sample_vertices(const geometry::TriMesh& mesh,
                                         const std::function<double(Vec2)>& f);
    /// Evaluate f at boundary edge midpoints (PerEdge).
    static BoundaryTrace sample_midpoints(const geometry::TriMesh& mesh,
                                          const std::function<double(Vec2)>& f);
};

/// How the gradient of a P1 function is evaluated on boundary edges.
enum class BoundaryGradient {
    AdjacentTriangle,  // gradient of the unique triangle containing the edge
    OneRingAverage,    // area-weighted vertex recovery, averaged over edge endpoints
};

/// Element stiffness of one triangle (rows/cols follow vertex order).
Eigen::Matrix3d element_stiffness(const std::array<Vec2, 3>& p);
/// Consistent element mass area/12 [[2,1,1],[1,2,1],[1,1,2]].
Eigen::Matrix3d element_mass(const std::array<Vec2, 3>& p);

SparseSymMatrix assemble_stiffness(const geometry::TriMesh& mesh);
SparseSymMatrix assemble_mass(const geometry::TriMesh& mesh, bool lumped = false);

/// Sum over boundary edges of value * length (midpoint rule for linear
/// traces), optionally restricted to one component.
double boundary_integrate(const geometry::TriMesh& mesh, const BoundaryTrace& trace,
                          std::optional<int> component = std::nullopt);

/// Nodal interpolant of f.
Vector interpolate(const geometry::TriMesh& mesh, const std::function<double(Vec2)>& f);

/// Constant P1 gradient per triangle.
std::vector<Vec2> triangle_gradients(const geometry::TriMesh& mesh, const Vector& u);
/// Gradient value per boundary edge.
std::vector<Vec2> boundary_gradients(const geometry::TriMesh& mesh, const Vector& u,
                                     BoundaryGradient mode = BoundaryGradient::AdjacentTriangle);
/// u at boundary edge midpoints.
std::vector<double> boundary_midpoint_values(const geometry::TriMesh& mesh, const Vector& u);

/// Matrix Market coordinate format (symmetric, lower triangle).
void write_matrix_market(std::ostream& os, const SparseSymMatrix& m);

}  // namespace shapelab::assembly
