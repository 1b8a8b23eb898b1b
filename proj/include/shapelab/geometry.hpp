#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "shapelab/common.hpp"

namespace shapelab::geometry {

/// Real Fourier series f(s) = c0 + sum_m a_m cos(m w s) + b_m sin(m w s) with
/// w = 2 pi / period. Coefficient vectors are indexed from m = 1.
struct FourierSeries {
    double c0 = 0.0;
    std::vector<double> cos_coeffs;
    std::vector<double> sin_coeffs;
    double period = 2.0 * kPi;

    [[nodiscard]] int max_mode() const;
    [[nodiscard]] double value(double s) const;
    [[nodiscard]] double derivative(double s) const;
    [[nodiscard]] double mean() const { return c0; }
};

/// Star-shaped planar domain with boundary radius
/// rho(theta) = rho0 * (1 + sum a_m cos(m theta) + b_m sin(m theta)).
struct PlanarDomainSpec {
    double rho0 = 1.0;
    std::vector<double> cos_coeffs;  // a_1, a_2, ...
    std::vector<double> sin_coeffs;  // b_1, b_2, ...
    Vec2 center{};

    static PlanarDomainSpec disk(double radius);
    /// Fourier fit (to roundoff for moderate aspect ratios) of the ellipse
    /// x^2/a^2 + y^2/b^2 = 1 in polar form.
    static PlanarDomainSpec ellipse(double a, double b, int modes = 24);

    [[nodiscard]] int max_mode() const;
    [[nodiscard]] double relative_radius(double theta) const;  // rho / rho0
    [[nodiscard]] double radius(double theta) const;
    [[nodiscard]] double radius_derivative(double theta) const;
    [[nodiscard]] Vec2 boundary_point(double theta) const;
    /// Exact enclosed area: pi rho0^2 (1 + (1/2) sum (a_m^2 + b_m^2)).
    [[nodiscard]] double area() const;
    /// Smallest sampled radius over 4096 equispaced angles.
    [[nodiscard]] double min_radius() const;
    /// Throws NonPositiveRadius if rho <= 0 at any sample.
    void validate() const;
};

/// Domain {(t, x) : g_minus(x) < t < g_plus(x)} in R x S^1_L.
struct CylinderDomainSpec {
    double circumference = 2.0 * kPi;
    FourierSeries g_minus;
    FourierSeries g_plus;
    bool straight = false;  // exact Omega_r = [-r, r] x S^1_L

    static CylinderDomainSpec straight_cylinder(double r, double circumference);

    [[nodiscard]] double area() const;
    [[nodiscard]] double min_height() const;
    [[nodiscard]] double max_height() const;
    /// Throws DegenerateStrip if g_plus - g_minus <= 0 at any sample.
    void validate() const;
};

struct BoundaryEdge {
    int a = -1;  // domain lies to the left of a -> b
    int b = -1;
    int triangle = -1;
    int component = -1;
    Vec2 normal{};  // outward unit normal
    double length = 0.0;
};

/// Triangle mesh of a planar domain or of a flat-cylinder domain.
///
/// Cylinder meshes store the chart point (t, x) as Vec2{t, x}; the second
/// coordinate is periodic with `period` and kept in [0, period). Seam
/// vertices are identified by construction: each point of the cylinder has
/// exactly one vertex, and triangles crossing the seam are unwrapped on the
/// fly by triangle_coords().
class TriMesh {
public:
    TriMesh() = default;
    /// Builds boundary structure from connectivity. Triangles must be
    /// positively oriented (after unwrapping).
    TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
            double period = 0.0);

    [[nodiscard]] const std::vector<Vec2>& vertices() const { return vertices_; }
    [[nodiscard]] const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
    /// Ordered loops of boundary edge indices, one per connected component.
    [[nodiscard]] const std::vector<std::vector<int>>& components() const { return components_; }
    [[nodiscard]] const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
    [[nodiscard]] bool is_boundary_vertex(int v) const { return boundary_flag_[v] != 0; }

    [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles_.size()); }
    [[nodiscard]] bool periodic() const { return period_ > 0.0; }
    [[nodiscard]] double period() const { return period_; }

    /// Vertex coordinates of triangle t, unwrapped across the seam relative
    /// to its first vertex.
    [[nodiscard]] std::array<Vec2, 3> triangle_coords(int t) const;
    /// Signed area of triangle t.
    [[nodiscard]] double triangle_area(int t) const;
    /// b - a with the periodic coordinate unwrapped.
    [[nodiscard]] Vec2 displacement(int a, int b) const;
    [[nodiscard]] Vec2 wrap(Vec2 p) const;
    /// Characteristic length (bounding box diagonal).
    [[nodiscard]] double scale() const;
    [[nodiscard]] double min_angle_degrees() const;
    [[nodiscard]] double max_edge_length() const;

    /// Same connectivity with new vertex positions.
    [[nodiscard]] TriMesh with_vertices(std::vector<Vec2> vertices) const;

private:
    void build_boundary();

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    double period_ = 0.0;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<std::vector<int>> components_;
    std::vector<int> boundary_vertices_;
    std::vector<char> boundary_flag_;
};

/// Planar star-shaped mesh: concentric-ring reference disk (six-fold
/// symmetric) mapped radially onto the spec. Boundary vertices lie on the
/// analytic curve; connectivity depends only on the ring count, so meshes of
/// nearby specs share connectivity.
TriMesh build_planar_mesh(const PlanarDomainSpec& spec, double h);
/// Ring count used by build_planar_mesh for a given spec and h.
int planar_ring_count(const PlanarDomainSpec& spec, double h);
/// Same connectivity for a fixed ring count.
TriMesh build_planar_mesh_rings(const PlanarDomainSpec& spec, int rings);

/// Structured periodic strip mesh mapped between g_minus and g_plus.
TriMesh build_cylinder_mesh(const CylinderDomainSpec& spec, double h);
struct CylinderResolution {
    int nx = 0;
    int ny = 0;
};
CylinderResolution cylinder_resolution(const CylinderDomainSpec& spec, double h);
TriMesh build_cylinder_mesh_grid(const CylinderDomainSpec& spec, CylinderResolution res);

/// Structured mesh of [x0, x0 + width] x [y0, y0 + height] with an even
/// number of cells per side and diagonals alternating by cell parity, so the
/// mesh has the reflection symmetries of the rectangle (and x <-> y on a square).
TriMesh build_rectangle_mesh(double width, double height, double h, Vec2 origin = {});

double mesh_volume(const TriMesh& mesh);
/// Total boundary length, or the length of one component.
double boundary_measure(const TriMesh& mesh, std::optional<int> component = std::nullopt);

/// Throws SingularTriangle if any triangle has area <= 1e-14 scale^2.
void check_triangles(const TriMesh& mesh);

}  // namespace shapelab::geometry
