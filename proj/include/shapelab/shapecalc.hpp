#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "shapelab/assembly.hpp"
#include "shapelab/eigensolve.hpp"

namespace shapelab::shapecalc {

using assembly::BoundaryTrace;

enum class Preservation { None, GlobalMeanZero, PerComponentMeanZero };
enum class VolumeMode { Global, PerComponent };
std::string to_string(Preservation p);

/// Boundary normal speed h plus a displacement for every mesh vertex. On the
/// boundary the displacement d satisfies <d, eta> = h on both adjacent edges,
/// so the discrete normal velocity of each edge is exactly the edge value of h.
struct DeformationField {
    BoundaryTrace h;                 // PerVertex (indexed by mesh vertex) or PerEdge
    std::vector<Vec2> displacement;  // per mesh vertex
    Preservation preservation = Preservation::None;
};

/// Strongest certificate that h satisfies: per-component mean zero, global
/// mean zero, or none. Tolerance 1e-10 |dOmega| max|h| per integral.
Preservation certify(const geometry::TriMesh& mesh, const BoundaryTrace& h);

/// Boundary vertex displacements realizing normal speed h (averaged to
/// vertices for PerEdge traces). Interior entries are zero.
std::vector<Vec2> boundary_displacement(const geometry::TriMesh& mesh, const BoundaryTrace& h);

/// Inverse-distance blend of boundary displacements into the interior,
/// scaled by (1 - layer / collar) with layer the graph distance to the
/// boundary; zero from `collar` layers on.
std::vector<Vec2> extend_into_collar(const geometry::TriMesh& mesh, std::vector<Vec2> disp, int collar = 10);

/// Harmonic (discrete Laplace) extension of boundary displacements.
std::vector<Vec2> extend_harmonic(const geometry::TriMesh& mesh, std::vector<Vec2> disp);

/// Removes the boundary-length-weighted mean of h globally or per component
/// and extends into a boundary collar. Throws EmptyBoundary.
DeformationField make_volume_preserving(const BoundaryTrace& h_raw, const geometry::TriMesh& mesh,
                                        VolumeMode mode);

/// Field from an ambient vector field V: every vertex moves by V(p) and
/// h = <V, eta> on the boundary. Translations and dilations are realized
/// exactly on the mesh.
DeformationField field_from_vector(const geometry::TriMesh& mesh, const std::function<Vec2(Vec2)>& V);

/// Field with boundary speed h (no mean removal), collar extension.
DeformationField field_from_trace(const geometry::TriMesh& mesh, const BoundaryTrace& h);

/// Moves every vertex by eps * displacement. Throws MeshFoldOver when any
/// triangle loses positive area.
geometry::TriMesh transport_mesh(const geometry::TriMesh& mesh, const DeformationField& field, double eps);

struct ShapeDerivativeReport {
    Eigen::MatrixXd A;                    // A_ij = int (<grad u_i, grad u_j> - mu2 u_i u_j) h
    double one_sided_derivative = 0.0;    // lambda_min(A)
    double reverse_derivative = 0.0;      // one-sided derivative along -V: -lambda_max(A)
    Eigen::VectorXd minimizing_direction; // unit vector c with c^T A c = lambda_min
    std::optional<double> fd_estimate;
    std::optional<double> fd_error;
};

/// Boundary residual matrices Q_e(i, j) = <grad u_i, grad u_j> - mu2 u_i u_j per
/// boundary edge, gradients by `mode`, values at edge midpoints.
std::vector<Eigen::MatrixXd> boundary_residuals(const geometry::TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                                assembly::BoundaryGradient mode = assembly::BoundaryGradient::AdjacentTriangle);

/// One-sided derivative of mu2 along the field. For u = sum c_i u_i with
/// |c| = 1 the boundary integral is c^T A c, so the minimum over the unit
/// sphere of the eigenspace is lambda_min(A).
ShapeDerivativeReport one_sided_derivative(const geometry::TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                           const DeformationField& field,
                                           assembly::BoundaryGradient mode = assembly::BoundaryGradient::AdjacentTriangle);

struct FdResult {
    double slope = 0.0;
    double error_estimate = 0.0;
    double mu2_base = 0.0;
    std::vector<double> eps;
    std::vector<double> mu2;      // mu2 at each eps
    std::vector<double> quotients;  // (mu2(eps) - mu2(0)) / eps
};

/// Finite-difference oracle for the one-sided derivative: mu2 on meshes
/// moved by eps * V for each eps, difference quotients extrapolated to
/// eps -> 0+ (polynomial extrapolation through all quotients; the error
/// estimate is the change when the largest eps is dropped). Up to
/// thread_cap() evaluations run concurrently; results are merged in eps order.
/// When eps exceeds h^2 the interior is re-placed by harmonic extension of
/// the moved boundary instead of the collar blend.
FdResult fd_derivative_oracle(const geometry::TriMesh& mesh, const DeformationField& field,
                              const std::vector<double>& eps_list,
                              const eigensolve::ClusterOptions& opts = {});

/// mu2 at eps only (no base solve); the building block of the oracle.
double transported_mu2(const geometry::TriMesh& mesh, const DeformationField& field, double eps,
                       const eigensolve::ClusterOptions& opts = {});

struct VolumeExpansionReport {
    double fd_slope = 0.0;
    double analytic_slope = 0.0;  // int <V, eta>
    double mismatch = 0.0;        // |fd - analytic| / max(|analytic|, |dOmega| max|h|)
    double eps = 0.0;
};

/// d/deps |Omega_eps| at 0 from areas at eps and 2 eps (Richardson; exact for
/// the quadratic polygon area) against the boundary integral of <V, eta>.
VolumeExpansionReport volume_expansion_check(const geometry::TriMesh& mesh, const DeformationField& field,
                                             double eps = 1e-4);

/// Signed area swept by one boundary component between two meshes with equal
/// connectivity (positive when the component moves outward).
double swept_area(const geometry::TriMesh& before, const geometry::TriMesh& after, int component);

}  // namespace shapelab::shapecalc
