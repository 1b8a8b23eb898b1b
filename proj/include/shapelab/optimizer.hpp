#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "shapelab/criticality.hpp"
#include "shapelab/shapecalc.hpp"

namespace shapelab::optimizer {

using DomainSpec = std::variant<geometry::PlanarDomainSpec, geometry::CylinderDomainSpec>;

/// Analytic volume of a spec.
double spec_volume(const DomainSpec& spec);

/// Flat coefficient vector of the shape variables: planar (a_1..a_M, b_1..b_M);
/// cylinder (g_plus cos, g_plus sin, g_minus cos, g_minus sin), each of length M.
/// Volume is carried by rho0 or the height means and is not a shape variable.
std::vector<double> shape_coefficients(const DomainSpec& spec, int modes);
DomainSpec with_shape_coefficients(const DomainSpec& spec, int modes, const std::vector<double>& c);

/// Mesh of a spec at fixed resolution (ring count or grid), so successive
/// iterates share connectivity.
struct MeshResolution {
    int rings = 0;
    geometry::CylinderResolution grid;
};
MeshResolution resolution_for(const DomainSpec& spec, double h);
geometry::TriMesh build_mesh(const DomainSpec& spec, const MeshResolution& res);

/// Steepest-ascent normal speed, mean zero and unit L2(dOmega) norm. For m = 1
/// h = q - mean(q). For m > 1 the candidate h0 from the averaged residual
/// tr(Q)/m is refined once: h1 = q_c - mean(q_c) with c minimizing c^T A(h0) c.
/// Throws ZeroGradient when every candidate has ||q - mean|| <= tol |mean| |dOmega|^{1/2}.
assembly::BoundaryTrace ascent_direction(const geometry::TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                         double tol = 1e-6);
/// Both candidates (h0 first); the flow picks the better after projection.
std::vector<assembly::BoundaryTrace> ascent_candidates(const geometry::TriMesh& mesh,
                                                       const eigensolve::EigenCluster& cluster, double tol = 1e-6);

/// Newton iteration on the volume parameter (rho0 for planar specs, a uniform
/// outward offset of both heights for cylinders) until
/// |vol - target| <= 1e-10 target. Throws ProjectionDiverged after 10 iterations.
DomainSpec project_volume(const DomainSpec& spec, double target_volume);

/// Normal speed on the boundary edges of `mesh` induced by unit changes of
/// each shape coefficient (columns), computed from the exact vertex motion.
Eigen::MatrixXd shape_tangent_basis(const DomainSpec& spec, const geometry::TriMesh& mesh, int modes);

struct FlowOptions {
    int budget = 60;
    double h = 0.05;
    int modes = 8;
    double initial_step = 0.05;     // boundary displacement amplitude of the first trial (length)
    double max_step = 0.2;
    double min_step = 1e-7;
    double armijo = 1e-4;
    double tol_crit = 1e-2;         // stop when weak_residual <= tol_crit * mu2^2
    double zero_gradient_tol = 1e-6;
    eigensolve::ClusterOptions cluster;
};

struct FlowRecord {
    int step = 0;
    double mu2 = 0.0;
    int multiplicity = 0;
    double volume = 0.0;
    double volume_drift = 0.0;  // |volume - target| / target
    double weak_residual = 0.0;
    double step_size = 0.0;     // accepted step leading to this state (0 at step 0)
    double predicted_slope = 0.0;
    std::vector<double> spec_coeffs;
    DomainSpec spec;
};

struct FlowResult {
    std::vector<FlowRecord> trajectory;
    std::string termination;  // "weak_residual", "zero_gradient", "step_underflow", "budget"
};

/// Projected gradient ascent of mu2 at fixed volume over spec coefficients
/// with Armijo backtracking; each trial is projected to the target volume and
/// remeshed at the initial resolution. `on_step` sees every accepted record.
FlowResult run_flow(const DomainSpec& spec0, double target_volume, const FlowOptions& options,
                    const std::function<void(const FlowRecord&)>& on_step = {});

}  // namespace shapelab::optimizer
