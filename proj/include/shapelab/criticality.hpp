#pragma once

#include <vector>

#include <Eigen/Core>

#include "shapelab/eigensolve.hpp"
#include "shapelab/shapecalc.hpp"

namespace shapelab::criticality {

struct StrongReport {
    Eigen::VectorXd direction;     // unit c, u = sum c_i u_i
    double normalization = 0.0;    // factor s with u -> s u giving mean boundary u^2 = 1
    std::vector<double> q;         // |grad u|^2 - mu2 u^2 per boundary edge (normalized u)
    double lambda_fit = 0.0;       // boundary-length-weighted mean of q
    double deviation_l2 = 0.0;     // RMS over the boundary of q - lambda
    double deviation_sup = 0.0;
    double relative_deviation = 0.0;  // deviation_l2 / |lambda|
    double raw_deviation_l2 = 0.0;    // RMS deviation for the M-normalized u
    double raw_lambda = 0.0;
    double u2_mean = 0.0;             // boundary mean of u^2 (1 after normalization)
    double u2_deviation = 0.0;        // RMS of u^2 - u2_mean, relative to u2_mean
    double u2_expected = 0.0;         // -lambda / mu2
};

/// Strong criticality of u = sum c_i u_i: q = |grad u|^2 - mu2 u^2 on the
/// boundary, its best constant and the deviation from it. u is rescaled so
/// that the boundary mean of u^2 is 1, which makes lambda comparable with
/// -mu2 and u^2 with -lambda / mu2.
StrongReport strong_criticality_test(const geometry::TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                     const Eigen::VectorXd& c,
                                     assembly::BoundaryGradient mode = assembly::BoundaryGradient::AdjacentTriangle);

/// Direction in the cluster with the smallest relative strong deviation
/// (dense search on the unit sphere, then local refinement; m <= 3).
Eigen::VectorXd most_critical_direction(const geometry::TriMesh& mesh, const eigensolve::EigenCluster& cluster);

struct CriticalityReport {
    std::vector<Eigen::MatrixXd> q_matrix_trace;  // Q(e) per boundary edge
    Eigen::MatrixXd weak_combination;             // PSD, trace 1
    double weak_residual = 0.0;                   // variance of tr(Q S), S scaled so mean tr(U S) = 1
    double lambda_fit = 0.0;                      // mean of tr(Q S) in the same scaling
    double raw_residual = 0.0;                    // variance of tr(Q S) for the trace-1 S
    double raw_lambda = 0.0;
    int caratheodory_rank = 0;
    int caratheodory_bound = 0;                   // m (m + 1) / 2 + 1
    int iterations = 0;
};

/// Weak criticality: minimize Var_dOmega[tr(Q(s) S)] over PSD S scaled so
/// that the boundary mean of tr(U(s) S), U_ij = u_i u_j, is 1. This is the
/// normalization of the strong test, so the residual does not depend on the
/// domain size and is bounded by the squared strong deviation of any single
/// direction. Solved by accelerated projected gradient on the spectraplex
/// after the congruence S = Ubar^{-1/2} T Ubar^{-1/2}. Throws OptimizerStall when the iteration budget ends with a
/// large projected gradient and a residual above roundoff.
CriticalityReport weak_criticality_test(const geometry::TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                        assembly::BoundaryGradient mode = assembly::BoundaryGradient::AdjacentTriangle);

/// Euclidean projection of a symmetric matrix onto {S PSD, trace S = 1}.
Eigen::MatrixXd project_spectraplex(const Eigen::MatrixXd& s);

/// Number of connected components (shared edges) of the triangles whose
/// vertices all have sign +, plus those with sign -. A vertex with u = 0
/// takes, inside each triangle, the sign of that triangle's nonzero vertices;
/// triangles with both signs belong to neither set. Values with
/// |u| <= zero_rtol max|u| count as zero: eigenvectors carry solver noise of
/// order tol max|u| on symmetric nodal lines, and its random signs would
/// otherwise split domains.
/// Throws AllZeroFunction.
int nodal_domain_count(const geometry::TriMesh& mesh, const assembly::Vector& u, double zero_rtol = 1e-8);

struct MonotonicityReport {
    double min_ut = 0.0;
    double max_ut = 0.0;
    double max_gradient = 0.0;
    int triangles_checked = 0;
    bool single_signed = false;  // all u_t > 0 or all u_t < 0 beyond 1e-6 max|grad u|
    int sign = 0;
};

/// Sign statistics of the axial derivative u_t over triangles farther than
/// `collar` (default 2 h, h the longest edge) from the boundary.
MonotonicityReport cylinder_monotonicity_check(const geometry::TriMesh& mesh, const assembly::Vector& u,
                                               double collar = -1.0);

}  // namespace shapelab::criticality
