#pragma once

#include <functional>
#include <string>

#include "shapelab/eigensolve.hpp"
#include "shapelab/geometry.hpp"

namespace shapelab::reference {

/// Bessel function of the first kind J_nu(x) for nu >= 0, x >= 0.
/// Power series for x <= 8, Miller downward recurrence normalized by the
/// Neumann-type sum (x/2)^nu0 = sum_k (nu0 + 2k) Gamma(nu0 + k) / k! J_{nu0+2k}(x)
/// beyond. Absolute error below 1e-13 on [0, 100].
double bessel_j(double nu, double x);

/// Radial profile phi of the first nontrivial Neumann eigenfunctions of the
/// unit ball in R^k: phi(t) = c t^{(2-k)/2} J_{k/2}(sqrt(mu2) t), normalized
/// by phi(1) = 1.
class RadialProfile {
public:
    RadialProfile() = default;
    RadialProfile(int k, double zero_location);

    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double derivative(double t) const;
    [[nodiscard]] double second_derivative(double t) const;
    [[nodiscard]] int dimension() const { return k_; }

private:
    int k_ = 1;
    double nu_ = 0.5;
    double zero_ = kPi / 2.0;
    double scale_ = 1.0;
};

struct BallEigenData {
    int k = 1;
    double mu2_ball = 0.0;
    double zero_location = 0.0;  // sqrt(mu2_ball)
    RadialProfile profile;
};

/// mu2 of the unit ball B^k: square of the first positive zero of
/// d/dt[t^{(2-k)/2} J_{k/2}(t)], located by a sign scan on (0, 20) and
/// bisection. k = 1 returns pi^2 / 4 exactly.
BallEigenData mu2_ball(int k);

/// The derivative whose first positive zero defines mu2(B^k), up to the
/// positive factor t^{-k/2}: J_{k/2}(t) - t J_{k/2+1}(t).
double ball_zero_function(int k, double t);

enum class CylinderCase { ManifoldMode, AxialMode, DegenerateEqual };
std::string to_string(CylinderCase c);

struct CylinderEigenData {
    double r = 0.0;
    double circumference = 0.0;
    double mu_r = 0.0;   // axial mode pi^2 / (4 r^2)
    double mu_n = 0.0;   // cross-section mode (2 pi / L)^2
    double mu2 = 0.0;
    CylinderCase kind = CylinderCase::AxialMode;
    double critical_volume = 0.0;
    double volume = 0.0;  // |Omega_r| = 2 r L
};

/// Exact mu2 of [-r, r] x S^1_L with the case split: ManifoldMode when the
/// cross-section eigenvalue is smaller (Case 1), AxialMode when the axial mode
/// sin(pi t / 2r) is (Case 2), DegenerateEqual at the crossover.
CylinderEigenData cylinder_exact(double r, double circumference);

/// (mu2(B^1) / mu2(S^1_L))^{1/2} * omega_1 * L with omega_1 = 2.
double critical_volume(double circumference);

/// Comparison functions G(tau) = phi(tau / r) (capped at phi(1) = 1 beyond r)
/// and H(tau) = G'(tau)^2 + (k - 1) G(tau)^2 / tau^2, the Dirichlet energy
/// density of the k trial functions G(|t|) t_i / |t|.
class WeinbergerProfile {
public:
    WeinbergerProfile(int k, double r);

    [[nodiscard]] double G(double tau) const;
    [[nodiscard]] double dG(double tau) const;
    [[nodiscard]] double H(double tau) const;
    [[nodiscard]] double radius() const { return r_; }
    [[nodiscard]] int dimension() const { return ball_.k; }
    [[nodiscard]] double ball_eigenvalue() const { return ball_.mu2_ball; }

private:
    BallEigenData ball_;
    double r_;
};

struct WeinbergerReport {
    double center = 0.0;         // axial center y (cylinder) or first coordinate (planar)
    double center_y2 = 0.0;      // second coordinate (planar only)
    double G_integral = 0.0;     // integral of G^2(|t - y|)
    double H_integral = 0.0;     // integral of H(|t - y|)
    double rayleigh_bound = 0.0; // H_integral / G_integral
    double discrete_trial_quotient = 0.0;  // P1 Rayleigh quotient of the interpolated trial functions
    double mu_r = 0.0;           // eigenvalue of the volume-matched comparison domain
    double mu2 = 0.0;            // discrete mu2 of the mesh
    double volume = 0.0;
    double comparison_volume = 0.0;
    bool link_mu2_bound = false;   // mu2 <= rayleigh_bound (within slack)
    bool link_bound_mu_r = false;  // rayleigh_bound <= mu_r (within slack)
    bool chain_ok = false;
    double slack = 0.0;
};

/// Weinberger-type chain mu2(Omega) <= int H / int G^2 <= mu^r for a cylinder
/// mesh with |Omega| = 2 r L (relative tolerance 1e-3, else VolumeMismatch).
/// The centering equation V(y) = int G(|t - y|) sign(t - y) = 0 is solved by
/// bisection (V is decreasing in y). `slack` is the relative tolerance used
/// for the link flags.
WeinbergerReport weinberger_bound(const geometry::TriMesh& mesh, double r, double mu2, double slack = 1e-3);
WeinbergerReport weinberger_bound(const geometry::TriMesh& mesh, double r,
                                  const eigensolve::ClusterOptions& opts = {}, double slack = 1e-3);

/// Euclidean analogue in the plane (k = 2): comparison disk of equal area,
/// centering solved by Newton's method on the convex potential whose gradient
/// is -V.
WeinbergerReport weinberger_bound_planar(const geometry::TriMesh& mesh, double mu2, double slack = 1e-3);

/// Integral of f over the mesh with a degree-5 seven-point rule per triangle.
/// Points are passed in unwrapped triangle coordinates.
double integrate(const geometry::TriMesh& mesh, const std::function<double(Vec2)>& f);

}  // namespace shapelab::reference
