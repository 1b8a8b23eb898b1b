#include "shapelab/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace shapelab::reference {

namespace {

constexpr double kSeriesLimit = 8.0;

double bessel_series(double nu, double x) {
    const double half = 0.5 * x;
    double term = std::exp(nu * std::log(half) - std::lgamma(nu + 1.0));
    double sum = term;
    const double q = half * half;
    for (int m = 1; m < 200; ++m) {
        term *= -q / (static_cast<double>(m) * (static_cast<double>(m) + nu));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_miller(double nu, double x) {
    const double nu0 = nu - std::floor(nu);
    const int target = static_cast<int>(std::lround(nu - nu0));
    int top = std::max(target, static_cast<int>(x)) + 40 + static_cast<int>(std::sqrt(40.0 * std::max(x, 1.0)));
    top += top % 2;

    // Downward recurrence J_{v-1} = (2v / x) J_v - J_{v+1} on orders nu0 + n.
    std::vector<double> j(top + 2, 0.0);
    j[top + 1] = 0.0;
    j[top] = 1e-300;
    for (int n = top; n >= 1; --n) {
        j[n - 1] = 2.0 * (nu0 + n) / x * j[n] - j[n + 1];
        if (std::abs(j[n - 1]) > 1e250) {
            for (int m = n - 1; m <= top; ++m) j[m] *= 1e-250;
        }
    }

    double norm = 0.0;
    if (nu0 == 0.0) {
        norm = j[0];
        for (int k = 1; 2 * k <= top; ++k) norm += 2.0 * j[2 * k];
        return j[target] / norm;
    }
    double ratio = std::tgamma(nu0);  // Gamma(nu0 + k) / k!
    for (int k = 0; 2 * k <= top; ++k) {
        if (k > 0) ratio *= (nu0 + k - 1.0) / k;
        norm += (nu0 + 2.0 * k) * ratio * j[2 * k];
    }
    return j[target] * std::pow(0.5 * x, nu0) / norm;
}

double bessel_j_derivative(double nu, double s) {
    return nu / s * bessel_j(nu, s) - bessel_j(nu + 1.0, s);
}

// Seven-point degree-5 rule on the reference triangle (barycentric, weights
// summing to 1).
struct QuadPoint {
    double l1, l2, l3, w;
};
constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115;
constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456;
constexpr double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
constexpr std::array<QuadPoint, 7> kQuad{{
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w0},
    {a1, b1, b1, w1},
    {b1, a1, b1, w1},
    {b1, b1, a1, w1},
    {a2, b2, b2, w2},
    {b2, a2, b2, w2},
    {b2, b2, a2, w2},
}};

}  // namespace

double bessel_j(double nu, double x) {
    if (!(x >= 0.0)) throw Error(ErrorCode::DomainError, "bessel_j requires x >= 0");
    if (!(nu >= 0.0)) throw Error(ErrorCode::DomainError, "bessel_j requires nu >= 0");
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    if (x <= kSeriesLimit) return bessel_series(nu, x);
    return bessel_miller(nu, x);
}

double ball_zero_function(int k, double t) {
    const double nu = 0.5 * k;
    return bessel_j(nu, t) - t * bessel_j(nu + 1.0, t);
}

// ---------------------------------------------------------------------------
// RadialProfile

RadialProfile::RadialProfile(int k, double zero_location)
    : k_(k), nu_(0.5 * k), zero_(zero_location) {
    scale_ = 1.0 / bessel_j(nu_, zero_);
}

double RadialProfile::value(double t) const {
    if (t <= 0.0) return 0.0;
    return scale_ * std::pow(t, 1.0 - nu_) * bessel_j(nu_, zero_ * t);
}

double RadialProfile::derivative(double t) const {
    if (t <= 1e-12) {
        // phi ~ scale * (zero / 2)^nu / Gamma(nu + 1) * t near the origin.
        return scale_ * std::exp(nu_ * std::log(0.5 * zero_) - std::lgamma(nu_ + 1.0));
    }
    const double s = zero_ * t;
    const double a = 1.0 - nu_;
    return scale_ * (a * std::pow(t, a - 1.0) * bessel_j(nu_, s) +
                     zero_ * std::pow(t, a) * bessel_j_derivative(nu_, s));
}

double RadialProfile::second_derivative(double t) const {
    if (t <= 1e-12) return 0.0;
    const double s = zero_ * t;
    const double a = 1.0 - nu_;
    const double J = bessel_j(nu_, s);
    const double dJ = bessel_j_derivative(nu_, s);
    const double d2J = -dJ / s - (1.0 - nu_ * nu_ / (s * s)) * J;
    return scale_ * (a * (a - 1.0) * std::pow(t, a - 2.0) * J + 2.0 * a * zero_ * std::pow(t, a - 1.0) * dJ +
                     zero_ * zero_ * std::pow(t, a) * d2J);
}

// ---------------------------------------------------------------------------

BallEigenData mu2_ball(int k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 1");
    BallEigenData d;
    d.k = k;
    if (k == 1) {
        d.zero_location = kPi / 2.0;
        d.mu2_ball = kPi * kPi / 4.0;
        d.profile = RadialProfile(1, d.zero_location);
        return d;
    }
    constexpr double step = 0.01;
    double lo = step;
    double flo = ball_zero_function(k, lo);
    double hi = 0.0;
    bool found = false;
    for (double t = 2.0 * step; t < 20.0; t += step) {
        const double ft = ball_zero_function(k, t);
        if ((flo > 0.0) != (ft > 0.0)) {
            hi = t;
            found = true;
            break;
        }
        lo = t;
        flo = ft;
    }
    if (!found) throw Error(ErrorCode::BracketNotFound, "no sign change of the ball derivative on (0, 20)");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = ball_zero_function(k, mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    d.zero_location = 0.5 * (lo + hi);
    d.mu2_ball = d.zero_location * d.zero_location;
    d.profile = RadialProfile(k, d.zero_location);
    return d;
}

std::string to_string(CylinderCase c) {
    switch (c) {
        case CylinderCase::ManifoldMode: return "Case1";
        case CylinderCase::AxialMode: return "Case2";
        case CylinderCase::DegenerateEqual: return "degenerate_equal";
    }
    return "unknown";
}

double critical_volume(double circumference) {
    const double mu_n = std::pow(2.0 * kPi / circumference, 2);
    return std::sqrt(mu2_ball(1).mu2_ball / mu_n) * 2.0 * circumference;
}

CylinderEigenData cylinder_exact(double r, double circumference) {
    if (!(r > 0.0 && circumference > 0.0))
        throw Error(ErrorCode::InvalidArgument, "r and L must be positive");
    CylinderEigenData d;
    d.r = r;
    d.circumference = circumference;
    d.mu_r = mu2_ball(1).mu2_ball / (r * r);
    d.mu_n = std::pow(2.0 * kPi / circumference, 2);
    d.mu2 = std::min(d.mu_r, d.mu_n);
    if (std::abs(d.mu_r - d.mu_n) <= 1e-12 * std::max(d.mu_r, d.mu_n))
        d.kind = CylinderCase::DegenerateEqual;
    else
        d.kind = d.mu_r < d.mu_n ? CylinderCase::AxialMode : CylinderCase::ManifoldMode;
    d.critical_volume = critical_volume(circumference);
    d.volume = 2.0 * r * circumference;
    return d;
}

// ---------------------------------------------------------------------------
// Weinberger chain

WeinbergerProfile::WeinbergerProfile(int k, double r) : ball_(mu2_ball(k)), r_(r) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
}

double WeinbergerProfile::G(double tau) const { return tau >= r_ ? 1.0 : ball_.profile.value(tau / r_); }

double WeinbergerProfile::dG(double tau) const {
    return tau >= r_ ? 0.0 : ball_.profile.derivative(tau / r_) / r_;
}

double WeinbergerProfile::H(double tau) const {
    const double g1 = dG(tau);
    if (ball_.k == 1) return g1 * g1;
    const double g = G(tau);
    const double ratio = tau > 1e-12 ? g / tau : dG(0.0);
    return g1 * g1 + (ball_.k - 1) * ratio * ratio;
}

double integrate(const geometry::TriMesh& mesh, const std::function<double(Vec2)>& f) {
    double total = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto p = mesh.triangle_coords(t);
        const double area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
        double s = 0.0;
        for (const auto& q : kQuad) s += q.w * f(p[0] * q.l1 + p[1] * q.l2 + p[2] * q.l3);
        total += area * s;
    }
    return total;
}

namespace {

void finish_links(WeinbergerReport& rep, double slack) {
    rep.slack = slack;
    rep.rayleigh_bound = rep.H_integral / rep.G_integral;
    rep.link_mu2_bound = rep.mu2 <= rep.rayleigh_bound * (1.0 + slack);
    rep.link_bound_mu_r = rep.rayleigh_bound <= rep.mu_r * (1.0 + slack);
    rep.chain_ok = rep.link_mu2_bound && rep.link_bound_mu_r;
}

double trial_quotient(const geometry::TriMesh& mesh, const std::vector<assembly::Vector>& trials) {
    const auto K = assembly::assemble_stiffness(mesh);
    const auto M = assembly::assemble_mass(mesh);
    const assembly::Vector ones = assembly::Vector::Ones(mesh.num_vertices());
    const assembly::Vector m_ones = M.matrix * ones;
    double num = 0.0, den = 0.0;
    for (auto v : trials) {
        v -= ones * (m_ones.dot(v) / ones.dot(m_ones));
        num += K.quadratic_form(v);
        den += M.quadratic_form(v);
    }
    return num / den;
}

}  // namespace

WeinbergerReport weinberger_bound(const geometry::TriMesh& mesh, double r, double mu2, double slack) {
    if (!mesh.periodic()) throw Error(ErrorCode::InvalidArgument, "weinberger_bound needs a cylinder mesh");
    WeinbergerReport rep;
    rep.volume = geometry::mesh_volume(mesh);
    rep.comparison_volume = 2.0 * r * mesh.period();
    if (std::abs(rep.volume - rep.comparison_volume) > 1e-3 * rep.comparison_volume)
        throw Error(ErrorCode::VolumeMismatch, "mesh volume " + std::to_string(rep.volume) +
                                                   " differs from |Omega_r| = " +
                                                   std::to_string(rep.comparison_volume));
    const WeinbergerProfile prof(1, r);

    auto centering = [&](double y) {
        return integrate(mesh, [&](Vec2 p) {
            const double d = p.x - y;
            return d == 0.0 ? 0.0 : std::copysign(prof.G(std::abs(d)), d);
        });
    };
    double lo = mesh.vertices().front().x, hi = lo;
    for (const auto& p : mesh.vertices()) {
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    double vlo = centering(lo), vhi = centering(hi);
    if (!(vlo > 0.0 && vhi < 0.0)) throw Error(ErrorCode::CenteringFailed, "centering field has no sign change");
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double vm = centering(mid);
        if (vm > 0.0) {
            lo = mid;
            vlo = vm;
        } else {
            hi = mid;
            vhi = vm;
        }
    }
    rep.center = 0.5 * (lo + hi);
    const double y = rep.center;
    rep.G_integral = integrate(mesh, [&](Vec2 p) {
        const double g = prof.G(std::abs(p.x - y));
        return g * g;
    });
    rep.H_integral = integrate(mesh, [&](Vec2 p) { return prof.H(std::abs(p.x - y)); });
    rep.mu_r = prof.ball_eigenvalue() / (r * r);
    rep.mu2 = mu2;
    rep.discrete_trial_quotient = trial_quotient(
        mesh, {assembly::interpolate(mesh, [&](Vec2 p) {
            const double d = p.x - y;
            return d == 0.0 ? 0.0 : std::copysign(prof.G(std::abs(d)), d);
        })});
    finish_links(rep, slack);
    return rep;
}

WeinbergerReport weinberger_bound(const geometry::TriMesh& mesh, double r, const eigensolve::ClusterOptions& opts,
                                  double slack) {
    const double volume = geometry::mesh_volume(mesh);
    const double target = 2.0 * r * mesh.period();
    if (!mesh.periodic() || std::abs(volume - target) > 1e-3 * target)
        return weinberger_bound(mesh, r, 0.0, slack);  // raises the precondition error
    return weinberger_bound(mesh, r, eigensolve::compute_cluster(mesh, opts).mu2, slack);
}

WeinbergerReport weinberger_bound_planar(const geometry::TriMesh& mesh, double mu2, double slack) {
    if (mesh.periodic()) throw Error(ErrorCode::InvalidArgument, "planar Weinberger check needs a planar mesh");
    WeinbergerReport rep;
    rep.volume = geometry::mesh_volume(mesh);
    rep.comparison_volume = rep.volume;
    const double radius = std::sqrt(rep.volume / kPi);
    const WeinbergerProfile prof(2, radius);

    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    for (const auto& p : mesh.vertices()) y += Eigen::Vector2d(p.x, p.y);
    y /= mesh.num_vertices();

    auto field = [&](const Eigen::Vector2d& c, Eigen::Matrix2d* hess) {
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            const auto p = mesh.triangle_coords(t);
            const double area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
            for (const auto& q : kQuad) {
                const Vec2 x = p[0] * q.l1 + p[1] * q.l2 + p[2] * q.l3;
                const Eigen::Vector2d z(x.x - c.x(), x.y - c.y());
                const double tau = z.norm();
                const double w = area * q.w;
                if (tau < 1e-14) {
                    h += w * prof.dG(0.0) * Eigen::Matrix2d::Identity();
                    continue;
                }
                const Eigen::Vector2d zh = z / tau;
                v += w * prof.G(tau) * zh;
                const Eigen::Matrix2d P = zh * zh.transpose();
                h += w * (prof.dG(tau) * P + prof.G(tau) / tau * (Eigen::Matrix2d::Identity() - P));
            }
        }
        if (hess) *hess = h;
        return v;
    };

    const double scale = mesh.scale();
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        Eigen::Matrix2d h;
        const Eigen::Vector2d v = field(y, &h);
        if (v.norm() < 1e-13 * rep.volume * std::max(1.0, scale)) {
            converged = true;
            break;
        }
        y += h.ldlt().solve(v);
    }
    if (!converged) throw Error(ErrorCode::CenteringFailed, "Newton iteration for the planar center stalled");

    rep.center = y.x();
    rep.center_y2 = y.y();
    auto tau_of = [&](Vec2 p) { return std::hypot(p.x - y.x(), p.y - y.y()); };
    rep.G_integral = integrate(mesh, [&](Vec2 p) {
        const double g = prof.G(tau_of(p));
        return g * g;
    });
    rep.H_integral = integrate(mesh, [&](Vec2 p) { return prof.H(tau_of(p)); });
    rep.mu_r = prof.ball_eigenvalue() / (radius * radius);
    rep.mu2 = mu2;
    std::vector<assembly::Vector> trials;
    for (int i = 0; i < 2; ++i) {
        trials.push_back(assembly::interpolate(mesh, [&](Vec2 p) {
            const double tau = tau_of(p);
            if (tau < 1e-14) return 0.0;
            const double comp = i == 0 ? p.x - y.x() : p.y - y.y();
            return prof.G(tau) * comp / tau;
        }));
    }
    rep.discrete_trial_quotient = trial_quotient(mesh, trials);
    finish_links(rep, slack);
    return rep;
}

}  // namespace shapelab::reference
