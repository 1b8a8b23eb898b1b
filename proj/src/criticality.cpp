#include "shapelab/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

namespace shapelab::criticality {

using geometry::TriMesh;

namespace {

struct StrongParts {
    std::vector<Eigen::MatrixXd> grad;  // <grad u_i, grad u_j> per edge
    std::vector<Eigen::MatrixXd> prod;  // edge average of u_i u_j
    std::vector<double> weight;         // edge length / |dOmega|
};

StrongParts strong_parts(const TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                         assembly::BoundaryGradient mode) {
    const int m = cluster.multiplicity;
    const auto& edges = mesh.boundary_edges();
    std::vector<std::vector<Vec2>> g;
    for (const auto& u : cluster.basis) g.push_back(assembly::boundary_gradients(mesh, u, mode));
    StrongParts p;
    const double len = geometry::boundary_measure(mesh);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        Eigen::MatrixXd gg(m, m), uu(m, m);
        const int a = edges[e].a, b = edges[e].b;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const auto& ui = cluster.basis[i];
                const auto& uj = cluster.basis[j];
                gg(i, j) = dot(g[i][e], g[j][e]);
                uu(i, j) = (2.0 * ui[a] * uj[a] + ui[a] * uj[b] + ui[b] * uj[a] + 2.0 * ui[b] * uj[b]) / 6.0;
            }
        p.grad.push_back(gg);
        p.prod.push_back(uu);
        p.weight.push_back(edges[e].length / len);
    }
    return p;
}

double relative_strong_deviation(const StrongParts& p, double mu2, const Eigen::VectorXd& c) {
    double mean = 0.0;
    std::vector<double> q(p.weight.size());
    for (std::size_t e = 0; e < q.size(); ++e) {
        q[e] = c.dot(p.grad[e] * c) - mu2 * c.dot(p.prod[e] * c);
        mean += p.weight[e] * q[e];
    }
    double var = 0.0;
    for (std::size_t e = 0; e < q.size(); ++e) var += p.weight[e] * (q[e] - mean) * (q[e] - mean);
    return std::sqrt(var) / std::max(std::abs(mean), std::numeric_limits<double>::min());
}

Eigen::VectorXd sphere_point(int m, double a, double b) {
    Eigen::VectorXd c(m);
    if (m == 2) {
        c << std::cos(a), std::sin(a);
    } else {
        c << std::cos(a), std::sin(a) * std::cos(b), std::sin(a) * std::sin(b);
    }
    return c;
}

// Projection of v onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        cum += s[i];
        const double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (s[i] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

int find_root(std::vector<int>& parent, int x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

StrongReport strong_criticality_test(const TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                     const Eigen::VectorXd& c, assembly::BoundaryGradient mode) {
    const int m = cluster.multiplicity;
    if (c.size() != m) throw Error(ErrorCode::InvalidArgument, "direction size differs from cluster multiplicity");
    if (std::abs(c.norm() - 1.0) > 1e-8) throw Error(ErrorCode::InvalidArgument, "direction must have unit norm");
    const auto p = strong_parts(mesh, cluster, mode);
    const double mu2 = cluster.mu2;

    StrongReport r;
    r.direction = c;
    std::vector<double> u2(p.weight.size());
    double u2_mean = 0.0;
    for (std::size_t e = 0; e < u2.size(); ++e) {
        u2[e] = c.dot(p.prod[e] * c);
        u2_mean += p.weight[e] * u2[e];
    }
    if (!(u2_mean > 0.0)) throw Error(ErrorCode::AllZeroFunction, "u vanishes on the boundary");
    r.normalization = 1.0 / std::sqrt(u2_mean);

    r.q.resize(u2.size());
    double raw_mean = 0.0;
    for (std::size_t e = 0; e < u2.size(); ++e) {
        const double raw = c.dot(p.grad[e] * c) - mu2 * u2[e];
        raw_mean += p.weight[e] * raw;
        r.q[e] = raw / u2_mean;
    }
    r.raw_lambda = raw_mean;
    r.lambda_fit = raw_mean / u2_mean;
    double var = 0.0, u2_var = 0.0;
    for (std::size_t e = 0; e < u2.size(); ++e) {
        const double d = r.q[e] - r.lambda_fit;
        var += p.weight[e] * d * d;
        r.deviation_sup = std::max(r.deviation_sup, std::abs(d));
        const double du = u2[e] / u2_mean - 1.0;
        u2_var += p.weight[e] * du * du;
    }
    r.deviation_l2 = std::sqrt(var);
    r.raw_deviation_l2 = r.deviation_l2 * u2_mean;
    r.relative_deviation = r.deviation_l2 / std::abs(r.lambda_fit);
    r.u2_mean = 1.0;
    r.u2_deviation = std::sqrt(u2_var);
    r.u2_expected = -r.lambda_fit / mu2;
    return r;
}

Eigen::VectorXd most_critical_direction(const TriMesh& mesh, const eigensolve::EigenCluster& cluster) {
    const int m = cluster.multiplicity;
    if (m == 1) return Eigen::VectorXd::Ones(1);
    if (m > 3) throw Error(ErrorCode::InvalidArgument, "direction search supports multiplicity <= 3");
    const auto p = strong_parts(mesh, cluster, assembly::BoundaryGradient::AdjacentTriangle);
    auto f = [&](double a, double b) { return relative_strong_deviation(p, cluster.mu2, sphere_point(m, a, b)); };

    // Half sphere suffices: c and -c give the same q.
    double best_a = 0.0, best_b = 0.0, best = f(0.0, 0.0);
    const int na = 180, nb = m == 3 ? 360 : 1;
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double a = kPi * i / na, b = 2.0 * kPi * j / nb;
            const double v = f(a, b);
            if (v < best) {
                best = v;
                best_a = a;
                best_b = b;
            }
        }
    double step = kPi / na;
    while (step > 1e-10) {
        bool improved = false;
        for (const auto& [da, db] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}) {
            if (m == 2 && db != 0.0) continue;
            const double v = f(best_a + da * step, best_b + db * step);
            if (v < best) {
                best = v;
                best_a += da * step;
                best_b += db * step;
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    Eigen::VectorXd c = sphere_point(m, best_a, best_b);
    Eigen::Index idx = 0;
    c.cwiseAbs().maxCoeff(&idx);
    if (c(idx) < 0.0) c = -c;
    return c;
}

Eigen::MatrixXd project_spectraplex(const Eigen::MatrixXd& s) {
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const Eigen::VectorXd lam = project_simplex(es.eigenvalues());
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

CriticalityReport weak_criticality_test(const TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                        assembly::BoundaryGradient mode) {
    const int m = cluster.multiplicity;
    CriticalityReport r;
    r.q_matrix_trace = shapecalc::boundary_residuals(mesh, cluster, mode);
    r.caratheodory_bound = m * (m + 1) / 2 + 1;
    const auto p = strong_parts(mesh, cluster, mode);
    const std::size_t ne = p.weight.size();
    const auto& w = p.weight;

    // S = P T P with P = Ubar^{-1/2} turns the constraint <Ubar, S> = 1
    // (boundary mean of sum S_ij u_i u_j equal to 1) into trace T = 1.
    Eigen::MatrixXd ubar = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t e = 0; e < ne; ++e) ubar += w[e] * p.prod[e];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ues(ubar);
    const double umax = ues.eigenvalues().maxCoeff();
    if (!(umax > 0.0) || ues.eigenvalues().minCoeff() <= 1e-12 * umax)
        throw Error(ErrorCode::AllZeroFunction, "cluster functions are dependent on the boundary");
    const Eigen::MatrixXd pm =
        ues.eigenvectors() * ues.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * ues.eigenvectors().transpose();

    std::vector<Eigen::MatrixXd> qn(ne);
    Eigen::MatrixXd qbar = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t e = 0; e < ne; ++e) {
        qn[e] = pm * r.q_matrix_trace[e] * pm;
        qbar += w[e] * qn[e];
    }
    double lip = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
        qn[e] -= qbar;
        lip += 2.0 * w[e] * qn[e].squaredNorm();
    }
    auto objective = [&](const Eigen::MatrixXd& t, Eigen::MatrixXd* grad) {
        double f = 0.0;
        if (grad) grad->setZero(m, m);
        for (std::size_t e = 0; e < ne; ++e) {
            const double v = (qn[e].cwiseProduct(t)).sum();
            f += w[e] * v * v;
            if (grad) *grad += (2.0 * w[e] * v) * qn[e];
        }
        return f;
    };

    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(m, m) / m;
    double f = objective(t, nullptr);
    if (lip > 0.0 && m > 1) {
        // FISTA on the spectraplex.
        Eigen::MatrixXd y = t, grad;
        double mom = 1.0;
        const int max_iter = 20000;
        int it = 0;
        for (; it < max_iter; ++it) {
            objective(y, &grad);
            const Eigen::MatrixXd t_next = project_spectraplex(y - grad / lip);
            const double mom_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
            const double change = (t_next - t).norm();
            y = t_next + ((mom - 1.0) / mom_next) * (t_next - t);
            t = t_next;
            mom = mom_next;
            if (change < 1e-14) break;
        }
        r.iterations = it;
        Eigen::MatrixXd g;
        f = objective(t, &g);
        const double stationarity = lip * (t - project_spectraplex(t - g / lip)).norm();
        const double problem_scale = std::max(lip, std::numeric_limits<double>::min());
        if (stationarity > 1e-6 * problem_scale && f > 1e3 * std::numeric_limits<double>::epsilon() * problem_scale)
            throw Error(ErrorCode::OptimizerStall, "projected gradient stalled with stationarity " +
                                                       std::to_string(stationarity));
    }
    r.weak_residual = std::max(f, 0.0);
    r.lambda_fit = (qbar.cwiseProduct(t)).sum();

    Eigen::MatrixXd s = pm * t * pm;
    s = 0.5 * (s + s.transpose());
    s /= s.trace();
    r.weak_combination = s;
    double raw_mean = 0.0;
    std::vector<double> raw(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        raw[e] = (r.q_matrix_trace[e].cwiseProduct(s)).sum();
        raw_mean += w[e] * raw[e];
    }
    for (std::size_t e = 0; e < ne; ++e) r.raw_residual += w[e] * (raw[e] - raw_mean) * (raw[e] - raw_mean);
    r.raw_lambda = raw_mean;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const double top = es.eigenvalues().maxCoeff();
    r.caratheodory_rank = static_cast<int>((es.eigenvalues().array() > 1e-6 * top).count());
    return r;
}

int nodal_domain_count(const TriMesh& mesh, const assembly::Vector& u, double zero_rtol) {
    if (u.size() != mesh.num_vertices()) throw Error(ErrorCode::InvalidArgument, "vector does not match mesh");
    const double umax = u.cwiseAbs().maxCoeff();
    if (!(umax > 0.0)) throw Error(ErrorCode::AllZeroFunction, "function vanishes identically");
    const double zero_tol = zero_rtol * umax;

    std::vector<int> sign(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) sign[v] = u[v] > zero_tol ? 1 : (u[v] < -zero_tol ? -1 : 0);

    // A zero vertex takes the sign of the other vertices of each triangle it
    // belongs to; triangles whose nonzero vertices disagree straddle the
    // nodal set and join neither side.
    const int nt = mesh.num_triangles();
    std::vector<int> tri_sign(nt, 0);
    for (int t = 0; t < nt; ++t) {
        int pos = 0, neg = 0;
        for (int v : mesh.triangles()[t]) {
            pos += sign[v] > 0;
            neg += sign[v] < 0;
        }
        if (pos > 0 && neg == 0) tri_sign[t] = 1;
        if (neg > 0 && pos == 0) tri_sign[t] = -1;
    }
    std::vector<int> parent(nt);
    std::iota(parent.begin(), parent.end(), 0);
    std::map<std::pair<int, int>, int> edge_owner;
    for (int t = 0; t < nt; ++t) {
        if (tri_sign[t] == 0) continue;
        const auto& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i], b = tri[(i + 1) % 3];
            const auto key = std::pair{std::min(a, b), std::max(a, b)};
            auto [it, fresh] = edge_owner.emplace(key, t);
            if (!fresh && tri_sign[it->second] == tri_sign[t])
                parent[find_root(parent, t)] = find_root(parent, it->second);
        }
    }
    int count = 0;
    for (int t = 0; t < nt; ++t)
        if (tri_sign[t] != 0 && find_root(parent, t) == t) ++count;
    return count;
}

MonotonicityReport cylinder_monotonicity_check(const TriMesh& mesh, const assembly::Vector& u, double collar) {
    if (!mesh.periodic()) throw Error(ErrorCode::InvalidArgument, "monotonicity check needs a cylinder mesh");
    if (collar < 0.0) collar = 2.0 * mesh.max_edge_length();
    std::vector<double> dist(mesh.num_vertices(), std::numeric_limits<double>::infinity());
    for (int v = 0; v < mesh.num_vertices(); ++v)
        for (int b : mesh.boundary_vertices()) dist[v] = std::min(dist[v], norm(mesh.displacement(v, b)));

    const auto grads = assembly::triangle_gradients(mesh, u);
    MonotonicityReport r;
    r.min_ut = std::numeric_limits<double>::infinity();
    r.max_ut = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        r.max_gradient = std::max(r.max_gradient, norm(grads[t]));
        const auto& tri = mesh.triangles()[t];
        if (dist[tri[0]] < collar || dist[tri[1]] < collar || dist[tri[2]] < collar) continue;
        r.min_ut = std::min(r.min_ut, grads[t].x);
        r.max_ut = std::max(r.max_ut, grads[t].x);
        ++r.triangles_checked;
    }
    if (r.triangles_checked == 0) throw Error(ErrorCode::InvalidArgument, "collar covers the whole mesh");
    const double tol = 1e-6 * r.max_gradient;
    if (r.min_ut > tol) r.sign = 1;
    if (r.max_ut < -tol) r.sign = -1;
    r.single_signed = r.sign != 0;
    return r;
}

}  // namespace shapelab::criticality
