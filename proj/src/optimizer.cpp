#include "shapelab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace shapelab::optimizer {

using geometry::CylinderDomainSpec;
using geometry::PlanarDomainSpec;
using geometry::TriMesh;

namespace {

void resize_coeffs(std::vector<double>& v, int modes) { v.resize(std::max<std::size_t>(v.size(), modes), 0.0); }

double l2_norm(const TriMesh& mesh, const std::vector<double>& per_edge) {
    double s = 0.0;
    const auto& edges = mesh.boundary_edges();
    for (std::size_t e = 0; e < edges.size(); ++e) s += per_edge[e] * per_edge[e] * edges[e].length;
    return std::sqrt(s);
}

std::vector<double> remove_mean(const TriMesh& mesh, std::vector<double> v) {
    const auto& edges = mesh.boundary_edges();
    double s = 0.0, len = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        s += v[e] * edges[e].length;
        len += edges[e].length;
    }
    for (double& x : v) x -= s / len;
    return v;
}

// q_c per edge for u = sum c_i u_i (M-normalized basis).
std::vector<double> residual_along(const std::vector<Eigen::MatrixXd>& q, const Eigen::VectorXd& c) {
    std::vector<double> out(q.size());
    for (std::size_t e = 0; e < q.size(); ++e) out[e] = c.dot(q[e] * c);
    return out;
}

double min_eig_derivative(const TriMesh& mesh, const std::vector<Eigen::MatrixXd>& q, const std::vector<double>& h) {
    const auto& edges = mesh.boundary_edges();
    const Eigen::Index m = q.front().rows();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t e = 0; e < edges.size(); ++e) A += q[e] * (h[e] * edges[e].length);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues()(0);
}

}  // namespace

double spec_volume(const DomainSpec& spec) {
    return std::visit([](const auto& s) { return s.area(); }, spec);
}

std::vector<double> shape_coefficients(const DomainSpec& spec, int modes) {
    std::vector<double> out;
    auto append = [&](std::vector<double> v) {
        resize_coeffs(v, modes);
        out.insert(out.end(), v.begin(), v.begin() + modes);
    };
    if (const auto* p = std::get_if<PlanarDomainSpec>(&spec)) {
        append(p->cos_coeffs);
        append(p->sin_coeffs);
    } else {
        const auto& c = std::get<CylinderDomainSpec>(spec);
        append(c.g_plus.cos_coeffs);
        append(c.g_plus.sin_coeffs);
        append(c.g_minus.cos_coeffs);
        append(c.g_minus.sin_coeffs);
    }
    return out;
}

DomainSpec with_shape_coefficients(const DomainSpec& spec, int modes, const std::vector<double>& c) {
    auto take = [&](std::vector<double>& dst, int block) {
        resize_coeffs(dst, modes);
        for (int m = 0; m < modes; ++m) dst[m] = c.at(static_cast<std::size_t>(block * modes + m));
    };
    DomainSpec out = spec;
    if (auto* p = std::get_if<PlanarDomainSpec>(&out)) {
        take(p->cos_coeffs, 0);
        take(p->sin_coeffs, 1);
    } else {
        auto& s = std::get<CylinderDomainSpec>(out);
        s.straight = false;
        take(s.g_plus.cos_coeffs, 0);
        take(s.g_plus.sin_coeffs, 1);
        take(s.g_minus.cos_coeffs, 2);
        take(s.g_minus.sin_coeffs, 3);
    }
    return out;
}

MeshResolution resolution_for(const DomainSpec& spec, double h) {
    MeshResolution r;
    if (const auto* p = std::get_if<PlanarDomainSpec>(&spec))
        r.rings = geometry::planar_ring_count(*p, h);
    else
        r.grid = geometry::cylinder_resolution(std::get<CylinderDomainSpec>(spec), h);
    return r;
}

TriMesh build_mesh(const DomainSpec& spec, const MeshResolution& res) {
    if (const auto* p = std::get_if<PlanarDomainSpec>(&spec)) return geometry::build_planar_mesh_rings(*p, res.rings);
    return geometry::build_cylinder_mesh_grid(std::get<CylinderDomainSpec>(spec), res.grid);
}

DomainSpec project_volume(const DomainSpec& spec, double target_volume) {
    if (!(target_volume > 0.0)) throw Error(ErrorCode::InvalidArgument, "target volume must be positive");
    DomainSpec s = spec;
    for (int it = 0; it <= 10; ++it) {
        const double v = spec_volume(s);
        if (!(v > 0.0)) throw Error(ErrorCode::ProjectionDiverged, "volume became non-positive");
        const double defect = v - target_volume;
        if (std::abs(defect) <= 1e-10 * target_volume) return s;
        if (it == 10) break;
        if (auto* p = std::get_if<PlanarDomainSpec>(&s)) {
            // dV/drho0 = 2 V / rho0.
            p->rho0 -= defect / (2.0 * v / p->rho0);
            if (!(p->rho0 > 0.0)) throw Error(ErrorCode::ProjectionDiverged, "rho0 became non-positive");
        } else {
            // Uniform outward offset delta of both heights: dV/ddelta = 2 L = |dOmega| of the straight strip.
            auto& c = std::get<CylinderDomainSpec>(s);
            const double delta = -defect / (2.0 * c.circumference);
            c.g_plus.c0 += delta;
            c.g_minus.c0 -= delta;
        }
    }
    throw Error(ErrorCode::ProjectionDiverged, "volume projection did not converge in 10 Newton steps");
}

Eigen::MatrixXd shape_tangent_basis(const DomainSpec& spec, const TriMesh& mesh, int modes) {
    const auto& edges = mesh.boundary_edges();
    const int nvars = static_cast<int>(shape_coefficients(spec, modes).size());
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(edges.size()), nvars);
    // Vertex displacement per unit coefficient, then edge normal velocity.
    std::vector<Vec2> disp(mesh.num_vertices());
    for (int k = 0; k < nvars; ++k) {
        std::fill(disp.begin(), disp.end(), Vec2{});
        const int block = k / modes, m = k % modes + 1;
        if (const auto* p = std::get_if<PlanarDomainSpec>(&spec)) {
            for (int v : mesh.boundary_vertices()) {
                const Vec2 d = mesh.vertices()[v] - p->center;
                const double th = std::atan2(d.y, d.x);
                const double drho = p->rho0 * (block == 0 ? std::cos(m * th) : std::sin(m * th));
                disp[v] = Vec2{std::cos(th), std::sin(th)} * drho;
            }
        } else {
            const auto& c = std::get<CylinderDomainSpec>(spec);
            const double w = 2.0 * kPi / c.circumference;
            const int component = block < 2 ? 1 : 0;  // components sorted by mean t: bottom first
            const bool use_cos = block % 2 == 0;
            for (int e : mesh.components().at(component)) {
                const int v = edges[e].a;
                const double x = mesh.vertices()[v].y;
                disp[v] = Vec2{use_cos ? std::cos(m * w * x) : std::sin(m * w * x), 0.0};
            }
        }
        for (std::size_t e = 0; e < edges.size(); ++e)
            basis(static_cast<Eigen::Index>(e), k) = dot(0.5 * (disp[edges[e].a] + disp[edges[e].b]), edges[e].normal);
    }
    return basis;
}

std::vector<assembly::BoundaryTrace> ascent_candidates(const TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                                       double tol) {
    const auto q = shapecalc::boundary_residuals(mesh, cluster);
    const int m = cluster.multiplicity;
    const double len = geometry::boundary_measure(mesh);
    std::vector<assembly::BoundaryTrace> out;
    auto push = [&](const std::vector<double>& raw) {
        double mean = 0.0;
        for (std::size_t e = 0; e < raw.size(); ++e) mean += raw[e] * mesh.boundary_edges()[e].length;
        mean /= len;
        auto h = remove_mean(mesh, raw);
        const double nrm = l2_norm(mesh, h);
        if (nrm <= tol * std::abs(mean) * std::sqrt(len) || !(nrm > 0.0)) return;
        for (double& x : h) x /= nrm;
        out.push_back(assembly::BoundaryTrace::per_edge(std::move(h)));
    };
    // tr(Q)/m = q along any orthonormal frame, averaged.
    std::vector<double> h0(q.size());
    for (std::size_t e = 0; e < q.size(); ++e) h0[e] = q[e].trace() / m;
    push(h0);
    if (m > 1) {
        auto h0c = remove_mean(mesh, h0);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t e = 0; e < q.size(); ++e) A += q[e] * (h0c[e] * mesh.boundary_edges()[e].length);
        const Eigen::VectorXd c = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvectors().col(0);
        push(residual_along(q, c));
    }
    if (out.empty()) throw Error(ErrorCode::ZeroGradient, "boundary residual is constant: criticality reached");
    return out;
}

assembly::BoundaryTrace ascent_direction(const TriMesh& mesh, const eigensolve::EigenCluster& cluster, double tol) {
    auto c = ascent_candidates(mesh, cluster, tol);
    return c.back();
}

FlowResult run_flow(const DomainSpec& spec0, double target_volume, const FlowOptions& opt,
                    const std::function<void(const FlowRecord&)>& on_step) {
    if (opt.budget < 0 || opt.modes < 1 || !(opt.h > 0.0) || !(opt.initial_step > 0.0))
        throw Error(ErrorCode::InvalidArgument, "invalid flow options");
    FlowResult result;
    DomainSpec spec = project_volume(spec0, target_volume);
    const MeshResolution res = resolution_for(spec, opt.h);
    TriMesh mesh = build_mesh(spec, res);
    auto cluster = eigensolve::compute_cluster(mesh, opt.cluster);

    auto record = [&](int step, double step_size, double slope) {
        FlowRecord r;
        r.step = step;
        r.mu2 = cluster.mu2;
        r.multiplicity = cluster.multiplicity;
        r.volume = spec_volume(spec);
        r.volume_drift = std::abs(r.volume - target_volume) / target_volume;
        r.weak_residual = criticality::weak_criticality_test(mesh, cluster).weak_residual;
        r.step_size = step_size;
        r.predicted_slope = slope;
        r.spec_coeffs = shape_coefficients(spec, opt.modes);
        r.spec = spec;
        result.trajectory.push_back(r);
        if (on_step) on_step(r);
        return r;
    };

    FlowRecord current = record(0, 0.0, 0.0);
    double step = opt.initial_step;
    for (int it = 1;; ++it) {
        if (current.weak_residual <= opt.tol_crit * current.mu2 * current.mu2) {
            result.termination = "weak_residual";
            break;
        }
        if (it > opt.budget) {
            result.termination = "budget";
            break;
        }
        std::vector<assembly::BoundaryTrace> candidates;
        try {
            candidates = ascent_candidates(mesh, cluster, opt.zero_gradient_tol);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroGradient) throw;
            result.termination = "zero_gradient";
            break;
        }

        // Least-squares projection of each candidate onto the spec tangent
        // space; keep the one with the best predicted one-sided slope per unit
        // boundary displacement.
        const Eigen::MatrixXd basis = shape_tangent_basis(spec, mesh, opt.modes);
        const auto& edges = mesh.boundary_edges();
        Eigen::VectorXd w(static_cast<Eigen::Index>(edges.size()));
        for (std::size_t e = 0; e < edges.size(); ++e) w(static_cast<Eigen::Index>(e)) = edges[e].length;
        const Eigen::MatrixXd normal = basis.transpose() * w.asDiagonal() * basis;
        const auto q = shapecalc::boundary_residuals(mesh, cluster);
        Eigen::VectorXd best_dir;
        double best_slope = -std::numeric_limits<double>::infinity();
        for (const auto& cand : candidates) {
            const Eigen::Map<const Eigen::VectorXd> hv(cand.values.data(), static_cast<Eigen::Index>(cand.values.size()));
            Eigen::VectorXd dir = normal.ldlt().solve(basis.transpose() * w.asDiagonal() * hv);
            Eigen::VectorXd hp = basis * dir;
            const double amp = hp.cwiseAbs().maxCoeff();
            if (!(amp > 0.0)) continue;
            dir /= amp;
            hp /= amp;
            const auto hm = remove_mean(mesh, std::vector<double>(hp.data(), hp.data() + hp.size()));
            const double slope = min_eig_derivative(mesh, q, hm);
            if (slope > best_slope) {
                best_slope = slope;
                best_dir = dir;
            }
        }
        if (best_dir.size() == 0 || !(best_slope > 0.0)) {
            result.termination = "zero_gradient";
            break;
        }

        // Armijo backtracking on mu2.
        const auto coeffs = shape_coefficients(spec, opt.modes);
        bool accepted = false;
        while (step >= opt.min_step) {
            std::vector<double> trial_c(coeffs);
            for (std::size_t k = 0; k < trial_c.size(); ++k) trial_c[k] += step * best_dir(static_cast<Eigen::Index>(k));
            try {
                DomainSpec trial = project_volume(with_shape_coefficients(spec, opt.modes, trial_c), target_volume);
                TriMesh trial_mesh = build_mesh(trial, res);
                auto trial_cluster = eigensolve::compute_cluster(trial_mesh, opt.cluster);
                if (trial_cluster.mu2 >= cluster.mu2 + opt.armijo * step * best_slope) {
                    spec = std::move(trial);
                    mesh = std::move(trial_mesh);
                    cluster = std::move(trial_cluster);
                    accepted = true;
                    break;
                }
            } catch (const Error& e) {
                // Trial shapes that cannot be meshed count as rejected steps.
                const ErrorCode c = e.code();
                if (c != ErrorCode::NonPositiveRadius && c != ErrorCode::MeshQualityFailure &&
                    c != ErrorCode::DegenerateStrip && c != ErrorCode::SingularTriangle)
                    throw Error(c, std::string("flow step ") + std::to_string(it) + ": " + e.what());
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.termination = "step_underflow";
            break;
        }
        current = record(it, step, best_slope);
        step = std::min(opt.max_step, 2.0 * step);
    }
    return result;
}

}  // namespace shapelab::optimizer
