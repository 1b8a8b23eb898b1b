#include "shapelab/shapecalc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace shapelab::shapecalc {

using geometry::TriMesh;

namespace {

double max_abs_boundary(const TriMesh& mesh, const BoundaryTrace& h) {
    double m = 0.0;
    if (h.kind == BoundaryTrace::Kind::PerEdge) {
        for (double v : h.values) m = std::max(m, std::abs(v));
    } else {
        for (int b : mesh.boundary_vertices()) m = std::max(m, std::abs(h.values.at(b)));
    }
    return m;
}

// Incoming and outgoing boundary edge of every boundary vertex.
struct VertexEdges {
    std::vector<int> in, out;
};

VertexEdges vertex_edges(const TriMesh& mesh) {
    VertexEdges ve;
    ve.in.assign(mesh.num_vertices(), -1);
    ve.out.assign(mesh.num_vertices(), -1);
    const auto& edges = mesh.boundary_edges();
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        ve.out[edges[e].a] = e;
        ve.in[edges[e].b] = e;
    }
    return ve;
}

Vec2 wrapped_difference(const TriMesh& mesh, Vec2 d) {
    if (mesh.periodic()) d.y -= mesh.period() * std::round(d.y / mesh.period());
    return d;
}

std::vector<std::vector<int>> vertex_neighbors(const TriMesh& mesh) {
    std::vector<std::vector<int>> nb(mesh.num_vertices());
    for (const auto& t : mesh.triangles())
        for (int i = 0; i < 3; ++i) {
            nb[t[i]].push_back(t[(i + 1) % 3]);
            nb[t[i]].push_back(t[(i + 2) % 3]);
        }
    for (auto& n : nb) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    return nb;
}

// Polynomial extrapolation to x = 0 through (x_i, y_i) (Neville).
double extrapolate_to_zero(std::vector<double> x, std::vector<double> y) {
    const std::size_t n = x.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i)
            y[i] = (x[i + level] * y[i] - x[i] * y[i + 1]) / (x[i + level] - x[i]);
    return y[0];
}

}  // namespace

std::string to_string(Preservation p) {
    switch (p) {
        case Preservation::None: return "none";
        case Preservation::GlobalMeanZero: return "global_mean_zero";
        case Preservation::PerComponentMeanZero: return "per_component_mean_zero";
    }
    return "unknown";
}

Preservation certify(const TriMesh& mesh, const BoundaryTrace& h) {
    const double tol = 1e-10 * geometry::boundary_measure(mesh) * max_abs_boundary(mesh, h);
    bool per_component = true;
    for (int c = 0; c < static_cast<int>(mesh.components().size()); ++c)
        if (std::abs(assembly::boundary_integrate(mesh, h, c)) > tol) per_component = false;
    if (per_component) return Preservation::PerComponentMeanZero;
    if (std::abs(assembly::boundary_integrate(mesh, h)) <= tol) return Preservation::GlobalMeanZero;
    return Preservation::None;
}

std::vector<Vec2> boundary_displacement(const TriMesh& mesh, const BoundaryTrace& h) {
    const auto& edges = mesh.boundary_edges();
    const auto ve = vertex_edges(mesh);
    std::vector<Vec2> d(mesh.num_vertices());
    for (int v : mesh.boundary_vertices()) {
        const auto& ein = edges[ve.in[v]];
        const auto& eout = edges[ve.out[v]];
        double hv = 0.0;
        if (h.kind == BoundaryTrace::Kind::PerVertex) {
            hv = h.values.at(v);
        } else {
            hv = (ein.length * h.values.at(ve.in[v]) + eout.length * h.values.at(ve.out[v])) /
                 (ein.length + eout.length);
        }
        // <d, n_in> = <d, n_out> = hv.
        const double c = 1.0 + dot(ein.normal, eout.normal);
        if (!(c > 1e-8)) throw Error(ErrorCode::MeshFoldOver, "boundary folds back at vertex " + std::to_string(v));
        d[v] = (ein.normal + eout.normal) * (hv / c);
    }
    return d;
}

std::vector<Vec2> extend_into_collar(const TriMesh& mesh, std::vector<Vec2> disp, int collar) {
    const auto nb = vertex_neighbors(mesh);
    std::vector<int> layer(mesh.num_vertices(), -1);
    std::deque<int> queue;
    for (int b : mesh.boundary_vertices()) {
        layer[b] = 0;
        queue.push_back(b);
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (layer[v] + 1 >= collar) continue;
        for (int w : nb[v])
            if (layer[w] < 0) {
                layer[w] = layer[v] + 1;
                queue.push_back(w);
            }
    }
    const auto& bverts = mesh.boundary_vertices();
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (layer[v] <= 0) {
            if (layer[v] < 0) disp[v] = Vec2{};
            continue;
        }
        Vec2 acc{};
        double wsum = 0.0;
        for (int b : bverts) {
            const double r2 = dot(mesh.displacement(v, b), mesh.displacement(v, b));
            const double w = 1.0 / (r2 * r2);
            acc += disp[b] * w;
            wsum += w;
        }
        disp[v] = acc * ((1.0 - static_cast<double>(layer[v]) / collar) / wsum);
    }
    return disp;
}

std::vector<Vec2> extend_harmonic(const TriMesh& mesh, std::vector<Vec2> disp) {
    const auto K = assembly::assemble_stiffness(mesh);
    const int n = mesh.num_vertices();
    std::vector<int> interior_index(n, -1);
    int ni = 0;
    for (int v = 0; v < n; ++v)
        if (!mesh.is_boundary_vertex(v)) interior_index[v] = ni++;
    if (ni == 0) return disp;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ni, 2);
    for (int c = 0; c < K.matrix.outerSize(); ++c)
        for (assembly::SparseMatrix::InnerIterator it(K.matrix, c); it; ++it) {
            const int r = static_cast<int>(it.row()), col = static_cast<int>(it.col());
            if (interior_index[r] < 0) continue;
            if (interior_index[col] >= 0) {
                trips.emplace_back(interior_index[r], interior_index[col], it.value());
            } else {
                rhs(interior_index[r], 0) -= it.value() * disp[col].x;
                rhs(interior_index[r], 1) -= it.value() * disp[col].y;
            }
        }
    assembly::SparseMatrix kii(ni, ni);
    kii.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<assembly::SparseMatrix> solver(kii);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::Internal, "interior Laplacian factorization failed");
    const Eigen::MatrixXd x = solver.solve(rhs);
    for (int v = 0; v < n; ++v)
        if (interior_index[v] >= 0) disp[v] = Vec2{x(interior_index[v], 0), x(interior_index[v], 1)};
    return disp;
}

DeformationField make_volume_preserving(const BoundaryTrace& h_raw, const TriMesh& mesh, VolumeMode mode) {
    if (mesh.boundary_edges().empty()) throw Error(ErrorCode::EmptyBoundary, "mesh has no boundary");
    const auto& edges = mesh.boundary_edges();
    const bool per_edge = h_raw.kind == BoundaryTrace::Kind::PerEdge;
    if (h_raw.values.size() != (per_edge ? edges.size() : static_cast<std::size_t>(mesh.num_vertices())))
        throw Error(ErrorCode::InvalidArgument, "boundary trace does not match mesh");

    DeformationField f;
    f.h = h_raw;
    auto subtract = [&](const std::vector<int>& loop, double mean) {
        for (int e : loop) {
            if (per_edge)
                f.h.values[e] -= mean;
            else
                f.h.values[edges[e].a] -= mean;  // each loop vertex starts exactly one edge
        }
    };
    if (mode == VolumeMode::Global) {
        const double mean = assembly::boundary_integrate(mesh, h_raw) / geometry::boundary_measure(mesh);
        for (const auto& loop : mesh.components()) subtract(loop, mean);
    } else {
        for (int c = 0; c < static_cast<int>(mesh.components().size()); ++c) {
            const double mean = assembly::boundary_integrate(mesh, h_raw, c) / geometry::boundary_measure(mesh, c);
            subtract(mesh.components()[c], mean);
        }
    }
    f.displacement = extend_into_collar(mesh, boundary_displacement(mesh, f.h));
    f.preservation = certify(mesh, f.h);
    return f;
}

DeformationField field_from_vector(const TriMesh& mesh, const std::function<Vec2(Vec2)>& V) {
    DeformationField f;
    f.displacement.resize(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) f.displacement[v] = V(mesh.vertices()[v]);
    std::vector<double> h;
    h.reserve(mesh.boundary_edges().size());
    for (const auto& e : mesh.boundary_edges())
        h.push_back(dot(0.5 * (f.displacement[e.a] + f.displacement[e.b]), e.normal));
    f.h = BoundaryTrace::per_edge(std::move(h));
    f.preservation = certify(mesh, f.h);
    return f;
}

DeformationField field_from_trace(const TriMesh& mesh, const BoundaryTrace& h) {
    DeformationField f;
    f.h = h;
    f.displacement = extend_into_collar(mesh, boundary_displacement(mesh, h));
    f.preservation = certify(mesh, h);
    return f;
}

TriMesh transport_mesh(const TriMesh& mesh, const DeformationField& field, double eps) {
    if (field.displacement.size() != static_cast<std::size_t>(mesh.num_vertices()))
        throw Error(ErrorCode::InvalidArgument, "field does not match mesh");
    if (eps == 0.0) return mesh;
    std::vector<Vec2> moved(mesh.vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) moved[v] += eps * field.displacement[v];
    TriMesh out = mesh.with_vertices(std::move(moved));
    for (int t = 0; t < out.num_triangles(); ++t)
        if (!(out.triangle_area(t) > 0.0))
            throw Error(ErrorCode::MeshFoldOver, "triangle " + std::to_string(t) + " inverted at eps = " +
                                                     std::to_string(eps));
    return out;
}

std::vector<Eigen::MatrixXd> boundary_residuals(const TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                                assembly::BoundaryGradient mode) {
    const int m = cluster.multiplicity;
    const auto& edges = mesh.boundary_edges();
    std::vector<std::vector<Vec2>> grads;
    for (const auto& u : cluster.basis) grads.push_back(assembly::boundary_gradients(mesh, u, mode));
    std::vector<Eigen::MatrixXd> q(edges.size(), Eigen::MatrixXd(m, m));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int a = edges[e].a, b = edges[e].b;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j <= i; ++j) {
                const auto& ui = cluster.basis[i];
                const auto& uj = cluster.basis[j];
                // Edge average of the product of two linear functions.
                const double uu = (2.0 * ui[a] * uj[a] + ui[a] * uj[b] + ui[b] * uj[a] + 2.0 * ui[b] * uj[b]) / 6.0;
                const double v = dot(grads[i][e], grads[j][e]) - cluster.mu2 * uu;
                q[e](i, j) = v;
                q[e](j, i) = v;
            }
    }
    return q;
}

ShapeDerivativeReport one_sided_derivative(const TriMesh& mesh, const eigensolve::EigenCluster& cluster,
                                           const DeformationField& field, assembly::BoundaryGradient mode) {
    const auto q = boundary_residuals(mesh, cluster, mode);
    const auto& edges = mesh.boundary_edges();
    const int m = cluster.multiplicity;
    ShapeDerivativeReport rep;
    rep.A = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t e = 0; e < edges.size(); ++e)
        rep.A += q[e] * (field.h.edge_value(mesh, static_cast<int>(e)) * edges[e].length);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.A);
    rep.one_sided_derivative = es.eigenvalues()(0);
    rep.reverse_derivative = -es.eigenvalues()(m - 1);
    rep.minimizing_direction = es.eigenvectors().col(0);
    Eigen::Index idx = 0;
    rep.minimizing_direction.cwiseAbs().maxCoeff(&idx);
    if (rep.minimizing_direction(idx) < 0.0) rep.minimizing_direction *= -1.0;
    return rep;
}

double transported_mu2(const TriMesh& mesh, const DeformationField& field, double eps,
                       const eigensolve::ClusterOptions& opts) {
    TriMesh moved;
    const double h = mesh.max_edge_length();
    if (std::abs(eps) > h * h) {
        std::vector<Vec2> bd(mesh.num_vertices());
        for (int b : mesh.boundary_vertices()) bd[b] = field.displacement[b];
        DeformationField relaxed = field;
        relaxed.displacement = extend_harmonic(mesh, std::move(bd));
        moved = transport_mesh(mesh, relaxed, eps);
    } else {
        moved = transport_mesh(mesh, field, eps);
    }
    const auto K = assembly::assemble_stiffness(moved);
    const auto M = assembly::assemble_mass(moved);
    return eigensolve::smallest_nonzero_eigenpairs(K, M, std::max(2, opts.count), opts.solver).front().mu;
}

FdResult fd_derivative_oracle(const TriMesh& mesh, const DeformationField& field, const std::vector<double>& eps_list,
                              const eigensolve::ClusterOptions& opts) {
    if (eps_list.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least three eps values");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "eps values must be strictly decreasing");
    }
    FdResult r;
    r.eps = eps_list;
    r.mu2.assign(eps_list.size(), 0.0);

    // Job 0 is the base solve; job i + 1 evaluates eps_list[i].
    const int jobs = static_cast<int>(eps_list.size()) + 1;
    std::vector<double> values(jobs, 0.0);
    std::vector<std::exception_ptr> errors(jobs);
    auto run = [&](int j) {
        try {
            values[j] = transported_mu2(mesh, field, j == 0 ? 0.0 : eps_list[j - 1], opts);
        } catch (...) {
            errors[j] = std::current_exception();
        }
    };
    const int workers = std::max(1, std::min(thread_cap(), jobs));
    if (workers == 1) {
        for (int j = 0; j < jobs; ++j) run(j);
    } else {
        for (int start = 0; start < jobs; start += workers) {
            std::vector<std::thread> pool;
            for (int j = start; j < std::min(jobs, start + workers); ++j) pool.emplace_back(run, j);
            for (auto& t : pool) t.join();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    r.mu2_base = values[0];
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        r.mu2[i] = values[i + 1];
        r.quotients.push_back((r.mu2[i] - r.mu2_base) / eps_list[i]);
    }
    r.slope = extrapolate_to_zero(r.eps, r.quotients);
    const double coarse = extrapolate_to_zero(std::vector<double>(r.eps.begin() + 1, r.eps.end()),
                                              std::vector<double>(r.quotients.begin() + 1, r.quotients.end()));
    r.error_estimate = std::abs(r.slope - coarse);
    return r;
}

VolumeExpansionReport volume_expansion_check(const TriMesh& mesh, const DeformationField& field, double eps) {
    VolumeExpansionReport rep;
    rep.eps = eps;
    const double a0 = geometry::mesh_volume(mesh);
    const double a1 = geometry::mesh_volume(transport_mesh(mesh, field, eps));
    const double a2 = geometry::mesh_volume(transport_mesh(mesh, field, 2.0 * eps));
    rep.fd_slope = (4.0 * a1 - a2 - 3.0 * a0) / (2.0 * eps);
    rep.analytic_slope = assembly::boundary_integrate(mesh, field.h);
    const double scale = std::max(std::abs(rep.analytic_slope),
                                  geometry::boundary_measure(mesh) * max_abs_boundary(mesh, field.h));
    rep.mismatch = scale > 0.0 ? std::abs(rep.fd_slope - rep.analytic_slope) / scale : 0.0;
    return rep;
}

double swept_area(const TriMesh& before, const TriMesh& after, int component) {
    if (component < 0 || component >= static_cast<int>(before.components().size()))
        throw Error(ErrorCode::ComponentNotFound, "no boundary component " + std::to_string(component));
    double area = 0.0;
    for (int e : before.components()[component]) {
        const auto& be = before.boundary_edges()[e];
        const Vec2 a0 = before.vertices()[be.a];
        const Vec2 b0 = a0 + before.displacement(be.a, be.b);
        const Vec2 a1 = a0 + wrapped_difference(before, after.vertices()[be.a] - before.vertices()[be.a]);
        const Vec2 b1 = b0 + wrapped_difference(before, after.vertices()[be.b] - before.vertices()[be.b]);
        // Quad a0 -> b0 -> b1 -> a1 runs clockwise when the edge moves to its right (outward).
        area -= 0.5 * (cross(a0, b0) + cross(b0, b1) + cross(b1, a1) + cross(a1, a0));
    }
    return area;
}

}  // namespace shapelab::shapecalc
