#include "shapelab/assembly.hpp"

#include <iomanip>
#include <ostream>

namespace shapelab::assembly {

using geometry::TriMesh;

namespace {

// Gradients of the barycentric coordinates of a positively oriented triangle.
std::array<Vec2, 3> barycentric_gradients(const std::array<Vec2, 3>& p, double& area) {
    area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2 e = p[(i + 2) % 3] - p[(i + 1) % 3];
        g[i] = Vec2{-e.y, e.x} / (2.0 * area);
    }
    return g;
}

void require_nondegenerate(double scale, int t, double area) {
    if (!(area > 1e-14 * scale * scale))
        throw Error(ErrorCode::SingularTriangle, "triangle " + std::to_string(t) + " is degenerate");
}

SparseSymMatrix from_element_matrices(const TriMesh& mesh,
                                      const std::function<Eigen::Matrix3d(int)>& element) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * static_cast<std::size_t>(mesh.num_triangles()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix3d ke = element(t);
        const auto& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], ke(i, j));
    }
    // setFromTriplets sums duplicates in insertion order, so (i, j) and (j, i)
    // accumulate identical element contributions in the same order.
    SparseSymMatrix out;
    out.matrix.resize(mesh.num_vertices(), mesh.num_vertices());
    out.matrix.setFromTriplets(trips.begin(), trips.end());
    out.matrix.makeCompressed();
    return out;
}

}  // namespace

double BoundaryTrace::edge_value(const TriMesh& mesh, int e) const {
    if (kind == Kind::PerEdge) return values.at(e);
    const auto& be = mesh.boundary_edges()[e];
    return 0.5 * (values.at(be.a) + values.at(be.b));
}

BoundaryTrace BoundaryTrace::sample_vertices(const TriMesh& mesh, const std::function<double(Vec2)>& f) {
    std::vector<double> v(mesh.num_vertices(), 0.0);
    for (int b : mesh.boundary_vertices()) v[b] = f(mesh.vertices()[b]);
    return per_vertex(std::move(v));
}

BoundaryTrace BoundaryTrace::sample_midpoints(const TriMesh& mesh, const std::function<double(Vec2)>& f) {
    std::vector<double> v;
    v.reserve(mesh.boundary_edges().size());
    for (const auto& e : mesh.boundary_edges()) {
        const Vec2 pa = mesh.vertices()[e.a];
        v.push_back(f(pa + 0.5 * mesh.displacement(e.a, e.b)));
    }
    return per_edge(std::move(v));
}

Eigen::Matrix3d element_stiffness(const std::array<Vec2, 3>& p) {
    double area = 0.0;
    const auto g = barycentric_gradients(p, area);
    Eigen::Matrix3d k;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k(i, j) = area * dot(g[i], g[j]);
    return k;
}

Eigen::Matrix3d element_mass(const std::array<Vec2, 3>& p) {
    const double area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    Eigen::Matrix3d m;
    m.setConstant(area / 12.0);
    m.diagonal().setConstant(area / 6.0);
    return m;
}

SparseSymMatrix assemble_stiffness(const TriMesh& mesh) {
    const double scale = mesh.scale();
    return from_element_matrices(mesh, [&](int t) {
        const auto p = mesh.triangle_coords(t);
        require_nondegenerate(scale, t, 0.5 * cross(p[1] - p[0], p[2] - p[0]));
        return element_stiffness(p);
    });
}

SparseSymMatrix assemble_mass(const TriMesh& mesh, bool lumped) {
    const double scale = mesh.scale();
    return from_element_matrices(mesh, [&](int t) {
        const auto p = mesh.triangle_coords(t);
        const double area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
        require_nondegenerate(scale, t, area);
        if (!lumped) return element_mass(p);
        Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
        m.diagonal().setConstant(area / 3.0);
        return m;
    });
}

double boundary_integrate(const TriMesh& mesh, const BoundaryTrace& trace, std::optional<int> component) {
    const auto& edges = mesh.boundary_edges();
    const std::size_t expected =
        trace.kind == BoundaryTrace::Kind::PerEdge ? edges.size() : static_cast<std::size_t>(mesh.num_vertices());
    if (trace.values.size() != expected)
        throw Error(ErrorCode::InvalidArgument, "boundary trace does not match mesh");
    double sum = 0.0;
    if (!component) {
        for (int e = 0; e < static_cast<int>(edges.size()); ++e) sum += trace.edge_value(mesh, e) * edges[e].length;
        return sum;
    }
    if (*component < 0 || *component >= static_cast<int>(mesh.components().size()))
        throw Error(ErrorCode::ComponentNotFound, "no boundary component " + std::to_string(*component));
    for (int e : mesh.components()[*component]) sum += trace.edge_value(mesh, e) * edges[e].length;
    return sum;
}

Vector interpolate(const TriMesh& mesh, const std::function<double(Vec2)>& f) {
    Vector u(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = f(mesh.vertices()[v]);
    return u;
}

std::vector<Vec2> triangle_gradients(const TriMesh& mesh, const Vector& u) {
    std::vector<Vec2> out(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        double area = 0.0;
        const auto g = barycentric_gradients(mesh.triangle_coords(t), area);
        const auto& tri = mesh.triangles()[t];
        out[t] = g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]];
    }
    return out;
}

std::vector<Vec2> boundary_gradients(const TriMesh& mesh, const Vector& u, BoundaryGradient mode) {
    const auto tg = triangle_gradients(mesh, u);
    const auto& edges = mesh.boundary_edges();
    std::vector<Vec2> out(edges.size());
    if (mode == BoundaryGradient::AdjacentTriangle) {
        for (std::size_t e = 0; e < edges.size(); ++e) out[e] = tg[edges[e].triangle];
        return out;
    }
    std::vector<Vec2> vg(mesh.num_vertices());
    std::vector<double> w(mesh.num_vertices(), 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double a = mesh.triangle_area(t);
        for (int v : mesh.triangles()[t]) {
            vg[v] += tg[t] * a;
            w[v] += a;
        }
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int a = edges[e].a, b = edges[e].b;
        out[e] = 0.5 * (vg[a] / w[a] + vg[b] / w[b]);
    }
    return out;
}

std::vector<double> boundary_midpoint_values(const TriMesh& mesh, const Vector& u) {
    const auto& edges = mesh.boundary_edges();
    std::vector<double> out(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) out[e] = 0.5 * (u[edges[e].a] + u[edges[e].b]);
    return out;
}

void write_matrix_market(std::ostream& os, const SparseSymMatrix& m) {
    const SparseMatrix& a = m.matrix;
    std::size_t nnz = 0;
    for (int c = 0; c < a.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(a, c); it; ++it)
            if (it.row() >= it.col()) ++nnz;
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
    os << std::setprecision(17);
    for (int c = 0; c < a.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(a, c); it; ++it)
            if (it.row() >= it.col()) os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace shapelab::assembly
