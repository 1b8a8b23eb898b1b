#include "shapelab/io.hpp"

#include <fstream>

namespace shapelab::io {

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <class T>
json optional_number(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
    return rows;
}

json mesh_to_json(const geometry::TriMesh& mesh) {
    json verts = json::array(), tris = json::array(), boundary = json::array();
    for (const auto& p : mesh.vertices()) verts.push_back(vec(p));
    for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
    for (std::size_t c = 0; c < mesh.components().size(); ++c) {
        json edges = json::array();
        for (int e : mesh.components()[c]) edges.push_back({mesh.boundary_edges()[e].a, mesh.boundary_edges()[e].b});
        boundary.push_back({{"component", c}, {"edges", edges}});
    }
    return {{"vertices", verts},
            {"triangles", tris},
            {"period", mesh.period()},
            {"boundary", boundary},
            {"periodic_map", json::array()}};
}

geometry::TriMesh mesh_from_json(const json& j) {
    try {
        std::vector<Vec2> verts;
        std::vector<std::array<int, 3>> tris;
        for (const auto& p : j.at("vertices")) verts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        for (const auto& t : j.at("triangles")) tris.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        const double period = j.value("period", 0.0);
        return geometry::TriMesh(std::move(verts), std::move(tris), period);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("malformed mesh JSON: ") + e.what());
    }
}

json eigen_to_json(const eigensolve::EigenCluster& c) {
    return {{"mu", c.mu2},
            {"multiplicity", c.multiplicity},
            {"eigenvalues", c.eigenvalues},
            {"residuals", c.residual_norms},
            {"gap", c.cluster_gap},
            {"next_eigenvalue", c.next_eigenvalue}};
}

json shape_derivative_to_json(const shapecalc::ShapeDerivativeReport& r) {
    return {{"A", matrix_to_json(r.A)},
            {"one_sided_derivative", r.one_sided_derivative},
            {"reverse_derivative", r.reverse_derivative},
            {"minimizing_direction", vector_to_json(r.minimizing_direction)},
            {"fd_estimate", optional_number(r.fd_estimate)},
            {"fd_error", optional_number(r.fd_error)}};
}

json fd_to_json(const shapecalc::FdResult& r) {
    return {{"slope", r.slope},
            {"error_estimate", r.error_estimate},
            {"mu2_base", r.mu2_base},
            {"eps", r.eps},
            {"mu2", r.mu2},
            {"quotients", r.quotients}};
}

json strong_to_json(const criticality::StrongReport& r) {
    return {{"direction", vector_to_json(r.direction)},
            {"normalization", r.normalization},
            {"lambda", r.lambda_fit},
            {"deviation_l2", r.deviation_l2},
            {"deviation_sup", r.deviation_sup},
            {"relative_deviation", r.relative_deviation},
            {"raw_deviation_l2", r.raw_deviation_l2},
            {"raw_lambda", r.raw_lambda},
            {"u2_mean", r.u2_mean},
            {"u2_deviation", r.u2_deviation},
            {"u2_expected", r.u2_expected},
            {"q", r.q}};
}

json criticality_to_json(const criticality::CriticalityReport& r) {
    json q = json::array();
    for (const auto& m : r.q_matrix_trace) q.push_back(matrix_to_json(m));
    return {{"weak_combination", matrix_to_json(r.weak_combination)},
            {"weak_residual", r.weak_residual},
            {"lambda", r.lambda_fit},
            {"raw_residual", r.raw_residual},
            {"raw_lambda", r.raw_lambda},
            {"caratheodory_rank", r.caratheodory_rank},
            {"caratheodory_bound", r.caratheodory_bound},
            {"iterations", r.iterations},
            {"q_matrix_trace", q}};
}

json expansion_to_json(const shapecalc::VolumeExpansionReport& r) {
    return {{"fd_slope", r.fd_slope}, {"analytic_slope", r.analytic_slope}, {"mismatch", r.mismatch}, {"eps", r.eps}};
}

json weinberger_to_json(const reference::WeinbergerReport& r) {
    return {{"center", r.center},
            {"center_y2", r.center_y2},
            {"G_integral", r.G_integral},
            {"H_integral", r.H_integral},
            {"rayleigh_bound", r.rayleigh_bound},
            {"discrete_trial_quotient", r.discrete_trial_quotient},
            {"mu_r", r.mu_r},
            {"mu2", r.mu2},
            {"volume", r.volume},
            {"comparison_volume", r.comparison_volume},
            {"link_mu2_bound", r.link_mu2_bound},
            {"link_bound_mu_r", r.link_bound_mu_r},
            {"chain_ok", r.chain_ok},
            {"slack", r.slack}};
}

json ball_to_json(const reference::BallEigenData& b) {
    return {{"k", b.k}, {"mu2_ball", b.mu2_ball}, {"zero_location", b.zero_location}};
}

json cylinder_to_json(const reference::CylinderEigenData& c) {
    return {{"r", c.r},
            {"L", c.circumference},
            {"mu2", c.mu2},
            {"mu_r", c.mu_r},
            {"mu_n", c.mu_n},
            {"case", reference::to_string(c.kind)},
            {"v_c", c.critical_volume},
            {"volume", c.volume}};
}

json flow_record_to_json(const optimizer::FlowRecord& r) {
    return {{"step", r.step},
            {"mu2", r.mu2},
            {"multiplicity", r.multiplicity},
            {"volume", r.volume},
            {"volume_drift", r.volume_drift},
            {"weak_residual", r.weak_residual},
            {"step_size", r.step_size},
            {"predicted_slope", r.predicted_slope},
            {"spec_coeffs", r.spec_coeffs}};
}

void write_vtk(std::ostream& os, const geometry::TriMesh& mesh,
               const std::map<std::string, assembly::Vector>& point_scalars) {
    os.precision(17);
    os << "# vtk DataFile Version 3.0\nshapelab mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices()) os << p.x << ' ' << p.y << " 0\n";
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (int t = 0; t < mesh.num_triangles(); ++t) os << "5\n";
    if (point_scalars.empty()) return;
    os << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& [name, v] : point_scalars) {
        if (v.size() != mesh.num_vertices()) throw Error(ErrorCode::InvalidArgument, "field '" + name + "' has wrong size");
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
    }
}

void write_vtk_boundary(std::ostream& os, const geometry::TriMesh& mesh,
                        const std::map<std::string, std::vector<double>>& cell_scalars,
                        const std::map<std::string, std::vector<Vec2>>& point_vectors) {
    const auto& edges = mesh.boundary_edges();
    os.precision(17);
    os << "# vtk DataFile Version 3.0\nshapelab boundary\nASCII\nDATASET POLYDATA\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices()) os << p.x << ' ' << p.y << " 0\n";
    os << "LINES " << edges.size() << ' ' << 3 * edges.size() << '\n';
    for (const auto& e : edges) os << "2 " << e.a << ' ' << e.b << '\n';
    if (!cell_scalars.empty()) {
        os << "CELL_DATA " << edges.size() << '\n';
        for (const auto& [name, v] : cell_scalars) {
            if (v.size() != edges.size()) throw Error(ErrorCode::InvalidArgument, "field '" + name + "' has wrong size");
            os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double x : v) os << x << '\n';
        }
    }
    if (!point_vectors.empty()) {
        os << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& [name, v] : point_vectors) {
            if (static_cast<int>(v.size()) != mesh.num_vertices())
                throw Error(ErrorCode::InvalidArgument, "field '" + name + "' has wrong size");
            os << "VECTORS " << name << " double\n";
            for (const auto& d : v) os << d.x << ' ' << d.y << " 0\n";
        }
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Internal, "cannot write '" + path.string() + "'");
    return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

}  // namespace shapelab::io
