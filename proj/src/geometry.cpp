#include "shapelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace shapelab::geometry {

namespace {

constexpr int kValidationSamples = 4096;
constexpr double kMinAngleDegrees = 20.0;

double series_value(double c0, const std::vector<double>& a, const std::vector<double>& b,
                    double arg) {
    double v = c0;
    for (std::size_t m = 0; m < a.size(); ++m) v += a[m] * std::cos(static_cast<double>(m + 1) * arg);
    for (std::size_t m = 0; m < b.size(); ++m) v += b[m] * std::sin(static_cast<double>(m + 1) * arg);
    return v;
}

double series_derivative(const std::vector<double>& a, const std::vector<double>& b, double arg) {
    double v = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        const double k = static_cast<double>(m + 1);
        v -= k * a[m] * std::sin(k * arg);
    }
    for (std::size_t m = 0; m < b.size(); ++m) {
        const double k = static_cast<double>(m + 1);
        v += k * b[m] * std::cos(k * arg);
    }
    return v;
}

double sum_squares(const std::vector<double>& v) {
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

double triangle_min_angle(const std::array<Vec2, 3>& p) {
    double best = 180.0;
    for (int i = 0; i < 3; ++i) {
        const Vec2 u = p[(i + 1) % 3] - p[i];
        const Vec2 w = p[(i + 2) % 3] - p[i];
        const double ang = std::atan2(std::abs(cross(u, w)), dot(u, w)) * 180.0 / kPi;
        best = std::min(best, ang);
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// FourierSeries

int FourierSeries::max_mode() const {
    return static_cast<int>(std::max(cos_coeffs.size(), sin_coeffs.size()));
}

double FourierSeries::value(double s) const {
    return series_value(c0, cos_coeffs, sin_coeffs, 2.0 * kPi * s / period);
}

double FourierSeries::derivative(double s) const {
    const double w = 2.0 * kPi / period;
    return w * series_derivative(cos_coeffs, sin_coeffs, w * s);
}

// ---------------------------------------------------------------------------
// PlanarDomainSpec

PlanarDomainSpec PlanarDomainSpec::disk(double radius) {
    PlanarDomainSpec s;
    s.rho0 = radius;
    return s;
}

PlanarDomainSpec PlanarDomainSpec::ellipse(double a, double b, int modes) {
    constexpr int n = 4096;
    std::vector<double> rho(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * kPi * i / n;
        const double c = std::cos(th), s = std::sin(th);
        rho[i] = a * b / std::sqrt(b * b * c * c + a * a * s * s);
        mean += rho[i];
    }
    mean /= n;
    PlanarDomainSpec spec;
    spec.rho0 = mean;
    spec.cos_coeffs.assign(modes, 0.0);
    spec.sin_coeffs.assign(modes, 0.0);
    for (int m = 1; m <= modes; ++m) {
        double ac = 0.0, as = 0.0;
        for (int i = 0; i < n; ++i) {
            const double th = 2.0 * kPi * i / n;
            ac += rho[i] * std::cos(m * th);
            as += rho[i] * std::sin(m * th);
        }
        spec.cos_coeffs[m - 1] = 2.0 * ac / n / mean;
        spec.sin_coeffs[m - 1] = 2.0 * as / n / mean;
    }
    return spec;
}

int PlanarDomainSpec::max_mode() const {
    return static_cast<int>(std::max(cos_coeffs.size(), sin_coeffs.size()));
}

double PlanarDomainSpec::relative_radius(double theta) const {
    return series_value(1.0, cos_coeffs, sin_coeffs, theta);
}

double PlanarDomainSpec::radius(double theta) const { return rho0 * relative_radius(theta); }

double PlanarDomainSpec::radius_derivative(double theta) const {
    return rho0 * series_derivative(cos_coeffs, sin_coeffs, theta);
}

Vec2 PlanarDomainSpec::boundary_point(double theta) const {
    const double r = radius(theta);
    return center + Vec2{r * std::cos(theta), r * std::sin(theta)};
}

double PlanarDomainSpec::area() const {
    return kPi * rho0 * rho0 * (1.0 + 0.5 * (sum_squares(cos_coeffs) + sum_squares(sin_coeffs)));
}

double PlanarDomainSpec::min_radius() const {
    double best = radius(0.0);
    for (int i = 1; i < kValidationSamples; ++i)
        best = std::min(best, radius(2.0 * kPi * i / kValidationSamples));
    return best;
}

void PlanarDomainSpec::validate() const {
    if (!(rho0 > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "rho0 must be positive");
    const double rmin = min_radius();
    if (!(rmin > 0.0))
        throw Error(ErrorCode::NonPositiveRadius,
                    "boundary radius reaches " + std::to_string(rmin));
}

// ---------------------------------------------------------------------------
// CylinderDomainSpec

CylinderDomainSpec CylinderDomainSpec::straight_cylinder(double r, double circumference) {
    CylinderDomainSpec s;
    s.circumference = circumference;
    s.g_minus.c0 = -r;
    s.g_plus.c0 = r;
    s.g_minus.period = circumference;
    s.g_plus.period = circumference;
    s.straight = true;
    return s;
}

double CylinderDomainSpec::area() const { return circumference * (g_plus.c0 - g_minus.c0); }

double CylinderDomainSpec::min_height() const {
    double best = g_plus.value(0.0) - g_minus.value(0.0);
    for (int i = 1; i < kValidationSamples; ++i) {
        const double x = circumference * i / kValidationSamples;
        best = std::min(best, g_plus.value(x) - g_minus.value(x));
    }
    return best;
}

double CylinderDomainSpec::max_height() const {
    double best = g_plus.value(0.0) - g_minus.value(0.0);
    for (int i = 1; i < kValidationSamples; ++i) {
        const double x = circumference * i / kValidationSamples;
        best = std::max(best, g_plus.value(x) - g_minus.value(x));
    }
    return best;
}

void CylinderDomainSpec::validate() const {
    if (!(circumference > 0.0))
        throw Error(ErrorCode::InvalidArgument, "circumference must be positive");
    if (std::abs(g_minus.period - circumference) > 1e-12 * circumference ||
        std::abs(g_plus.period - circumference) > 1e-12 * circumference)
        throw Error(ErrorCode::InvalidArgument, "height series must have period L");
    const double hmin = min_height();
    if (!(hmin > 0.0))
        throw Error(ErrorCode::DegenerateStrip, "g_plus - g_minus reaches " + std::to_string(hmin));
}

// ---------------------------------------------------------------------------
// TriMesh

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                 double period)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), period_(period) {
    for (const auto& t : triangles_)
        for (int v : t)
            if (v < 0 || v >= num_vertices())
                throw Error(ErrorCode::InvalidArgument, "triangle references missing vertex");
    build_boundary();
}

Vec2 TriMesh::displacement(int a, int b) const {
    Vec2 d = vertices_[b] - vertices_[a];
    if (period_ > 0.0) d.y -= period_ * std::round(d.y / period_);
    return d;
}

Vec2 TriMesh::wrap(Vec2 p) const {
    if (period_ > 0.0) {
        p.y = std::fmod(p.y, period_);
        if (p.y < 0.0) p.y += period_;
        if (p.y >= period_) p.y -= period_;
    }
    return p;
}

std::array<Vec2, 3> TriMesh::triangle_coords(int t) const {
    const auto& tri = triangles_[t];
    const Vec2 p0 = vertices_[tri[0]];
    return {p0, p0 + displacement(tri[0], tri[1]), p0 + displacement(tri[0], tri[2])};
}

double TriMesh::triangle_area(int t) const {
    const auto p = triangle_coords(t);
    return 0.5 * cross(p[1] - p[0], p[2] - p[0]);
}

double TriMesh::scale() const {
    if (vertices_.empty()) return 0.0;
    Vec2 lo = vertices_.front(), hi = vertices_.front();
    for (const auto& p : vertices_) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    return norm(hi - lo);
}

double TriMesh::min_angle_degrees() const {
    double best = 180.0;
    for (int t = 0; t < num_triangles(); ++t) best = std::min(best, triangle_min_angle(triangle_coords(t)));
    return best;
}

double TriMesh::max_edge_length() const {
    double best = 0.0;
    for (const auto& tri : triangles_)
        for (int i = 0; i < 3; ++i) best = std::max(best, norm(displacement(tri[i], tri[(i + 1) % 3])));
    return best;
}

TriMesh TriMesh::with_vertices(std::vector<Vec2> vertices) const {
    if (vertices.size() != vertices_.size())
        throw Error(ErrorCode::InvalidArgument, "vertex count mismatch");
    TriMesh out = *this;
    out.vertices_ = std::move(vertices);
    for (auto& p : out.vertices_) p = out.wrap(p);
    for (auto& e : out.boundary_edges_) {
        const Vec2 d = out.displacement(e.a, e.b);
        e.length = norm(d);
        e.normal = Vec2{d.y, -d.x} / e.length;
    }
    return out;
}

void TriMesh::build_boundary() {
    // Undirected edge -> (count, directed occurrence).
    struct Use {
        int count = 0;
        int a = -1, b = -1, tri = -1;
    };
    std::map<std::pair<int, int>, Use> edges;
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangles_[t];
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i], b = tri[(i + 1) % 3];
            auto& u = edges[{std::min(a, b), std::max(a, b)}];
            ++u.count;
            u.a = a;
            u.b = b;
            u.tri = t;
        }
    }
    std::vector<BoundaryEdge> raw;
    for (const auto& [key, u] : edges) {
        if (u.count > 2) throw Error(ErrorCode::InvalidArgument, "non-manifold edge");
        if (u.count == 1) {
            BoundaryEdge e;
            e.a = u.a;
            e.b = u.b;
            e.triangle = u.tri;
            raw.push_back(e);
        }
    }

    // Chain into loops; each vertex has exactly one outgoing boundary edge.
    std::map<int, int> outgoing;
    for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
        if (!outgoing.emplace(raw[i].a, i).second)
            throw Error(ErrorCode::InvalidArgument, "boundary vertex with two outgoing edges");
    }
    std::vector<char> used(raw.size(), 0);
    std::vector<std::vector<int>> loops;
    for (int start = 0; start < static_cast<int>(raw.size()); ++start) {
        if (used[start]) continue;
        std::vector<int> loop;
        int cur = start;
        while (!used[cur]) {
            used[cur] = 1;
            loop.push_back(cur);
            auto it = outgoing.find(raw[cur].b);
            if (it == outgoing.end())
                throw Error(ErrorCode::InvalidArgument, "open boundary chain");
            cur = it->second;
        }
        if (cur != start) throw Error(ErrorCode::InvalidArgument, "boundary chain does not close");
        loops.push_back(std::move(loop));
    }

    // Deterministic component order: by mean first coordinate (bottom strip
    // boundary before top on cylinders), loops start at their smallest vertex.
    auto mean_first = [&](const std::vector<int>& loop) {
        double s = 0.0;
        for (int e : loop) s += vertices_[raw[e].a].x;
        return s / static_cast<double>(loop.size());
    };
    std::stable_sort(loops.begin(), loops.end(), [&](const auto& l, const auto& r) {
        return mean_first(l) < mean_first(r);
    });

    boundary_edges_.clear();
    components_.clear();
    for (std::size_t c = 0; c < loops.size(); ++c) {
        auto& loop = loops[c];
        auto first = std::min_element(loop.begin(), loop.end(),
                                      [&](int l, int r) { return raw[l].a < raw[r].a; });
        std::rotate(loop.begin(), first, loop.end());
        std::vector<int> ids;
        for (int e : loop) {
            BoundaryEdge be = raw[e];
            be.component = static_cast<int>(c);
            const Vec2 d = displacement(be.a, be.b);
            be.length = norm(d);
            be.normal = Vec2{d.y, -d.x} / be.length;
            ids.push_back(static_cast<int>(boundary_edges_.size()));
            boundary_edges_.push_back(be);
        }
        components_.push_back(std::move(ids));
    }

    boundary_flag_.assign(vertices_.size(), 0);
    boundary_vertices_.clear();
    for (const auto& e : boundary_edges_) boundary_flag_[e.a] = 1;
    for (int v = 0; v < num_vertices(); ++v)
        if (boundary_flag_[v]) boundary_vertices_.push_back(v);
}

// ---------------------------------------------------------------------------
// Builders

int planar_ring_count(const PlanarDomainSpec& spec, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "h must be positive");
    return std::max(2, static_cast<int>(std::ceil(spec.rho0 / h - 1e-9)));
}

TriMesh build_planar_mesh(const PlanarDomainSpec& spec, double h) {
    spec.validate();
    if (h > spec.min_radius() / 4.0 + 1e-15)
        throw Error(ErrorCode::InvalidArgument, "h must not exceed rho_min / 4");
    return build_planar_mesh_rings(spec, planar_ring_count(spec, h));
}

TriMesh build_planar_mesh_rings(const PlanarDomainSpec& spec, int rings) {
    spec.validate();
    if (rings < 1) throw Error(ErrorCode::InvalidArgument, "ring count must be positive");

    // Ring i (1..n) carries 6 i vertices at angles 2 pi k / (6 i).
    auto ring_start = [](int i) { return i == 0 ? 0 : 1 + 3 * i * (i - 1); };
    const int nv = 1 + 3 * rings * (rings + 1);
    std::vector<Vec2> verts(nv);
    verts[0] = spec.center;
    for (int i = 1; i <= rings; ++i) {
        const double r = static_cast<double>(i) / rings;
        const int count = 6 * i;
        for (int k = 0; k < count; ++k) {
            const double th = 2.0 * kPi * k / count;
            const double rho = spec.radius(th);
            verts[ring_start(i) + k] = spec.center + Vec2{r * rho * std::cos(th), r * rho * std::sin(th)};
        }
    }

    std::vector<std::array<int, 3>> tris;
    tris.reserve(6 * rings * rings);
    for (int s = 0; s < 6; ++s) tris.push_back({ring_start(1) + s, ring_start(1) + (s + 1) % 6, 0});
    for (int i = 2; i <= rings; ++i) {
        const int inner_n = 6 * (i - 1), outer_n = 6 * i;
        auto inner = [&](int s, int j) { return ring_start(i - 1) + (s * (i - 1) + j) % inner_n; };
        auto outer = [&](int s, int j) { return ring_start(i) + (s * i + j) % outer_n; };
        for (int s = 0; s < 6; ++s) {
            for (int j = 0; j < i; ++j) tris.push_back({outer(s, j), outer(s, j + 1), inner(s, j)});
            for (int j = 0; j + 1 < i; ++j) tris.push_back({inner(s, j), outer(s, j + 1), inner(s, j + 1)});
        }
    }

    TriMesh mesh(std::move(verts), std::move(tris));
    check_triangles(mesh);
    const double angle = mesh.min_angle_degrees();
    if (angle < kMinAngleDegrees)
        throw Error(ErrorCode::MeshQualityFailure,
                    "minimum angle " + std::to_string(angle) + " deg below 20 deg");
    return mesh;
}

CylinderResolution cylinder_resolution(const CylinderDomainSpec& spec, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "h must be positive");
    if (h > spec.circumference / 16.0 * (1.0 + 1e-12))
        throw Error(ErrorCode::InvalidArgument, "h must not exceed L / 16");
    CylinderResolution res;
    res.nx = static_cast<int>(std::ceil(spec.circumference / h - 1e-9));
    res.nx += res.nx % 2;
    res.ny = std::max(2, static_cast<int>(std::ceil((spec.g_plus.c0 - spec.g_minus.c0) / h - 1e-9)));
    return res;
}

TriMesh build_cylinder_mesh(const CylinderDomainSpec& spec, double h) {
    spec.validate();
    return build_cylinder_mesh_grid(spec, cylinder_resolution(spec, h));
}

TriMesh build_cylinder_mesh_grid(const CylinderDomainSpec& spec, CylinderResolution res) {
    spec.validate();
    const int nx = res.nx, ny = res.ny;
    if (nx < 3 || ny < 1) throw Error(ErrorCode::InvalidArgument, "cylinder grid too coarse");
    std::vector<Vec2> verts;
    verts.reserve(static_cast<std::size_t>(nx) * (ny + 1));
    for (int j = 0; j < nx; ++j) {
        const double x = spec.circumference * j / nx;
        const double lo = spec.g_minus.value(x), hi = spec.g_plus.value(x);
        for (int k = 0; k <= ny; ++k) {
            const double s = static_cast<double>(k) / ny;
            // Endpoints exactly on the boundary graphs.
            const double t = k == 0 ? lo : (k == ny ? hi : lo + s * (hi - lo));
            verts.push_back({t, x});
        }
    }
    auto id = [&](int j, int k) { return (j % nx) * (ny + 1) + k; };
    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < nx; ++j) {
        for (int k = 0; k < ny; ++k) {
            const int v00 = id(j, k), v01 = id(j, k + 1), v10 = id(j + 1, k), v11 = id(j + 1, k + 1);
            tris.push_back({v00, v01, v10});
            tris.push_back({v01, v11, v10});
        }
    }
    TriMesh mesh(std::move(verts), std::move(tris), spec.circumference);
    check_triangles(mesh);
    return mesh;
}

TriMesh build_rectangle_mesh(double width, double height, double h, Vec2 origin) {
    if (!(width > 0.0 && height > 0.0 && h > 0.0))
        throw Error(ErrorCode::InvalidArgument, "rectangle dimensions and h must be positive");
    auto even_cells = [&](double len) {
        const int n = std::max(2, static_cast<int>(std::ceil(len / h - 1e-9)));
        return n + n % 2;
    };
    const int nx = even_cells(width);
    const int ny = even_cells(height);
    std::vector<Vec2> verts;
    verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int k = 0; k <= ny; ++k)
        for (int j = 0; j <= nx; ++j)
            verts.push_back(origin + Vec2{width * j / nx, height * k / ny});
    auto id = [&](int j, int k) { return k * (nx + 1) + j; };
    std::vector<std::array<int, 3>> tris;
    for (int k = 0; k < ny; ++k) {
        for (int j = 0; j < nx; ++j) {
            if ((j + k) % 2 == 0) {
                tris.push_back({id(j, k), id(j + 1, k), id(j + 1, k + 1)});
                tris.push_back({id(j, k), id(j + 1, k + 1), id(j, k + 1)});
            } else {
                tris.push_back({id(j, k), id(j + 1, k), id(j, k + 1)});
                tris.push_back({id(j + 1, k), id(j + 1, k + 1), id(j, k + 1)});
            }
        }
    }
    return TriMesh(std::move(verts), std::move(tris));
}

double mesh_volume(const TriMesh& mesh) {
    double area = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) area += mesh.triangle_area(t);
    return area;
}

double boundary_measure(const TriMesh& mesh, std::optional<int> component) {
    const auto& edges = mesh.boundary_edges();
    if (!component) {
        double len = 0.0;
        for (const auto& e : edges) len += e.length;
        return len;
    }
    if (*component < 0 || *component >= static_cast<int>(mesh.components().size()))
        throw Error(ErrorCode::ComponentNotFound, "no boundary component " + std::to_string(*component));
    double len = 0.0;
    for (int e : mesh.components()[*component]) len += edges[e].length;
    return len;
}

void check_triangles(const TriMesh& mesh) {
    const double s = mesh.scale();
    const double tol = 1e-14 * s * s;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        if (!(mesh.triangle_area(t) > tol))
            throw Error(ErrorCode::SingularTriangle, "triangle " + std::to_string(t) + " is degenerate");
}

}  // namespace shapelab::geometry
