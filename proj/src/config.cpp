#include "shapelab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace shapelab::config {

using geometry::CylinderDomainSpec;
using geometry::PlanarDomainSpec;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigInvalid, "'" + path + "': " + what);
}

// Reads the members of one JSON object; every key must be consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) fail(path_, "expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
    [[nodiscard]] std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (!v->is_number()) fail(child(key), "expected a number");
            out = v->get<double>();
        }
    }
    void integer(const std::string& key, int& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_integer()) fail(child(key), "expected an integer");
            out = v->get<int>();
        }
    }
    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
                fail(child(key), "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void string(const std::string& key, std::string& out) {
        if (const json* v = get(key)) {
            if (!v->is_string()) fail(child(key), "expected a string");
            out = v->get<std::string>();
        }
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) fail(child(key), "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) fail(child(key) + "[" + std::to_string(i) + "]", "expected a number");
                out.push_back((*v)[i].get<double>());
            }
        }
    }
    void vec2(const std::string& key, Vec2& out) {
        std::vector<double> v{out.x, out.y};
        numbers(key, v);
        if (v.size() != 2) fail(child(key), "expected two numbers");
        out = {v[0], v[1]};
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(child(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json series_to_json(const geometry::FourierSeries& s) {
    return {{"c0", s.c0}, {"cos", s.cos_coeffs}, {"sin", s.sin_coeffs}};
}

geometry::FourierSeries series_from_json(const json& j, const std::string& path, double period) {
    Reader r(j, path);
    geometry::FourierSeries s;
    s.period = period;
    r.number("c0", s.c0);
    r.numbers("cos", s.cos_coeffs);
    r.numbers("sin", s.sin_coeffs);
    r.finish();
    return s;
}

void positive(double v, const std::string& path) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be positive and finite");
}

json field_to_json(const FieldConfig& f) {
    return {{"kind", f.kind},
            {"direction", {f.direction.x, f.direction.y}},
            {"c0", f.c0},
            {"cos", f.cos_coeffs},
            {"sin", f.sin_coeffs},
            {"component", f.component},
            {"volume", f.volume}};
}

FieldConfig field_from_json(const json& j, const std::string& path) {
    Reader r(j, path);
    FieldConfig f;
    r.string("kind", f.kind);
    r.vec2("direction", f.direction);
    r.number("c0", f.c0);
    r.numbers("cos", f.cos_coeffs);
    r.numbers("sin", f.sin_coeffs);
    r.integer("component", f.component);
    r.string("volume", f.volume);
    r.finish();
    return f;
}

Vec2 mesh_centroid(const geometry::TriMesh& mesh) {
    Vec2 c{};
    double area = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto p = mesh.triangle_coords(t);
        const double a = mesh.triangle_area(t);
        c += (a / 3.0) * (p[0] + p[1] + p[2]);
        area += a;
    }
    return c / area;
}

}  // namespace

json domain_to_json(const Domain& d) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PlanarDomainSpec>) {
                return {{"kind", "planar"},
                        {"rho0", s.rho0},
                        {"cos", s.cos_coeffs},
                        {"sin", s.sin_coeffs},
                        {"center", {s.center.x, s.center.y}}};
            } else if constexpr (std::is_same_v<T, CylinderDomainSpec>) {
                return {{"kind", "cylinder"},
                        {"circumference", s.circumference},
                        {"g_minus", series_to_json(s.g_minus)},
                        {"g_plus", series_to_json(s.g_plus)}};
            } else if constexpr (std::is_same_v<T, StraightCylinder>) {
                return {{"kind", "straight_cylinder"}, {"r", s.r}, {"L", s.L}};
            } else {
                return {{"kind", "rectangle"}, {"width", s.width}, {"height", s.height}};
            }
        },
        d);
}

Domain domain_from_json(const json& j, const std::string& path) {
    Reader r(j, path);
    std::string kind;
    r.string("kind", kind);
    Domain d;
    if (kind == "planar") {
        PlanarDomainSpec s;
        r.number("rho0", s.rho0);
        r.numbers("cos", s.cos_coeffs);
        r.numbers("sin", s.sin_coeffs);
        r.vec2("center", s.center);
        positive(s.rho0, r.child("rho0"));
        d = s;
    } else if (kind == "cylinder") {
        CylinderDomainSpec s;
        r.number("circumference", s.circumference);
        positive(s.circumference, r.child("circumference"));
        if (const json* g = r.get("g_minus")) s.g_minus = series_from_json(*g, r.child("g_minus"), s.circumference);
        else fail(r.child("g_minus"), "missing");
        if (const json* g = r.get("g_plus")) s.g_plus = series_from_json(*g, r.child("g_plus"), s.circumference);
        else fail(r.child("g_plus"), "missing");
        d = s;
    } else if (kind == "straight_cylinder") {
        StraightCylinder s;
        r.number("r", s.r);
        r.number("L", s.L);
        positive(s.r, r.child("r"));
        positive(s.L, r.child("L"));
        d = s;
    } else if (kind == "rectangle") {
        Rectangle s;
        r.number("width", s.width);
        r.number("height", s.height);
        positive(s.width, r.child("width"));
        positive(s.height, r.child("height"));
        d = s;
    } else {
        fail(r.child("kind"), "unknown domain kind '" + kind + "' (planar | cylinder | straight_cylinder | rectangle)");
    }
    r.finish();
    return d;
}

json spec_to_json(const optimizer::DomainSpec& s) {
    return std::visit([](const auto& v) { return domain_to_json(Domain{v}); }, s);
}

std::string domain_kind(const Domain& d) { return domain_to_json(d)["kind"].get<std::string>(); }

optimizer::DomainSpec to_flow_spec(const Domain& d) {
    if (const auto* p = std::get_if<PlanarDomainSpec>(&d)) return *p;
    if (const auto* c = std::get_if<CylinderDomainSpec>(&d)) return *c;
    if (const auto* s = std::get_if<StraightCylinder>(&d)) return CylinderDomainSpec::straight_cylinder(s->r, s->L);
    throw Error(ErrorCode::InvalidArgument, "rectangles have no shape parametrization");
}

geometry::TriMesh build_mesh(const Domain& d, double h) {
    if (const auto* p = std::get_if<PlanarDomainSpec>(&d)) return geometry::build_planar_mesh(*p, h);
    if (const auto* c = std::get_if<CylinderDomainSpec>(&d)) return geometry::build_cylinder_mesh(*c, h);
    if (const auto* s = std::get_if<StraightCylinder>(&d))
        return geometry::build_cylinder_mesh(CylinderDomainSpec::straight_cylinder(s->r, s->L), h);
    const auto& r = std::get<Rectangle>(d);
    return geometry::build_rectangle_mesh(r.width, r.height, h);
}

json to_json(const ExperimentConfig& c) {
    const auto& s = c.cluster.solver;
    const auto& f = c.flow;
    return {
        {"version", c.version},
        {"domain", domain_to_json(c.domain)},
        {"h", c.h},
        {"solver",
         {{"tol", s.tol},
          {"shift", s.shift},
          {"max_restarts", s.max_restarts},
          {"block_size", s.block_size},
          {"max_subspace", s.max_subspace},
          {"cluster_rtol", c.cluster.cluster_rtol},
          {"count", c.cluster.count}}},
        {"flow",
         {{"budget", f.budget},
          {"modes", f.modes},
          {"initial_step", f.initial_step},
          {"max_step", f.max_step},
          {"min_step", f.min_step},
          {"armijo", f.armijo},
          {"tol_crit", f.tol_crit},
          {"zero_gradient_tol", f.zero_gradient_tol},
          {"target_volume", c.target_volume}}},
        {"field", field_to_json(c.field)},
        {"eps", c.eps},
        {"verify",
         {{"fd_rtol", c.verify.fd_rtol},
          {"fd_atol_scale", c.verify.fd_atol_scale},
          {"critical_rtol", c.verify.critical_rtol},
          {"weinberger_slack", c.verify.weinberger_slack},
          {"expansion_rtol", c.verify.expansion_rtol},
          {"expansion_eps", c.verify.expansion_eps},
          {"target_volume", c.verify.target_volume}}},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
    };
}

ExperimentConfig from_json(const json& j) {
    Reader r(j, "");
    ExperimentConfig c;
    if (!r.has("version")) fail("version", "missing");
    r.integer("version", c.version);
    if (c.version != kConfigVersion)
        fail("version", "unsupported version " + std::to_string(c.version) + " (expected " +
                            std::to_string(kConfigVersion) + ")");
    if (const json* d = r.get("domain")) c.domain = domain_from_json(*d, "domain");
    r.number("h", c.h);
    if (const json* v = r.get("solver")) {
        Reader s(*v, "solver");
        s.number("tol", c.cluster.solver.tol);
        s.number("shift", c.cluster.solver.shift);
        s.integer("max_restarts", c.cluster.solver.max_restarts);
        s.integer("block_size", c.cluster.solver.block_size);
        s.integer("max_subspace", c.cluster.solver.max_subspace);
        s.number("cluster_rtol", c.cluster.cluster_rtol);
        s.integer("count", c.cluster.count);
        s.finish();
    }
    if (const json* v = r.get("flow")) {
        Reader s(*v, "flow");
        s.integer("budget", c.flow.budget);
        s.integer("modes", c.flow.modes);
        s.number("initial_step", c.flow.initial_step);
        s.number("max_step", c.flow.max_step);
        s.number("min_step", c.flow.min_step);
        s.number("armijo", c.flow.armijo);
        s.number("tol_crit", c.flow.tol_crit);
        s.number("zero_gradient_tol", c.flow.zero_gradient_tol);
        s.number("target_volume", c.target_volume);
        s.finish();
    }
    if (const json* v = r.get("field")) c.field = field_from_json(*v, "field");
    r.numbers("eps", c.eps);
    if (const json* v = r.get("verify")) {
        Reader s(*v, "verify");
        s.number("fd_rtol", c.verify.fd_rtol);
        s.number("fd_atol_scale", c.verify.fd_atol_scale);
        s.number("critical_rtol", c.verify.critical_rtol);
        s.number("weinberger_slack", c.verify.weinberger_slack);
        s.number("expansion_rtol", c.verify.expansion_rtol);
        s.number("expansion_eps", c.verify.expansion_eps);
        s.number("target_volume", c.verify.target_volume);
        s.finish();
    }
    r.string("output_dir", c.output_dir);
    r.unsigned64("seed", c.seed);
    r.finish();
    validate(c);
    return c;
}

void validate(const ExperimentConfig& c) {
    if (!(c.h >= 1e-3 && c.h <= 1.0)) fail("h", "must lie in [1e-3, 1]");
    positive(c.cluster.solver.tol, "solver.tol");
    positive(c.cluster.cluster_rtol, "solver.cluster_rtol");
    if (c.cluster.count < 1) fail("solver.count", "must be at least 1");
    if (c.flow.budget < 0) fail("flow.budget", "must be non-negative");
    if (c.flow.modes < 1) fail("flow.modes", "must be at least 1");
    positive(c.flow.initial_step, "flow.initial_step");
    positive(c.flow.max_step, "flow.max_step");
    positive(c.flow.min_step, "flow.min_step");
    positive(c.flow.armijo, "flow.armijo");
    positive(c.flow.tol_crit, "flow.tol_crit");
    positive(c.flow.zero_gradient_tol, "flow.zero_gradient_tol");
    if (c.target_volume < 0.0) fail("flow.target_volume", "must be non-negative");
    positive(c.verify.fd_rtol, "verify.fd_rtol");
    positive(c.verify.fd_atol_scale, "verify.fd_atol_scale");
    positive(c.verify.critical_rtol, "verify.critical_rtol");
    positive(c.verify.weinberger_slack, "verify.weinberger_slack");
    positive(c.verify.expansion_rtol, "verify.expansion_rtol");
    positive(c.verify.expansion_eps, "verify.expansion_eps");
    if (c.verify.target_volume < 0.0) fail("verify.target_volume", "must be non-negative");
    if (!c.eps.empty()) {
        if (c.eps.size() < 3) fail("eps", "needs at least three steps");
        for (std::size_t i = 0; i < c.eps.size(); ++i) {
            positive(c.eps[i], "eps[" + std::to_string(i) + "]");
            if (i > 0 && !(c.eps[i] < c.eps[i - 1])) fail("eps", "must be strictly decreasing");
        }
    }
    const auto& f = c.field;
    if (f.kind != "translation" && f.kind != "dilation" && f.kind != "fourier")
        fail("field.kind", "unknown field kind '" + f.kind + "' (translation | dilation | fourier)");
    if (f.volume != "none" && f.volume != "global" && f.volume != "per_component")
        fail("field.volume", "unknown volume mode '" + f.volume + "' (none | global | per_component)");
    if (f.component < -1) fail("field.component", "must be -1 or a component index");
    if (const auto* p = std::get_if<PlanarDomainSpec>(&c.domain)) {
        try {
            p->validate();
        } catch (const Error& e) {
            fail("domain", e.what());
        }
    } else if (const auto* cy = std::get_if<CylinderDomainSpec>(&c.domain)) {
        try {
            cy->validate();
        } catch (const Error& e) {
            fail("domain", e.what());
        }
    }
}

ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, "'" + path + "': " + e.what());
    }
    return from_json(j);
}

shapecalc::DeformationField build_field(const geometry::TriMesh& mesh, const FieldConfig& f) {
    using shapecalc::DeformationField;
    if (f.kind == "translation") {
        const Vec2 v = f.direction;
        return shapecalc::field_from_vector(mesh, [v](Vec2) { return v; });
    }
    if (f.kind == "dilation") {
        if (mesh.periodic()) return shapecalc::field_from_vector(mesh, [](Vec2 p) { return Vec2{p.x, 0.0}; });
        const Vec2 c = mesh_centroid(mesh);
        return shapecalc::field_from_vector(mesh, [c](Vec2 p) { return p - c; });
    }
    if (f.kind != "fourier") throw Error(ErrorCode::ConfigInvalid, "'field.kind': unknown field kind '" + f.kind + "'");
    if (f.component >= static_cast<int>(mesh.components().size()))
        throw Error(ErrorCode::ComponentNotFound, "field component " + std::to_string(f.component) + " does not exist");

    const Vec2 c = mesh.periodic() ? Vec2{} : mesh_centroid(mesh);
    const double period = mesh.period();
    auto series = [&](Vec2 p) {
        const double s = mesh.periodic() ? 2.0 * kPi * p.y / period : std::atan2(p.y - c.y, p.x - c.x);
        double v = f.c0;
        for (std::size_t m = 0; m < f.cos_coeffs.size(); ++m) v += f.cos_coeffs[m] * std::cos((m + 1) * s);
        for (std::size_t m = 0; m < f.sin_coeffs.size(); ++m) v += f.sin_coeffs[m] * std::sin((m + 1) * s);
        return v;
    };
    std::vector<double> vals(mesh.num_vertices(), 0.0);
    std::vector<int> comp_of(mesh.num_vertices(), -1);
    const auto& edges = mesh.boundary_edges();
    for (const auto& e : edges) comp_of[e.a] = comp_of[e.b] = e.component;
    for (int v : mesh.boundary_vertices())
        if (f.component < 0 || comp_of[v] == f.component) vals[v] = series(mesh.vertices()[v]);
    const auto trace = assembly::BoundaryTrace::per_vertex(std::move(vals));
    if (f.volume == "none") return shapecalc::field_from_trace(mesh, trace);
    return shapecalc::make_volume_preserving(
        trace, mesh, f.volume == "global" ? shapecalc::VolumeMode::Global : shapecalc::VolumeMode::PerComponent);
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& c) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a(to_json(c).dump());
    return os.str();
}

}  // namespace shapelab::config
