#include "shapelab/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "shapelab/io.hpp"

namespace shapelab::commands {

namespace fs = std::filesystem;
using config::ExperimentConfig;

namespace {

eigensolve::ClusterOptions cluster_options(const ExperimentConfig& c) {
    auto opts = c.cluster;
    opts.solver.seed = c.seed;
    return opts;
}

json header(const ExperimentConfig& c, const Context& ctx, const std::string& command) {
    return {{"command", command}, {"config_hash", ctx.config_hash}, {"domain", config::domain_to_json(c.domain)}, {"h", c.h}};
}

void say(const Context& ctx, const std::string& line) {
    if (!ctx.quiet && ctx.out) *ctx.out << line << '\n';
}

std::string fmt(double v, int digits = 8) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

std::vector<double> default_eps(const ExperimentConfig& c) {
    if (!c.eps.empty()) return c.eps;
    const double e = c.h * c.h;
    return {e, e / 2.0, e / 4.0};
}

// Closed-form mu2 where one is known.
json known_value(const config::Domain& d) {
    if (const auto* s = std::get_if<config::StraightCylinder>(&d)) return io::cylinder_to_json(reference::cylinder_exact(s->r, s->L));
    if (const auto* r = std::get_if<config::Rectangle>(&d)) {
        const double side = std::max(r->width, r->height);
        return {{"mu2", kPi * kPi / (side * side)}};
    }
    if (const auto* p = std::get_if<geometry::PlanarDomainSpec>(&d)) {
        auto zero = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
        };
        if (zero(p->cos_coeffs) && zero(p->sin_coeffs))
            return {{"mu2", reference::mu2_ball(2).mu2_ball / (p->rho0 * p->rho0)}};
    }
    return nullptr;
}

double max_abs_h(const geometry::TriMesh& mesh, const shapecalc::DeformationField& f) {
    double m = 0.0;
    for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e)
        m = std::max(m, std::abs(f.h.edge_value(mesh, static_cast<int>(e))));
    return m;
}

void write_metadata(const fs::path& dir, const std::string& command, const std::string& hash) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
    io::write_json(dir / "metadata.json",
                   {{"command", command}, {"config_hash", hash}, {"timestamp", ts.str()}, {"threads", thread_cap()}});
}

// Matrix Market with the hash as a comment after the banner line.
void write_matrix(const fs::path& path, const assembly::SparseSymMatrix& m, const std::string& hash) {
    std::ostringstream body;
    assembly::write_matrix_market(body, m);
    const std::string text = body.str();
    const auto nl = text.find('\n');
    auto os = io::open_output(path);
    os << text.substr(0, nl + 1) << "% config_hash " << hash << '\n' << text.substr(nl + 1);
}

}  // namespace

json cmd_mesh(const ExperimentConfig& c, const Context& ctx) {
    const auto mesh = config::build_mesh(c.domain, c.h);
    geometry::check_triangles(mesh);
    json doc = header(c, ctx, "mesh");
    doc["num_vertices"] = mesh.num_vertices();
    doc["num_triangles"] = mesh.num_triangles();
    doc["volume"] = geometry::mesh_volume(mesh);
    doc["boundary_length"] = geometry::boundary_measure(mesh);
    doc["min_angle_degrees"] = mesh.min_angle_degrees();
    doc["max_edge_length"] = mesh.max_edge_length();
    doc["mesh"] = io::mesh_to_json(mesh);
    io::write_json(ctx.out_dir / "mesh.json", doc);
    {
        auto os = io::open_output(ctx.out_dir / "mesh.vtk");
        io::write_vtk(os, mesh);
    }
    write_matrix(ctx.out_dir / "stiffness.mtx", assembly::assemble_stiffness(mesh), ctx.config_hash);
    write_matrix(ctx.out_dir / "mass.mtx", assembly::assemble_mass(mesh), ctx.config_hash);
    say(ctx, "mesh: " + std::to_string(mesh.num_vertices()) + " vertices, " + std::to_string(mesh.num_triangles()) +
                 " triangles, volume " + fmt(geometry::mesh_volume(mesh)));
    return doc;
}

json cmd_solve(const ExperimentConfig& c, const Context& ctx) {
    const auto mesh = config::build_mesh(c.domain, c.h);
    const auto cluster = eigensolve::compute_cluster(mesh, cluster_options(c));
    json doc = header(c, ctx, "solve");
    doc["num_vertices"] = mesh.num_vertices();
    doc["volume"] = geometry::mesh_volume(mesh);
    doc["eigen"] = io::eigen_to_json(cluster);
    doc["reference"] = known_value(c.domain);
    io::write_json(ctx.out_dir / "eigen.json", doc);
    std::map<std::string, assembly::Vector> fields;
    for (std::size_t i = 0; i < cluster.basis.size(); ++i) fields["u" + std::to_string(i)] = cluster.basis[i];
    auto os = io::open_output(ctx.out_dir / "eigen.vtk");
    io::write_vtk(os, mesh, fields);
    say(ctx, "mu2 = " + fmt(cluster.mu2, 10) + ", multiplicity " + std::to_string(cluster.multiplicity));
    return doc;
}

json cmd_sd(const ExperimentConfig& c, const Context& ctx) {
    const auto mesh = config::build_mesh(c.domain, c.h);
    const auto opts = cluster_options(c);
    const auto cluster = eigensolve::compute_cluster(mesh, opts);
    const auto field = config::build_field(mesh, c.field);
    auto rep = shapecalc::one_sided_derivative(mesh, cluster, field);
    json doc = header(c, ctx, "sd");
    doc["mu2"] = cluster.mu2;
    doc["multiplicity"] = cluster.multiplicity;
    doc["preservation"] = shapecalc::to_string(field.preservation);
    if (!c.eps.empty()) {
        const auto fd = shapecalc::fd_derivative_oracle(mesh, field, c.eps, opts);
        rep.fd_estimate = fd.slope;
        rep.fd_error = fd.error_estimate;
        doc["fd"] = io::fd_to_json(fd);
    }
    doc["derivative"] = io::shape_derivative_to_json(rep);
    io::write_json(ctx.out_dir / "sd.json", doc);
    std::vector<double> h(mesh.boundary_edges().size());
    for (std::size_t e = 0; e < h.size(); ++e) h[e] = field.h.edge_value(mesh, static_cast<int>(e));
    auto os = io::open_output(ctx.out_dir / "sd_field.vtk");
    io::write_vtk_boundary(os, mesh, {{"h", h}}, {{"displacement", field.displacement}});
    say(ctx, "one-sided derivative " + fmt(rep.one_sided_derivative) + ", reverse " + fmt(rep.reverse_derivative) +
                 (rep.fd_estimate ? ", fd " + fmt(*rep.fd_estimate) : std::string()));
    return doc;
}

json cmd_optimize(const ExperimentConfig& c, const Context& ctx) {
    const auto spec = config::to_flow_spec(c.domain);
    const double target = c.target_volume > 0.0 ? c.target_volume : optimizer::spec_volume(spec);
    auto flow = c.flow;
    flow.h = c.h;
    flow.cluster = cluster_options(c);
    const fs::path ledger_path = ctx.out_dir / "ledger.jsonl";
    auto ledger = io::open_output(ledger_path);
    auto result = optimizer::run_flow(spec, target, flow, [&](const optimizer::FlowRecord& r) {
        json line = io::flow_record_to_json(r);
        line["config_hash"] = ctx.config_hash;
        ledger << line.dump() << '\n';
        ledger.flush();
        say(ctx, "step " + std::to_string(r.step) + "  mu2 " + fmt(r.mu2, 10) + "  m " + std::to_string(r.multiplicity) +
                     "  weak " + fmt(r.weak_residual, 4));
    });
    const auto& last = result.trajectory.back();
    json doc = header(c, ctx, "optimize");
    doc["termination"] = result.termination;
    doc["target_volume"] = target;
    doc["steps"] = last.step;
    doc["mu2_initial"] = result.trajectory.front().mu2;
    doc["mu2_final"] = last.mu2;
    doc["weak_residual_final"] = last.weak_residual;
    doc["spec"] = config::spec_to_json(last.spec);
    io::write_json(ctx.out_dir / "final_spec.json", doc);
    if (ctx.out) *ctx.out << ledger_path.string() << '\n';
    return doc;
}

json cmd_verify(const ExperimentConfig& c, const std::string& check, const Context& ctx) {
    const auto& v = c.verify;
    const auto mesh = config::build_mesh(c.domain, c.h);
    const auto opts = cluster_options(c);
    json doc = header(c, ctx, "verify");
    doc["check"] = check;
    json measured, thresholds;
    bool pass = false;

    if (check == "derivative") {
        const auto cluster = eigensolve::compute_cluster(mesh, opts);
        const auto field = config::build_field(mesh, c.field);
        const auto rep = shapecalc::one_sided_derivative(mesh, cluster, field);
        const auto fd = shapecalc::fd_derivative_oracle(mesh, field, default_eps(c), opts);
        const double diff = std::abs(rep.one_sided_derivative - fd.slope);
        const double tol = std::max(v.fd_rtol * std::abs(fd.slope), v.fd_atol_scale * cluster.mu2);
        pass = diff <= tol;
        if (c.field.kind == "translation") {
            pass = pass && std::abs(rep.one_sided_derivative) <= v.fd_atol_scale * cluster.mu2;
            thresholds["translation_abs"] = v.fd_atol_scale * cluster.mu2;
        }
        measured = {{"mu2", cluster.mu2},
                    {"multiplicity", cluster.multiplicity},
                    {"formula", rep.one_sided_derivative},
                    {"reverse", rep.reverse_derivative},
                    {"fd", fd.slope},
                    {"fd_error", fd.error_estimate},
                    {"difference", diff}};
        thresholds["difference"] = tol;
    } else if (check == "weinberger") {
        const double vol = geometry::mesh_volume(mesh);
        if (v.target_volume > 0.0 && std::abs(vol - v.target_volume) > 1e-3 * v.target_volume)
            throw Error(ErrorCode::VolumeMismatch, "mesh volume " + fmt(vol) + " differs from target " + fmt(v.target_volume));
        const auto cluster = eigensolve::compute_cluster(mesh, opts);
        reference::WeinbergerReport rep;
        if (mesh.periodic()) {
            const double comparison = v.target_volume > 0.0 ? v.target_volume : vol;
            rep = reference::weinberger_bound(mesh, comparison / (2.0 * mesh.period()), cluster.mu2, v.weinberger_slack);
        } else {
            rep = reference::weinberger_bound_planar(mesh, cluster.mu2, v.weinberger_slack);
        }
        pass = rep.chain_ok;
        measured = io::weinberger_to_json(rep);
        thresholds["slack"] = v.weinberger_slack;
    } else if (check == "overdetermined") {
        const auto cluster = eigensolve::compute_cluster(mesh, opts);
        const auto dir = criticality::most_critical_direction(mesh, cluster);
        const auto rep = criticality::strong_criticality_test(mesh, cluster, dir);
        const double tol = v.critical_rtol;
        pass = rep.relative_deviation <= tol && rep.u2_deviation <= tol && std::abs(rep.u2_expected - 1.0) <= tol;
        measured = io::strong_to_json(rep);
        measured.erase("q");
        measured["mu2"] = cluster.mu2;
        measured["multiplicity"] = cluster.multiplicity;
        if (const auto* s = std::get_if<config::StraightCylinder>(&c.domain)) {
            const double expected = -std::pow(kPi / (2.0 * s->r), 2);
            measured["lambda_expected"] = expected;
            pass = pass && std::abs(rep.lambda_fit - expected) <= tol * std::abs(expected);
        }
        thresholds = {{"relative_deviation", tol}, {"u2_deviation", tol}, {"u2_expected", tol}, {"lambda", tol}};
    } else if (check == "expansion") {
        const auto field = config::build_field(mesh, c.field);
        const auto rep = shapecalc::volume_expansion_check(mesh, field, v.expansion_eps);
        pass = rep.mismatch <= v.expansion_rtol;
        measured = io::expansion_to_json(rep);
        measured["preservation"] = shapecalc::to_string(field.preservation);
        thresholds["mismatch"] = v.expansion_rtol;
        if (field.preservation != shapecalc::Preservation::None) {
            const double bound = 1e-3 * geometry::boundary_measure(mesh) * max_abs_h(mesh, field);
            pass = pass && std::abs(rep.fd_slope) <= bound;
            thresholds["mean_zero_slope"] = bound;
        }
    } else if (check == "nodal") {
        const auto cluster = eigensolve::compute_cluster(mesh, opts);
        std::vector<int> counts;
        for (const auto& u : cluster.basis) counts.push_back(criticality::nodal_domain_count(mesh, u));
        pass = std::all_of(counts.begin(), counts.end(), [](int n) { return n == 2; });
        measured = {{"mu2", cluster.mu2}, {"multiplicity", cluster.multiplicity}, {"nodal_counts", counts}};
        thresholds["nodal_count"] = 2;
    } else {
        throw Error(ErrorCode::ConfigInvalid,
                    "'--check': unknown check '" + check + "' (derivative | weinberger | overdetermined | expansion | nodal)");
    }
    doc["measured"] = measured;
    doc["thresholds"] = thresholds;
    doc["pass"] = pass;
    io::write_json(ctx.out_dir / ("verify_" + check + ".json"), doc);
    say(ctx, "verify " + check + ": " + (pass ? "PASS" : "FAIL"));
    return doc;
}

json reference_ball(int k) {
    if (k < 1) throw Error(ErrorCode::DomainError, "dimension k must be >= 1");
    return io::ball_to_json(reference::mu2_ball(k));
}

json reference_cylinder(double r, double L) { return io::cylinder_to_json(reference::cylinder_exact(r, L)); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neumann eigenvalue shape toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir, check;
    std::vector<double> eps;
    bool quiet = false;
    int k = 0;
    double r = 0.0, L = 2.0 * kPi;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config JSON");
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };
    auto* mesh = app.add_subcommand("mesh", "build and export the mesh");
    auto* solve = app.add_subcommand("solve", "compute the mu2 cluster");
    auto* sd = app.add_subcommand("sd", "one-sided shape derivative along the configured field");
    auto* optimize = app.add_subcommand("optimize", "volume-constrained ascent of mu2");
    auto* verify = app.add_subcommand("verify", "run a certification check");
    auto* ref = app.add_subcommand("reference", "closed-form reference values");
    for (auto* s : {mesh, solve, sd, optimize, verify, ref}) common(s);
    sd->add_option("--eps", eps, "FD steps, strictly decreasing")->delimiter(',');
    verify->add_option("--eps", eps, "FD steps, strictly decreasing")->delimiter(',');
    verify->add_option("--check", check, "derivative | weinberger | overdetermined | expansion | nodal")->required();
    auto* k_opt = ref->add_option("--k", k, "ball dimension");
    auto* r_opt = ref->add_option("--r", r, "cylinder half-height");
    ref->add_option("--L", L, "cross-section circumference");
    k_opt->excludes(r_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : exit_code(ErrorCode::ConfigInvalid);
    }

    try {
        if (ref->parsed()) {
            if (k_opt->count() == 0 && r_opt->count() == 0)
                throw Error(ErrorCode::ConfigInvalid, "reference needs --k or --r");
            json request = k_opt->count() ? json{{"k", k}} : json{{"r", r}, {"L", L}};
            json doc = k_opt->count() ? reference_ball(k) : reference_cylinder(r, L);
            doc["config_hash"] = [&] {
                std::ostringstream os;
                os << std::hex << std::setw(16) << std::setfill('0') << config::fnv1a(request.dump());
                return os.str();
            }();
            out << doc.dump(2) << '\n';
            if (!out_dir.empty()) io::write_json(fs::path(out_dir) / "reference.json", doc);
            return 0;
        }

        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : config::load(config_path);
        if (!eps.empty()) {
            c.eps = eps;
            config::validate(c);
        }
        Context ctx;
        ctx.config_hash = config::config_hash(c);
        ctx.out_dir = out_dir.empty() ? fs::path(c.output_dir) : fs::path(out_dir);
        ctx.quiet = quiet;
        ctx.out = &out;

        std::string name;
        json doc;
        if (mesh->parsed()) {
            name = "mesh";
            doc = cmd_mesh(c, ctx);
        } else if (solve->parsed()) {
            name = "solve";
            doc = cmd_solve(c, ctx);
        } else if (sd->parsed()) {
            name = "sd";
            doc = cmd_sd(c, ctx);
        } else if (optimize->parsed()) {
            name = "optimize";
            doc = cmd_optimize(c, ctx);
        } else {
            name = "verify";
            doc = cmd_verify(c, check, ctx);
        }
        write_metadata(ctx.out_dir, name, ctx.config_hash);
        if (name == "verify" && !doc.at("pass").get<bool>()) return kVerifyFailed;
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(ErrorCode::Internal);
    }
}

}  // namespace shapelab::commands
