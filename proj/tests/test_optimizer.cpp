#include "doctest.h"

#include <cmath>

#include "shapelab/optimizer.hpp"
#include "shapelab/reference.hpp"

using namespace shapelab;
using namespace shapelab::optimizer;

namespace {

geometry::CylinderDomainSpec wavy_cylinder() {
    auto s = geometry::CylinderDomainSpec::straight_cylinder(2.0, 2.0 * kPi);
    s.straight = false;
    s.g_plus.cos_coeffs = {0.2, 0.0};
    s.g_minus.sin_coeffs = {0.0, 0.1};
    return s;
}

}  // namespace

TEST_CASE("analytic volumes") {
    auto p = geometry::PlanarDomainSpec::disk(1.5);
    p.cos_coeffs = {0.0, 0.1};
    p.sin_coeffs = {0.05};
    CHECK(spec_volume(p) == doctest::Approx(kPi * 2.25 * (1.0 + 0.5 * (0.01 + 0.0025))).epsilon(1e-14));
    CHECK(spec_volume(wavy_cylinder()) == doctest::Approx(8.0 * kPi).epsilon(1e-14));
    // The polygon area converges to the analytic one.
    const double fine = geometry::mesh_volume(geometry::build_planar_mesh(p, 0.025));
    CHECK(fine == doctest::Approx(spec_volume(p)).epsilon(2e-3));
}

TEST_CASE("shape coefficients round trip") {
    auto p = geometry::PlanarDomainSpec::disk(1.0);
    p.cos_coeffs = {0.1, 0.0, 0.15};
    p.sin_coeffs = {0.0, -0.02};
    const auto c = shape_coefficients(p, 4);
    REQUIRE(c.size() == 8);
    CHECK(c[2] == 0.15);
    CHECK(c[5] == -0.02);
    CHECK(c[3] == 0.0);
    const auto back = std::get<geometry::PlanarDomainSpec>(with_shape_coefficients(p, 4, c));
    CHECK(shape_coefficients(back, 4) == c);
    CHECK(back.rho0 == p.rho0);

    const auto cyl = wavy_cylinder();
    const auto cc = shape_coefficients(cyl, 3);
    REQUIRE(cc.size() == 12);
    CHECK(cc[0] == 0.2);   // g_plus cos 1
    CHECK(cc[10] == 0.1);  // g_minus sin 2
    const auto cb = std::get<geometry::CylinderDomainSpec>(with_shape_coefficients(cyl, 3, cc));
    CHECK(shape_coefficients(cb, 3) == cc);
    CHECK(cb.g_plus.c0 == cyl.g_plus.c0);
    CHECK(cb.g_minus.c0 == cyl.g_minus.c0);
}

TEST_CASE("volume projection") {
    SUBCASE("planar: only rho0 changes") {
        auto p = geometry::PlanarDomainSpec::disk(1.0);
        p.cos_coeffs = {0.0, 0.0, 0.3};
        const auto q = std::get<geometry::PlanarDomainSpec>(project_volume(p, kPi));
        CHECK(std::abs(spec_volume(q) - kPi) <= 1e-10 * kPi);
        CHECK(q.cos_coeffs == p.cos_coeffs);
        CHECK(q.rho0 == doctest::Approx(1.0 / std::sqrt(1.045)).epsilon(1e-10));
    }
    SUBCASE("cylinder: both heights move outward equally") {
        const auto s = wavy_cylinder();
        const auto q = std::get<geometry::CylinderDomainSpec>(project_volume(s, 10.0 * kPi));
        CHECK(std::abs(spec_volume(q) - 10.0 * kPi) <= 1e-10 * 10.0 * kPi);
        CHECK(q.g_plus.c0 - s.g_plus.c0 == doctest::Approx(0.5));
        CHECK(s.g_minus.c0 - q.g_minus.c0 == doctest::Approx(0.5));
        CHECK(q.g_plus.cos_coeffs == s.g_plus.cos_coeffs);
    }
    SUBCASE("idempotent") {
        auto p = geometry::PlanarDomainSpec::disk(0.7);
        p.sin_coeffs = {0.2};
        const auto once = project_volume(p, 2.0);
        const auto twice = project_volume(once, 2.0);
        CHECK(std::get<geometry::PlanarDomainSpec>(twice).rho0 ==
              doctest::Approx(std::get<geometry::PlanarDomainSpec>(once).rho0).epsilon(1e-12));
    }
}

TEST_CASE("tangent basis matches the normal speed of a coefficient change") {
    auto p = geometry::PlanarDomainSpec::disk(1.0);
    p.cos_coeffs = {0.0, 0.1};
    const auto res = resolution_for(p, 0.1);
    const auto mesh = build_mesh(p, res);
    const auto B = shape_tangent_basis(p, mesh, 3);
    REQUIRE(B.cols() == 6);
    REQUIRE(B.rows() == static_cast<int>(mesh.boundary_edges().size()));
    // Column of a_1: FD swept area of a small change equals int of the speed.
    auto c = shape_coefficients(p, 3);
    const double d = 1e-6;
    c[0] += d;
    const auto moved = build_mesh(with_shape_coefficients(p, 3, c), res);
    double flux = 0.0;
    for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) flux += mesh.boundary_edges()[e].length * B(e, 0);
    const double swept = geometry::mesh_volume(moved) - geometry::mesh_volume(mesh);
    CHECK(swept / d == doctest::Approx(flux).epsilon(1e-3).scale(1.0));
}

TEST_CASE("ascent direction is mean zero with unit norm") {
    const auto s = wavy_cylinder();
    const auto mesh = build_mesh(s, resolution_for(s, 0.15));
    const auto c = eigensolve::compute_cluster(mesh);
    const auto h = ascent_direction(mesh, c);
    const auto ones = assembly::BoundaryTrace::per_edge(std::vector<double>(mesh.boundary_edges().size(), 1.0));
    const double len = assembly::boundary_integrate(mesh, ones);
    CHECK(std::abs(assembly::boundary_integrate(mesh, h)) < 1e-10 * std::sqrt(len));
    auto sq = h;
    for (auto& v : sq.values) v *= v;
    CHECK(assembly::boundary_integrate(mesh, sq) == doctest::Approx(1.0).epsilon(1e-10));
    // Ascent: the first-order change of mu2 along h is positive.
    const auto field = shapecalc::field_from_trace(mesh, h);
    CHECK(shapecalc::one_sided_derivative(mesh, c, field).one_sided_derivative > 0.0);
}

TEST_CASE("Omega_2 has no ascent direction") {
    const auto s = geometry::CylinderDomainSpec::straight_cylinder(2.0, 2.0 * kPi);
    const auto mesh = build_mesh(s, resolution_for(s, 0.1));
    const auto c = eigensolve::compute_cluster(mesh);
    try {
        ascent_direction(mesh, c, 0.05);
        FAIL("expected ZeroGradient");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroGradient);
    }
    // A genuinely perturbed cylinder at the same tolerance has one.
    const auto w = wavy_cylinder();
    const auto wm = build_mesh(w, resolution_for(w, 0.1));
    CHECK_NOTHROW(ascent_direction(wm, eigensolve::compute_cluster(wm), 0.05));
}

TEST_CASE("short flow: monotone mu2 at fixed volume") {
    auto p = geometry::PlanarDomainSpec::disk(1.0);
    p.cos_coeffs = {0.0, 0.0, 0.15};
    const auto p0 = project_volume(p, kPi);
    FlowOptions opts;
    opts.h = 0.15;
    opts.budget = 4;
    opts.modes = 4;
    int seen = 0;
    const auto res = run_flow(p0, kPi, opts, [&](const FlowRecord&) { ++seen; });
    REQUIRE(res.trajectory.size() >= 2);
    CHECK(seen == static_cast<int>(res.trajectory.size()));
    CHECK(res.trajectory.front().step_size == 0.0);
    for (std::size_t i = 0; i < res.trajectory.size(); ++i) {
        const auto& r = res.trajectory[i];
        CHECK(r.volume_drift <= 1e-8);
        CHECK(std::abs(spec_volume(r.spec) - kPi) <= 1e-8 * kPi);
        if (i > 0) {
            CHECK(r.mu2 > res.trajectory[i - 1].mu2);
            CHECK(r.step_size > 0.0);
        }
    }
    CHECK(res.trajectory.back().mu2 < reference::mu2_ball(2).mu2_ball * 1.02);
    // Deterministic.
    const auto again = run_flow(p0, kPi, opts);
    REQUIRE(again.trajectory.size() == res.trajectory.size());
    CHECK(again.trajectory.back().mu2 == res.trajectory.back().mu2);
}
