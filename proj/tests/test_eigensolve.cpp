#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "shapelab/eigensolve.hpp"
#include "shapelab/reference.hpp"

using namespace shapelab;
using namespace shapelab::eigensolve;

TEST_CASE("matches a dense generalized eigensolver") {
    const auto mesh = geometry::build_planar_mesh(geometry::PlanarDomainSpec::ellipse(1.3, 0.8), 0.2);
    const auto K = assembly::assemble_stiffness(mesh);
    const auto M = assembly::assemble_mass(mesh);
    const Eigen::MatrixXd Kd(K.matrix), Md(M.matrix);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(Kd, Md);
    const auto eigs = smallest_nonzero_eigenpairs(K, M, 5);
    REQUIRE(eigs.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(eigs[i].mu == doctest::Approx(dense.eigenvalues()(i + 1)).epsilon(1e-9));
        CHECK(eigs[i].residual <= 1e-9);
        CHECK(eigs[i].u.dot(M.apply(eigs[i].u)) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(eigs[i].u.dot(M.apply(Eigen::VectorXd::Ones(mesh.num_vertices())))) < 1e-10);
    }
}

TEST_CASE("closed-form eigenvalues") {
    SUBCASE("unit square") {
        const auto c = compute_cluster(geometry::build_rectangle_mesh(1.0, 1.0, 0.05));
        CHECK(c.mu2 == doctest::Approx(kPi * kPi).epsilon(0.01));
        CHECK(c.multiplicity == 2);
    }
    SUBCASE("unit disk") {
        const auto c = compute_cluster(geometry::build_planar_mesh(geometry::PlanarDomainSpec::disk(1.0), 0.05));
        CHECK(c.mu2 == doctest::Approx(reference::mu2_ball(2).mu2_ball).epsilon(0.01));
        CHECK(c.multiplicity == 2);
    }
    SUBCASE("straight cylinders") {
        for (double r : {1.0, 2.0}) {
            const auto mesh = geometry::build_cylinder_mesh(geometry::CylinderDomainSpec::straight_cylinder(r, 2.0 * kPi), 0.1);
            const auto c = compute_cluster(mesh);
            const auto ref = reference::cylinder_exact(r, 2.0 * kPi);
            CHECK(c.mu2 == doctest::Approx(ref.mu2).epsilon(0.01));
            // r = 1: cross-section pair cos x, sin x; r = 2: axial mode.
            CHECK(c.multiplicity == (r == 1.0 ? 2 : 1));
        }
    }
    SUBCASE("degenerate cylinder r = pi / 2") {
        const auto mesh = geometry::build_cylinder_mesh(geometry::CylinderDomainSpec::straight_cylinder(kPi / 2.0, 2.0 * kPi), 0.1);
        const auto c = compute_cluster(mesh);
        CHECK(c.mu2 == doctest::Approx(1.0).epsilon(0.01));
        CHECK(c.multiplicity == 3);
    }
}

TEST_CASE("translation invariance") {
    auto s = geometry::PlanarDomainSpec::disk(1.0);
    s.cos_coeffs = {0.0, 0.1};
    const auto a = compute_cluster(geometry::build_planar_mesh(s, 0.1));
    s.center = {3.0, -2.0};
    const auto b = compute_cluster(geometry::build_planar_mesh(s, 0.1));
    CHECK(b.mu2 == doctest::Approx(a.mu2).epsilon(1e-10));
    CHECK(b.multiplicity == a.multiplicity);
}

TEST_CASE("scaling: mu2(t Omega) = mu2(Omega) / t^2") {
    const auto a = compute_cluster(geometry::build_rectangle_mesh(1.0, 1.0, 0.1));
    const auto b = compute_cluster(geometry::build_rectangle_mesh(2.0, 2.0, 0.2));
    CHECK(b.mu2 == doctest::Approx(a.mu2 / 4.0).epsilon(1e-10));
}

TEST_CASE("refinement decreases the conforming upper bound toward the exact value") {
    // Nested union-jack meshes of the square: P1 eigenvalues decrease monotonically.
    double prev = 1e300;
    for (double h : {0.2, 0.1, 0.05}) {
        const double mu = compute_cluster(geometry::build_rectangle_mesh(1.0, 1.0, h)).mu2;
        CHECK(mu < prev);
        CHECK(mu > kPi * kPi);
        prev = mu;
    }
}

TEST_CASE("cluster basis is M-orthonormal and deterministic") {
    const auto mesh = geometry::build_planar_mesh(geometry::PlanarDomainSpec::disk(1.0), 0.1);
    const auto M = assembly::assemble_mass(mesh);
    const auto a = compute_cluster(mesh);
    const auto b = compute_cluster(mesh);
    REQUIRE(a.multiplicity == 2);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j)
            CHECK(a.basis[i].dot(M.apply(a.basis[j])) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
        CHECK((a.basis[i] - b.basis[i]).norm() == 0.0);
    }
    CHECK(a.mu2 == b.mu2);
    CHECK(a.cluster_gap > 0.0);
    CHECK(a.next_eigenvalue == doctest::Approx(a.mu2 + a.cluster_gap));
}

TEST_CASE("seed changes the start block but not the result") {
    const auto mesh = geometry::build_rectangle_mesh(1.0, 2.0, 0.1);
    ClusterOptions o1, o2;
    o2.solver.seed = 12345;
    const auto a = compute_cluster(mesh, o1);
    const auto b = compute_cluster(mesh, o2);
    CHECK(b.mu2 == doctest::Approx(a.mu2).epsilon(1e-10));
    CHECK(a.multiplicity == 1);
    CHECK(a.mu2 == doctest::Approx(kPi * kPi / 4.0).epsilon(0.01));
}

TEST_CASE("detect_cluster grouping") {
    const auto mesh = geometry::build_rectangle_mesh(1.0, 1.0, 0.2);
    const auto K = assembly::assemble_stiffness(mesh);
    const auto M = assembly::assemble_mass(mesh);
    auto eigs = smallest_nonzero_eigenpairs(K, M, 4);
    const auto c = detect_cluster(eigs, M, 1e-3, 1e-9);
    CHECK(c.multiplicity == 2);
    // A tolerance swallowing every pair is ambiguous.
    try {
        detect_cluster(eigs, M, 10.0, 1e-9);
        FAIL("expected AmbiguousCluster");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AmbiguousCluster);
    }
}
