#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "shapelab/optimizer.hpp"

namespace shapelab::config {

using nlohmann::json;

struct StraightCylinder {
    double r = 2.0;
    double L = 2.0 * kPi;
};

/// Axis-aligned box [0, width] x [0, height].
struct Rectangle {
    double width = 1.0;
    double height = 1.0;
};

using Domain = std::variant<geometry::PlanarDomainSpec, geometry::CylinderDomainSpec, StraightCylinder, Rectangle>;

/// Deformation field used by `sd` and the derivative / expansion checks.
struct FieldConfig {
    std::string kind = "dilation";   // translation | dilation | fourier
    Vec2 direction{1.0, 0.0};        // translation vector, (t, x) on cylinders
    double c0 = 0.0;                 // fourier: h = c0 + sum a_m cos(m s) + b_m sin(m s)
    std::vector<double> cos_coeffs;  // s = polar angle about the centroid (planar) or 2 pi x / L (cylinder)
    std::vector<double> sin_coeffs;
    int component = -1;              // restrict a fourier field to one boundary component (-1: all)
    std::string volume = "global";   // none | global | per_component mean removal
};

struct VerifyConfig {
    double fd_rtol = 0.05;         // derivative: relative tolerance against the FD oracle
    double fd_atol_scale = 1e-2;   // ... or absolute tolerance fd_atol_scale * mu2
    double critical_rtol = 0.02;   // overdetermined: deviation, u^2 and lambda tolerances
    double weinberger_slack = 1e-3;
    double expansion_rtol = 0.01;
    double expansion_eps = 1e-4;
    double target_volume = 0.0;    // weinberger: required mesh volume (0: no check)
};

struct ExperimentConfig {
    int version = 1;
    Domain domain = geometry::PlanarDomainSpec::disk(1.0);
    double h = 0.05;
    eigensolve::ClusterOptions cluster;
    optimizer::FlowOptions flow;
    double target_volume = 0.0;  // optimize: 0 keeps the initial volume
    FieldConfig field;
    std::vector<double> eps;     // FD step list, empty: h^2 {1, 1/2, 1/4}
    VerifyConfig verify;
    std::string output_dir = "out";
    std::uint64_t seed = 0x5eed5eedULL;
};

inline constexpr int kConfigVersion = 1;

/// Parses and validates. Unknown keys, wrong types and invalid values throw
/// ConfigInvalid naming the offending key path.
ExperimentConfig from_json(const json& j);
/// Complete serialization (every field, defaults included).
json to_json(const ExperimentConfig& c);
ExperimentConfig load(const std::string& path);
/// Throws ConfigInvalid on tolerances <= 0, h outside (0, 1] times the
/// domain scale, unknown enum strings, or malformed domains.
void validate(const ExperimentConfig& c);

json domain_to_json(const Domain& d);
Domain domain_from_json(const json& j, const std::string& path = "domain");
json spec_to_json(const optimizer::DomainSpec& s);

/// Flow-capable spec of a domain (straight cylinders become exact Omega_r);
/// throws InvalidArgument for rectangles.
optimizer::DomainSpec to_flow_spec(const Domain& d);
geometry::TriMesh build_mesh(const Domain& d, double h);
std::string domain_kind(const Domain& d);

/// Boundary field described by `f` on `mesh`.
shapecalc::DeformationField build_field(const geometry::TriMesh& mesh, const FieldConfig& f);

/// FNV-1a 64-bit hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace shapelab::config
