#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "shapelab/config.hpp"

namespace shapelab::commands {

using nlohmann::json;

/// Exit code of a verification that ran to completion but did not pass.
inline constexpr int kVerifyFailed = 6;

struct Context {
    std::filesystem::path out_dir;
    std::string config_hash;
    bool quiet = false;
    std::ostream* out = nullptr;  // human-readable summary (stdout)
};

/// Each command writes its result files under ctx.out_dir and returns the
/// main result document (also written to disk).
json cmd_mesh(const config::ExperimentConfig& c, const Context& ctx);
json cmd_solve(const config::ExperimentConfig& c, const Context& ctx);
json cmd_sd(const config::ExperimentConfig& c, const Context& ctx);
json cmd_optimize(const config::ExperimentConfig& c, const Context& ctx);
/// check: derivative | weinberger | overdetermined | expansion | nodal.
/// The verdict has "pass" plus measured values and thresholds.
json cmd_verify(const config::ExperimentConfig& c, const std::string& check, const Context& ctx);
json reference_ball(int k);
json reference_cylinder(double r, double L);

/// Full command-line entry point; returns the process exit code
/// (0 ok, 1 config, 2 solver, 3 mesh, 4 precondition, 5 internal, 6 failed verification).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shapelab::commands
