#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shapelab/commands.hpp"
#include "shapelab/reference.hpp"

using namespace shapelab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "shapelab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = commands::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("shapelab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json cylinder_config(double h) {
    return {{"version", 1}, {"domain", {{"kind", "straight_cylinder"}, {"r", 2.0}, {"L", 2.0 * kPi}}}, {"h", h}};
}

}  // namespace

TEST_CASE("fnv1a known vectors") {
    CHECK(config::fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(config::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(config::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config round trip is exact") {
    const json j = {
        {"version", 1},
        {"domain", {{"kind", "planar"}, {"rho0", 0.9}, {"cos", {0.0, 0.1, 1.0 / 3.0}}, {"sin", {0.02}}, {"center", {0.5, -1.0}}}},
        {"h", 0.07},
        {"solver", {{"tol", 1e-11}, {"cluster_rtol", 0.01}}},
        {"flow", {{"budget", 12}, {"modes", 5}, {"target_volume", 2.5}}},
        {"field", {{"kind", "fourier"}, {"cos", {0.0, 1.0}}, {"volume", "global"}}},
        {"eps", {1e-3, 5e-4, 2.5e-4}},
        {"verify", {{"fd_rtol", 0.1}}},
        {"output_dir", "somewhere"},
        {"seed", 42}};
    const auto c = config::from_json(j);
    const json once = config::to_json(c);
    const json twice = config::to_json(config::from_json(once));
    CHECK(once.dump() == twice.dump());
    CHECK(config::config_hash(c) == config::config_hash(config::from_json(once)));
    CHECK(once["domain"]["cos"][2].get<double>() == 1.0 / 3.0);
    CHECK(once["seed"].get<std::uint64_t>() == 42);
    // Every domain kind survives.
    for (const json& d : {cylinder_config(0.1)["domain"],
                          json{{"kind", "rectangle"}, {"width", 2.0}, {"height", 1.0}},
                          json{{"kind", "cylinder"},
                               {"circumference", 3.0},
                               {"g_minus", {{"c0", -1.0}, {"cos", json::array()}, {"sin", {0.1}}}},
                               {"g_plus", {{"c0", 1.5}, {"cos", {0.2}}, {"sin", json::array()}}}}})
        CHECK(config::domain_to_json(config::domain_from_json(d)).dump() == d.dump());
    // A different config hashes differently.
    auto j2 = j;
    j2["h"] = 0.0700001;
    CHECK(config::config_hash(config::from_json(j2)) != config::config_hash(c));
}

TEST_CASE("config errors name the offending key") {
    const auto dir = scratch("errors");
    auto j = cylinder_config(0.2);
    j["hh"] = 0.1;
    auto r = cli({"solve", "--config", write_config(dir, j), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("hh") != std::string::npos);

    j = cylinder_config(0.2);
    j["solver"] = {{"tool", 1e-9}};
    r = cli({"solve", "--config", write_config(dir, j), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("solver.tool") != std::string::npos);

    j = cylinder_config(0.2);
    j.erase("version");
    r = cli({"solve", "--config", write_config(dir, j), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("version") != std::string::npos);

    j = cylinder_config(0.2);
    j["h"] = "fine";
    CHECK(cli({"solve", "--config", write_config(dir, j)}).code == 1);

    // Increasing eps is rejected.
    CHECK(cli({"sd", "--config", write_config(dir, cylinder_config(0.2)), "--eps", "1e-4,1e-3,1e-2"}).code == 1);
    CHECK(cli({}).code == 1);
    CHECK(cli({"verify", "--config", write_config(dir, cylinder_config(0.2))}).code == 1);
    CHECK(cli({"nonsense"}).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("reference subcommand") {
    auto r = cli({"reference", "--k", "1"});
    REQUIRE(r.code == 0);
    const auto doc = json::parse(r.out);
    CHECK(doc["mu2_ball"].get<double>() == kPi * kPi / 4.0);
    r = cli({"reference", "--r", "2"});
    REQUIRE(r.code == 0);
    const auto cyl = json::parse(r.out);
    CHECK(cyl["case"] == "Case2");
    CHECK(cyl["v_c"].get<double>() == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-12));
    CHECK(cli({"reference", "--k", "0"}).code == 4);
    CHECK(cli({"reference"}).code == 1);
}

TEST_CASE("solve writes results and is byte-for-byte deterministic") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const auto cfg = write_config(a, cylinder_config(0.15));
    REQUIRE(cli({"solve", "--config", cfg, "--out", a.string(), "--quiet"}).code == 0);
    REQUIRE(cli({"solve", "--config", cfg, "--out", b.string(), "--quiet"}).code == 0);
    const auto ea = slurp(a / "eigen.json");
    CHECK(!ea.empty());
    CHECK(ea == slurp(b / "eigen.json"));
    CHECK(fs::exists(a / "eigen.vtk"));
    CHECK(fs::exists(a / "metadata.json"));
    const auto doc = json::parse(ea);
    CHECK(doc["eigen"]["mu"].get<double>() == doctest::Approx(kPi * kPi / 16.0).epsilon(0.02));
    CHECK(doc["eigen"]["multiplicity"] == 1);
    CHECK(doc["reference"]["case"] == "Case2");
    const auto meta = json::parse(slurp(a / "metadata.json"));
    CHECK(meta["config_hash"] == config::config_hash(config::load(cfg)));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("verify exit codes") {
    const auto dir = scratch("verify");
    SUBCASE("passing check") {
        const auto r = cli({"verify", "--check", "overdetermined", "--config", write_config(dir, cylinder_config(0.1)),
                            "--out", dir.string(), "--quiet"});
        CHECK(r.code == 0);
        CHECK(json::parse(slurp(dir / "verify_overdetermined.json"))["pass"] == true);
    }
    SUBCASE("check that runs but fails") {
        const json j = {{"version", 1}, {"domain", {{"kind", "planar"}, {"rho0", 1.0}}}, {"h", 0.15}};
        const auto r = cli({"verify", "--check", "overdetermined", "--config", write_config(dir, j), "--out", dir.string(), "--quiet"});
        CHECK(r.code == commands::kVerifyFailed);
        CHECK(json::parse(slurp(dir / "verify_overdetermined.json"))["pass"] == false);
    }
    SUBCASE("precondition") {
        auto j = cylinder_config(0.2);
        j["verify"] = {{"target_volume", 30.0}};
        CHECK(cli({"verify", "--check", "weinberger", "--config", write_config(dir, j), "--out", dir.string(), "--quiet"}).code == 4);
    }
    SUBCASE("invalid spec is caught at config load") {
        const json j = {{"version", 1}, {"domain", {{"kind", "planar"}, {"rho0", 1.0}, {"cos", {0.0, 1.5}}}}, {"h", 0.2}};
        const auto r = cli({"mesh", "--config", write_config(dir, j), "--out", dir.string(), "--quiet"});
        CHECK(r.code == 1);
        CHECK(r.err.find("NonPositiveRadius") != std::string::npos);
    }
    fs::remove_all(dir);
}
