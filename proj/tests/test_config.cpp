#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mdlab/commands.hpp"
#include "mdlab/config.hpp"
#include "mdlab/io.hpp"

using namespace mdlab;
using nlohmann::json;

namespace {

json baseConfig() {
    return json::parse(R"({
        "model": {"kind": "iid", "innovation": {"type": "rademacher"}},
        "seed": 5,
        "reps": 200,
        "n_values": [16]
    })");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("config parses and hashes deterministically") {
    const ExperimentConfig a = ExperimentConfig::fromJson(baseConfig());
    const ExperimentConfig b = ExperimentConfig::fromJson(baseConfig());
    CHECK(a.hash() == b.hash());
    CHECK(a.seed() == 5);
    CHECK(a.reps() == 200);
    ExperimentConfig c = ExperimentConfig::fromJson(baseConfig());
    c.overrideSeed(6);
    CHECK(c.hash() != a.hash());
    c.overrideThreads(8);  // thread count never enters the hash
    ExperimentConfig d = ExperimentConfig::fromJson(baseConfig());
    d.overrideSeed(6);
    CHECK(c.hash() == d.hash());
}

TEST_CASE("unknown fields are rejected") {
    json j = baseConfig();
    j["unknown_knob"] = 1;
    CHECK_THROWS_AS((void)ExperimentConfig::fromJson(j), ConfigError);
    json j2 = baseConfig();
    j2["model"]["extra"] = true;
    CHECK_THROWS_AS((void)ExperimentConfig::fromJson(j2), ConfigError);
}

TEST_CASE("speed rule hypotheses are validated") {
    json j = baseConfig();
    j["a_rule"] = {{"type", "power"}, {"beta", 0.0}};
    CHECK_THROWS_WITH_AS((void)ExperimentConfig::fromJson(j),
                         doctest::Contains("n a_n -> infinity"), ConfigError);
    j["a_rule"]["beta"] = 1.0;
    CHECK_THROWS_AS((void)ExperimentConfig::fromJson(j), ConfigError);
    j["a_rule"]["beta"] = 0.5;
    CHECK_NOTHROW((void)ExperimentConfig::fromJson(j));
}

TEST_CASE("model validation catches broken chains and contractions") {
    json j = baseConfig();
    j["model"] = {{"kind", "finite_chain"},
                  {"values", {0.0, 1.0}},
                  {"transition", {{0.5, 0.6}, {0.3, 0.7}}}};
    CHECK_THROWS_AS((void)ExperimentConfig::fromJson(j), ConfigError);
    j["model"] = {{"kind", "stable_markov"},
                  {"map", "affine"},
                  {"rho", 1.2},
                  {"innovation", {{"type", "rademacher"}}}};
    CHECK_THROWS_AS((void)ExperimentConfig::fromJson(j), ConfigError);
}

TEST_CASE("x grid forms") {
    json j = baseConfig();
    j["x_grid"] = {1.0, 2.0, 3.0};
    CHECK(ExperimentConfig::fromJson(j).xGrid(0).size() == 3);
    j["x_grid"] = {{"min", 1.0}, {"max", 5.0}, {"count", 9}};
    const auto g = ExperimentConfig::fromJson(j).xGrid(0);
    CHECK(g.size() == 9);
    CHECK(g.front() == doctest::Approx(1.0));
    CHECK(g.back() == doctest::Approx(5.0));
    j["x_grid"] = {-1.0};
    CHECK_THROWS_AS((void)ExperimentConfig::fromJson(j).xGrid(0), ConfigError);
}

TEST_CASE("verify command produces byte-identical outputs across runs and threads") {
    TempDir d1("mdlab_test_det1"), d2("mdlab_test_det2");
    json j = baseConfig();
    j["n_values"] = {32};
    j["reps"] = 4000;
    ExperimentConfig c1 = ExperimentConfig::fromJson(j);
    c1.overrideOutDir(d1.path.string());
    cmdVerify(c1);
    ExperimentConfig c2 = ExperimentConfig::fromJson(j);
    c2.overrideOutDir(d2.path.string());
    c2.overrideThreads(3);
    cmdVerify(c2);
    CHECK(slurp(d1.path / "verify.csv") == slurp(d2.path / "verify.csv"));
    CHECK(slurp(d1.path / "moment_check.csv") == slurp(d2.path / "moment_check.csv"));
    CHECK(slurp(d1.path / "subadditivity.csv") == slurp(d2.path / "subadditivity.csv"));
    // sidecar embeds the config hash
    const json side = json::parse(slurp(d1.path / "verify_meta.json"));
    CHECK(side["config_hash"].get<std::uint64_t>() == c1.hash());
}

TEST_CASE("verify command emits the exact Rademacher rows") {
    TempDir dir("mdlab_test_rows");
    json j = baseConfig();
    j["n_values"] = {10};
    j["x_grid"] = {10.0};
    ExperimentConfig cfg = ExperimentConfig::fromJson(j);
    cfg.overrideOutDir(dir.path.string());
    cmdVerify(cfg);
    const std::string csv = slurp(dir.path / "verify.csv");
    // enumeration row: p = 2/1024 exactly, flagged exact
    CHECK(csv.find("0.001953125") != std::string::npos);
    CHECK(csv.rfind(",1\n") != std::string::npos);
}

TEST_CASE("floating-point cells carry 17 significant digits") {
    CHECK(fmtDouble(1.0 / 3.0) == "0.33333333333333331");
    CHECK(fmtDouble(2.0) == "2");
}

TEST_CASE("bound command delegates to the closed form") {
    TempDir dir("mdlab_test_bound");
    json j = baseConfig();
    j["n_values"] = {64};
    j["x_grid"] = {8.0};
    ExperimentConfig cfg = ExperimentConfig::fromJson(j);
    cfg.overrideOutDir(dir.path.string());
    cmdBound(cfg);
    const std::string csv = slurp(dir.path / "bound.csv");
    // i.i.d.: delta = 0, bound = 2 sqrt(e) exp(-64/(4*64)) = 2 sqrt(e) e^{-1/4}
    const double expect = 2.0 * std::sqrt(std::exp(1.0)) * std::exp(-0.25);
    CHECK(csv.find(fmtDouble(expect)) != std::string::npos);
}
