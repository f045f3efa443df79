#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ald/config.hpp"
#include "ald/error.hpp"
#include "ald/harness.hpp"
#include "ald/svg.hpp"
#include "oracles.hpp"

using namespace ald;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ald_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(const fs::path& out) {
    auto c = two_mode_reference_config();
    c.n_steps = 200;
    c.dims = {1, 4};
    c.n_paths = 60;
    c.n_target_samples = 60;
    c.k_list = {3, 5};
    c.output_dir = out;
    return c;
}

const char* kMinimal = R"(
[component1]
weight = 1
sigma = power_law exponent=2 scale=1
[sequences]
lambda = power_law exponent=2 scale=1
gamma = power_law exponent=1 scale=1
[schedule]
horizon = 1
n_steps = 10
[run]
dims = 1, 2
n_paths = 50
)";

}  // namespace

TEST_CASE("config parse defaults and reference") {
    const auto c = parse_config(kMinimal);
    CHECK(c.components.size() == 1);
    CHECK(c.amplitude == 1.0);
    CHECK(c.seed == 0);
    CHECK(c.n_target_samples == 50);
    CHECK(c.k_list == std::vector<std::size_t>{20});
    CHECK(c.schemes.size() == 2);

    const auto ref = two_mode_reference_config();
    CHECK(ref.dims == std::vector<std::size_t>{1, 5, 10, 20, 30, 40, 50, 60});
    CHECK(ref.schedule().h_max() == doctest::Approx(1e-3));
    CHECK(ref.mixture().weight(0) == 0.75);
    CHECK(ref.seed == 42);
    CHECK(parse_config(serialize(ref)) == ref);
}

TEST_CASE("config validation errors") {
    const std::string base = kMinimal;
    auto with = [&](const std::string& from, const std::string& to) {
        std::string s = base;
        s.replace(s.find(from), from.size(), to);
        return s;
    };
    CHECK_THROWS_AS(parse_config(with("dims = 1, 2", "dims = 2, 1")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("dims = 1, 2", "dims = 0, 2")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("horizon = 1", "horizon = 0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("n_steps = 10", "n_steps = 0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("n_paths = 50", "n_paths = 0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("weight = 1", "weight = 0.9")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("[sequences]", "[sequencez]")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("exponent=2 scale=1\n[seq", "exponent=two\n[seq")), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "[kl]\nk_list = 50\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "[analysis]\nepsilon = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[component1\nweight=1"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/ald.ini"), ConfigError);
    CHECK_NOTHROW(parse_config(base + "[kl]\nk_list = 3, 9\n"));
}

TEST_CASE("property: config round trip") {
    oracle::Gen g(31);
    for (int trial = 0; trial < 60; ++trial) {
        ExperimentConfig c;
        const std::size_t I = g.index(1, 3);
        double rest = 1.0;
        for (std::size_t i = 0; i < I; ++i) {
            const double w = i + 1 == I ? rest : rest * g.uniform(0.1, 0.9);
            rest -= w;
            SparseMean m;
            for (std::size_t j = 1; j <= 4; ++j)
                if (g.coin()) m[j] = g.normal();
            auto sigma = g.coin() ? SpectralSequence::power_law(g.uniform(0, 8), g.log_uniform(0.01, 10))
                                  : SpectralSequence::power_sum({{1.0, g.uniform(0, 4)}, {g.uniform(0.1, 2), g.uniform(5, 9)}},
                                                                {g.uniform(0.5, 2)});
            c.components.push_back({w, m, sigma});
        }
        c.lambda = SpectralSequence::power_law(g.uniform(0, 8), g.log_uniform(0.01, 10));
        c.gamma = g.coin() ? SpectralSequence::power_law(g.uniform(0, 8))
                           : SpectralSequence::explicit_list({g.uniform(0.1, 1), g.uniform(0.1, 1)},
                                                             SpectralSequence::TailRule::Exponent, g.uniform(0, 3));
        c.amplitude = g.log_uniform(0.1, 20);
        if (g.coin()) {
            c.horizon = g.log_uniform(0.1, 10);
            c.n_steps = g.index(1, 5000);
        } else {
            c.mesh = {0.0, g.uniform(0.1, 0.4), g.uniform(0.5, 0.9), 1.0 + g.uniform(0, 2)};
            c.horizon = c.mesh.back();
            c.n_steps = 3;
        }
        c.dims = {g.index(1, 3), g.index(4, 9), g.index(10, 100)};
        c.n_paths = g.index(30, 1000);
        c.seed = (static_cast<std::uint64_t>(g.index(0, 0xffffffffu)) << 32) | g.index(0, 0xffffffffu);
        c.schemes = g.coin() ? std::vector<Scheme>{Scheme::ELP} : std::vector<Scheme>{Scheme::EM, Scheme::ELP};
        c.k_list = {g.index(1, 10), g.index(11, 20)};
        c.n_target_samples = g.index(30, 900);
        c.epsilon = g.log_uniform(1e-4, 1);
        if (g.coin()) c.output_dir = "results/run" + std::to_string(trial);
        c.validate();
        const auto text = serialize(c);
        const auto back = parse_config(text);
        CHECK(back == c);
        CHECK(serialize(back) == text);
        CHECK(config_hash(back) == config_hash(c));
    }
}

TEST_CASE("config hash tracks content") {
    auto a = two_mode_reference_config(), b = a;
    CHECK(config_hash(a).size() == 16);
    b.seed = 43;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("output directory precedence") {
    auto c = two_mode_reference_config();
    ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
    CHECK(resolve_output_dir(c) == fs::path("/tmp/from_env"));
    c.output_dir = "explicit";
    CHECK(resolve_output_dir(c) == fs::path("explicit"));
    ::unsetenv(kOutputDirEnv);
    c.output_dir.clear();
    CHECK(resolve_output_dir(c) == fs::path("out"));
}

TEST_CASE("unwritable output fails before any work") {
    const auto root = scratch("unwritable");
    fs::create_directories(root);
    std::ofstream(root / "blocker") << "x";
    auto c = small_config(root / "blocker" / "sub");
    CHECK_THROWS_AS(run_kl_curve(c), IoError);
    CHECK_THROWS_AS(run_stability(c), IoError);
    CHECK_THROWS_AS(run_conditions(c, c.dims), IoError);
    CHECK_THROWS_AS(ensure_writable_dir(root / "blocker"), IoError);
    fs::remove_all(root);
}

TEST_CASE("manifest lists every artifact exactly once") {
    const auto dir = scratch("manifest");
    auto c = small_config(dir);
    const auto kl = run_kl_curve(c, {2});
    run_stability(c);
    run_conditions(c, c.dims);
    run_variance_profile(c, 4, {2});
    run_simulate(c, {2});
    run_stability(c);  // rewrite: moves stability files to the last run

    std::ifstream in(dir / "manifest.json");
    const auto doc = nlohmann::json::parse(in);
    CHECK(doc["software_version"] == std::string(kSoftwareVersion));
    std::multiset<std::string> listed;
    for (const auto& run : doc["runs"]) {
        CHECK(run.contains("config_hash"));
        CHECK(run["seed"] == 42);
        CHECK(run["wall_clock_seconds"].get<double>() >= 0.0);
        for (const auto& f : run["files"]) listed.insert(f.get<std::string>());
    }
    CHECK(doc["runs"].back()["command"] == "stability");
    std::multiset<std::string> present;
    for (const auto& e : fs::directory_iterator(dir)) present.insert(e.path().filename().string());
    CHECK(listed == present);
    for (const auto& f : kl.files) CHECK(fs::exists(dir / f));
    fs::remove_all(dir);
}

TEST_CASE("artifacts are byte-identical across thread counts") {
    const auto a = scratch("threads_a"), b = scratch("threads_b");
    run_kl_curve(small_config(a), {1});
    run_kl_curve(small_config(b), {3});
    for (const char* f : {"kl_curve.csv", "knn_estimates.csv", "kl_curve.json", "kl_curve.svg"})
        CHECK(slurp(a / f) == slurp(b / f));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("kl curve rows agree with a direct computation") {
    const auto dir = scratch("direct");
    auto c = small_config(dir);
    c.dims = {1};
    const auto r = run_kl_curve(c);
    const auto target = sample_target(c.mixture(), 1, c.n_target_samples, c.seed);
    for (Scheme s : c.schemes) {
        const auto chain = run_chain(s, c.mixture(), c.lambda, c.gamma, c.schedule(), 1, c.n_paths, c.seed);
        for (std::size_t k : c.k_list)
            CHECK(r.estimate(1, s, k) == knn_kl(target.samples, chain.samples, k).value);
    }
    CHECK_THROWS_AS(r.estimate(2, Scheme::EM, 3), std::out_of_range);
    const auto csv = slurp(dir / "kl_curve.csv");
    CHECK(csv.rfind("d,scheme,k,kl_estimate,overflow_count\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("variance profile run") {
    const auto dir = scratch("vprof");
    auto c = small_config(dir);
    const auto r = run_variance_profile(c, 4);
    CHECK(r.d == 4);
    CHECK(r.profiles.size() == 3);
    CHECK(r[Scheme::Target].profile.normalized.size() == 4);
    CHECK_FALSE(r.predicted_onset.has_value());
    CHECK(slurp(dir / "variance_profile.csv").rfind("j,scheme,normalized_variance,excluded_paths\n", 0) == 0);
    CHECK_THROWS_AS(run_variance_profile(c, 0), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("svg rendering") {
    LineChart chart{"t", "x", "y", true, {{"a", {1, 2, 3}, {1, 10, 0}}, {"b & c", {1, 3}, {0.5, 200}}}, {}};
    const auto svg = render_svg(chart);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("b &amp; c") != std::string::npos);
    CHECK(svg.find("b & c") == std::string::npos);
    std::size_t open = 0, close = 0;
    for (std::size_t p = 0; (p = svg.find('<', p)) != std::string::npos; ++p) ++open;
    for (std::size_t p = 0; (p = svg.find('>', p)) != std::string::npos; ++p) ++close;
    CHECK(open == close);
}
