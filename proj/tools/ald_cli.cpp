// Command-line front end: ald <subcommand> [--config FILE] [--seed N] [--out DIR] ...
//
// Exit status: 0 success, 2 invalid input, 1 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ald/config.hpp"
#include "ald/error.hpp"
#include "ald/harness.hpp"
#include "ald/selftest.hpp"
#include "ald/spectra.hpp"
#include "ald/text.hpp"

namespace {

using json = nlohmann::ordered_json;

struct Common {
    std::string config;
    std::string seed;
    std::string out;
    unsigned threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "experiment config file (default: built-in two-mode experiment)");
    sub->add_option("--seed", c.seed, "64-bit seed, overrides the config");
    sub->add_option("--out", c.out, "output directory (default: config, then $ALD_OUTPUT_DIR, then ./out)");
    sub->add_option("--threads", c.threads, "worker threads, 0 = hardware concurrency");
}

ald::ExperimentConfig load(const Common& c) {
    auto cfg = c.config.empty() ? ald::two_mode_reference_config() : ald::load_config(c.config);
    if (!c.seed.empty()) cfg.seed = ald::text::parse_u64(c.seed);
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

std::vector<std::size_t> size_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (auto piece : ald::text::split(s, ','))
        out.push_back(static_cast<std::size_t>(ald::text::parse_u64(piece)));
    return out;
}

std::string fmt(double v) { return ald::text::format_double(v); }

void print_files(const ald::ExperimentConfig& cfg, const std::vector<std::string>& files) {
    const auto dir = ald::resolve_output_dir(cfg);
    for (const auto& f : files) std::cout << "  wrote " << (dir / f).string() << '\n';
}

int cmd_conditions(const Common& c, const std::string& dims, const std::string& epsilon) {
    auto cfg = load(c);
    if (!epsilon.empty()) cfg.epsilon = ald::text::parse_double(epsilon);
    const auto d_list = dims.empty() ? cfg.dims : size_list(dims);
    const auto result = ald::run_conditions(cfg, d_list);
    for (const auto& row : result.rows) {
        std::cout << "d = " << row.report.dimension << '\n';
        for (const auto& e : row.report.entries)
            std::cout << "  " << ald::to_string(e.id) << "  partial_sum=" << fmt(e.partial_sum) << "  "
                      << ald::verdict_wording(e.verdict) << '\n';
        std::cout << "  K_d=" << fmt(row.K_d) << "  T_eps=" << fmt(row.T_eps)
                  << "  annealing_term=" << fmt(row.bound.annealing_term) << "  EM h_bound=" << fmt(row.stability.h_bound)
                  << '\n';
    }
    print_files(cfg, result.files);
    return 0;
}

int cmd_stability(const Common& c, std::size_t dim) {
    auto cfg = load(c);
    if (dim) cfg.dims = {dim};
    const auto r = ald::run_stability(cfg);
    std::cout << "h = " << fmt(r.h) << ", h_bound = " << fmt(r.h_bound) << ", first unstable coordinate: "
              << (r.first_unstable_index ? std::to_string(*r.first_unstable_index) : std::string("none")) << '\n';
    print_files(cfg, {"stability.csv", "stability.json", "manifest.json"});
    return 0;
}

int cmd_simulate(const Common& c, std::size_t dim) {
    auto cfg = load(c);
    if (dim) cfg.dims = {dim};
    const auto ensembles = ald::run_simulate(cfg, {c.threads});
    for (const auto& e : ensembles)
        std::cout << ald::to_string(e.scheme) << ": " << e.n_paths() << " paths, d = " << e.dim()
                  << ", overflowed paths = " << e.overflow_count << '\n';
    return 0;
}

int cmd_kl_curve(const Common& c, const std::string& dims, const std::string& ks) {
    auto cfg = load(c);
    if (!dims.empty()) cfg.dims = size_list(dims);
    if (!ks.empty()) cfg.k_list = size_list(ks);
    cfg.validate();
    const auto result = ald::run_kl_curve(cfg, {c.threads});
    for (const auto& r : result.rows)
        std::cout << "d=" << r.d << "  " << ald::to_string(r.scheme) << "  k=" << r.k << "  KL~" << fmt(r.kl_estimate)
                  << "  overflow=" << r.overflow_count << '\n';
    print_files(cfg, result.files);
    return 0;
}

int cmd_variance_profile(const Common& c, std::size_t dim) {
    auto cfg = load(c);
    const std::size_t d = dim ? dim : cfg.dims.back();
    const auto result = ald::run_variance_profile(cfg, d, {c.threads});
    for (const auto& p : result.profiles) {
        double lo = p.profile.normalized.front(), hi = lo;
        for (double v : p.profile.normalized) lo = std::min(lo, v), hi = std::max(hi, v);
        std::cout << ald::to_string(p.scheme) << ": normalized variance in [" << fmt(lo) << ", " << fmt(hi)
                  << "], excluded paths " << p.profile.excluded_paths << '\n';
    }
    auto show = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("none"); };
    std::cout << "EM onset: predicted " << show(result.predicted_onset) << ", measured " << show(result.measured_onset)
              << " (first j with profile > " << fmt(ald::kVarianceExcess) << ")\n";
    print_files(cfg, result.files);
    return 0;
}

void write_side_json(const Common& c, const std::string& command, const std::string& name, const json& doc) {
    if (c.out.empty()) return;
    ald::ensure_writable_dir(c.out);
    ald::RunManifest manifest(c.out, command, "none", c.seed.empty() ? 0 : ald::text::parse_u64(c.seed));
    std::ofstream os(manifest.file(name));
    if (!os) throw ald::IoError("cannot write " + name);
    os << doc.dump(2) << '\n';
    os.close();
    manifest.write();
}

int cmd_design(const Common& c, double a, double b) {
    const auto range = ald::power_law_admissible_range(a, b);
    const auto gamma = ald::balanced_preconditioner(ald::SpectralSequence::power_law(b));
    const double c_bal = gamma.asymptotic()->exponent;
    std::cout << "inputs: sigma_j ~ j^-" << fmt(a) << ", lambda_j ~ j^-" << fmt(b) << '\n';
    if (range)
        std::cout << "admissible preconditioner exponents c (gamma_j ~ j^-c): (" << fmt(range->lo) << ", "
                  << fmt(range->hi) << ")\n";
    else
        std::cout << "admissible preconditioner exponents c: empty\n";
    const bool inside = range && range->contains(c_bal);
    std::cout << "balanced preconditioner: gamma_j ~ j^-" << fmt(c_bal) << (inside ? " (inside range)" : " (outside range)")
              << '\n';
    json doc{{"a", a},
             {"b", b},
             {"range", range ? json{range->lo, range->hi} : json(nullptr)},
             {"balanced_exponent", c_bal},
             {"balanced_inside_range", inside}};
    write_side_json(c, "design", "design.json", doc);
    return 0;
}

int cmd_selftest(const Common& c) {
    const std::uint64_t seed = c.seed.empty() ? 0 : ald::text::parse_u64(c.seed);
    const auto checks = ald::run_selftest(seed);
    bool ok = true;
    json doc = json::array();
    for (const auto& ch : checks) {
        std::cout << (ch.passed ? "PASS  " : "FAIL  ") << ch.name << "  (" << ch.detail << ")\n";
        ok = ok && ch.passed;
        doc.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
    }
    write_side_json(c, "selftest", "selftest.json", json{{"checks", doc}, {"passed", ok}});
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annealed Langevin sampling: conditions, stability and EM/ELP experiments", "ald"};
    app.require_subcommand(1);

    Common common;
    std::string dims, ks, epsilon;
    std::size_t dim = 0;
    double a = 0.0, b = 0.0;

    auto* conditions = app.add_subcommand("conditions", "summability conditions, K_d, T_eps, bound terms");
    add_common(conditions, common);
    conditions->add_option("--dims", dims, "comma-separated truncation levels (default: config dims)");
    conditions->add_option("--epsilon", epsilon, "target accuracy for the annealing horizon");

    auto* stability = app.add_subcommand("stability", "EM linear stability over the mesh");
    add_common(stability, common);
    stability->add_option("--dim", dim, "truncation level (default: largest config dim)");

    auto* simulate = app.add_subcommand("simulate", "terminal ensembles of each scheme and the exact target");
    add_common(simulate, common);
    simulate->add_option("--dim", dim, "truncation level (default: largest config dim)");

    auto* kl_curve = app.add_subcommand("kl-curve", "kNN KL estimate versus dimension for each scheme");
    add_common(kl_curve, common);
    kl_curve->add_option("--dims", dims, "comma-separated truncation levels");
    kl_curve->add_option("--k", ks, "comma-separated neighbour counts");

    auto* profile = app.add_subcommand("variance-profile", "per-coordinate normalized variance at one d");
    add_common(profile, common);
    profile->add_option("--dim,--d", dim, "truncation level (default: largest config dim)");

    auto* design = app.add_subcommand("design", "admissible preconditioner range for power-law inputs");
    add_common(design, common);
    design->add_option("--a", a, "sigma_j ~ j^-a")->required();
    design->add_option("--b", b, "lambda_j ~ j^-b")->required();

    auto* selftest = app.add_subcommand("selftest", "internal consistency checks");
    add_common(selftest, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*conditions) return cmd_conditions(common, dims, epsilon);
        if (*stability) return cmd_stability(common, dim);
        if (*simulate) return cmd_simulate(common, dim);
        if (*kl_curve) return cmd_kl_curve(common, dims, ks);
        if (*profile) return cmd_variance_profile(common, dim);
        if (*design) return cmd_design(common, a, b);
        if (*selftest) return cmd_selftest(common);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << app.help();
    return 2;
}
