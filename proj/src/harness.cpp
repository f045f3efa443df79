#include "ald/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ald/error.hpp"
#include "ald/svg.hpp"
#include "ald/text.hpp"

namespace ald {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
}

void write_text(const fs::path& path, const std::string& body) {
    auto os = open_out(path);
    os << body;
    if (!os) throw IoError("write to '" + path.string() + "' failed");
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

RunManifest start(const ExperimentConfig& config, std::string command) {
    config.validate();
    const auto dir = resolve_output_dir(config);
    ensure_writable_dir(dir);
    return RunManifest(dir, std::move(command), config);
}

void chain_substreams(RunManifest& m) {
    m.substream(Stream::Target, "exact target ensemble, one substream per path");
    m.substream(Stream::Initial, "initial draws Y_0, one substream per path");
    m.substream(Stream::Dynamics, "driving noise, one substream per (path, step); shared by EM and ELP");
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "out";
}

void ensure_writable_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
    const auto probe = dir / ".ald_write_probe";
    {
        std::ofstream os(probe);
        if (!os) throw IoError("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

// --- manifest --------------------------------------------------------------

RunManifest::RunManifest(fs::path dir, std::string command, const ExperimentConfig& config)
    : dir_(std::move(dir)),
      command_(std::move(command)),
      config_hash_(config_hash(config)),
      seed_(config.seed),
      started_(now_seconds()) {}

RunManifest::RunManifest(fs::path dir, std::string command, std::string config_hash, std::uint64_t seed)
    : dir_(std::move(dir)),
      command_(std::move(command)),
      config_hash_(std::move(config_hash)),
      seed_(seed),
      started_(now_seconds()) {}

fs::path RunManifest::file(std::string_view name) {
    files_.emplace_back(name);
    return dir_ / fs::path(name);
}

void RunManifest::substream(Stream purpose, std::string_view use) { substreams_.emplace_back(purpose, use); }

void RunManifest::write() const {
    const auto path = dir_ / "manifest.json";
    json doc;
    if (fs::exists(path)) {
        std::ifstream in(path);
        doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("runs")) doc = json();
    }
    if (doc.is_null()) doc = json{{"software_version", kSoftwareVersion}, {"runs", json::array()}};
    doc["software_version"] = kSoftwareVersion;

    std::vector<std::string> listed = files_;
    listed.emplace_back("manifest.json");
    auto& runs = doc["runs"];
    json kept = json::array();
    for (auto& run : runs) {
        json remaining = json::array();
        for (auto& f : run["files"]) {
            const auto name = f.get<std::string>();
            if (std::find(listed.begin(), listed.end(), name) == listed.end()) remaining.push_back(name);
        }
        run["files"] = remaining;
        if (!remaining.empty()) kept.push_back(run);
    }

    json entry;
    entry["command"] = command_;
    entry["config_hash"] = config_hash_;
    entry["seed"] = seed_;
    entry["wall_clock_seconds"] = now_seconds() - started_;
    json streams = json::array();
    for (const auto& [purpose, use] : substreams_)
        streams.push_back({{"purpose", to_string(purpose)},
                           {"purpose_id", static_cast<std::uint32_t>(purpose)},
                           {"counter", "(block, step, path, purpose)"},
                           {"key", seed_},
                           {"use", use}});
    entry["rng_substreams"] = streams;
    entry["files"] = listed;
    kept.push_back(entry);
    doc["runs"] = kept;
    write_text(path, doc.dump(2) + "\n");
}

// --- kl-curve --------------------------------------------------------------

double KlCurveResult::estimate(std::size_t d, Scheme scheme, std::size_t k) const {
    for (const auto& r : rows)
        if (r.d == d && r.scheme == scheme && r.k == k) return r.kl_estimate;
    throw std::out_of_range("no kl-curve row for the requested (d, scheme, k)");
}

KlCurveResult run_kl_curve(const ExperimentConfig& config, RunOptions options) {
    auto manifest = start(config, "kl-curve");
    chain_substreams(manifest);
    const auto mixture = config.mixture();
    const auto schedule = config.schedule();

    KlCurveResult result;
    for (std::size_t d : config.dims) {
        const auto target = sample_target(mixture, d, config.n_target_samples, config.seed);
        for (Scheme s : config.schemes) {
            const auto chain = run_chain(s, mixture, config.lambda, config.gamma, schedule, d, config.n_paths,
                                         config.seed, ChainOptions{options.threads});
            const auto est = knn_kl(target.samples, chain.samples, config.k_list);
            for (const auto& e : est)
                result.rows.push_back({d, s, e.k, e.value, chain.overflow_count, e.floored_count});
        }
    }

    {
        auto os = open_out(manifest.file("kl_curve.csv"));
        os << "d,scheme,k,kl_estimate,overflow_count\n";
        for (const auto& r : result.rows)
            os << r.d << ',' << to_string(r.scheme) << ',' << r.k << ',' << text::format_double(r.kl_estimate) << ','
               << r.overflow_count << '\n';
    }
    {
        auto os = open_out(manifest.file("knn_estimates.csv"));
        write_csv_header(os, KnnKlEstimate{});
        for (const auto& r : result.rows) {
            KnnKlEstimate e{r.kl_estimate, r.k, config.n_target_samples, config.n_paths, r.d, r.floored_count};
            write_csv_row(os, e, to_string(r.scheme));
        }
    }
    {
        json doc;
        doc["estimand"] = "KL(target || law of Y_T), kNN estimate";
        doc["n_target_samples"] = config.n_target_samples;
        doc["n_paths"] = config.n_paths;
        doc["h_max"] = schedule.h_max();
        json per_d = json::array();
        for (std::size_t d : config.dims)
            for (std::size_t k : config.k_list) {
                json row{{"d", d}, {"k", k}};
                for (Scheme s : config.schemes) row[std::string(to_string(s))] = num_or_null(result.estimate(d, s, k));
                per_d.push_back(row);
            }
        doc["estimates"] = per_d;
        write_text(manifest.file("kl_curve.json"), doc.dump(2) + "\n");
    }
    {
        LineChart chart{"kNN estimate of KL(target || sampler) versus dimension", "dimension d", "KL estimate",
                        true, {}, {}};
        for (Scheme s : config.schemes)
            for (std::size_t k : config.k_list) {
                ChartSeries series{std::string(to_string(s)) + " k=" + std::to_string(k), {}, {}};
                for (const auto& r : result.rows)
                    if (r.scheme == s && r.k == k) {
                        series.x.push_back(static_cast<double>(r.d));
                        series.y.push_back(r.kl_estimate);
                    }
                chart.series.push_back(std::move(series));
            }
        write_text(manifest.file("kl_curve.svg"), render_svg(chart));
    }
    manifest.write();
    result.files = manifest.files();
    return result;
}

// --- variance-profile ------------------------------------------------------

const SchemeProfile& VarianceProfileResult::operator[](Scheme s) const {
    for (const auto& p : profiles)
        if (p.scheme == s) return p;
    throw std::out_of_range("scheme not present in variance profile");
}

VarianceProfileResult run_variance_profile(const ExperimentConfig& config, std::size_t d, RunOptions options) {
    if (d == 0) throw ConfigError("variance profile dimension must be >= 1");
    auto manifest = start(config, "variance-profile");
    chain_substreams(manifest);
    const auto mixture = config.mixture();
    const auto schedule = config.schedule();

    VarianceProfileResult result;
    result.d = d;
    for (Scheme s : config.schemes) {
        const auto chain = run_chain(s, mixture, config.lambda, config.gamma, schedule, d, config.n_paths,
                                     config.seed, ChainOptions{options.threads});
        result.profiles.push_back({s, variance_profile(chain, mixture, d), chain.overflow_count});
    }
    const auto control = sample_target(mixture, d, config.n_paths, config.seed);
    result.profiles.push_back({Scheme::Target, variance_profile(control, mixture, d), 0});

    result.predicted_onset = stability_report(mixture, config.lambda, config.gamma, schedule, d).first_unstable_index;
    for (const auto& p : result.profiles)
        if (p.scheme == Scheme::EM)
            for (std::size_t j = 0; j < d; ++j)
                if (p.profile.normalized[j] > kVarianceExcess) {
                    result.measured_onset = j + 1;
                    break;
                }

    {
        auto os = open_out(manifest.file("variance_profile.csv"));
        os << "j,scheme,normalized_variance,excluded_paths\n";
        for (const auto& p : result.profiles)
            for (std::size_t j = 0; j < d; ++j)
                os << j + 1 << ',' << to_string(p.scheme) << ',' << text::format_double(p.profile.normalized[j]) << ','
                   << p.profile.excluded_paths << '\n';
    }
    {
        json doc;
        doc["d"] = d;
        doc["n_paths"] = config.n_paths;
        doc["h_max"] = schedule.h_max();
        doc["predicted_first_unstable_index"] = opt(result.predicted_onset);
        doc["measured_onset_index"] = opt(result.measured_onset);
        doc["measured_onset_threshold"] = kVarianceExcess;
        json schemes = json::object();
        for (const auto& p : result.profiles) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (double v : p.profile.normalized) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            schemes[std::string(to_string(p.scheme))] = {{"min", num_or_null(lo)},
                                                         {"max", num_or_null(hi)},
                                                         {"overflow_count", p.overflow_count},
                                                         {"excluded_paths", p.profile.excluded_paths}};
        }
        doc["schemes"] = schemes;
        write_text(manifest.file("variance_profile.json"), doc.dump(2) + "\n");
    }
    {
        LineChart chart{"Normalized variance profile at d = " + std::to_string(d), "coordinate j",
                        "empirical / target variance", true, {}, {1.0, kVarianceExcess}};
        for (const auto& p : result.profiles) {
            ChartSeries series{std::string(to_string(p.scheme)), {}, p.profile.normalized};
            for (std::size_t j = 1; j <= d; ++j) series.x.push_back(static_cast<double>(j));
            chart.series.push_back(std::move(series));
        }
        write_text(manifest.file("variance_profile.svg"), render_svg(chart));
    }
    manifest.write();
    result.files = manifest.files();
    return result;
}

// --- conditions ------------------------------------------------------------

ConditionsResult run_conditions(const ExperimentConfig& config, std::span<const std::size_t> d_list) {
    if (d_list.empty()) throw ConfigError("conditions need at least one dimension");
    auto manifest = start(config, "conditions");
    const auto mixture = config.mixture();
    const auto schedule = config.schedule();
    const double T = schedule.horizon();

    ConditionsResult result;
    for (std::size_t d : d_list) {
        if (d == 0) throw ConfigError("dimensions must be >= 1");
        ConditionsRow row;
        row.report = eval_conditions(mixture, config.lambda, config.gamma, d);
        row.K_d = annealing_constant_Kd(mixture, config.lambda, config.gamma, d);
        row.T_eps = annealing_horizon(row.K_d, config.epsilon);
        row.bound = elp_bound_terms(mixture, config.lambda, config.gamma, d, T, schedule.h_max());
        row.stability = stability_report(mixture, config.lambda, config.gamma, schedule, d);
        row.init_bound = kl_init_upper_bound(mixture, config.lambda, schedule.amplitude(), d);
        try {
            row.factorized_kl = factorized_kl_init(mixture, config.lambda, schedule.amplitude(), d);
        } catch (const UnsupportedError&) {
        }
        result.rows.push_back(std::move(row));
    }

    {
        auto os = open_out(manifest.file("conditions.csv"));
        write_csv_header(os, result.rows.front().report);
        for (const auto& r : result.rows) write_csv_rows(os, r.report);
    }
    {
        json doc;
        doc["epsilon"] = config.epsilon;
        doc["T"] = T;
        doc["amplitude"] = schedule.amplitude();
        json rows = json::array();
        for (const auto& r : result.rows) {
            json conds = json::array();
            for (const auto& e : r.report.entries)
                conds.push_back({{"id", to_string(e.id)},
                                 {"partial_sum", num_or_null(e.partial_sum)},
                                 {"tail_exponent", e.tail_exponent ? num_or_null(*e.tail_exponent) : json(nullptr)},
                                 {"tail_estimate", opt(e.tail_estimate)},
                                 {"verdict", to_string(e.verdict)},
                                 {"wording", verdict_wording(e.verdict)}});
            rows.push_back({{"d", r.report.dimension},
                            {"conditions", conds},
                            {"K_d", r.K_d},
                            {"T_eps", num_or_null(r.T_eps)},
                            {"annealing_term", r.bound.annealing_term},
                            {"disc_term",
                             {{"constant", r.bound.disc_term.constant},
                              {"factor_1_plus_T2", r.bound.disc_term.factor},
                              {"h_max", r.bound.disc_term.h_max}}},
                            {"em_h_bound", num_or_null(r.stability.h_bound)},
                            {"em_step", r.stability.h},
                            {"em_first_unstable_index", opt(r.stability.first_unstable_index)},
                            {"kl_init_upper_bound", r.init_bound.exact_form},
                            {"kl_init_quadratic_bound", r.init_bound.quadratic_form},
                            {"kl_init_factorized", opt(r.factorized_kl)}});
        }
        doc["dimensions"] = rows;
        write_text(manifest.file("conditions.json"), doc.dump(2) + "\n");
    }
    manifest.write();
    result.files = manifest.files();
    return result;
}

// --- stability / simulate --------------------------------------------------

StabilityReport run_stability(const ExperimentConfig& config) {
    auto manifest = start(config, "stability");
    const auto report =
        stability_report(config.mixture(), config.lambda, config.gamma, config.schedule(), config.dims.back());
    {
        auto os = open_out(manifest.file("stability.csv"));
        write_csv(os, report);
    }
    {
        auto os = open_out(manifest.file("stability.json"));
        write_json(os, report);
    }
    manifest.write();
    return report;
}

std::vector<TrajectoryEnsemble> run_simulate(const ExperimentConfig& config, RunOptions options) {
    auto manifest = start(config, "simulate");
    chain_substreams(manifest);
    const auto mixture = config.mixture();
    const auto schedule = config.schedule();
    const std::size_t d = config.dims.back();

    std::vector<TrajectoryEnsemble> out;
    for (Scheme s : config.schemes)
        out.push_back(run_chain(s, mixture, config.lambda, config.gamma, schedule, d, config.n_paths, config.seed,
                                ChainOptions{options.threads}));
    out.push_back(sample_target(mixture, d, config.n_paths, config.seed));

    json summary = json::array();
    for (const auto& e : out) {
        const std::string tag(to_string(e.scheme));
        {
            auto os = open_out(manifest.file("samples_" + tag + ".csv"));
            write_csv(os, e);
        }
        {
            auto os = open_out(manifest.file("moments_" + tag + ".csv"));
            write_csv(os, moment_summary(e));
        }
        summary.push_back({{"scheme", tag},
                           {"d", e.dim()},
                           {"n_paths", e.n_paths()},
                           {"n_steps", e.n_steps},
                           {"h_max", e.h_max},
                           {"overflow_count", e.overflow_count}});
    }
    write_text(manifest.file("simulate.json"), json{{"ensembles", summary}}.dump(2) + "\n");
    manifest.write();
    return out;
}

}  // namespace ald
