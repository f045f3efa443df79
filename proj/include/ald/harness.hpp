#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ald/config.hpp"
#include "ald/estimators.hpp"
#include "ald/integrators.hpp"
#include "ald/mixture.hpp"
#include "ald/rng.hpp"
#include "ald/spectra.hpp"

namespace ald {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "ALD_OUTPUT_DIR";

/// Config output dir, else $ALD_OUTPUT_DIR, else ./out.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Creates `dir` if needed and probes it with a scratch file. Throws IoError.
void ensure_writable_dir(const std::filesystem::path& dir);

/// Artifact bookkeeping for one run. All runs sharing an output directory
/// share its manifest.json; a file rewritten by a later run moves to that
/// run's entry so each file is listed exactly once.
class RunManifest {
public:
    RunManifest(std::filesystem::path dir, std::string command, const ExperimentConfig& config);
    /// For commands that take no experiment config.
    RunManifest(std::filesystem::path dir, std::string command, std::string config_hash, std::uint64_t seed);

    /// Registers `name` and returns its full path.
    std::filesystem::path file(std::string_view name);
    void substream(Stream purpose, std::string_view use);

    /// Writes (merges into) dir/manifest.json.
    void write() const;

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::string command_;
    std::string config_hash_;
    std::uint64_t seed_;
    std::vector<std::string> files_;
    std::vector<std::pair<Stream, std::string>> substreams_;
    double started_;
};

struct RunOptions {
    unsigned threads = 0;  // forwarded to run_chain
};

// --- kl-curve --------------------------------------------------------------

struct KlCurveRow {
    std::size_t d = 0;
    Scheme scheme{};
    std::size_t k = 0;
    double kl_estimate = 0.0;
    std::size_t overflow_count = 0;
    std::size_t floored_count = 0;
};

struct KlCurveResult {
    std::vector<KlCurveRow> rows;
    std::vector<std::string> files;

    /// Throws std::out_of_range when the triple was not run.
    double estimate(std::size_t d, Scheme scheme, std::size_t k) const;
};

/// For every d and scheme: run_chain, an exact target ensemble of
/// n_target_samples rows, and knn_kl for each k. Writes kl_curve.csv
/// (d,scheme,k,kl_estimate,overflow_count), knn_estimates.csv, kl_curve.json
/// and kl_curve.svg.
KlCurveResult run_kl_curve(const ExperimentConfig& config, RunOptions options = {});

// --- variance-profile ------------------------------------------------------

/// EM profile values above this count as a variance excess.
inline constexpr double kVarianceExcess = 10.0;

struct SchemeProfile {
    Scheme scheme{};
    VarianceProfile profile;
    std::size_t overflow_count = 0;
};

struct VarianceProfileResult {
    std::size_t d = 0;
    std::vector<SchemeProfile> profiles;  // configured schemes, then the exact-target control
    /// First coordinate whose EM factor exceeds one over the mesh.
    std::optional<std::size_t> predicted_onset;
    /// First coordinate whose EM profile exceeds kVarianceExcess.
    std::optional<std::size_t> measured_onset;
    std::vector<std::string> files;

    const SchemeProfile& operator[](Scheme s) const;
};

/// Writes variance_profile.csv (j,scheme,normalized_variance,excluded_paths),
/// variance_profile.json and variance_profile.svg.
VarianceProfileResult run_variance_profile(const ExperimentConfig& config, std::size_t d,
                                           RunOptions options = {});

// --- conditions ------------------------------------------------------------

struct ConditionsRow {
    ConditionReport report;
    double K_d = 0.0;
    double T_eps = 0.0;
    ElpBoundTerms bound;
    StabilityReport stability;
    KlInitBound init_bound;
    /// KL(target || initial law) when the head block is small enough.
    std::optional<double> factorized_kl;
};

struct ConditionsResult {
    std::vector<ConditionsRow> rows;
    std::vector<std::string> files;
};

/// Writes conditions.csv (the per-condition table) and conditions.json.
ConditionsResult run_conditions(const ExperimentConfig& config, std::span<const std::size_t> d_list);

// --- stability / simulate --------------------------------------------------

/// Stability report at the largest configured dimension; stability.csv/json.
StabilityReport run_stability(const ExperimentConfig& config);

/// Terminal ensembles at the largest configured dimension for each scheme and
/// the exact target: samples_<scheme>.csv, moments_<scheme>.csv, simulate.json.
std::vector<TrajectoryEnsemble> run_simulate(const ExperimentConfig& config, RunOptions options = {});

}  // namespace ald
