#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ald/mixture.hpp"
#include "ald/sequence.hpp"

namespace ald {

/// Experiment description. Text format (INI-style sections):
///
///   [component1]            ; one section per mixture component, numbered from 1
///   weight = 0.75
///   mean =                  ; sparse "index:value" list, e.g. 1:8, 3:-0.5
///   sigma = power_law exponent=6 scale=1
///
///   [sequences]
///   lambda = power_law exponent=6 scale=1
///   gamma = power_law exponent=4 scale=1
///
///   [schedule]
///   horizon = 2.5
///   amplitude = 10          ; theta(t) = amplitude (T - t) / T
///   n_steps = 2500          ; or: mesh = 0, 0.5, 1  (explicit, ends at T)
///
///   [run]
///   dims = 1, 5, 10
///   n_paths = 800
///   seed = 42
///   schemes = EM, ELP
///   output = out          ; optional
///
///   [kl]
///   k_list = 20
///   n_target_samples = 800
///
///   [analysis]
///   epsilon = 0.01          ; target accuracy for the annealing horizon T_eps
struct ExperimentConfig {
    std::vector<MixtureComponent> components;
    SpectralSequence lambda;
    SpectralSequence gamma;

    double horizon = 1.0;
    double amplitude = 1.0;
    std::size_t n_steps = 1;
    std::vector<double> mesh;  // explicit mesh; overrides horizon/n_steps when non-empty

    std::vector<std::size_t> dims;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    std::vector<Scheme> schemes{Scheme::EM, Scheme::ELP};
    std::filesystem::path output_dir;  // empty: fall back to $ALD_OUTPUT_DIR, then ./out

    std::vector<std::size_t> k_list{20};
    std::size_t n_target_samples = 800;

    double epsilon = 0.01;

    MixtureSpec mixture() const;
    AnnealingSchedule schedule() const;

    /// Throws ConfigError on non-increasing dims, nonpositive T or h, weights
    /// not summing to one, n_paths = 0, or k out of range for the sample sizes.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize(const ExperimentConfig& config);

/// FNV-1a 64 of the serialized config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// The two-component experiment: w = (0.75, 0.25), m_2 = 8 e_1,
/// sigma = lambda = j^-6, gamma = j^-4, theta(t) = 10 (1 - t/T), h = 1e-3,
/// 2500 steps, n = 800, k = 20, dims {1,5,10,20,30,40,50,60}.
ExperimentConfig two_mode_reference_config();

}  // namespace ald
