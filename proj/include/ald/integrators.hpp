#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ald/mixture.hpp"
#include "ald/sequence.hpp"

namespace ald {

/// Per-coordinate, per-interval coefficients of the exact-linear-part step
///   Y_{n+1} = phi Y_n + psi G(Y_n) + sqrt(noise_var) xi.
struct ElpCoeffs {
    double phi = 1.0;
    double psi = 0.0;
    double noise_var = 0.0;
};

/// Closed-form ELP coefficients on [t_n, t_np1] for the linear drift
/// -gamma / b(t) with b(t) = sigma_under + A lambda (T - t) / T.
///
/// With p = gamma T / (A lambda) and rho = b(t_n) / b(t_np1) >= 1:
///   phi       = rho^-p
///   psi       = p b(t_np1) (rho^(1-p) - 1) / (1-p)
///   noise_var = 2p b(t_np1) (rho^(1-2p) - 1) / (1-2p)
/// evaluated through expm1 so the p -> 1 and 2p -> 1 limits stay accurate.
/// lambda = 0 falls back to the constant-coefficient OU step.
ElpCoeffs elp_coeffs(double t_n, double t_np1, double sigma_under, double lambda, double gamma,
                     double T, double A);

/// One Euler-Maruyama step from t_n with step h.
Vector em_step(const Vector& state, double t_n, double h, const MixtureSpec& mixture,
               const SpectralSequence& lambda, const SpectralSequence& gamma,
               const AnnealingSchedule& schedule, const Vector& noise);

/// One ELP step over mesh interval n.
Vector elp_step(const Vector& state, std::size_t n, const MixtureSpec& mixture,
                const SpectralSequence& lambda, const SpectralSequence& gamma,
                const AnnealingSchedule& schedule, const Vector& noise);

/// EM coordinates whose magnitude exceeds this are clamped and the path flagged.
inline constexpr double kEmOverflowClamp = 1e150;

struct ChainOptions {
    /// Worker threads; 0 picks the hardware concurrency. Results do not depend
    /// on this value.
    unsigned threads = 0;
};

/// Draws Y_0 from rho_0 and applies every mesh step of the chosen scheme.
/// Noise for (path, step) comes from its own substream, so EM and ELP runs
/// with the same seed share random numbers.
TrajectoryEnsemble run_chain(Scheme scheme, const MixtureSpec& mixture, const SpectralSequence& lambda,
                             const SpectralSequence& gamma, const AnnealingSchedule& schedule,
                             std::size_t d, std::size_t n_paths, std::uint64_t seed,
                             ChainOptions options = {});

struct StabilityReport {
    double h = 0.0;                      // h_max of the mesh
    std::vector<double> worst_factor;    // j -> max_{n<N} |1 - h_n gamma_j / b_{t_n,j}|
    std::optional<std::size_t> first_unstable_index;  // 1-based
    double h_bound = 0.0;                // 2 / sup_{n<N, j<=d} gamma_j / b_{t_n,j}
};

/// Linear stability of the EM factors over the actual mesh. Drift is only
/// evaluated at t_0..t_{N-1}, so the final grid point never enters the sup.
StabilityReport stability_report(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                 const SpectralSequence& gamma, const AnnealingSchedule& schedule,
                                 std::size_t d);

/// CSV (j,worst_factor,stable) and JSON {h, h_bound, first_unstable_index}.
void write_csv(std::ostream& os, const StabilityReport& report);
void write_json(std::ostream& os, const StabilityReport& report);

/// Per-coordinate terminal mean and variance of an ensemble (unflagged paths).
struct MomentSummary {
    std::vector<double> mean;
    std::vector<double> variance;
    std::size_t used_paths = 0;
};

MomentSummary moment_summary(const TrajectoryEnsemble& ensemble);
void write_csv(std::ostream& os, const MomentSummary& moments);

}  // namespace ald
