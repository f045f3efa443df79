#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "ald/mixture.hpp"

namespace ald {

/// Nearest-neighbour distances below this are floored before taking logs.
inline constexpr double kDistanceFloor = 1e-300;

struct KnnKlEstimate {
    double value = 0.0;  // not sign-constrained
    std::size_t k = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t d = 0;
    std::size_t floored_count = 0;  // distances that hit kDistanceFloor
};

/// Fixed-k nearest-neighbour estimate of KL(P || Q) from X ~ P (n rows) and
/// Y ~ Q (m rows):
///   (d/n) sum_i log(s_k(x_i) / r_k(x_i)) + log(m / (n-1)),
/// where r_k is the k-th neighbour distance of x_i within X \ {x_i} and s_k
/// its k-th neighbour distance within Y. Exact brute-force search, Euclidean
/// metric on raw coordinates.
KnnKlEstimate knn_kl(const Matrix& X, const Matrix& Y, std::size_t k);

/// Same estimator for several k sharing one distance computation.
std::vector<KnnKlEstimate> knn_kl(const Matrix& X, const Matrix& Y, std::span<const std::size_t> ks);

/// Rows: d,scheme,k,n,m,value,floored_count
void write_csv_header(std::ostream& os, const KnnKlEstimate&);
void write_csv_row(std::ostream& os, const KnnKlEstimate& e, std::string_view scheme);

/// Var of coordinate j under the mixture: sum_i w_i (sigma_ij + m_ij^2) - (sum_i w_i m_ij)^2.
double target_marginal_variance(const MixtureSpec& mixture, std::size_t j);

struct VarianceProfile {
    std::vector<double> normalized;  // j = 1..d
    std::size_t excluded_paths = 0;
};

/// Empirical per-coordinate variance divided by the target marginal variance.
/// Flagged (overflowed) paths are excluded. Throws EstimationError when fewer
/// than two usable paths remain.
VarianceProfile variance_profile(const TrajectoryEnsemble& ensemble, const MixtureSpec& mixture,
                                 std::size_t d);

/// Rows: j,normalized_variance,excluded_paths
void write_csv(std::ostream& os, const VarianceProfile& profile);

}  // namespace ald
