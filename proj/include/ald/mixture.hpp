#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ald/sequence.hpp"

namespace ald {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sparse mean: 1-based coordinate -> value. Only finitely many entries.
using SparseMean = std::map<std::size_t, double>;

struct MixtureComponent {
    double weight = 1.0;
    SparseMean mean;
    SpectralSequence sigma;

    friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

/// Finite diagonal Gaussian mixture sum_i w_i N(m_i, diag(sigma_i)), defined at
/// every truncation level d.
class MixtureSpec {
public:
    /// Throws ConfigError when empty, when weights are negative or do not sum
    /// to one within 1e-12, or when a mean index is 0.
    explicit MixtureSpec(std::vector<MixtureComponent> components);

    std::size_t size() const { return components_.size(); }
    const std::vector<MixtureComponent>& components() const { return components_; }
    const MixtureComponent& operator[](std::size_t i) const { return components_[i]; }

    double weight(std::size_t i) const { return components_[i].weight; }
    double mean(std::size_t i, std::size_t j) const;
    double sigma(std::size_t i, std::size_t j) const { return components_[i].sigma(j); }

    /// Largest coordinate carrying a nonzero mean (0 when all means vanish).
    std::size_t mean_support_end() const;

    /// True when every component has the same sigma at j and the same mean at j.
    bool coordinate_is_shared(std::size_t j) const;

    friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;

private:
    std::vector<MixtureComponent> components_;
};

/// theta(t) = A (T - t) / T on a strictly increasing mesh 0 = t_0 < ... < t_N = T.
class AnnealingSchedule {
public:
    AnnealingSchedule(double amplitude, std::vector<double> mesh);
    static AnnealingSchedule uniform(double horizon, double amplitude, std::size_t n_steps);

    double horizon() const { return mesh_.back(); }
    double amplitude() const { return amplitude_; }
    double theta(double t) const;
    std::size_t n_steps() const { return mesh_.size() - 1; }
    double time(std::size_t n) const { return mesh_[n]; }
    double step(std::size_t n) const { return mesh_[n + 1] - mesh_[n]; }
    double h_max() const { return h_max_; }
    const std::vector<double>& mesh() const { return mesh_; }

    friend bool operator==(const AnnealingSchedule&, const AnnealingSchedule&) = default;

private:
    double amplitude_;
    std::vector<double> mesh_;
    double h_max_;
};

/// Score decomposition  grad log rho_t(x) = -inv_b .* x + g.
struct ScoreSplit {
    Vector inv_b;
    Vector g;
};

/// Mixture, smoothing sequence and truncation level baked into dense arrays.
/// All per-point evaluations used by the samplers go through this type.
class TruncatedTarget {
public:
    TruncatedTarget(const MixtureSpec& mixture, const SpectralSequence& lambda, std::size_t d);

    /// Annealed quantities frozen at one smoothing level theta.
    struct Frame {
        double theta = 0.0;
        std::vector<double> inv_b;       // d
        std::vector<double> inv_v;       // components x d
        std::vector<double> log_norm;    // components: log w_i - 1/2 sum_j log v_ij (shared coords skipped)
    };

    Frame frame(double theta) const;

    std::size_t dim() const { return d_; }
    std::size_t components() const { return n_comp_; }
    double lambda(std::size_t j0) const { return lambda_[j0]; }
    double sigma_under(std::size_t j0) const { return sigma_under_[j0]; }
    double sigma(std::size_t i, std::size_t j0) const { return sigma_[i * d_ + j0]; }
    double mean(std::size_t i, std::size_t j0) const { return mean_[i * d_ + j0]; }
    double log_weight(std::size_t i) const { return log_w_[i]; }

    /// Responsibilities at x. Coordinates shared by all components are
    /// dropped from the log-density differences since they cancel exactly.
    /// Returns false when the log-densities are not finite (p is then set to
    /// the prior weights).
    bool responsibilities(const Frame& f, std::span<const double> x, std::span<double> p) const;

    /// Nonlinear correction G at x given responsibilities p. Only coordinates
    /// in `correction_coords()` can be nonzero; the rest are written as 0.
    void correction(const Frame& f, std::span<const double> x, std::span<const double> p,
                    std::span<double> g) const;

    /// Log-density of the annealed mixture at x (full, including constants).
    double log_density(const Frame& f, std::span<const double> x) const;

    /// Coordinates (0-based) where components differ in sigma or mean.
    const std::vector<std::size_t>& discriminating_coords() const { return discriminating_; }
    /// Coordinates (0-based) where G can be nonzero.
    const std::vector<std::size_t>& correction_coords() const { return correcting_; }

private:
    std::size_t d_;
    std::size_t n_comp_;
    std::vector<double> log_w_;
    std::vector<double> sigma_;
    std::vector<double> mean_;
    std::vector<double> lambda_;
    std::vector<double> sigma_under_;
    std::vector<std::size_t> discriminating_;
    std::vector<std::size_t> correcting_;
};

enum class Scheme { EM, ELP, Target, Initial };
std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

/// n_paths x d sample matrix with provenance.
struct TrajectoryEnsemble {
    Matrix samples;
    Scheme scheme = Scheme::Target;
    std::uint64_t seed = 0;
    std::size_t n_steps = 0;
    double h_max = 0.0;
    std::vector<std::uint8_t> flagged;  // per path; set when EM overflowed
    std::size_t overflow_count = 0;

    std::size_t n_paths() const { return static_cast<std::size_t>(samples.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
};

/// One row per path, header x_1..x_d.
void write_csv(std::ostream& os, const TrajectoryEnsemble& ensemble);

// --- annealed law ---------------------------------------------------------

Vector annealed_score(const MixtureSpec& mixture, const SpectralSequence& lambda,
                      const AnnealingSchedule& schedule, const Vector& x, double t);

Vector responsibilities(const MixtureSpec& mixture, const SpectralSequence& lambda,
                        const AnnealingSchedule& schedule, const Vector& x, double t);

ScoreSplit score_split(const MixtureSpec& mixture, const SpectralSequence& lambda,
                       const AnnealingSchedule& schedule, const Vector& x, double t);

/// log rho_t(x); used to check the score against finite differences.
double annealed_log_density(const MixtureSpec& mixture, const SpectralSequence& lambda,
                            const AnnealingSchedule& schedule, const Vector& x, double t);

// --- exact samplers -------------------------------------------------------

TrajectoryEnsemble sample_target(const MixtureSpec& mixture, std::size_t d, std::size_t n,
                                 std::uint64_t seed);

/// Draws from rho_0 = rho_* convolved with N(0, theta(0) diag(lambda)).
TrajectoryEnsemble sample_initial(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                  const AnnealingSchedule& schedule, std::size_t d, std::size_t n,
                                  std::uint64_t seed);

// --- scalar toolkit -------------------------------------------------------

/// F(u) = (log(1+u) - u/(1+u)) / 2: KL(N(0,s) || N(0, s(1+u))).
double F(double u);

/// f(r) = log(1+r) - r/(1+r) = 2 F(r).
double kl_gap(double r);

/// Psi(alpha, r) = int_1^{1+r} u^-alpha du.
double Psi(double alpha, double r);

/// Terminal variance p(T) of a Gaussian tail coordinate under the continuous
/// annealed dynamics, p' = 2 gamma (1 - p / (sigma + A lambda (T-t)/T)),
/// started from p(0) = sigma + A lambda.
double bimodal_tail_variance(double sigma, double lambda, double gamma, double T, double A);

/// KL(rho_* || rho_0) at truncation d, factorised into a low-dimensional head
/// (tensor-grid quadrature, +-10 std, 2001 points per axis) and independent
/// Gaussian tail coordinates contributing F(A lambda_j / sigma_j) each.
/// The head is every coordinate with a nonzero mean or with component
/// covariances that differ; at most two head coordinates are supported.
double factorized_kl_init(const MixtureSpec& mixture, const SpectralSequence& lambda, double A,
                          std::size_t d);

/// Indices (1-based) of the head block used by factorized_kl_init.
std::vector<std::size_t> kl_head_coordinates(const MixtureSpec& mixture, std::size_t d);

struct KlInitBound {
    double exact_form = 0.0;      // 1/2 sum_i w_i sum_j f(A lambda_j / sigma_ij)
    double quadratic_form = 0.0;  // 1/4 sum_i w_i sum_j (A lambda_j / sigma_ij)^2
};

KlInitBound kl_init_upper_bound(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                double A, std::size_t d);

}  // namespace ald
