#include "ald/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "ald/error.hpp"
#include "ald/rng.hpp"
#include "ald/text.hpp"

namespace ald {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

// --- MixtureSpec -------------------------------------------------------------

MixtureSpec::MixtureSpec(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("mixture must have at least one component");
    double total = 0.0;
    bool any_positive = false;
    for (const auto& c : components_) {
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            throw ConfigError("mixture weights must be nonnegative and finite");
        any_positive = any_positive || c.weight > 0.0;
        total += c.weight;
        for (auto [j, m] : c.mean) {
            if (j == 0) throw ConfigError("mean coordinates are 1-based");
            if (!std::isfinite(m)) throw ConfigError("mean entries must be finite");
        }
    }
    if (!any_positive) throw ConfigError("at least one mixture weight must be positive");
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

double MixtureSpec::mean(std::size_t i, std::size_t j) const {
    const auto& m = components_[i].mean;
    auto it = m.find(j);
    return it == m.end() ? 0.0 : it->second;
}

std::size_t MixtureSpec::mean_support_end() const {
    std::size_t end = 0;
    for (const auto& c : components_)
        for (auto [j, m] : c.mean)
            if (m != 0.0) end = std::max(end, j);
    return end;
}

bool MixtureSpec::coordinate_is_shared(std::size_t j) const {
    const double s0 = sigma(0, j);
    const double m0 = mean(0, j);
    for (std::size_t i = 1; i < size(); ++i)
        if (sigma(i, j) != s0 || mean(i, j) != m0) return false;
    return true;
}

// --- AnnealingSchedule -------------------------------------------------------

AnnealingSchedule::AnnealingSchedule(double amplitude, std::vector<double> mesh)
    : amplitude_(amplitude), mesh_(std::move(mesh)), h_max_(0.0) {
    if (!(amplitude_ > 0.0) || !std::isfinite(amplitude_))
        throw ConfigError("annealing amplitude must be positive");
    if (mesh_.size() < 2) throw ConfigError("mesh needs at least two points");
    if (mesh_.front() != 0.0) throw ConfigError("mesh must start at 0");
    for (std::size_t n = 0; n + 1 < mesh_.size(); ++n) {
        const double h = mesh_[n + 1] - mesh_[n];
        if (!(h > 0.0)) throw ConfigError("mesh must be strictly increasing");
        h_max_ = std::max(h_max_, h);
    }
    if (!std::isfinite(mesh_.back())) throw ConfigError("horizon must be finite");
}

AnnealingSchedule AnnealingSchedule::uniform(double horizon, double amplitude, std::size_t n_steps) {
    if (!(horizon > 0.0)) throw ConfigError("horizon T must be positive");
    if (n_steps == 0) throw ConfigError("n_steps must be >= 1");
    std::vector<double> mesh(n_steps + 1);
    for (std::size_t n = 0; n <= n_steps; ++n)
        mesh[n] = horizon * static_cast<double>(n) / static_cast<double>(n_steps);
    mesh.back() = horizon;
    return AnnealingSchedule(amplitude, std::move(mesh));
}

double AnnealingSchedule::theta(double t) const {
    const double T = horizon();
    if (!(t >= 0.0 && t <= T)) throw DomainError("time outside [0, T]");
    return amplitude_ * (T - t) / T;
}

// --- TruncatedTarget ---------------------------------------------------------

TruncatedTarget::TruncatedTarget(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                 std::size_t d)
    : d_(d), n_comp_(mixture.size()) {
    if (d == 0) throw ParameterError("dimension d must be >= 1");
    log_w_.resize(n_comp_);
    sigma_.resize(n_comp_ * d_);
    mean_.resize(n_comp_ * d_);
    lambda_.resize(d_);
    sigma_under_.assign(d_, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n_comp_; ++i) {
        log_w_[i] = std::log(mixture.weight(i));
        for (std::size_t j = 1; j <= d_; ++j) {
            sigma_[i * d_ + j - 1] = mixture.sigma(i, j);
            mean_[i * d_ + j - 1] = mixture.mean(i, j);
            sigma_under_[j - 1] = std::min(sigma_under_[j - 1], sigma_[i * d_ + j - 1]);
        }
    }
    for (std::size_t j = 1; j <= d_; ++j) {
        lambda_[j - 1] = lambda(j);
        if (!mixture.coordinate_is_shared(j)) discriminating_.push_back(j - 1);
        bool corrects = false;
        for (std::size_t i = 0; i < n_comp_; ++i)
            corrects = corrects || sigma_[i * d_ + j - 1] != sigma_under_[j - 1] ||
                       mean_[i * d_ + j - 1] != 0.0;
        if (corrects) correcting_.push_back(j - 1);
    }
}

TruncatedTarget::Frame TruncatedTarget::frame(double theta) const {
    Frame f;
    f.theta = theta;
    f.inv_b.resize(d_);
    f.inv_v.resize(n_comp_ * d_);
    f.log_norm.resize(n_comp_);
    for (std::size_t j = 0; j < d_; ++j) f.inv_b[j] = 1.0 / (sigma_under_[j] + theta * lambda_[j]);
    for (std::size_t i = 0; i < n_comp_; ++i) {
        double half_logdet = 0.0;
        for (std::size_t j = 0; j < d_; ++j) f.inv_v[i * d_ + j] = 1.0 / (sigma_[i * d_ + j] + theta * lambda_[j]);
        for (std::size_t j : discriminating_) half_logdet += 0.5 * std::log(sigma_[i * d_ + j] + theta * lambda_[j]);
        f.log_norm[i] = log_w_[i] - half_logdet;
    }
    return f;
}

bool TruncatedTarget::responsibilities(const Frame& f, std::span<const double> x,
                                       std::span<double> p) const {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_comp_; ++i) {
        double q = 0.0;
        const double* iv = &f.inv_v[i * d_];
        const double* m = &mean_[i * d_];
        for (std::size_t j : discriminating_) {
            const double r = x[j] - m[j];
            q += r * r * iv[j];
        }
        p[i] = f.log_norm[i] - 0.5 * q;
        mx = std::max(mx, p[i]);
    }
    if (!std::isfinite(mx) || std::isnan(mx)) {
        for (std::size_t i = 0; i < n_comp_; ++i) p[i] = std::exp(log_w_[i]);
        return false;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n_comp_; ++i) {
        p[i] = std::exp(p[i] - mx);
        s += p[i];
    }
    for (std::size_t i = 0; i < n_comp_; ++i) p[i] /= s;
    return true;
}

void TruncatedTarget::correction(const Frame& f, std::span<const double> x,
                                 std::span<const double> p, std::span<double> g) const {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t j : correcting_) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_comp_; ++i) {
            const double iv = f.inv_v[i * d_ + j];
            acc += p[i] * ((f.inv_b[j] - iv) * x[j] + mean_[i * d_ + j] * iv);
        }
        g[j] = acc;
    }
}

double TruncatedTarget::log_density(const Frame& f, std::span<const double> x) const {
    std::vector<double> l(n_comp_);
    for (std::size_t i = 0; i < n_comp_; ++i) {
        double s = log_w_[i];
        for (std::size_t j = 0; j < d_; ++j) {
            const double iv = f.inv_v[i * d_ + j];
            const double r = x[j] - mean_[i * d_ + j];
            s -= 0.5 * (kLog2Pi - std::log(iv) + r * r * iv);
        }
        l[i] = s;
    }
    return log_sum_exp(l);
}

// --- schemes / ensembles -----------------------------------------------------

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::EM: return "EM";
        case Scheme::ELP: return "ELP";
        case Scheme::Target: return "target";
        case Scheme::Initial: return "initial";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view s) {
    if (s == "EM" || s == "em") return Scheme::EM;
    if (s == "ELP" || s == "elp") return Scheme::ELP;
    if (s == "target") return Scheme::Target;
    if (s == "initial") return Scheme::Initial;
    throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

void write_csv(std::ostream& os, const TrajectoryEnsemble& e) {
    for (std::size_t j = 0; j < e.dim(); ++j) os << (j ? "," : "") << "x_" << j + 1;
    os << '\n';
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        for (std::size_t j = 0; j < e.dim(); ++j) os << (j ? "," : "") << text::format_double(e.samples(p, j));
        os << '\n';
    }
}

// --- annealed law ------------------------------------------------------------

namespace {

void check_point(const Vector& x) {
    if (x.size() == 0) throw ParameterError("point must have at least one coordinate");
}

}  // namespace

Vector annealed_score(const MixtureSpec& mixture, const SpectralSequence& lambda,
                      const AnnealingSchedule& schedule, const Vector& x, double t) {
    check_point(x);
    const double theta = schedule.theta(t);
    const Vector p = responsibilities(mixture, lambda, schedule, x, t);
    const auto d = static_cast<std::size_t>(x.size());
    Vector score = Vector::Zero(x.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        if (p[i] == 0.0) continue;
        for (std::size_t j = 1; j <= d; ++j) {
            const double v = mixture.sigma(i, j) + theta * lambda(j);
            score[j - 1] += p[i] * (-(x[j - 1] - mixture.mean(i, j)) / v);
        }
    }
    return score;
}

Vector responsibilities(const MixtureSpec& mixture, const SpectralSequence& lambda,
                        const AnnealingSchedule& schedule, const Vector& x, double t) {
    check_point(x);
    const double theta = schedule.theta(t);
    const auto d = static_cast<std::size_t>(x.size());
    std::vector<double> l(mixture.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        double s = std::log(mixture.weight(i));
        for (std::size_t j = 1; j <= d; ++j) {
            const double v = mixture.sigma(i, j) + theta * lambda(j);
            const double r = x[j - 1] - mixture.mean(i, j);
            s -= 0.5 * (std::log(v) + r * r / v);
        }
        l[i] = s;
    }
    const double lse = log_sum_exp(l);
    Vector p(static_cast<Eigen::Index>(mixture.size()));
    for (std::size_t i = 0; i < mixture.size(); ++i) p[i] = std::exp(l[i] - lse);
    p /= p.sum();
    return p;
}

ScoreSplit score_split(const MixtureSpec& mixture, const SpectralSequence& lambda,
                       const AnnealingSchedule& schedule, const Vector& x, double t) {
    check_point(x);
    const auto d = static_cast<std::size_t>(x.size());
    const TruncatedTarget target(mixture, lambda, d);
    const auto frame = target.frame(schedule.theta(t));
    std::vector<double> p(mixture.size());
    target.responsibilities(frame, {x.data(), d}, p);
    ScoreSplit out{Vector(x.size()), Vector(x.size())};
    target.correction(frame, {x.data(), d}, p, {out.g.data(), d});
    for (std::size_t j = 0; j < d; ++j) out.inv_b[j] = frame.inv_b[j];
    return out;
}

double annealed_log_density(const MixtureSpec& mixture, const SpectralSequence& lambda,
                            const AnnealingSchedule& schedule, const Vector& x, double t) {
    check_point(x);
    const auto d = static_cast<std::size_t>(x.size());
    const TruncatedTarget target(mixture, lambda, d);
    return target.log_density(target.frame(schedule.theta(t)), {x.data(), d});
}

// --- exact samplers ----------------------------------------------------------

namespace {

std::size_t pick_component(const MixtureSpec& mixture, double u) {
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        if (mixture.weight(i) <= 0.0) continue;
        last_positive = i;
        cum += mixture.weight(i);
        if (u < cum) return i;
    }
    return last_positive;
}

TrajectoryEnsemble draw(const MixtureSpec& mixture, const SpectralSequence* lambda, double theta0,
                        std::size_t d, std::size_t n, std::uint64_t seed, Stream stream) {
    if (n == 0) throw ParameterError("sample count n must be >= 1");
    if (d == 0) throw ParameterError("dimension d must be >= 1");
    TrajectoryEnsemble e;
    e.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    e.scheme = stream == Stream::Target ? Scheme::Target : Scheme::Initial;
    e.seed = seed;
    e.flagged.assign(n, 0);

    std::vector<double> lam(d, 0.0);
    if (lambda)
        for (std::size_t j = 1; j <= d; ++j) lam[j - 1] = (*lambda)(j);

    for (std::size_t p = 0; p < n; ++p) {
        CounterRng rng(seed, stream, p);
        const std::size_t i = pick_component(mixture, rng.uniform());
        for (std::size_t j = 1; j <= d; ++j) {
            const double var = mixture.sigma(i, j) + theta0 * lam[j - 1];
            e.samples(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j - 1)) =
                mixture.mean(i, j) + std::sqrt(var) * rng.normal();
        }
    }
    return e;
}

}  // namespace

TrajectoryEnsemble sample_target(const MixtureSpec& mixture, std::size_t d, std::size_t n,
                                 std::uint64_t seed) {
    return draw(mixture, nullptr, 0.0, d, n, seed, Stream::Target);
}

TrajectoryEnsemble sample_initial(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                  const AnnealingSchedule& schedule, std::size_t d, std::size_t n,
                                  std::uint64_t seed) {
    return draw(mixture, &lambda, schedule.theta(0.0), d, n, seed, Stream::Initial);
}

// --- scalar toolkit ----------------------------------------------------------

double kl_gap(double r) {
    if (!(r >= 0.0)) throw DomainError("kl_gap requires r >= 0");
    if (r < 1e-3) {
        // sum_{k>=2} (-1)^k (k-1)/k r^k
        double term = r * r, sum = 0.0;
        for (int k = 2; k <= 8; ++k) {
            sum += ((k % 2 == 0) ? 1.0 : -1.0) * (k - 1.0) / k * term;
            term *= r;
        }
        return sum;
    }
    return std::log1p(r) - r / (1.0 + r);
}

double F(double u) { return 0.5 * kl_gap(u); }

double Psi(double alpha, double r) {
    if (!(alpha >= 0.0) || !(r >= 0.0)) throw DomainError("Psi requires alpha >= 0 and r >= 0");
    const double L = std::log1p(r);
    const double q = 1.0 - alpha;
    if (q == 0.0) return L;
    return std::expm1(q * L) / q;
}

double bimodal_tail_variance(double sigma, double lambda, double gamma, double T, double A) {
    if (!(sigma > 0.0) || !(lambda >= 0.0) || !(gamma >= 0.0) || !(T > 0.0) || !(A > 0.0))
        throw DomainError("bimodal_tail_variance requires sigma, T, A > 0 and lambda, gamma >= 0");
    if (lambda == 0.0) return sigma;
    const double alpha = 2.0 * gamma * T / (A * lambda);
    const double r = A * lambda / sigma;
    return sigma * (1.0 + Psi(alpha, r));
}

std::vector<std::size_t> kl_head_coordinates(const MixtureSpec& mixture, std::size_t d) {
    std::vector<std::size_t> head;
    for (std::size_t j = 1; j <= d; ++j) {
        bool in_head = false;
        const double s0 = mixture.sigma(0, j);
        for (std::size_t i = 0; i < mixture.size(); ++i)
            in_head = in_head || mixture.mean(i, j) != 0.0 || mixture.sigma(i, j) != s0;
        if (in_head) head.push_back(j);
    }
    return head;
}

namespace {

constexpr std::size_t kHeadGridPoints = 2001;
constexpr double kHeadGridStd = 10.0;

std::vector<double> simpson_weights(std::size_t n, double h) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = (k == 0 || k + 1 == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    for (double& x : w) x *= h / 3.0;
    return w;
}

// KL between the head marginals of rho_* and rho_0 by tensor Simpson quadrature.
double head_kl(const MixtureSpec& mixture, const SpectralSequence& lambda, double A,
               const std::vector<std::size_t>& head) {
    const std::size_t K = head.size();
    const std::size_t I = mixture.size();
    const std::size_t n = kHeadGridPoints;

    // per axis: nodes, weights, log N for p (target) and q (smoothed) per component
    std::vector<std::vector<double>> weights(K), logp(K), logq(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t j = head[k];
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < I; ++i) {
            const double sd = std::sqrt(mixture.sigma(i, j));
            lo = std::min(lo, mixture.mean(i, j) - kHeadGridStd * sd);
            hi = std::max(hi, mixture.mean(i, j) + kHeadGridStd * sd);
        }
        const double h = (hi - lo) / static_cast<double>(n - 1);
        weights[k] = simpson_weights(n, h);
        logp[k].resize(n * I);
        logq[k].resize(n * I);
        for (std::size_t a = 0; a < n; ++a) {
            const double y = lo + h * static_cast<double>(a);
            for (std::size_t i = 0; i < I; ++i) {
                const double vp = mixture.sigma(i, j);
                const double vq = vp + A * lambda(j);
                const double r = y - mixture.mean(i, j);
                logp[k][a * I + i] = -0.5 * (kLog2Pi + std::log(vp) + r * r / vp);
                logq[k][a * I + i] = -0.5 * (kLog2Pi + std::log(vq) + r * r / vq);
            }
        }
    }

    std::vector<double> lp(I), lq(I);
    long double total = 0.0L;
    std::vector<std::size_t> idx(K, 0);
    const std::size_t count = K == 1 ? n : n * n;
    for (std::size_t flat = 0; flat < count; ++flat) {
        idx[0] = flat % n;
        if (K == 2) idx[1] = flat / n;
        double w = 1.0;
        for (std::size_t i = 0; i < I; ++i) {
            lp[i] = std::log(mixture.weight(i));
            lq[i] = lp[i];
        }
        for (std::size_t k = 0; k < K; ++k) {
            w *= weights[k][idx[k]];
            for (std::size_t i = 0; i < I; ++i) {
                lp[i] += logp[k][idx[k] * I + i];
                lq[i] += logq[k][idx[k] * I + i];
            }
        }
        const double log_p = log_sum_exp(lp);
        if (!std::isfinite(log_p)) continue;
        const double log_q = log_sum_exp(lq);
        total += static_cast<long double>(w * std::exp(log_p) * (log_p - log_q));
    }
    return static_cast<double>(total);
}

}  // namespace

double factorized_kl_init(const MixtureSpec& mixture, const SpectralSequence& lambda, double A,
                          std::size_t d) {
    if (d == 0) throw ParameterError("dimension d must be >= 1");
    if (!(A >= 0.0)) throw DomainError("amplitude must be >= 0");
    const auto head = kl_head_coordinates(mixture, d);
    if (head.size() > 2)
        throw UnsupportedError(
            "factorized KL needs common covariance outside a head of at most 2 coordinates; "
            "use kl_init_upper_bound");
    if (A == 0.0) return 0.0;
    long double tail = 0.0L;
    std::size_t h = 0;
    for (std::size_t j = 1; j <= d; ++j) {
        if (h < head.size() && head[h] == j) {
            ++h;
            continue;
        }
        tail += F(A * lambda(j) / mixture.sigma(0, j));
    }
    const double head_part = head.empty() ? 0.0 : head_kl(mixture, lambda, A, head);
    return std::max(0.0, head_part + static_cast<double>(tail));
}

KlInitBound kl_init_upper_bound(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                double A, std::size_t d) {
    if (d == 0) throw ParameterError("dimension d must be >= 1");
    if (!(A >= 0.0)) throw DomainError("amplitude must be >= 0");
    long double exact = 0.0L, quad = 0.0L;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        long double e = 0.0L, q = 0.0L;
        for (std::size_t j = 1; j <= d; ++j) {
            const double r = A * lambda(j) / mixture.sigma(i, j);
            e += kl_gap(r);
            q += static_cast<long double>(r) * r;
        }
        exact += mixture.weight(i) * e;
        quad += mixture.weight(i) * q;
    }
    return {static_cast<double>(0.5L * exact), static_cast<double>(0.25L * quad)};
}

}  // namespace ald
