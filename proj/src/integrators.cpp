#include "ald/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ald/error.hpp"
#include "ald/rng.hpp"
#include "ald/text.hpp"

namespace ald {

namespace {

// (rho^q - 1) / q with rho = e^L, exact at q = 0.
double power_difference(double q, double L) {
    if (q == 0.0) return L;
    return std::expm1(q * L) / q;
}

}  // namespace

ElpCoeffs elp_coeffs(double t_n, double t_np1, double sigma_under, double lambda, double gamma,
                     double T, double A) {
    if (!(sigma_under > 0.0) || !(lambda >= 0.0) || !(gamma >= 0.0) || !(T > 0.0) || !(A > 0.0))
        throw DomainError("elp_coeffs: sigma_under, T, A must be positive; lambda, gamma nonnegative");
    if (!(t_n >= 0.0 && t_n < t_np1 && t_np1 <= T))
        throw DomainError("elp_coeffs: need 0 <= t_n < t_np1 <= T");
    if (gamma == 0.0) return {1.0, 0.0, 0.0};
    if (lambda == 0.0) {
        const double x = gamma * (t_np1 - t_n) / sigma_under;
        return {std::exp(-x), -sigma_under * std::expm1(-x), -sigma_under * std::expm1(-2.0 * x)};
    }
    const double slope = A * lambda / T;
    const double b1 = sigma_under + slope * (T - t_np1);
    const double L = std::log1p(slope * (t_np1 - t_n) / b1);  // log(b(t_n) / b(t_np1))
    const double p = gamma * T / (A * lambda);
    return {std::exp(-p * L), p * b1 * power_difference(1.0 - p, L),
            2.0 * p * b1 * power_difference(1.0 - 2.0 * p, L)};
}

namespace {

void check_state(const Vector& state, const Vector& noise) {
    if (state.size() == 0) throw ParameterError("state must have at least one coordinate");
    if (noise.size() != state.size()) throw ParameterError("noise and state dimensions differ");
}

std::vector<double> gamma_values(const SpectralSequence& gamma, std::size_t d) {
    std::vector<double> g(d);
    for (std::size_t j = 1; j <= d; ++j) g[j - 1] = gamma(j);
    return g;
}

}  // namespace

Vector em_step(const Vector& state, double t_n, double h, const MixtureSpec& mixture,
               const SpectralSequence& lambda, const SpectralSequence& gamma,
               const AnnealingSchedule& schedule, const Vector& noise) {
    check_state(state, noise);
    if (!(h > 0.0)) throw DomainError("step h must be positive");
    if (t_n + h > schedule.horizon() * (1.0 + 1e-12)) throw DomainError("step leaves [0, T]");
    const auto d = static_cast<std::size_t>(state.size());
    const TruncatedTarget target(mixture, lambda, d);
    const auto frame = target.frame(schedule.theta(t_n));
    std::vector<double> p(mixture.size()), g(d);
    const std::span<const double> x{state.data(), d};
    target.responsibilities(frame, x, p);
    target.correction(frame, x, p, g);
    Vector out(state.size());
    for (std::size_t j = 0; j < d; ++j) {
        const double gj = gamma(j + 1);
        out[j] = x[j] * (1.0 - h * gj * frame.inv_b[j]) + h * gj * g[j] + std::sqrt(2.0 * h * gj) * noise[j];
    }
    return out;
}

Vector elp_step(const Vector& state, std::size_t n, const MixtureSpec& mixture,
                const SpectralSequence& lambda, const SpectralSequence& gamma,
                const AnnealingSchedule& schedule, const Vector& noise) {
    check_state(state, noise);
    if (n >= schedule.n_steps()) throw DomainError("mesh interval index out of range");
    const auto d = static_cast<std::size_t>(state.size());
    const TruncatedTarget target(mixture, lambda, d);
    const auto frame = target.frame(schedule.theta(schedule.time(n)));
    std::vector<double> p(mixture.size()), g(d);
    const std::span<const double> x{state.data(), d};
    target.responsibilities(frame, x, p);
    target.correction(frame, x, p, g);
    Vector out(state.size());
    for (std::size_t j = 0; j < d; ++j) {
        const auto c = elp_coeffs(schedule.time(n), schedule.time(n + 1), target.sigma_under(j),
                                  target.lambda(j), gamma(j + 1), schedule.horizon(), schedule.amplitude());
        out[j] = c.phi * x[j] + c.psi * g[j] + std::sqrt(c.noise_var) * noise[j];
    }
    return out;
}

namespace {

// Path-independent per-step tables: x_{n+1,j} = a x + c G + s z.
struct StepTables {
    std::size_t d = 0;
    std::vector<double> a, c, s;  // N x d
    std::vector<TruncatedTarget::Frame> frames;
};

StepTables build_tables(Scheme scheme, const TruncatedTarget& target, const std::vector<double>& gam,
                        const AnnealingSchedule& schedule) {
    const std::size_t N = schedule.n_steps(), d = target.dim();
    StepTables t;
    t.d = d;
    t.a.resize(N * d);
    t.c.resize(N * d);
    t.s.resize(N * d);
    t.frames.reserve(N);
    for (std::size_t n = 0; n < N; ++n) {
        t.frames.push_back(target.frame(schedule.theta(schedule.time(n))));
        const auto& f = t.frames.back();
        const double h = schedule.step(n);
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t k = n * d + j;
            if (scheme == Scheme::EM) {
                t.a[k] = 1.0 - h * gam[j] * f.inv_b[j];
                t.c[k] = h * gam[j];
                t.s[k] = std::sqrt(2.0 * h * gam[j]);
            } else {
                const auto co = elp_coeffs(schedule.time(n), schedule.time(n + 1), target.sigma_under(j),
                                           target.lambda(j), gam[j], schedule.horizon(), schedule.amplitude());
                t.a[k] = co.phi;
                t.c[k] = co.psi;
                t.s[k] = std::sqrt(co.noise_var);
            }
        }
    }
    return t;
}

}  // namespace

TrajectoryEnsemble run_chain(Scheme scheme, const MixtureSpec& mixture, const SpectralSequence& lambda,
                             const SpectralSequence& gamma, const AnnealingSchedule& schedule,
                             std::size_t d, std::size_t n_paths, std::uint64_t seed,
                             ChainOptions options) {
    if (scheme != Scheme::EM && scheme != Scheme::ELP) throw ParameterError("run_chain needs EM or ELP");
    if (n_paths == 0) throw ParameterError("n_paths must be >= 1");
    TrajectoryEnsemble ens = sample_initial(mixture, lambda, schedule, d, n_paths, seed);
    ens.scheme = scheme;
    ens.n_steps = schedule.n_steps();
    ens.h_max = schedule.h_max();

    const TruncatedTarget target(mixture, lambda, d);
    const auto gam = gamma_values(gamma, d);
    const StepTables tables = build_tables(scheme, target, gam, schedule);
    const bool nonlinear = !target.correction_coords().empty();
    const bool clamp = scheme == Scheme::EM;
    const std::size_t N = schedule.n_steps();

    auto run_path = [&](std::size_t path) {
        double* x = ens.samples.row(static_cast<Eigen::Index>(path)).data();
        const std::span<double> xs{x, d};
        std::vector<double> p(target.components()), g(d, 0.0), z(d);
        bool flagged = false;
        for (std::size_t n = 0; n < N; ++n) {
            CounterRng rng(seed, Stream::Dynamics, path, n);
            rng.fill_normal(z);
            if (nonlinear) {
                if (!target.responsibilities(tables.frames[n], xs, p)) flagged = true;
                target.correction(tables.frames[n], xs, p, g);
            }
            const double* a = &tables.a[n * d];
            const double* c = &tables.c[n * d];
            const double* s = &tables.s[n * d];
            for (std::size_t j = 0; j < d; ++j) x[j] = a[j] * x[j] + c[j] * g[j] + s[j] * z[j];
            if (clamp) {
                for (std::size_t j = 0; j < d; ++j) {
                    if (!(std::abs(x[j]) <= kEmOverflowClamp)) {
                        x[j] = std::signbit(x[j]) ? -kEmOverflowClamp : kEmOverflowClamp;
                        flagged = true;
                    }
                }
            }
        }
        ens.flagged[path] = flagged ? 1 : 0;
    };

    unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_paths));
    if (workers <= 1) {
        for (std::size_t path = 0; path < n_paths; ++path) run_path(path);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t path = w; path < n_paths; path += workers) run_path(path);
            });
        }
    }
    ens.overflow_count = static_cast<std::size_t>(std::count(ens.flagged.begin(), ens.flagged.end(), 1));
    return ens;
}

StabilityReport stability_report(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                 const SpectralSequence& gamma, const AnnealingSchedule& schedule,
                                 std::size_t d) {
    const TruncatedTarget target(mixture, lambda, d);
    const auto gam = gamma_values(gamma, d);
    StabilityReport r;
    r.h = schedule.h_max();
    r.worst_factor.assign(d, 0.0);
    double sup_rate = 0.0;
    for (std::size_t n = 0; n < schedule.n_steps(); ++n) {
        const double theta = schedule.theta(schedule.time(n));
        const double h = schedule.step(n);
        for (std::size_t j = 0; j < d; ++j) {
            const double rate = gam[j] / (target.sigma_under(j) + theta * target.lambda(j));
            sup_rate = std::max(sup_rate, rate);
            r.worst_factor[j] = std::max(r.worst_factor[j], std::abs(1.0 - h * rate));
        }
    }
    // One part in 1e12 of slack so that h == h_bound counts as stable.
    for (std::size_t j = 0; j < d; ++j) {
        if (r.worst_factor[j] > 1.0 + 1e-12) {
            r.first_unstable_index = j + 1;
            break;
        }
    }
    r.h_bound = sup_rate > 0.0 ? 2.0 / sup_rate : std::numeric_limits<double>::infinity();
    return r;
}

void write_csv(std::ostream& os, const StabilityReport& report) {
    os << "j,worst_factor,stable\n";
    for (std::size_t j = 0; j < report.worst_factor.size(); ++j) {
        os << j + 1 << ',' << text::format_double(report.worst_factor[j]) << ','
           << (report.worst_factor[j] > 1.0 + 1e-12 ? 0 : 1) << '\n';
    }
}

void write_json(std::ostream& os, const StabilityReport& report) {
    nlohmann::ordered_json j;
    j["h"] = report.h;
    j["h_bound"] = std::isfinite(report.h_bound) ? nlohmann::ordered_json(report.h_bound) : nlohmann::ordered_json(nullptr);
    j["first_unstable_index"] =
        report.first_unstable_index ? nlohmann::ordered_json(*report.first_unstable_index) : nlohmann::ordered_json(nullptr);
    os << j.dump(2) << '\n';
}

MomentSummary moment_summary(const TrajectoryEnsemble& e) {
    MomentSummary m;
    const std::size_t d = e.dim();
    m.mean.assign(d, 0.0);
    m.variance.assign(d, 0.0);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        if (!e.flagged.empty() && e.flagged[p]) continue;
        ++m.used_paths;
        for (std::size_t j = 0; j < d; ++j) m.mean[j] += e.samples(p, j);
    }
    if (m.used_paths == 0) return m;
    for (double& v : m.mean) v /= static_cast<double>(m.used_paths);
    if (m.used_paths < 2) return m;
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        if (!e.flagged.empty() && e.flagged[p]) continue;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = e.samples(p, j) - m.mean[j];
            m.variance[j] += r * r;
        }
    }
    for (double& v : m.variance) v /= static_cast<double>(m.used_paths - 1);
    return m;
}

void write_csv(std::ostream& os, const MomentSummary& m) {
    os << "j,mean,variance,used_paths\n";
    for (std::size_t j = 0; j < m.mean.size(); ++j)
        os << j + 1 << ',' << text::format_double(m.mean[j]) << ',' << text::format_double(m.variance[j])
           << ',' << m.used_paths << '\n';
}

}  // namespace ald
