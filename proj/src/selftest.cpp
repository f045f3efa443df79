#include "ald/selftest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "ald/estimators.hpp"
#include "ald/integrators.hpp"
#include "ald/mixture.hpp"
#include "ald/rng.hpp"

namespace ald {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
}

double rel_err(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

// Integrals of the exact linear flow on [t0, t1] by adaptive quadrature:
// E(s) = exp(-int_s^t1 gamma/b) with the inner integral done in closed form.
ElpCoeffs quadrature_coeffs(double t0, double t1, double su, double lam, double gam, double T, double A) {
    using boost::math::quadrature::gauss_kronrod;
    auto b = [&](double s) { return su + A * lam * (T - s) / T; };
    auto inner = [&](double s) { return gam * T / (A * lam) * std::log(b(s) / b(t1)); };
    ElpCoeffs c;
    c.phi = std::exp(-inner(t0));
    c.psi = gauss_kronrod<double, 31>::integrate([&](double s) { return gam * std::exp(-inner(s)); }, t0, t1, 15,
                                                 1e-14);
    c.noise_var = gauss_kronrod<double, 31>::integrate(
        [&](double s) { return 2.0 * gam * std::exp(-2.0 * inner(s)); }, t0, t1, 15, 1e-14);
    return c;
}

SelftestCheck check_philox() {
    const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    const std::array<std::uint32_t, 4> want{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8};
    return {"philox4x32-10 known-answer block", out == want, "counter 0, key 0"};
}

SelftestCheck check_elp_quadrature(std::uint64_t seed) {
    CounterRng rng(seed, Stream::Selftest, 1);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double T = 0.5 + 2.0 * rng.uniform();
        const double A = 0.5 + 10.0 * rng.uniform();
        const double su = std::exp(-4.0 * rng.uniform());
        const double lam = std::exp(-4.0 * rng.uniform());
        double gam = std::exp(-3.0 * rng.uniform() + 1.0);
        if (trial % 5 == 0) gam = A * lam / T * (1.0 + 1e-5 * (rng.uniform() - 0.5));        // p near 1
        if (trial % 5 == 1) gam = 0.5 * A * lam / T * (1.0 + 1e-5 * (rng.uniform() - 0.5));  // 2p near 1
        const double t0 = T * 0.9 * rng.uniform();
        const double t1 = t0 + (T - t0) * (0.05 + 0.95 * rng.uniform());
        const auto got = elp_coeffs(t0, t1, su, lam, gam, T, A);
        const auto want = quadrature_coeffs(t0, t1, su, lam, gam, T, A);
        worst = std::max({worst, rel_err(got.phi, want.phi), rel_err(got.psi, want.psi),
                          rel_err(got.noise_var, want.noise_var)});
    }
    return {"ELP coefficients vs adaptive quadrature", worst <= 1e-8, fmt("max rel err %.3g over 50 tuples", worst)};
}

// p' = 2 gamma (1 - p / b(t)), b(t) = sigma + A lambda (T - t)/T, p(0) = b(0).
double rk4_tail_variance(double sigma, double lam, double gam, double T, double A, std::size_t steps) {
    using State = std::array<double, 1>;
    State p{sigma + A * lam};
    auto rhs = [&](const State& x, State& dx, double t) {
        dx[0] = 2.0 * gam * (1.0 - x[0] / (sigma + A * lam * (T - t) / T));
    };
    boost::numeric::odeint::runge_kutta4<State> stepper;
    boost::numeric::odeint::integrate_const(stepper, rhs, p, 0.0, T, T / static_cast<double>(steps));
    return p[0];
}

SelftestCheck check_tail_variance() {
    double worst = 0.0;
    for (double sigma : {0.01, 1.0})
        for (double gam : {0.3, 2.0})
            for (double A : {1.0, 10.0}) {
                const double closed = bimodal_tail_variance(sigma, sigma, gam, 2.5, A);
                worst = std::max(worst, rel_err(closed, rk4_tail_variance(sigma, sigma, gam, 2.5, A, 20000)));
            }
    return {"Gaussian tail variance vs RK4", worst <= 1e-8, fmt("max rel err %.3g", worst)};
}

// For a single Gaussian the score is linear, so the ELP variance recursion
// v <- phi^2 v + noise_var must track the variance ODE at the mesh points.
SelftestCheck check_elp_variance_recursion() {
    const double T = 1.0, A = 1.0;
    const auto sched = AnnealingSchedule::uniform(T, A, 4);
    double worst = 0.0;
    for (std::size_t j = 1; j <= 5; ++j) {
        const double s = std::pow(double(j), -2.0), l = s, g = 1.0 / double(j);
        double v = s + A * l;
        for (std::size_t n = 0; n < sched.n_steps(); ++n) {
            const auto c = elp_coeffs(sched.time(n), sched.time(n + 1), s, l, g, T, A);
            v = c.phi * c.phi * v + c.noise_var;
        }
        worst = std::max(worst, rel_err(v, rk4_tail_variance(s, l, g, T, A, 20000)));
    }
    return {"ELP variance recursion on a linear target", worst <= 1e-8, fmt("max rel err %.3g", worst)};
}

SelftestCheck check_target_moments(std::uint64_t seed) {
    const MixtureSpec mix({{0.75, {}, SpectralSequence::power_law(2.0)},
                           {0.25, {{1, 4.0}}, SpectralSequence::power_law(2.0)}});
    const std::size_t n = 20000, d = 3;
    const auto e = sample_target(mix, d, n, seed);
    double worst_z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0, m2 = 0.0;
        for (std::size_t p = 0; p < n; ++p) mean += e.samples(p, j);
        mean /= n;
        for (std::size_t p = 0; p < n; ++p) m2 += (e.samples(p, j) - mean) * (e.samples(p, j) - mean);
        const double var = m2 / (n - 1);
        double want_mean = 0.0;
        for (std::size_t i = 0; i < mix.size(); ++i) want_mean += mix.weight(i) * mix.mean(i, j + 1);
        const double want_var = target_marginal_variance(mix, j + 1);
        worst_z = std::max(worst_z, std::abs(mean - want_mean) / std::sqrt(want_var / n));
        // Var of the sample variance is at most ~ (kurtosis) var^2 / n; 3 is generous here.
        worst_z = std::max(worst_z, std::abs(var - want_var) / (want_var * std::sqrt(3.0 * 2.0 / n)));
    }
    return {"exact target sampler moments", worst_z < 5.0, fmt("max z-score %.3g", worst_z)};
}

SelftestCheck check_score_gradient() {
    const MixtureSpec mix({{0.5, {{1, 1.0}}, SpectralSequence::power_law(1.0)},
                           {0.5, {{1, -1.0}, {2, 0.5}}, SpectralSequence::power_law(2.0, 0.5)}});
    const auto lam = SpectralSequence::power_law(2.0);
    const auto sched = AnnealingSchedule::uniform(1.0, 2.0, 10);
    Vector x(4);
    x << 0.3, -0.2, 0.1, 0.05;
    double worst = 0.0;
    for (double t : {0.0, 0.5, 1.0}) {
        const Vector s = annealed_score(mix, lam, sched, x, t);
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double h = 1e-5;
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double fd = (annealed_log_density(mix, lam, sched, xp, t) -
                               annealed_log_density(mix, lam, sched, xm, t)) / (2 * h);
            worst = std::max(worst, std::abs(fd - s[j]) / std::max(1.0, std::abs(s[j])));
        }
    }
    return {"annealed score vs finite differences", worst < 1e-6, fmt("max rel err %.3g", worst)};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
    return {check_philox(),       check_elp_quadrature(seed), check_tail_variance(),
            check_elp_variance_recursion(), check_target_moments(seed), check_score_gradient()};
}

}  // namespace ald
