#include "ald/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "ald/error.hpp"
#include "ald/text.hpp"

namespace ald {

Envelope envelope(const MixtureSpec& mixture, std::size_t j) {
    if (j == 0) throw DomainError("coordinate index starts at 1");
    Envelope e;
    e.sigma_under = std::numeric_limits<double>::infinity();
    double m_lo = std::numeric_limits<double>::infinity(), m_hi = -m_lo;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const double s = mixture.sigma(i, j);
        const double m = mixture.mean(i, j);
        e.sigma_under = std::min(e.sigma_under, s);
        e.sigma_over = std::max(e.sigma_over, s);
        e.m_over = std::max(e.m_over, std::abs(m));
        m_lo = std::min(m_lo, m);
        m_hi = std::max(m_hi, m);
    }
    e.delta_m = m_hi - m_lo;
    return e;
}

std::string_view to_string(ConditionId id) {
    switch (id) {
        case ConditionId::CtSuff: return "CT-SUFF";
        case ConditionId::EmStab: return "EM-STAB";
        case ConditionId::InitKl: return "INIT-KL";
        case ConditionId::D1A: return "D1A";
        case ConditionId::D1B: return "D1B";
        case ConditionId::D1C: return "D1C";
        case ConditionId::D2A: return "D2A";
        case ConditionId::D2B: return "D2B";
        case ConditionId::D2D: return "D2D";
        case ConditionId::Ann: return "ANN";
    }
    return "?";
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Summable: return "summable";
        case Verdict::Divergent: return "divergent";
        case Verdict::Unknown: return "unknown";
    }
    return "?";
}

std::string_view verdict_wording(Verdict v) {
    switch (v) {
        case Verdict::Summable: return "condition verified";
        case Verdict::Divergent: return "condition not verified";
        case Verdict::Unknown: return "condition not certified (non-power-law input)";
    }
    return "?";
}

namespace {

// Exponent comparisons tolerate rounding in derived exponents such as 2b/3.
constexpr double kExponentSlack = 1e-9;

using OptAsym = std::optional<Asymptotic>;

// Tail of max(a, b) for nonnegative sequences.
Asymptotic slower(Asymptotic a, Asymptotic b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (std::abs(a.exponent - b.exponent) <= kExponentSlack) return {std::max(a.coef, b.coef), a.exponent};
    return a.exponent < b.exponent ? a : b;
}

Asymptotic faster(Asymptotic a, Asymptotic b) {
    if (std::abs(a.exponent - b.exponent) <= kExponentSlack) return {std::min(a.coef, b.coef), a.exponent};
    return a.exponent > b.exponent ? a : b;
}

struct TailModel {
    Asymptotic lambda, gamma, under, over, spread;
    std::vector<Asymptotic> sigma;  // per component
    Asymptotic m_over = Asymptotic::zero();   // means have finite support
    Asymptotic delta_m = Asymptotic::zero();
};

std::optional<TailModel> tail_model(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                    const SpectralSequence& gamma) {
    const auto l = lambda.asymptotic();
    const auto g = gamma.asymptotic();
    if (!l || !g) return std::nullopt;
    TailModel t{*l, *g, {}, {}, Asymptotic::zero(), {}};
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const auto s = mixture[i].sigma.asymptotic();
        if (!s) return std::nullopt;
        t.sigma.push_back(*s);
    }
    t.under = t.sigma[0];
    t.over = t.sigma[0];
    for (std::size_t i = 1; i < t.sigma.size(); ++i) {
        t.under = faster(t.under, t.sigma[i]);
        t.over = slower(t.over, t.sigma[i]);
    }
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        for (std::size_t k = i + 1; k < mixture.size(); ++k) {
            const auto diff = difference_asymptotic(mixture[i].sigma, mixture[k].sigma);
            if (!diff) return std::nullopt;
            t.spread = slower(t.spread, *diff);
        }
    }
    return t;
}

Asymptotic sq(Asymptotic a) { return a * a; }

// Summand tail for every condition. EmStab returns gamma / sigma_under.
Asymptotic summand_tail(ConditionId id, const TailModel& t, const MixtureSpec& mixture) {
    const Asymptotic U = t.under, L = t.lambda, G = t.gamma, D = t.spread, M = t.m_over,
                     Dm = t.delta_m;
    const Asymptotic E = t.over + t.lambda + sq(M);
    switch (id) {
        case ConditionId::CtSuff: {
            Asymptotic acc = Asymptotic::zero();
            for (std::size_t i = 0; i < mixture.size(); ++i)
                if (mixture.weight(i) > 0)
                    acc = acc + Asymptotic{mixture.weight(i), 0.0} * sq(L) / (G * t.sigma[i]);
            return acc;
        }
        case ConditionId::EmStab: return G / U;
        case ConditionId::InitKl: {
            Asymptotic acc = Asymptotic::zero();
            for (std::size_t i = 0; i < mixture.size(); ++i)
                if (mixture.weight(i) > 0)
                    acc = acc + Asymptotic{mixture.weight(i), 0.0} * sq(L) / sq(t.sigma[i]);
            return acc;
        }
        case ConditionId::D1A: return E;
        case ConditionId::D1B: return G + sq(G) * E / sq(U);
        case ConditionId::D1C: return G * (sq(D) + sq(U) * sq(M)) / sq(sq(U));
        case ConditionId::D2A: return sq(D) * E / sq(sq(U)) + sq(Dm) / sq(U);
        case ConditionId::D2B:
            return L * D * E / (U * sq(U)) + G * sq(L) * sq(D) * E / sq(U * sq(U));
        case ConditionId::D2D:
            return sq(L) / sq(U) * (sq(Dm) / sq(U) + sq(M) * sq(D) / sq(sq(U))) +
                   G * sq(L) * sq(M) / sq(sq(U));
        case ConditionId::Ann: return sq(L) / (G * U);
    }
    return Asymptotic::zero();
}

// Exact summand at coordinate j (for EmStab the term whose max is reported).
double summand(ConditionId id, const MixtureSpec& mixture, const Envelope& e, double L, double G,
               std::size_t j) {
    const double U = e.sigma_under, D = e.sigma_over - e.sigma_under, M = e.m_over, Dm = e.delta_m;
    const double E = e.sigma_over + L + M * M;
    const double U2 = U * U, U4 = U2 * U2;
    switch (id) {
        case ConditionId::CtSuff: {
            double acc = 0.0;
            for (std::size_t i = 0; i < mixture.size(); ++i)
                acc += mixture.weight(i) * L * L / (G * mixture.sigma(i, j));
            return acc;
        }
        case ConditionId::EmStab: return G / U;
        case ConditionId::InitKl: {
            double acc = 0.0;
            for (std::size_t i = 0; i < mixture.size(); ++i) {
                const double s = mixture.sigma(i, j);
                acc += mixture.weight(i) * L * L / (s * s);
            }
            return acc;
        }
        case ConditionId::D1A: return E;
        case ConditionId::D1B: return G + G * G * E / U2;
        case ConditionId::D1C: return G * (D * D + U2 * M * M) / U4;
        case ConditionId::D2A: return D * D * E / U4 + Dm * Dm / U2;
        case ConditionId::D2B: return L * D * E / (U2 * U) + G * L * L * D * D * E / (U4 * U2);
        case ConditionId::D2D:
            return L * L / U2 * (Dm * Dm / U2 + M * M * D * D / U4) + G * L * L * M * M / U4;
        case ConditionId::Ann: return L * L / (G * U);
    }
    return 0.0;
}

}  // namespace

ConditionReport eval_conditions(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                const SpectralSequence& gamma, std::size_t d) {
    if (d == 0) throw DomainError("dimension d must be >= 1");
    ConditionReport report;
    report.dimension = d;

    std::array<long double, kAllConditions.size()> acc{};
    for (std::size_t j = 1; j <= d; ++j) {
        const Envelope e = envelope(mixture, j);
        const double L = lambda(j), G = gamma(j);
        for (auto id : kAllConditions) {
            const auto k = static_cast<std::size_t>(id);
            const long double term = summand(id, mixture, e, L, G, j);
            if (id == ConditionId::EmStab)
                acc[k] = std::max(acc[k], term);
            else
                acc[k] += term;
        }
    }

    const auto model = tail_model(mixture, lambda, gamma);
    for (auto id : kAllConditions) {
        auto& entry = report.entries[static_cast<std::size_t>(id)];
        entry.id = id;
        entry.partial_sum = static_cast<double>(acc[static_cast<std::size_t>(id)]);
        if (!model) continue;
        const Asymptotic tail = summand_tail(id, *model, mixture);
        entry.tail_exponent = tail.exponent;
        if (id == ConditionId::EmStab) {
            entry.verdict = tail.is_zero() || tail.exponent >= -kExponentSlack ? Verdict::Summable
                                                                              : Verdict::Divergent;
            continue;
        }
        if (tail.is_zero()) {
            entry.verdict = Verdict::Summable;
            entry.tail_estimate = 0.0;
        } else if (tail.exponent > 1.0 + kExponentSlack) {
            entry.verdict = Verdict::Summable;
            const double p = tail.exponent;
            entry.tail_estimate = tail.coef * std::pow(static_cast<double>(d), 1.0 - p) / (p - 1.0);
        } else {
            entry.verdict = Verdict::Divergent;
        }
    }
    return report;
}

void write_csv_header(std::ostream& os, const ConditionReport&) {
    os << "condition_id,d,partial_sum,tail_exponent,verdict\n";
}

void write_csv_rows(std::ostream& os, const ConditionReport& report) {
    for (const auto& e : report.entries) {
        os << to_string(e.id) << ',' << report.dimension << ',' << text::format_double(e.partial_sum)
           << ',' << (e.tail_exponent ? text::format_double(*e.tail_exponent) : std::string{}) << ','
           << to_string(e.verdict) << '\n';
    }
}

double annealing_constant_Kd(const MixtureSpec& mixture, const SpectralSequence& lambda,
                             const SpectralSequence& gamma, std::size_t d) {
    if (d == 0) throw DomainError("dimension d must be >= 1");
    long double total = 0.0L;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        long double inner = 0.0L;
        for (std::size_t j = 1; j <= d; ++j) {
            const double L = lambda(j);
            inner += L / gamma(j) * std::log1p(L / mixture.sigma(i, j));
        }
        total += mixture.weight(i) * inner;
    }
    return static_cast<double>(total / 16.0L);
}

double annealing_horizon(double K, double eps) {
    if (!(eps > 0.0)) throw DomainError("epsilon must be positive");
    return K / eps;
}

ElpBoundTerms elp_bound_terms(const MixtureSpec& mixture, const SpectralSequence& lambda,
                              const SpectralSequence& gamma, std::size_t d, double T, double h_max) {
    if (!(T > 0.0)) throw DomainError("T must be positive");
    if (!(h_max > 0.0)) throw DomainError("h_max must be positive");
    if (d == 0) throw DomainError("dimension d must be >= 1");
    long double s = 0.0L;
    for (std::size_t j = 1; j <= d; ++j) {
        const double L = lambda(j);
        s += L * L / (gamma(j) * envelope(mixture, j).sigma_under);
    }
    ElpBoundTerms out;
    out.annealing_term = static_cast<double>(s / (8.0L * T));
    out.disc_term = {h_max, T, 1.0 + T * T, "C_disc"};
    return out;
}

std::optional<Interval> power_law_admissible_range(double a, double b) {
    if (!(a > 1.0)) throw DomainError("covariance exponent a must exceed 1");
    if (!(b >= a)) throw DomainError("smoothing exponent b must satisfy b >= a");
    const Interval r{std::max(1.0, (a + 1.0) / 2.0), 2.0 * b - a - 1.0};
    if (r.lo >= r.hi) return std::nullopt;
    return r;
}

SpectralSequence balanced_preconditioner(const SpectralSequence& lambda) {
    if (lambda.kind() == SpectralSequence::Kind::PowerLaw && lambda.terms().size() == 1 &&
        lambda.head().empty() && lambda.outer_power() == 1.0) {
        const auto t = lambda.terms()[0];
        return SpectralSequence::power_law(2.0 * t.exponent / 3.0, std::cbrt(t.scale * t.scale));
    }
    return lambda.pow(2.0 / 3.0);
}

}  // namespace ald
