#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "ald/mixture.hpp"
#include "ald/sequence.hpp"

namespace ald {

/// Coordinatewise envelopes of the mixture at index j.
struct Envelope {
    double sigma_under = 0.0;  // min_i sigma_ij
    double sigma_over = 0.0;   // max_i sigma_ij
    double m_over = 0.0;       // max_i |m_ij|
    double delta_m = 0.0;      // max_{i,l} |m_ij - m_lj|
};

Envelope envelope(const MixtureSpec& mixture, std::size_t j);

/// Summability conditions. EmStab is a supremum condition; every other id is
/// a (possibly two-part) series of nonnegative terms.
enum class ConditionId {
    CtSuff,   // sum_i w_i sum_j lambda^2 / (gamma sigma_ij)
    EmStab,   // sup_j gamma / sigma_under
    InitKl,   // sum_i w_i sum_j lambda^2 / sigma_ij^2
    D1A,      // sum (sigma_over + lambda + m_over^2)
    D1B,      // sum gamma  +  sum gamma^2 E / sigma_under^2
    D1C,      // sum gamma ((sigma_over - sigma_under)^2 + sigma_under^2 m_over^2) / sigma_under^4
    D2A,      // sum spread^2 E / sigma_under^4  +  sum delta_m^2 / sigma_under^2
    D2B,      // sum lambda spread E / sigma_under^3  +  sum gamma lambda^2 spread^2 E / sigma_under^6
    D2D,      // sum lambda^2/sigma_under^2 (delta_m^2/sigma_under^2 + m_over^2 spread^2/sigma_under^4)
              //   +  sum gamma lambda^2 m_over^2 / sigma_under^4
    Ann,      // sum lambda^2 / (gamma sigma_under)
};
// E = sigma_over + lambda + m_over^2, spread = sigma_over - sigma_under.

inline constexpr std::array<ConditionId, 10> kAllConditions = {
    ConditionId::CtSuff, ConditionId::EmStab, ConditionId::InitKl, ConditionId::D1A,
    ConditionId::D1B,    ConditionId::D1C,    ConditionId::D2A,    ConditionId::D2B,
    ConditionId::D2D,    ConditionId::Ann};

std::string_view to_string(ConditionId id);

enum class Verdict { Summable, Divergent, Unknown };
std::string_view to_string(Verdict v);

struct ConditionEntry {
    ConditionId id{};
    /// Exact finite sum over j = 1..d (the running maximum for EmStab).
    double partial_sum = 0.0;
    /// Net decay exponent p of the summand tail ~ C j^-p; empty when any
    /// input is explicit. +inf when the summand is eventually zero.
    std::optional<double> tail_exponent;
    /// Integral estimate of the remaining tail, C d^(1-p)/(p-1); only for
    /// summable power-law inputs.
    std::optional<double> tail_estimate;
    Verdict verdict = Verdict::Unknown;
};

struct ConditionReport {
    std::size_t dimension = 0;
    std::array<ConditionEntry, kAllConditions.size()> entries{};

    const ConditionEntry& operator[](ConditionId id) const {
        return entries[static_cast<std::size_t>(id)];
    }
};

ConditionReport eval_conditions(const MixtureSpec& mixture, const SpectralSequence& lambda,
                                const SpectralSequence& gamma, std::size_t d);

/// Fixed CSV header: condition_id,d,partial_sum,tail_exponent,verdict
void write_csv_header(std::ostream& os, const ConditionReport&);
void write_csv_rows(std::ostream& os, const ConditionReport& report);

/// Wording for reports: a divergent series means the sufficient condition is
/// not verified, never that a scheme fails.
std::string_view verdict_wording(Verdict v);

/// K_d = 1/16 sum_i w_i sum_{j<=d} (lambda_j/gamma_j) log(1 + lambda_j/sigma_ij).
double annealing_constant_Kd(const MixtureSpec& mixture, const SpectralSequence& lambda,
                             const SpectralSequence& gamma, std::size_t d);

/// Horizon T_eps = K / eps guaranteeing annealing KL <= eps.
double annealing_horizon(double K, double eps);

/// The discretisation part of the ELP bound: C_disc (1 + T^2) h_max, with the
/// constant kept symbolic.
struct SymbolicDiscTerm {
    double h_max = 0.0;
    double T = 0.0;
    double factor = 0.0;  // 1 + T^2
    std::string_view constant = "C_disc";
};

struct ElpBoundTerms {
    double annealing_term = 0.0;  // (1/(8T)) sum_{j<=d} lambda^2 / (gamma sigma_under)
    SymbolicDiscTerm disc_term;
};

ElpBoundTerms elp_bound_terms(const MixtureSpec& mixture, const SpectralSequence& lambda,
                              const SpectralSequence& gamma, std::size_t d, double T, double h_max);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double c) const { return lo < c && c < hi; }
};

/// Open range of preconditioner exponents c (gamma_j ~ j^-c) for which the ELP
/// conditions hold when sigma_j ~ j^-a, lambda_j ~ j^-b and means have finite
/// support: max{1, (a+1)/2} < c < 2b - a - 1. Throws DomainError unless
/// a > 1 and b >= a.
std::optional<Interval> power_law_admissible_range(double a, double b);

/// gamma_j = lambda_j^(2/3).
SpectralSequence balanced_preconditioner(const SpectralSequence& lambda);

}  // namespace ald
