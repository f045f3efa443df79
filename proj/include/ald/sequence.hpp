#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ald {

/// Leading tail behaviour `coef * j^-exponent` of a nonnegative sequence.
/// An infinite exponent (with zero coefficient) marks a sequence that is
/// eventually zero.
struct Asymptotic {
    double coef = 0.0;
    double exponent = 0.0;

    static Asymptotic zero();
    static Asymptotic power(double coef, double exponent) { return {coef, exponent}; }
    bool is_zero() const;

    friend bool operator==(const Asymptotic&, const Asymptotic&) = default;
};

Asymptotic operator*(Asymptotic a, Asymptotic b);
Asymptotic operator/(Asymptotic a, Asymptotic b);
/// Sum of two nonnegative tails: the slower decay wins.
Asymptotic operator+(Asymptotic a, Asymptotic b);
Asymptotic pow(Asymptotic a, double q);

struct PowerTerm {
    double scale = 1.0;
    double exponent = 0.0;
    friend bool operator==(const PowerTerm&, const PowerTerm&) = default;
};

/// Positive coefficient sequence j -> c_j, j = 1, 2, ...
///
/// Two representations:
///  * power law: (sum_k s_k j^-a_k)^q with optional explicit head overrides
///    for the first few indices. A single term with q = 1 and no head is the
///    plain `s * j^-a` law. The tail is analytic, so its decay exponent is known.
///  * explicit: a finite list of values followed by a tail rule (repeat the
///    last value, or continue as last * (j/L)^-e). The tail is treated as
///    uncertified; `asymptotic()` returns nothing for explicit sequences.
class SpectralSequence {
public:
    enum class Kind { PowerLaw, Explicit };
    enum class TailRule { RepeatLast, Exponent };

    SpectralSequence();  // constant 1

    static SpectralSequence power_law(double exponent, double scale = 1.0);
    static SpectralSequence power_sum(std::vector<PowerTerm> terms, std::vector<double> head = {},
                                      double outer_power = 1.0);
    static SpectralSequence explicit_list(std::vector<double> values,
                                          TailRule rule = TailRule::RepeatLast,
                                          double tail_exponent = 0.0);

    /// Coefficient at index j >= 1.
    double operator()(std::size_t j) const;

    Kind kind() const { return kind_; }
    std::span<const PowerTerm> terms() const { return terms_; }
    std::span<const double> head() const { return head_; }
    double outer_power() const { return outer_power_; }
    TailRule tail_rule() const { return tail_rule_; }
    double tail_exponent() const { return tail_exponent_; }

    /// Leading tail term; empty for explicit sequences.
    std::optional<Asymptotic> asymptotic() const;

    /// Elementwise power j -> c_j^q.
    SpectralSequence pow(double q) const;

    friend bool operator==(const SpectralSequence&, const SpectralSequence&) = default;

private:
    Kind kind_ = Kind::PowerLaw;
    std::vector<PowerTerm> terms_;  // sorted by exponent, exponents unique
    std::vector<double> head_;      // power law: overrides; explicit: the values
    double outer_power_ = 1.0;
    TailRule tail_rule_ = TailRule::RepeatLast;
    double tail_exponent_ = 0.0;
};

/// Tail of |a_j - b_j|, when it can be computed from the representations.
std::optional<Asymptotic> difference_asymptotic(const SpectralSequence& a,
                                                const SpectralSequence& b);

/// Text form used by the config format, e.g.
///   power_law exponent=6 scale=1
///   power_law terms=1:6,1:12 head=1 power=1
///   explicit values=1,0.5,0.25 tail=repeat | tail=exponent:2
std::string to_string(const SpectralSequence& s);
SpectralSequence parse_sequence(std::string_view text);

}  // namespace ald
