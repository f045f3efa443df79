#include "ald/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ald/error.hpp"
#include "ald/text.hpp"

namespace ald {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(what) + " must be positive and finite");
}

std::vector<PowerTerm> canonical_terms(std::vector<PowerTerm> terms) {
    std::map<double, double> merged;
    for (const auto& t : terms) {
        require_positive(t.scale, "power-law scale");
        if (!(t.exponent >= 0.0) || !std::isfinite(t.exponent))
            throw ConfigError("power-law exponent must be finite and >= 0");
        merged[t.exponent] += t.scale;
    }
    std::vector<PowerTerm> out;
    for (auto [e, s] : merged) out.push_back({s, e});
    return out;
}

}  // namespace

Asymptotic Asymptotic::zero() { return {0.0, kInf}; }

bool Asymptotic::is_zero() const { return std::isinf(exponent) && exponent > 0; }

Asymptotic operator*(Asymptotic a, Asymptotic b) {
    if (a.is_zero() || b.is_zero()) return Asymptotic::zero();
    return {a.coef * b.coef, a.exponent + b.exponent};
}

Asymptotic operator/(Asymptotic a, Asymptotic b) {
    if (b.is_zero()) throw DomainError("division by an eventually-zero sequence");
    if (a.is_zero()) return Asymptotic::zero();
    return {a.coef / b.coef, a.exponent - b.exponent};
}

Asymptotic operator+(Asymptotic a, Asymptotic b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.exponent < b.exponent) return a;
    if (b.exponent < a.exponent) return b;
    return {a.coef + b.coef, a.exponent};
}

Asymptotic pow(Asymptotic a, double q) {
    if (a.is_zero()) return q > 0 ? Asymptotic::zero() : throw DomainError("0^q with q <= 0");
    return {std::pow(a.coef, q), a.exponent * q};
}

SpectralSequence::SpectralSequence() : terms_{{1.0, 0.0}} {}

SpectralSequence SpectralSequence::power_law(double exponent, double scale) {
    return power_sum({{scale, exponent}});
}

SpectralSequence SpectralSequence::power_sum(std::vector<PowerTerm> terms, std::vector<double> head,
                                             double outer_power) {
    if (terms.empty()) throw ConfigError("power law needs at least one term");
    require_positive(outer_power, "outer power");
    for (double v : head) require_positive(v, "head value");
    SpectralSequence s;
    s.kind_ = Kind::PowerLaw;
    s.terms_ = canonical_terms(std::move(terms));
    s.head_ = std::move(head);
    s.outer_power_ = outer_power;
    if (s.terms_.size() == 1 && s.head_.empty() && s.outer_power_ != 1.0) {
        s.terms_[0] = {std::pow(s.terms_[0].scale, outer_power), s.terms_[0].exponent * outer_power};
        s.outer_power_ = 1.0;
    }
    return s;
}

SpectralSequence SpectralSequence::explicit_list(std::vector<double> values, TailRule rule,
                                                 double tail_exponent) {
    if (values.empty()) throw ConfigError("explicit sequence needs at least one value");
    for (double v : values) require_positive(v, "sequence value");
    if (rule == TailRule::Exponent && (!(tail_exponent >= 0.0) || !std::isfinite(tail_exponent)))
        throw ConfigError("tail exponent must be finite and >= 0");
    SpectralSequence s;
    s.kind_ = Kind::Explicit;
    s.terms_.clear();
    s.head_ = std::move(values);
    s.tail_rule_ = rule;
    s.tail_exponent_ = rule == TailRule::Exponent ? tail_exponent : 0.0;
    return s;
}

double SpectralSequence::operator()(std::size_t j) const {
    if (j == 0) throw DomainError("sequence index starts at 1");
    if (j <= head_.size()) return head_[j - 1];
    if (kind_ == Kind::Explicit) {
        const double last = head_.back();
        if (tail_rule_ == TailRule::RepeatLast) return last;
        return last * std::pow(static_cast<double>(j) / static_cast<double>(head_.size()),
                               -tail_exponent_);
    }
    const double x = static_cast<double>(j);
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.scale * std::pow(x, -t.exponent);
    return outer_power_ == 1.0 ? sum : std::pow(sum, outer_power_);
}

std::optional<Asymptotic> SpectralSequence::asymptotic() const {
    if (kind_ == Kind::Explicit) return std::nullopt;
    const auto& lead = terms_.front();
    return Asymptotic{std::pow(lead.scale, outer_power_), lead.exponent * outer_power_};
}

SpectralSequence SpectralSequence::pow(double q) const {
    require_positive(q, "power");
    if (kind_ == Kind::Explicit) {
        std::vector<double> v = head_;
        for (double& x : v) x = std::pow(x, q);
        return explicit_list(std::move(v), tail_rule_, tail_exponent_ * q);
    }
    std::vector<double> h = head_;
    for (double& x : h) x = std::pow(x, q);
    return power_sum(terms_, std::move(h), outer_power_ * q);
}

std::optional<Asymptotic> difference_asymptotic(const SpectralSequence& a,
                                                const SpectralSequence& b) {
    using Kind = SpectralSequence::Kind;
    if (a.kind() == Kind::PowerLaw && b.kind() == Kind::PowerLaw && a.terms().size() == b.terms().size() &&
        std::equal(a.terms().begin(), a.terms().end(), b.terms().begin()) &&
        a.outer_power() == b.outer_power())
        return Asymptotic::zero();  // heads differ at most on finitely many indices
    if (a == b) return Asymptotic::zero();
    if (a.kind() != Kind::PowerLaw || b.kind() != Kind::PowerLaw) return std::nullopt;
    if (a.outer_power() != 1.0 || b.outer_power() != 1.0) return std::nullopt;
    std::map<double, double> diff;
    for (const auto& t : a.terms()) diff[t.exponent] += t.scale;
    for (const auto& t : b.terms()) diff[t.exponent] -= t.scale;
    for (auto [e, c] : diff)
        if (c != 0.0) return Asymptotic{std::abs(c), e};
    return Asymptotic::zero();
}

std::string to_string(const SpectralSequence& s) {
    using text::format_double;
    std::string out;
    if (s.kind() == SpectralSequence::Kind::Explicit) {
        out = "explicit values=" + text::join_doubles({s.head().begin(), s.head().end()});
        if (s.tail_rule() == SpectralSequence::TailRule::RepeatLast)
            out += " tail=repeat";
        else
            out += " tail=exponent:" + format_double(s.tail_exponent());
        return out;
    }
    if (s.terms().size() == 1 && s.head().empty() && s.outer_power() == 1.0) {
        return "power_law exponent=" + format_double(s.terms()[0].exponent) +
               " scale=" + format_double(s.terms()[0].scale);
    }
    out = "power_law terms=";
    for (std::size_t k = 0; k < s.terms().size(); ++k) {
        if (k) out += ',';
        out += format_double(s.terms()[k].scale) + ":" + format_double(s.terms()[k].exponent);
    }
    if (!s.head().empty()) out += " head=" + text::join_doubles({s.head().begin(), s.head().end()});
    if (s.outer_power() != 1.0) out += " power=" + format_double(s.outer_power());
    return out;
}

SpectralSequence parse_sequence(std::string_view input) {
    const auto tokens = text::split(input, ' ');
    std::vector<std::string_view> words;
    for (auto t : tokens)
        if (!t.empty()) words.push_back(t);
    if (words.empty()) throw ConfigError("empty sequence specification");

    std::map<std::string, std::string_view> kv;
    for (std::size_t k = 1; k < words.size(); ++k) {
        const auto eq = words[k].find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("expected key=value in sequence spec, got '" + std::string(words[k]) + "'");
        kv[std::string(words[k].substr(0, eq))] = words[k].substr(eq + 1);
    }
    auto take = [&](const std::string& key) -> std::optional<std::string_view> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        auto v = it->second;
        kv.erase(it);
        return v;
    };

    SpectralSequence result;
    if (words[0] == "power_law") {
        std::vector<PowerTerm> terms;
        std::vector<double> head;
        double power = 1.0;
        if (auto t = take("terms")) {
            for (auto piece : text::split(*t, ',')) {
                const auto colon = piece.find(':');
                if (colon == std::string_view::npos) throw ConfigError("term must be scale:exponent");
                terms.push_back({text::parse_double(piece.substr(0, colon)),
                                 text::parse_double(piece.substr(colon + 1))});
            }
        } else {
            const auto e = take("exponent");
            if (!e) throw ConfigError("power_law needs exponent= or terms=");
            const auto sc = take("scale");
            terms.push_back({sc ? text::parse_double(*sc) : 1.0, text::parse_double(*e)});
        }
        if (auto h = take("head")) head = text::parse_double_list(*h);
        if (auto p = take("power")) power = text::parse_double(*p);
        result = SpectralSequence::power_sum(std::move(terms), std::move(head), power);
    } else if (words[0] == "explicit") {
        const auto v = take("values");
        if (!v) throw ConfigError("explicit sequence needs values=");
        auto rule = SpectralSequence::TailRule::RepeatLast;
        double tail_exp = 0.0;
        if (auto t = take("tail")) {
            if (*t == "repeat") {
            } else if (t->starts_with("exponent:")) {
                rule = SpectralSequence::TailRule::Exponent;
                tail_exp = text::parse_double(t->substr(9));
            } else {
                throw ConfigError("unknown tail rule '" + std::string(*t) + "'");
            }
        }
        result = SpectralSequence::explicit_list(text::parse_double_list(*v), rule, tail_exp);
    } else {
        throw ConfigError("unknown sequence kind '" + std::string(words[0]) + "'");
    }
    if (!kv.empty()) throw ConfigError("unknown sequence key '" + kv.begin()->first + "'");
    return result;
}

}  // namespace ald
