#include "ald/text.hpp"

#include <charconv>
#include <cmath>

#include "ald/error.hpp"

namespace ald::text {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_double(std::string_view s) {
    s = trim(s);
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw ConfigError("not an unsigned integer: '" + std::string(s) + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    s = trim(s);
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<double> parse_double_list(std::string_view s) {
    std::vector<double> out;
    for (auto piece : split(s, ',')) out.push_back(parse_double(piece));
    return out;
}

std::string join_doubles(const std::vector<double>& v, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace ald::text
