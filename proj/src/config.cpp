#include "ald/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ald/error.hpp"
#include "ald/text.hpp"

namespace ald {

namespace pt = boost::property_tree;

MixtureSpec ExperimentConfig::mixture() const { return MixtureSpec(components); }

AnnealingSchedule ExperimentConfig::schedule() const {
    if (!mesh.empty()) return AnnealingSchedule(amplitude, mesh);
    return AnnealingSchedule::uniform(horizon, amplitude, n_steps);
}

void ExperimentConfig::validate() const {
    (void)mixture();
    if (mesh.empty()) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon T must be positive");
        if (n_steps == 0) throw ConfigError("n_steps must be >= 1");
    }
    (void)schedule();
    if (dims.empty()) throw ConfigError("dims must not be empty");
    if (dims.front() == 0) throw ConfigError("dims must be >= 1");
    for (std::size_t a = 1; a < dims.size(); ++a)
        if (dims[a] <= dims[a - 1]) throw ConfigError("dims must be strictly increasing");
    if (n_paths == 0) throw ConfigError("n_paths must be >= 1");
    if (schemes.empty()) throw ConfigError("at least one scheme is required");
    for (auto s : schemes)
        if (s != Scheme::EM && s != Scheme::ELP) throw ConfigError("schemes must be EM and/or ELP");
    if (k_list.empty()) throw ConfigError("k_list must not be empty");
    for (std::size_t k : k_list) {
        if (k == 0) throw ConfigError("k must be >= 1");
        if (k >= n_target_samples) throw ConfigError("k must be smaller than n_target_samples");
        if (k > n_paths) throw ConfigError("k must not exceed n_paths");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

namespace {

std::string format_mean(const SparseMean& mean) {
    std::string out;
    for (auto [j, v] : mean) {
        if (!out.empty()) out += ", ";
        out += std::to_string(j) + ":" + text::format_double(v);
    }
    return out;
}

SparseMean parse_mean(std::string_view s) {
    SparseMean mean;
    for (auto piece : text::split(s, ',')) {
        const auto colon = piece.find(':');
        if (colon == std::string_view::npos) throw ConfigError("mean entries must be index:value");
        const auto j = text::parse_u64(piece.substr(0, colon));
        if (j == 0) throw ConfigError("mean indices are 1-based");
        mean[static_cast<std::size_t>(j)] = text::parse_double(piece.substr(colon + 1));
    }
    return mean;
}

std::vector<std::size_t> parse_size_list(std::string_view s) {
    std::vector<std::size_t> out;
    for (auto piece : text::split(s, ',')) out.push_back(static_cast<std::size_t>(text::parse_u64(piece)));
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t a = 0; a < v.size(); ++a) {
        if (a) out += ", ";
        if constexpr (std::is_same_v<T, double>)
            out += text::format_double(v[a]);
        else
            out += std::to_string(v[a]);
    }
    return out;
}

std::string required(const pt::ptree& tree, const std::string& path) {
    auto v = tree.get_optional<std::string>(path);
    if (!v) throw ConfigError("missing config key '" + path + "'");
    return *v;
}

}  // namespace

ExperimentConfig parse_config(std::string_view input) {
    pt::ptree tree;
    try {
        std::istringstream is{std::string(input)};
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }

    ExperimentConfig c;
    for (std::size_t i = 1;; ++i) {
        const auto section = tree.get_child_optional("component" + std::to_string(i));
        if (!section) break;
        MixtureComponent comp;
        comp.weight = text::parse_double(required(*section, "weight"));
        comp.mean = parse_mean(section->get<std::string>("mean", ""));
        comp.sigma = parse_sequence(required(*section, "sigma"));
        c.components.push_back(std::move(comp));
    }
    if (c.components.empty()) throw ConfigError("config defines no [component1] section");

    c.lambda = parse_sequence(required(tree, "sequences.lambda"));
    c.gamma = parse_sequence(required(tree, "sequences.gamma"));

    c.amplitude = text::parse_double(tree.get<std::string>("schedule.amplitude", "1"));
    if (auto mesh = tree.get_optional<std::string>("schedule.mesh"); mesh && !text::trim(*mesh).empty()) {
        c.mesh = text::parse_double_list(*mesh);
        if (c.mesh.empty()) throw ConfigError("schedule.mesh is empty");
        c.horizon = c.mesh.back();
        c.n_steps = c.mesh.size() - 1;
    } else {
        c.horizon = text::parse_double(required(tree, "schedule.horizon"));
        c.n_steps = static_cast<std::size_t>(text::parse_u64(required(tree, "schedule.n_steps")));
    }

    c.dims = parse_size_list(required(tree, "run.dims"));
    c.n_paths = static_cast<std::size_t>(text::parse_u64(required(tree, "run.n_paths")));
    c.seed = text::parse_u64(tree.get<std::string>("run.seed", "0"));
    c.schemes.clear();
    for (auto s : text::split(tree.get<std::string>("run.schemes", "EM, ELP"), ','))
        c.schemes.push_back(parse_scheme(s));
    c.output_dir = std::string(text::trim(tree.get<std::string>("run.output", "")));

    c.k_list = parse_size_list(tree.get<std::string>("kl.k_list", "20"));
    c.n_target_samples = static_cast<std::size_t>(
        text::parse_u64(tree.get<std::string>("kl.n_target_samples", std::to_string(c.n_paths))));
    c.epsilon = text::parse_double(tree.get<std::string>("analysis.epsilon", "0.01"));

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
    std::ostringstream os;
    for (std::size_t i = 0; i < c.components.size(); ++i) {
        const auto& comp = c.components[i];
        os << "[component" << i + 1 << "]\n"
           << "weight = " << text::format_double(comp.weight) << '\n'
           << "mean = " << format_mean(comp.mean) << '\n'
           << "sigma = " << to_string(comp.sigma) << "\n\n";
    }
    os << "[sequences]\n"
       << "lambda = " << to_string(c.lambda) << '\n'
       << "gamma = " << to_string(c.gamma) << "\n\n";
    os << "[schedule]\n" << "amplitude = " << text::format_double(c.amplitude) << '\n';
    if (!c.mesh.empty())
        os << "mesh = " << join(c.mesh) << "\n\n";
    else
        os << "horizon = " << text::format_double(c.horizon) << '\n' << "n_steps = " << c.n_steps << "\n\n";
    os << "[run]\n"
       << "dims = " << join(c.dims) << '\n'
       << "n_paths = " << c.n_paths << '\n'
       << "seed = " << c.seed << '\n'
       << "schemes = ";
    for (std::size_t a = 0; a < c.schemes.size(); ++a) os << (a ? ", " : "") << to_string(c.schemes[a]);
    os << '\n';
    if (!c.output_dir.empty()) os << "output = " << c.output_dir.string() << '\n';
    os << '\n';
    os << "[kl]\n"
       << "k_list = " << join(c.k_list) << '\n'
       << "n_target_samples = " << c.n_target_samples << "\n\n";
    os << "[analysis]\n" << "epsilon = " << text::format_double(c.epsilon) << '\n';
    return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : serialize(config)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig two_mode_reference_config() {
    ExperimentConfig c;
    const auto sigma = SpectralSequence::power_law(6.0);
    c.components = {{0.75, {}, sigma}, {0.25, {{1, 8.0}}, sigma}};
    c.lambda = SpectralSequence::power_law(6.0);
    c.gamma = SpectralSequence::power_law(4.0);
    c.horizon = 2.5;
    c.amplitude = 10.0;  // 2S with S = 5
    c.n_steps = 2500;
    c.dims = {1, 5, 10, 20, 30, 40, 50, 60};
    c.n_paths = 800;
    c.seed = 42;
    c.schemes = {Scheme::EM, Scheme::ELP};
    c.k_list = {20};
    c.n_target_samples = 800;
    c.epsilon = 0.01;
    return c;
}

}  // namespace ald
