#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ald/config.hpp"
#include "ald/error.hpp"
#include "ald/estimators.hpp"
#include "ald/harness.hpp"
#include "ald/integrators.hpp"
#include "ald/mixture.hpp"
#include "ald/selftest.hpp"
#include "ald/spectra.hpp"

namespace py = pybind11;

namespace {

ald::MixtureSpec make_mixture(const std::vector<std::tuple<double, ald::SparseMean, ald::SpectralSequence>>& comps) {
    std::vector<ald::MixtureComponent> out;
    for (const auto& [w, m, s] : comps) out.push_back({w, m, s});
    return ald::MixtureSpec(std::move(out));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Annealed Langevin sampling with exact-linear-part and Euler-Maruyama integrators";

    py::register_exception<ald::IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ald::UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);
    py::register_exception<ald::EstimationError>(m, "EstimationError", PyExc_RuntimeError);

    py::class_<ald::SpectralSequence>(m, "SpectralSequence")
        .def_static("power_law", &ald::SpectralSequence::power_law, py::arg("exponent"), py::arg("scale") = 1.0)
        .def_static("parse", [](const std::string& s) { return ald::parse_sequence(s); })
        .def("__call__", &ald::SpectralSequence::operator())
        .def("__str__", [](const ald::SpectralSequence& s) { return ald::to_string(s); })
        .def("__eq__", [](const ald::SpectralSequence& a, const ald::SpectralSequence& b) { return a == b; });

    py::class_<ald::MixtureSpec>(m, "MixtureSpec")
        .def(py::init(&make_mixture), py::arg("components"),
             "components: list of (weight, {index: mean}, sigma sequence)")
        .def("__len__", &ald::MixtureSpec::size)
        .def("weight", &ald::MixtureSpec::weight)
        .def("mean", &ald::MixtureSpec::mean)
        .def("sigma", &ald::MixtureSpec::sigma);

    py::class_<ald::AnnealingSchedule>(m, "AnnealingSchedule")
        .def(py::init<double, std::vector<double>>(), py::arg("amplitude"), py::arg("mesh"))
        .def_static("uniform", &ald::AnnealingSchedule::uniform, py::arg("horizon"), py::arg("amplitude"),
                    py::arg("n_steps"))
        .def("theta", &ald::AnnealingSchedule::theta)
        .def_property_readonly("horizon", &ald::AnnealingSchedule::horizon)
        .def_property_readonly("h_max", &ald::AnnealingSchedule::h_max)
        .def_property_readonly("n_steps", &ald::AnnealingSchedule::n_steps);

    py::class_<ald::ExperimentConfig>(m, "ExperimentConfig")
        .def_static("parse", [](const std::string& s) { return ald::parse_config(s); })
        .def_static("load", [](const std::string& p) { return ald::load_config(p); })
        .def_static("reference", &ald::two_mode_reference_config)
        .def("serialize", [](const ald::ExperimentConfig& c) { return ald::serialize(c); })
        .def("mixture", &ald::ExperimentConfig::mixture)
        .def("schedule", &ald::ExperimentConfig::schedule)
        .def_readwrite("lambda_", &ald::ExperimentConfig::lambda)
        .def_readwrite("gamma", &ald::ExperimentConfig::gamma)
        .def_readwrite("dims", &ald::ExperimentConfig::dims)
        .def_readwrite("n_paths", &ald::ExperimentConfig::n_paths)
        .def_readwrite("seed", &ald::ExperimentConfig::seed)
        .def_readwrite("k_list", &ald::ExperimentConfig::k_list)
        .def_readwrite("n_target_samples", &ald::ExperimentConfig::n_target_samples)
        .def_property(
            "output_dir", [](const ald::ExperimentConfig& c) { return c.output_dir.string(); },
            [](ald::ExperimentConfig& c, const std::string& s) { c.output_dir = s; });

    m.def(
        "sample_target",
        [](const ald::MixtureSpec& mix, std::size_t d, std::size_t n, std::uint64_t seed) {
            return ald::sample_target(mix, d, n, seed).samples;
        },
        py::arg("mixture"), py::arg("d"), py::arg("n"), py::arg("seed"));

    m.def(
        "run_chain",
        [](const std::string& scheme, const ald::MixtureSpec& mix, const ald::SpectralSequence& lambda,
           const ald::SpectralSequence& gamma, const ald::AnnealingSchedule& sched, std::size_t d, std::size_t n,
           std::uint64_t seed) {
            ald::TrajectoryEnsemble e;
            {
                py::gil_scoped_release release;
                e = ald::run_chain(ald::parse_scheme(scheme), mix, lambda, gamma, sched, d, n, seed);
            }
            return py::make_tuple(e.samples, e.overflow_count);
        },
        py::arg("scheme"), py::arg("mixture"), py::arg("lambda_"), py::arg("gamma"), py::arg("schedule"),
        py::arg("d"), py::arg("n_paths"), py::arg("seed"),
        "Terminal samples (n_paths x d) and the number of overflowed EM paths.");

    m.def(
        "elp_coeffs",
        [](double t0, double t1, double su, double lam, double gam, double T, double A) {
            const auto c = ald::elp_coeffs(t0, t1, su, lam, gam, T, A);
            return py::make_tuple(c.phi, c.psi, c.noise_var);
        },
        py::arg("t_n"), py::arg("t_np1"), py::arg("sigma_under"), py::arg("lambda_"), py::arg("gamma"),
        py::arg("T"), py::arg("A"));

    m.def(
        "knn_kl",
        [](const ald::Matrix& X, const ald::Matrix& Y, std::size_t k) { return ald::knn_kl(X, Y, k).value; },
        py::arg("X"), py::arg("Y"), py::arg("k"));

    m.def(
        "stability",
        [](const ald::MixtureSpec& mix, const ald::SpectralSequence& lambda, const ald::SpectralSequence& gamma,
           const ald::AnnealingSchedule& sched, std::size_t d) {
            const auto r = ald::stability_report(mix, lambda, gamma, sched, d);
            py::dict out;
            out["h"] = r.h;
            out["h_bound"] = r.h_bound;
            out["first_unstable_index"] = r.first_unstable_index;
            out["worst_factor"] = r.worst_factor;
            return out;
        },
        py::arg("mixture"), py::arg("lambda_"), py::arg("gamma"), py::arg("schedule"), py::arg("d"));

    m.def(
        "conditions",
        [](const ald::MixtureSpec& mix, const ald::SpectralSequence& lambda, const ald::SpectralSequence& gamma,
           std::size_t d) {
            const auto r = ald::eval_conditions(mix, lambda, gamma, d);
            py::dict out;
            for (const auto& e : r.entries) {
                py::dict row;
                row["partial_sum"] = e.partial_sum;
                row["tail_exponent"] = e.tail_exponent;
                row["verdict"] = std::string(ald::to_string(e.verdict));
                out[py::str(std::string(ald::to_string(e.id)))] = row;
            }
            return out;
        },
        py::arg("mixture"), py::arg("lambda_"), py::arg("gamma"), py::arg("d"));

    m.def(
        "admissible_range",
        [](double a, double b) -> std::optional<std::pair<double, double>> {
            const auto r = ald::power_law_admissible_range(a, b);
            if (!r) return std::nullopt;
            return std::pair{r->lo, r->hi};
        },
        py::arg("a"), py::arg("b"));
    m.def("balanced_preconditioner", &ald::balanced_preconditioner, py::arg("lambda_"));
    m.def("F", &ald::F);
    m.def("Psi", &ald::Psi);
    m.def("factorized_kl_init", &ald::factorized_kl_init, py::arg("mixture"), py::arg("lambda_"), py::arg("A"),
          py::arg("d"));

    m.def(
        "run_kl_curve",
        [](const ald::ExperimentConfig& c) {
            ald::KlCurveResult r;
            {
                py::gil_scoped_release release;
                r = ald::run_kl_curve(c);
            }
            py::list rows;
            for (const auto& row : r.rows)
                rows.append(py::make_tuple(row.d, std::string(ald::to_string(row.scheme)), row.k, row.kl_estimate,
                                           row.overflow_count));
            return rows;
        },
        py::arg("config"), "Rows (d, scheme, k, kl_estimate, overflow_count); artifacts go to the output dir.");

    m.def("selftest", [](std::uint64_t seed) {
        py::list out;
        for (const auto& c : ald::run_selftest(seed)) out.append(py::make_tuple(c.name, c.passed, c.detail));
        return out;
    }, py::arg("seed") = 0);

    m.attr("__version__") = std::string(ald::kSoftwareVersion);
}
