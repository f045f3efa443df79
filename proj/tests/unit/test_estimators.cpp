#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ald/error.hpp"
#include "ald/estimators.hpp"
#include "oracles.hpp"

using namespace ald;

namespace {

Matrix gaussian_rows(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = z(eng) + (j == 0 ? shift : 0.0);
    return m;
}

}  // namespace

TEST_CASE("knn kl on known pairs") {
    // Same law: estimate near 0.
    const auto same = knn_kl(gaussian_rows(2000, 2, 0, 1), gaussian_rows(2000, 2, 0, 2), 5);
    CHECK(std::abs(same.value) < 0.05);
    CHECK(same.n == 2000);
    CHECK(same.m == 2000);
    CHECK(same.d == 2);
    // N(0,1) || N(1,1): KL = 1/2.
    const auto shifted = knn_kl(gaussian_rows(4000, 1, 0, 3), gaussian_rows(4000, 1, 1, 4), 5);
    CHECK(shifted.value == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("knn kl multi-k matches single-k") {
    const auto X = gaussian_rows(300, 3, 0, 5), Y = gaussian_rows(400, 3, 0.5, 6);
    const std::vector<std::size_t> ks{1, 4, 9};
    const auto all = knn_kl(X, Y, ks);
    REQUIRE(all.size() == 3);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(all[i].k == ks[i]);
        CHECK(all[i].value == doctest::Approx(knn_kl(X, Y, ks[i]).value).epsilon(1e-14));
    }
}

TEST_CASE("knn kl hand-computed example") {
    // X = {0, 1, 3}, Y = {0.5, 2}, k = 1, d = 1:
    // r = (1, 1, 2), s = (0.5, 0.5, 1); sum log(s/r) = 3 log(1/2); + log(2/2).
    Matrix X(3, 1), Y(2, 1);
    X << 0, 1, 3;
    Y << 0.5, 2;
    CHECK(knn_kl(X, Y, 1).value == doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("duplicate points hit the distance floor") {
    Matrix X(4, 1), Y(3, 1);
    X << 1, 1, 2, 5;
    Y << 1, 3, 4;
    const auto e = knn_kl(X, Y, 1);
    CHECK(std::isfinite(e.value));
    CHECK(e.floored_count >= 3);
}

TEST_CASE("knn kl input errors") {
    const auto X = gaussian_rows(10, 2, 0, 1);
    CHECK_THROWS_AS(knn_kl(X, gaussian_rows(10, 3, 0, 1), 2), ParameterError);
    CHECK_THROWS_AS(knn_kl(X, gaussian_rows(10, 2, 0, 1), 0), ParameterError);
    CHECK_THROWS_AS(knn_kl(X, gaussian_rows(10, 2, 0, 1), 10), ParameterError);
    CHECK_THROWS_AS(knn_kl(X, gaussian_rows(3, 2, 0, 1), 4), ParameterError);
    Matrix bad = X;
    bad(3, 1) = NAN;
    CHECK_THROWS_AS(knn_kl(bad, X, 2), ParameterError);
}

TEST_CASE("property: knn kl invariant under permutation and rigid motion") {
    oracle::Gen g(77);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = g.index(1, 4), n = g.index(20, 80), m = g.index(20, 80), k = g.index(1, 5);
        const auto X = gaussian_rows(n, d, g.uniform(-1, 1), 100 + trial);
        const auto Y = gaussian_rows(m, d, g.uniform(-1, 1), 200 + trial);
        const double base = knn_kl(X, Y, k).value;

        Matrix Xp = X;
        for (Eigen::Index i = Xp.rows() - 1; i > 0; --i) Xp.row(i).swap(Xp.row(static_cast<Eigen::Index>(g.index(0, i))));
        CHECK(knn_kl(Xp, Y, k).value == doctest::Approx(base).epsilon(1e-10));

        // random orthogonal matrix via QR, plus a translation
        Eigen::MatrixXd R(d, d);
        for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = g.normal();
        const Eigen::MatrixXd Qm = Eigen::HouseholderQR<Eigen::MatrixXd>(R).householderQ();
        Eigen::RowVectorXd shift(d);
        for (auto& v : shift) v = g.normal() * 3;
        const Matrix Xr = (X * Qm).rowwise() + shift, Yr = (Y * Qm).rowwise() + shift;
        CHECK(knn_kl(Xr, Yr, k).value == doctest::Approx(base).epsilon(1e-8));
    }
}

TEST_CASE("knn kl bias shrinks with sample size") {
    // Exact KL between N(0, I_3) and N(0.7 e_1, I_3) is 0.245.
    auto mean_abs_err = [](std::size_t n) {
        double acc = 0.0;
        for (int r = 0; r < 4; ++r)
            acc += std::abs(knn_kl(gaussian_rows(n, 3, 0, 10 + r), gaussian_rows(n, 3, 0.7, 20 + r), 5).value - 0.245);
        return acc / 4;
    };
    const double small = mean_abs_err(100), large = mean_abs_err(3000);
    MESSAGE("abs err n=100: " << small << ", n=3000: " << large);
    CHECK(large < small);
    CHECK(large < 0.05);
}

TEST_CASE("variance profile") {
    const auto s = SpectralSequence::power_law(2.0);
    const MixtureSpec mix({{0.5, {{1, 2.0}}, s}, {0.5, {{1, -2.0}}, s}});
    const auto e = sample_target(mix, 4, 40000, 3);
    const auto p = variance_profile(e, mix, 4);
    REQUIRE(p.normalized.size() == 4);
    for (double v : p.normalized) CHECK(v == doctest::Approx(1.0).epsilon(0.05));
    CHECK(p.excluded_paths == 0);

    TrajectoryEnsemble t;
    t.samples.resize(4, 1);
    t.samples << 1, -1, 1e30, 3;
    t.flagged = {0, 0, 1, 0};
    const MixtureSpec unit({{1.0, {}, SpectralSequence::power_law(0.0)}});
    const auto q = variance_profile(t, unit, 1);
    CHECK(q.excluded_paths == 1);
    CHECK(q.normalized[0] == doctest::Approx(4.0));  // sample variance of {1,-1,3}

    t.flagged = {1, 1, 1, 0};
    CHECK_THROWS_AS(variance_profile(t, unit, 1), EstimationError);
    CHECK_THROWS_AS(variance_profile(t, unit, 2), ParameterError);

    std::ostringstream os;
    write_csv(os, q);
    CHECK(os.str() == "j,normalized_variance,excluded_paths\n1,4,1\n");
}
