#include "ald/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ald/error.hpp"
#include "ald/text.hpp"

namespace ald {

namespace {

double squared_distance(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double r = a[j] - b[j];
        s += r * r;
    }
    return s;
}

}  // namespace

std::vector<KnnKlEstimate> knn_kl(const Matrix& X, const Matrix& Y, std::span<const std::size_t> ks) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto m = static_cast<std::size_t>(Y.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    if (n < 2 || m < 2) throw ParameterError("knn_kl needs at least 2 samples in each set");
    if (static_cast<std::size_t>(Y.cols()) != d || d == 0)
        throw ParameterError("knn_kl: sample sets must share a positive dimension");
    if (ks.empty()) throw ParameterError("knn_kl: no k given");
    for (std::size_t k : ks)
        if (k == 0 || k >= n || k > m) throw ParameterError("knn_kl: need 1 <= k < n and k <= m");
    if (!X.allFinite() || !Y.allFinite()) throw ParameterError("knn_kl: samples must be finite");

    // Process k in decreasing order so each selection narrows the previous prefix.
    std::vector<std::size_t> order(ks.size());
    for (std::size_t a = 0; a < ks.size(); ++a) order[a] = a;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ks[a] > ks[b]; });

    std::vector<long double> sum(ks.size(), 0.0L);
    std::vector<std::size_t> floored(ks.size(), 0);
    std::vector<double> rx(n - 1), sy(m);
    std::vector<double> r_k(ks.size()), s_k(ks.size());

    auto select = [&](std::vector<double>& buf, std::vector<double>& out) {
        std::size_t prefix = buf.size();
        for (std::size_t a : order) {
            const std::size_t k = ks[a];
            std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1),
                             buf.begin() + static_cast<std::ptrdiff_t>(prefix));
            out[a] = buf[k - 1];
            prefix = k;
        }
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = X.row(static_cast<Eigen::Index>(i)).data();
        std::size_t c = 0;
        for (std::size_t l = 0; l < n; ++l)
            if (l != i) rx[c++] = squared_distance(xi, X.row(static_cast<Eigen::Index>(l)).data(), d);
        for (std::size_t l = 0; l < m; ++l)
            sy[l] = squared_distance(xi, Y.row(static_cast<Eigen::Index>(l)).data(), d);
        select(rx, r_k);
        select(sy, s_k);
        for (std::size_t a = 0; a < ks.size(); ++a) {
            double r = std::sqrt(r_k[a]), s = std::sqrt(s_k[a]);
            if (r < kDistanceFloor) {
                r = kDistanceFloor;
                ++floored[a];
            }
            if (s < kDistanceFloor) {
                s = kDistanceFloor;
                ++floored[a];
            }
            sum[a] += std::log(s) - std::log(r);
        }
    }

    std::vector<KnnKlEstimate> out(ks.size());
    for (std::size_t a = 0; a < ks.size(); ++a) {
        out[a].value = static_cast<double>(static_cast<long double>(d) / n * sum[a]) +
                       std::log(static_cast<double>(m) / static_cast<double>(n - 1));
        out[a].k = ks[a];
        out[a].n = n;
        out[a].m = m;
        out[a].d = d;
        out[a].floored_count = floored[a];
    }
    return out;
}

KnnKlEstimate knn_kl(const Matrix& X, const Matrix& Y, std::size_t k) {
    const std::size_t ks[] = {k};
    return knn_kl(X, Y, std::span<const std::size_t>(ks)).front();
}

void write_csv_header(std::ostream& os, const KnnKlEstimate&) {
    os << "d,scheme,k,n,m,value,floored_count\n";
}

void write_csv_row(std::ostream& os, const KnnKlEstimate& e, std::string_view scheme) {
    os << e.d << ',' << scheme << ',' << e.k << ',' << e.n << ',' << e.m << ','
       << text::format_double(e.value) << ',' << e.floored_count << '\n';
}

double target_marginal_variance(const MixtureSpec& mixture, std::size_t j) {
    if (j == 0) throw DomainError("coordinate index starts at 1");
    double second = 0.0, first = 0.0;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const double w = mixture.weight(i), m = mixture.mean(i, j);
        second += w * (mixture.sigma(i, j) + m * m);
        first += w * m;
    }
    return second - first * first;
}

VarianceProfile variance_profile(const TrajectoryEnsemble& ensemble, const MixtureSpec& mixture,
                                 std::size_t d) {
    if (d == 0 || d > ensemble.dim()) throw ParameterError("variance_profile: d outside ensemble dimension");
    VarianceProfile out;
    std::size_t used = 0;
    for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
        if (!ensemble.flagged.empty() && ensemble.flagged[p])
            ++out.excluded_paths;
        else
            ++used;
    }
    if (used < 2) throw EstimationError("variance_profile: fewer than two unflagged paths");
    out.normalized.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        long double mean = 0.0L;
        for (std::size_t p = 0; p < ensemble.n_paths(); ++p)
            if (ensemble.flagged.empty() || !ensemble.flagged[p]) mean += ensemble.samples(p, j);
        mean /= used;
        long double ss = 0.0L;
        for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
            if (!ensemble.flagged.empty() && ensemble.flagged[p]) continue;
            const long double r = ensemble.samples(p, j) - mean;
            ss += r * r;
        }
        out.normalized[j] = static_cast<double>(ss / (used - 1)) / target_marginal_variance(mixture, j + 1);
    }
    return out;
}

void write_csv(std::ostream& os, const VarianceProfile& profile) {
    os << "j,normalized_variance,excluded_paths\n";
    for (std::size_t j = 0; j < profile.normalized.size(); ++j)
        os << j + 1 << ',' << text::format_double(profile.normalized[j]) << ',' << profile.excluded_paths << '\n';
}

}  // namespace ald
