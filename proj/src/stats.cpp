#include "procau/stats.hpp"

#include <algorithm>
#include <cmath>

#include "procau/errors.hpp"

namespace procau::stats {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw InputError("pearson: length mismatch");
    if (x.size() < 2)
        throw InputError("pearson: need at least two points");

    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

double mean(std::span<const double> v) {
    if (v.empty()) throw InputError("mean of empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) throw InputError("median of empty vector");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sign_test_p(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    // Sum of binomial(n, k) / 2^n for k >= wins, computed in doubles
    // (n is a seed count here, never large).
    double p = 0.0;
    for (int k = wins; k <= n; ++k) {
        double c = 1.0;
        for (int j = 0; j < k; ++j) c = c * static_cast<double>(n - j) / static_cast<double>(j + 1);
        p += c;
    }
    return p * std::pow(0.5, n);
}

} // namespace procau::stats
