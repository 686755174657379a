#pragma once

#include <optional>
#include <span>
#include <vector>

namespace procau::stats {

// Sample Pearson product-moment correlation. Requires equal lengths >= 2;
// returns nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double median(std::vector<double> v); // by value: needs a sort

// One-sided sign test: probability of at least `wins` successes in
// `wins + losses` fair coin flips. Ties are dropped by the caller.
double sign_test_p(int wins, int losses);

} // namespace procau::stats
