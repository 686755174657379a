#pragma once

#include <cstdint>
#include <numeric>

#include "procau/errors.hpp"

namespace procau {

// Exact rational arithmetic for the protocol metrics. All rates are small
// fractions of small integer counts, so metrics carry an exact (num, den)
// pair next to the double; oracle comparisons are bitwise on these pairs.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Ratio() = default;
    Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw DomainError("Ratio: zero denominator");
        normalize();
    }

    void normalize() {
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    Ratio operator+(const Ratio& o) const {
        return Ratio(num * o.den + o.num * den, den * o.den);
    }
    Ratio operator/(std::int64_t k) const { return Ratio(num, den * k); }
    Ratio operator*(const Ratio& o) const { return Ratio(num * o.num, den * o.den); }

    bool operator==(const Ratio& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Ratio& o) const { return !(*this == o); }
};

} // namespace procau
