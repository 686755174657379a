#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "procau/errors.hpp"

namespace procau::ad {

// Reverse-mode scalar autodiff on a tape. Every differentiable objective
// in the trainer is written once as a template over the scalar type and
// instantiated with double (values) and Ad (gradients), so the analytic
// gradient always matches the value computation by construction.
class Tape {
public:
    struct Node {
        double pa, pb;       // local partials
        std::int32_t a, b;   // parent indices, -1 = none
    };

    std::int32_t leaf() {
        nodes_.push_back({0.0, 0.0, -1, -1});
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::int32_t unary(std::int32_t a, double pa) {
        nodes_.push_back({pa, 0.0, a, -1});
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::int32_t binary(std::int32_t a, double pa, std::int32_t b, double pb) {
        nodes_.push_back({pa, pb, a, b});
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

    // Adjoints of every node given d(root)/d(root) = 1. The returned view
    // is valid until the next backward() or clear().
    std::span<const double> backward(std::int32_t root) {
        adjoints_.assign(nodes_.size(), 0.0);
        if (root >= 0) adjoints_[static_cast<std::size_t>(root)] = 1.0;
        for (std::int32_t i = static_cast<std::int32_t>(nodes_.size()) - 1; i >= 0; --i) {
            const double adj = adjoints_[static_cast<std::size_t>(i)];
            if (adj == 0.0) continue;
            const Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.a >= 0) adjoints_[static_cast<std::size_t>(n.a)] += n.pa * adj;
            if (n.b >= 0) adjoints_[static_cast<std::size_t>(n.b)] += n.pb * adj;
        }
        return adjoints_;
    }

private:
    std::vector<Node> nodes_;
    std::vector<double> adjoints_;
};

// A value on the tape. Index -1 marks a constant, which records nothing;
// mixing constants and variables is free.
struct Ad {
    double v = 0.0;
    std::int32_t i = -1;
    Tape* t = nullptr;

    Ad() = default;
    Ad(double c) : v(c) {} // NOLINT: implicit constants are the point
    Ad(double value, std::int32_t index, Tape* tape) : v(value), i(index), t(tape) {}

    static Ad leaf(Tape& tape, double value) { return Ad(value, tape.leaf(), &tape); }

    bool is_const() const { return i < 0; }
};

inline Tape* tape_of(const Ad& a, const Ad& b) {
    if (a.t) return a.t;
    return b.t;
}

inline Ad operator+(const Ad& a, const Ad& b) {
    Tape* t = tape_of(a, b);
    if (!t) return Ad(a.v + b.v);
    if (a.is_const()) return Ad(a.v + b.v, t->unary(b.i, 1.0), t);
    if (b.is_const()) return Ad(a.v + b.v, t->unary(a.i, 1.0), t);
    return Ad(a.v + b.v, t->binary(a.i, 1.0, b.i, 1.0), t);
}

inline Ad operator-(const Ad& a, const Ad& b) {
    Tape* t = tape_of(a, b);
    if (!t) return Ad(a.v - b.v);
    if (a.is_const()) return Ad(a.v - b.v, t->unary(b.i, -1.0), t);
    if (b.is_const()) return Ad(a.v - b.v, t->unary(a.i, 1.0), t);
    return Ad(a.v - b.v, t->binary(a.i, 1.0, b.i, -1.0), t);
}

inline Ad operator-(const Ad& a) {
    if (a.is_const()) return Ad(-a.v);
    return Ad(-a.v, a.t->unary(a.i, -1.0), a.t);
}

inline Ad operator*(const Ad& a, const Ad& b) {
    Tape* t = tape_of(a, b);
    if (!t) return Ad(a.v * b.v);
    if (a.is_const()) return Ad(a.v * b.v, t->unary(b.i, a.v), t);
    if (b.is_const()) return Ad(a.v * b.v, t->unary(a.i, b.v), t);
    return Ad(a.v * b.v, t->binary(a.i, b.v, b.i, a.v), t);
}

inline Ad operator/(const Ad& a, const Ad& b) {
    Tape* t = tape_of(a, b);
    const double inv = 1.0 / b.v;
    if (!t) return Ad(a.v * inv);
    if (a.is_const()) return Ad(a.v * inv, t->unary(b.i, -a.v * inv * inv), t);
    if (b.is_const()) return Ad(a.v * inv, t->unary(a.i, inv), t);
    return Ad(a.v * inv, t->binary(a.i, inv, b.i, -a.v * inv * inv), t);
}

inline Ad& operator+=(Ad& a, const Ad& b) { return a = a + b; }
inline Ad& operator-=(Ad& a, const Ad& b) { return a = a - b; }
inline Ad& operator*=(Ad& a, const Ad& b) { return a = a * b; }

inline Ad exp(const Ad& a) {
    const double e = std::exp(a.v);
    if (a.is_const()) return Ad(e);
    return Ad(e, a.t->unary(a.i, e), a.t);
}

inline Ad log(const Ad& a) {
    const double l = std::log(a.v);
    if (a.is_const()) return Ad(l);
    return Ad(l, a.t->unary(a.i, 1.0 / a.v), a.t);
}

inline Ad tanh(const Ad& a) {
    const double th = std::tanh(a.v);
    if (a.is_const()) return Ad(th);
    return Ad(th, a.t->unary(a.i, 1.0 - th * th), a.t);
}

// Value-selected min/max: the gradient follows the chosen branch
// (subgradient at ties).
inline Ad min(const Ad& a, const Ad& b) { return a.v <= b.v ? a : b; }
inline Ad max(const Ad& a, const Ad& b) { return a.v >= b.v ? a : b; }

inline double value(double x) { return x; }
inline double value(const Ad& x) { return x.v; }

inline bool operator<(const Ad& a, const Ad& b) { return a.v < b.v; }
inline bool operator>(const Ad& a, const Ad& b) { return a.v > b.v; }

// A scalar function of a parameter vector, callable both for its plain
// value and on the tape. Built with make_objective from one template.
struct Objective {
    std::function<double(std::span<const double>)> value;
    std::function<Ad(Tape&, std::span<const Ad>)> value_ad;
};

// Wraps a callable f such that f(span<const S>) -> S works for S = double
// and S = Ad.
template <typename F>
Objective make_objective(F f) {
    Objective obj;
    obj.value = [f](std::span<const double> theta) -> double { return f(theta); };
    obj.value_ad = [f](Tape& tape, std::span<const Ad> theta) -> Ad {
        (void)tape;
        return f(theta);
    };
    return obj;
}

// Exact reverse-accumulation gradient of the objective at theta.
std::vector<double> analytic_gradient(std::span<const double> theta, const Objective& obj);

// Evaluates the objective with leaves bound to theta; returns (value,
// gradient) in one sweep. The tape is cleared first.
double gradient(Tape& tape, std::span<const double> theta, const Objective& obj,
                std::vector<double>& grad_out);

struct GradCheckReport {
    bool pass = false;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    std::string worst_view;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Central finite differences per coordinate against the analytic gradient.
// `view_name` labels the worst coordinate for diagnostics (may be null).
GradCheckReport finite_diff_check(
    std::span<const double> theta, const Objective& obj, double tolerance,
    double step = 1e-5,
    const std::function<std::string(std::size_t)>& view_name = nullptr);

} // namespace procau::ad
