#include "procau/autodiff.hpp"

#include <algorithm>

namespace procau::ad {

double gradient(Tape& tape, std::span<const double> theta, const Objective& obj,
                std::vector<double>& grad_out) {
    tape.clear();
    std::vector<Ad> leaves;
    leaves.reserve(theta.size());
    for (double v : theta) leaves.push_back(Ad::leaf(tape, v));

    const Ad root = obj.value_ad(tape, leaves);
    if (!std::isfinite(root.v))
        throw InternalError("objective evaluated to a non-finite value");
    if (root.is_const()) {
        // Objective independent of theta; gradient is identically zero.
        grad_out.assign(theta.size(), 0.0);
        return root.v;
    }

    const auto adjoints = tape.backward(root.i);
    grad_out.resize(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double g = adjoints[k]; // leaves occupy the first nodes
        if (!std::isfinite(g))
            throw InternalError("non-finite gradient at parameter " + std::to_string(k));
        grad_out[k] = g;
    }
    return root.v;
}

std::vector<double> analytic_gradient(std::span<const double> theta, const Objective& obj) {
    Tape tape;
    std::vector<double> grad;
    gradient(tape, theta, obj, grad);
    return grad;
}

GradCheckReport finite_diff_check(std::span<const double> theta, const Objective& obj,
                                  double tolerance, double step,
                                  const std::function<std::string(std::size_t)>& view_name) {
    const std::vector<double> analytic = analytic_gradient(theta, obj);
    std::vector<double> work(theta.begin(), theta.end());

    GradCheckReport report;
    report.pass = true;
    for (std::size_t k = 0; k < work.size(); ++k) {
        const double saved = work[k];
        work[k] = saved + step;
        const double up = obj.value(work);
        work[k] = saved - step;
        const double down = obj.value(work);
        work[k] = saved;
        const double numeric = (up - down) / (2.0 * step);

        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
        const double rel = std::abs(analytic[k] - numeric) / denom;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_index = k;
            report.analytic_at_worst = analytic[k];
            report.numeric_at_worst = numeric;
            if (view_name) report.worst_view = view_name(k);
        }
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

} // namespace procau::ad
