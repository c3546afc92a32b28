#include "situ3d/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace situ3d::nn {

std::string GradCheckReport::summary() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: worst rel err %.3e over %zu parameters (tol %.1e)",
                  pass() ? "pass" : "FAIL", worst, entries.size(), tolerance);
    return buf;
}

GradCheckReport grad_check(ParameterSet& params, const std::function<double()>& loss_backward,
                           const std::function<double()>& loss_forward, double h,
                           double tolerance) {
    GradCheckReport report;
    report.tolerance = tolerance;

    params.zero_grads();
    loss_backward();
    std::vector<Mat> analytic;
    for (const Param& p : params) analytic.push_back(p.grad);

    std::size_t idx = 0;
    for (Param& p : params) {
        GradCheckEntry entry;
        entry.name = p.name;
        for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
                const double saved = p.value(i, j);
                p.value(i, j) = saved + h;
                const double f_plus = loss_forward();
                p.value(i, j) = saved - h;
                const double f_minus = loss_forward();
                p.value(i, j) = saved;
                const double numeric = (f_plus - f_minus) / (2.0 * h);
                const double a = analytic[idx](i, j);
                const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
                entry.max_rel_err = std::max(entry.max_rel_err, std::abs(a - numeric) / denom);
                entry.max_abs_analytic = std::max(entry.max_abs_analytic, std::abs(a));
            }
        }
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
        ++idx;
    }
    return report;
}

} // namespace situ3d::nn
