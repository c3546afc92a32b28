#include "situ3d/nn/adamw.hpp"

#include <cmath>

namespace situ3d::nn {

void AdamW::step(ParameterSet& params) {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Param& p : params) {
        p.m1 = cfg_.beta1 * p.m1 + (1.0 - cfg_.beta1) * p.grad;
        p.m2 = cfg_.beta2 * p.m2 + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
        const Mat m_hat = p.m1 / bc1;
        const Mat v_hat = p.m2 / bc2;
        p.value -= cfg_.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.eps)).matrix();
        if (!p.no_decay && cfg_.weight_decay != 0.0)
            p.value -= cfg_.lr * cfg_.weight_decay * p.value;
    }
}

} // namespace situ3d::nn
