#include "cognn/adam.hpp"

#include <cmath>

namespace cognn {

AdamOptimizer::AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params)
    : AdamOptimizer(std::move(params), Config()) {}

AdamOptimizer::AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params, Config cfg)
    : cfg_(cfg) {
    slots_.reserve(params.size());
    for (auto& [name, tensor] : params) {
        if (!tensor.requires_grad()) {
            fail(Error::Code::contract, "optimizer given non-trainable tensor '" + name + "'");
        }
        Slot slot;
        slot.name = name;
        slot.param = tensor;
        slot.m.assign(tensor.size(), 0.0);
        slot.v.assign(tensor.size(), 0.0);
        slots_.push_back(std::move(slot));
    }
}

void AdamOptimizer::step() {
    for (const Slot& slot : slots_) {
        if (!slot.param.has_grad()) {
            fail(Error::Code::contract, "adam_step: missing gradient for parameter '" + slot.name + "'");
        }
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (Slot& slot : slots_) {
        double* p = slot.param.data();
        const double* g = slot.param.grad_data();
        const std::size_t n = slot.param.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double grad = g[i] + cfg_.weight_decay * p[i];
            slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * grad;
            slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * grad * grad;
            const double m_hat = slot.m[i] / bc1;
            const double v_hat = slot.v[i] / bc2;
            p[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
        }
        slot.param.clear_grad();
    }
}

}  // namespace cognn
