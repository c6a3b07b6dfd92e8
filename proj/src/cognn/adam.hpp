#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cognn/tensor.hpp"

namespace cognn {

// Adam with bias correction. Weight decay enters as a classic L2 term added
// to the gradient before the moment updates (not decoupled). step() consumes
// the gradients: every parameter must have a populated grad, and grads are
// cleared afterwards.
class AdamOptimizer {
public:
    struct Config {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        double weight_decay = 1e-6;
    };

    explicit AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params);
    AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params, Config cfg);

    void step();
    std::int64_t step_count() const { return step_count_; }
    const Config& config() const { return cfg_; }

private:
    struct Slot {
        std::string name;
        Tensor param;
        std::vector<double> m;  // first moment
        std::vector<double> v;  // second moment
    };

    std::vector<Slot> slots_;
    Config cfg_;
    std::int64_t step_count_ = 0;
};

}  // namespace cognn
