#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cognn/tensor.hpp"

namespace cognn {

struct GradCheckResult {
    int checks = 0;    // perturbed parameter entries
    int failures = 0;
    double max_rel_err = 0.0;
    std::vector<std::string> messages;  // one per failed check group

    bool ok() const { return failures == 0; }
};

// Compares the tape's analytic gradients against central finite differences
// of `forward` for every entry of every tensor in `inputs`. `forward` must be
// a pure function of the current tensor values, returning a scalar loss.
// rel err = |analytic - fd| / max(|analytic|, |fd|, 1e-6).
GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& forward,
                                const std::vector<Tensor>& inputs, double step = 1e-5,
                                double tol = 1e-4);

// The built-in verification suite: every layer primitive and the full
// collaborative model, `instantiations` random instances each. Deterministic
// for a given seed.
GradCheckResult run_gradient_suite(std::uint64_t seed, int instantiations = 20, double step = 1e-5,
                                   double tol = 1e-4);

}  // namespace cognn
