#pragma once

// Shared test helpers. The finite-difference oracle here is intentionally
// independent of the library's own gradcheck module: it only reads and
// writes tensor values and evaluates the supplied forward closure.

#include <cmath>
#include <functional>
#include <vector>

#include "cognn/rng.hpp"
#include "cognn/tensor.hpp"

namespace testutil {

// Central finite difference d(forward)/d(t[k]) evaluated outside any tape.
inline double fd_derivative(const std::function<double()>& forward, cognn::Tensor t, std::size_t k,
                            double h = 1e-5) {
    const double saved = t.data()[k];
    t.data()[k] = saved + h;
    const double f_plus = forward();
    t.data()[k] = saved - h;
    const double f_minus = forward();
    t.data()[k] = saved;
    return (f_plus - f_minus) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline cognn::Tensor random_tensor(cognn::Rng& rng, cognn::Shape shape, bool requires_grad = false,
                                   double lo = -1.0, double hi = 1.0) {
    cognn::Tensor t = cognn::Tensor::zeros(std::move(shape), requires_grad);
    for (auto& v : t.vec()) v = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const cognn::Tensor& a, const cognn::Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

}  // namespace testutil
