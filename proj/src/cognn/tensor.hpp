#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "cognn/error.hpp"

namespace cognn {

class Rng;

using Shape = std::vector<int>;

std::string shape_to_string(const Shape& shape);

// Dense 64-bit float tensor. A Tensor is a handle: copies share the same
// storage (and gradient buffer), so layers, the tape and the optimizer all
// observe one another's updates. Use clone() for an independent copy.
//
// Rank is 1 or 2 in practice: matrices for features/weights, {1} for scalars
// such as losses and fusion gates.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    // Row-major 2-D literal, mostly for tests: Tensor::matrix({{1,2},{3,4}}).
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad = false);
    // Glorot-uniform fan-based init, the conventional choice for GCN weights.
    static Tensor glorot(int fan_in, int fan_out, Rng& rng);

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const;
    std::size_t size() const;
    bool is_matrix() const;
    int rows() const;  // requires rank 2
    int cols() const;

    double* data();
    const double* data() const;
    std::vector<double>& vec();
    const std::vector<double>& vec() const;

    double at(int r, int c) const;
    double& at(int r, int c);
    // Scalar accessor; contract-checks size() == 1.
    double value() const;

    bool requires_grad() const;
    void set_requires_grad(bool on);

    bool has_grad() const;
    // Allocates a zero gradient buffer if absent.
    void ensure_grad();
    double* grad_data();
    const double* grad_data() const;
    const std::vector<double>& grad_vec() const;
    // Drops the gradient buffer.
    void clear_grad();

    Tensor clone() const;  // deep copy of values; grad not copied
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
    bool all_finite() const;

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;  // empty = absent
        bool requires_grad = false;
    };

    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    Impl& impl();
    const Impl& impl() const;

    std::shared_ptr<Impl> impl_;
};

// Records the backward rule of every tracked operation. Constructing a Tape
// makes it the active tape for the current thread (scoped, re-entrant);
// destroying it pops it. One tape per training step: the tape dies with the
// step, which is what clears it.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::function<void()> rule);
    std::size_t op_count() const { return rules_.size(); }

    // Seeds d(loss)/d(loss) = 1 and replays rules in reverse. Exactly one
    // backward per tape; a second call is a contract error.
    void backward(const Tensor& loss);

private:
    std::vector<std::function<void()>> rules_;
    bool consumed_ = false;
    Tape* previous_ = nullptr;
};

// True when an op with these inputs should be recorded.
inline bool tracking(const Tensor& a) { return Tape::active() != nullptr && a.requires_grad(); }
inline bool tracking(const Tensor& a, const Tensor& b) {
    return Tape::active() != nullptr && (a.requires_grad() || b.requires_grad());
}

}  // namespace cognn
