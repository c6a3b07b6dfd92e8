#include "cognn/tensor.hpp"

#include <cmath>
#include <sstream>

#include "cognn/rng.hpp"

namespace cognn {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

std::size_t element_count(const Shape& shape) {
    if (shape.empty()) fail(Error::Code::invalid_argument, "tensor shape must have rank >= 1");
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) fail(Error::Code::invalid_argument, "negative dimension in shape " + shape_to_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto impl = std::make_shared<Impl>();
    impl->data.assign(element_count(shape), 0.0);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.vec()) v = value;
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (element_count(shape) != data.size()) {
        fail(Error::Code::invalid_argument,
             "data length " + std::to_string(data.size()) + " does not match shape " + shape_to_string(shape));
    }
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(r) * static_cast<std::size_t>(c));
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) {
            fail(Error::Code::invalid_argument, "ragged matrix literal");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return from_data({r, c}, std::move(data), requires_grad);
}

Tensor Tensor::glorot(int fan_in, int fan_out, Rng& rng) {
    if (fan_in <= 0 || fan_out <= 0) {
        fail(Error::Code::invalid_argument, "glorot init needs positive fan dimensions");
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t = zeros({fan_in, fan_out}, true);
    for (auto& v : t.vec()) v = rng.uniform(-limit, limit);
    return t;
}

Tensor::Impl& Tensor::impl() {
    if (!impl_) fail(Error::Code::contract, "use of undefined tensor");
    return *impl_;
}

const Tensor::Impl& Tensor::impl() const {
    if (!impl_) fail(Error::Code::contract, "use of undefined tensor");
    return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::size() const { return impl().data.size(); }

bool Tensor::is_matrix() const { return impl().shape.size() == 2; }

int Tensor::rows() const {
    if (!is_matrix()) fail(Error::Code::contract, "rows() on non-matrix tensor " + shape_to_string(shape()));
    return impl().shape[0];
}

int Tensor::cols() const {
    if (!is_matrix()) fail(Error::Code::contract, "cols() on non-matrix tensor " + shape_to_string(shape()));
    return impl().shape[1];
}

double* Tensor::data() { return impl().data.data(); }
const double* Tensor::data() const { return impl().data.data(); }
std::vector<double>& Tensor::vec() { return impl().data; }
const std::vector<double>& Tensor::vec() const { return impl().data; }

double Tensor::at(int r, int c) const {
    return impl().data[static_cast<std::size_t>(r) * cols() + c];
}

double& Tensor::at(int r, int c) {
    return impl().data[static_cast<std::size_t>(r) * cols() + c];
}

double Tensor::value() const {
    if (size() != 1) fail(Error::Code::contract, "value() requires a scalar, got " + shape_to_string(shape()));
    return impl().data[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool on) { impl().requires_grad = on; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }

void Tensor::ensure_grad() {
    auto& im = impl();
    if (im.grad.empty()) im.grad.assign(im.data.size(), 0.0);
}

double* Tensor::grad_data() {
    ensure_grad();
    return impl().grad.data();
}

const double* Tensor::grad_data() const {
    if (!has_grad()) fail(Error::Code::contract, "gradient not populated");
    return impl().grad.data();
}

const std::vector<double>& Tensor::grad_vec() const {
    if (!has_grad()) fail(Error::Code::contract, "gradient not populated");
    return impl().grad;
}

void Tensor::clear_grad() { impl().grad.clear(); }

Tensor Tensor::clone() const {
    return from_data(shape(), vec(), requires_grad());
}

bool Tensor::all_finite() const {
    for (double v : impl().data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> rule) { rules_.push_back(std::move(rule)); }

void Tape::backward(const Tensor& loss) {
    if (consumed_) {
        fail(Error::Code::contract, "backward() called twice on the same tape");
    }
    if (loss.size() != 1) {
        fail(Error::Code::contract, "backward() requires a scalar loss, got " + shape_to_string(loss.shape()));
    }
    if (!loss.requires_grad()) {
        fail(Error::Code::contract, "loss was not produced under this tape (requires_grad is false)");
    }
    consumed_ = true;
    Tensor seed = loss;
    seed.ensure_grad();
    seed.grad_data()[0] = 1.0;
    for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
}

}  // namespace cognn
