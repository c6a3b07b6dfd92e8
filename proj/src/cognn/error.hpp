#pragma once

#include <stdexcept>
#include <string>

namespace cognn {

// All library failures surface as cognn::Error. The code classifies the
// failure for the C API, which maps it onto a status enum.
class Error : public std::runtime_error {
public:
    enum class Code {
        invalid_argument,  // bad value, shape mismatch, out-of-range index
        contract,          // API misuse (backward twice, missing grad, ...)
        io,                // file system failure
        format,            // unparseable or schema-invalid input
        numeric            // NaN/Inf where finite values are required
    };

    Error(Code code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Code code() const noexcept { return code_; }

private:
    Code code_;
};

[[noreturn]] inline void fail(Error::Code code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace cognn
