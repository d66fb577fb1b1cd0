#pragma once

#include <stdexcept>
#include <string>

namespace cdsim {

// Error taxonomy shared by the library, the C API status codes and the
// CLI exit codes.
enum class ErrorKind {
    InvalidArgument,
    Parse,
    Validation,
    Runtime,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace cdsim
