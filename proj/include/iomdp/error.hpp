#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace iomdp {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    success = 0,
    validation_failure = 1,
    non_convergence = 2,
    io_failure = 3,
};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual ExitCode exit_code() const noexcept { return ExitCode::validation_failure; }
};

/// Bad input: malformed model, parameter out of range, dimension mismatch.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A truncated model would exceed the configured state cap (or overflow).
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, std::uint64_t predicted, std::uint64_t cap)
        : Error(what), predicted_(predicted), cap_(cap) {}

    [[nodiscard]] std::uint64_t predicted_states() const noexcept { return predicted_; }
    [[nodiscard]] std::uint64_t cap() const noexcept { return cap_; }

private:
    std::uint64_t predicted_;
    std::uint64_t cap_;
};

/// An iterative method ran out of iterations before meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual, std::int64_t iterations)
        : Error(what), last_residual_(last_residual), iterations_(iterations) {}

    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::non_convergence; }
    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }
    [[nodiscard]] std::int64_t iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    std::int64_t iterations_;
};

/// File-system or parse failure; the message carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::io_failure; }
};

}  // namespace iomdp
