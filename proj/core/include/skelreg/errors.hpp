#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skelreg {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An input matrix or vector contains NaN or Inf.
struct NonFiniteError : Error {
    using Error::Error;
};

/// A square system is rank-deficient at the working tolerance.
struct SingularError : Error {
    using Error::Error;
};

/// The eigenvalue iteration failed to converge.
struct NoConvergenceError : Error {
    using Error::Error;
};

/// A chain does not belong to the problem it was paired with, or its
/// kind/dimensions do not match what the operation requires.
struct ChainMismatchError : Error {
    using Error::Error;
};

/// Stability analysis was requested for a chain that is not regular.
struct ChainNotRegularError : Error {
    using Error::Error;
};

/// The fixed integration step is too coarse for the requested tolerance.
struct StepTooCoarseError : Error {
    using Error::Error;
};

/// A derivative of higher order than the configured cap was requested.
struct OrderCapError : Error {
    using Error::Error;
};

/// The matrix handed to the nilpotent iteration is not nilpotent of the
/// claimed index.
struct NotNilpotentError : Error {
    using Error::Error;
};

/// A synthesis spec violates its invariants.
struct SpecInvalidError : Error {
    using Error::Error;
};

/// Internal consistency verification failed (construction bug or severe
/// ill-conditioning).
struct NumericError : Error {
    using Error::Error;
};

/// Signal expression could not be parsed. Carries the offset of the
/// offending character and the token classes that would have been legal.
class ParseError : public Error {
public:
    ParseError(std::string message, std::size_t position, std::vector<std::string> expected)
        : Error(std::move(message)), position_(position), expected_(std::move(expected)) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }
    [[nodiscard]] const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

}  // namespace skelreg
