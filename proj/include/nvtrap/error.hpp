#ifndef NVTRAP_ERROR_HPP
#define NVTRAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nvtrap {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameter set (violated type invariant).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Input outside the domain where a model or inversion is defined.
class RangeError : public Error {
public:
    using Error::Error;
};

// Numerical procedure could not produce a result (bracket failure, no
// spectral line, runaway, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Trap configuration is unstable where a stable one is required.
class InstabilityError : public Error {
public:
    using Error::Error;
};

// Bad or unreadable configuration file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Value plus a flag raised when the value comes from outside the model's
// nominal validity domain. The meaning of the flag is documented by each
// function returning it.
template <typename T>
struct Flagged {
    T value{};
    bool flagged = false;
};

}  // namespace nvtrap

#endif
