#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace rotorkick {

using dcmplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Bad physical or numerical input (negative intensity, window too small, ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical guarantee was violated (unitarity drift, eigensolver failure,
// window growth exhausted, ...).  Results produced alongside are not usable.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed configuration input; carries the offending line where known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rotorkick
