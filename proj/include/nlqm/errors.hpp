#pragma once

#include <stdexcept>
#include <string>

namespace nlqm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state or operator does not fit inside the configured photon-number cutoff.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// A quadrature grid captures too little of the probability mass.
class GridTooNarrow : public Error {
public:
    using Error::Error;
};

class FileFormatError : public Error {
public:
    using Error::Error;
};

class OptimizationDidNotConverge : public Error {
public:
    using Error::Error;
};

class QuadratureNotConverged : public Error {
public:
    using Error::Error;
};

class FitDegenerate : public Error {
public:
    using Error::Error;
};

class RangeTooNarrow : public Error {
public:
    using Error::Error;
};

/// Configuration problem; `field()` names the offending key (dotted path).
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace nlqm
