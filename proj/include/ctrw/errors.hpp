#pragma once

#include <stdexcept>
#include <string>

namespace ctrw {

// Base for every error raised by the library. `module()` names the component
// that raised it so the CLI can report where a failure originated.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Invalid construction parameters (e.g. a stability index outside (0,1)).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operation not defined for the requested model.
class UnsupportedModelError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature failed to reach its tolerance.
class IntegrationError : public Error {
public:
    IntegrationError(std::string module, const std::string& what, double value, double error_estimate)
        : Error(std::move(module), what), value_(value), error_estimate_(error_estimate) {}

    double value() const noexcept { return value_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double value_;
    double error_estimate_;
};

/// The integrand produced a NaN.
class EvaluationError : public Error {
public:
    EvaluationError(std::string module, double abscissa)
        : Error(std::move(module), "integrand returned NaN at x = " + std::to_string(abscissa)),
          abscissa_(abscissa) {}

    double abscissa() const noexcept { return abscissa_; }

private:
    double abscissa_;
};

/// A simulated path did not reach the requested clock time.
class HorizonError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (unknown key, violated invariant).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ctrw
