#pragma once

#include <stdexcept>
#include <string>

namespace rydberg {

/// Invalid quantum numbers or out-of-domain physical input.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerov integration or ODE propagation failure.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double achieved = 0.0)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Energy curve is not described by E0 - alpha F^2 / 2 within tolerance.
class QuadraticModelError : public std::runtime_error {
public:
    QuadraticModelError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Least-squares fit did not converge or was ill-posed.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or command line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rydberg
