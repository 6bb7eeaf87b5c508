#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace mosumseg {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller supplied inconsistent input (dimensions, window lengths, options).
class UsageError : public Error {
public:
    using Error::Error;
};

// A value lies outside the mathematical domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

// Base class for numerical failures (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Estimating equations have no unique solution on the window.
class SingularFit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A covariance / scaling matrix is not positive definite.
class SingularScaling : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Iterative fitter exhausted its iteration budget.
class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, Eigen::VectorXd best, double residual)
        : NumericalError(what), best_(std::move(best)), residual_(residual) {}

    const Eigen::VectorXd& best_iterate() const { return best_; }
    double residual_norm() const { return residual_; }

private:
    Eigen::VectorXd best_;
    double residual_;
};

} // namespace mosumseg
