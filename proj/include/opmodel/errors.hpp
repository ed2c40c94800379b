#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opmodel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NotPsdError : public PreconditionError {
public:
    NotPsdError(const std::string& what, double min_eigenvalue)
        : PreconditionError(what), min_eigenvalue_(min_eigenvalue) {}
    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& what, std::size_t rank)
        : Error(what), rank_(rank) {}
    std::size_t rank() const noexcept { return rank_; }

private:
    std::size_t rank_;
};

/// The matrix has 1 (numerically) in its point spectrum, so it cannot be a cogenerator.
class NotCogeneratorError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Input outside the open unit disc where one is required.
class DomainError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Block structure expected by a symbol repair is absent.
class StructureError : public Error {
public:
    using Error::Error;
};

/// Numerical kernels disagree across evaluation points.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

class DecompositionError : public Error {
public:
    using Error::Error;
};

/// The truncation window is too small for the requested power.
class HeadroomError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// The a-priori truncation tail exceeds the requested tolerance.
class TruncationError : public PreconditionError {
public:
    TruncationError(const std::string& what, double tail_bound)
        : PreconditionError(what), tail_bound_(tail_bound) {}
    double tail_bound() const noexcept { return tail_bound_; }

private:
    double tail_bound_;
};

} // namespace opmodel
