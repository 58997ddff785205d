#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace mdflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trajectory left the hold-all disk D.
class DomainEscapeError : public Error {
public:
    using Error::Error;
};

/// A point was evaluated outside the region a map or field is defined on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters passed to a constructor or operation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A hard resource limit (node budget, iteration cap) would be exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A geometric invariant was violated (inverted triangle, mesh mismatch).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// The saddle-point solver did not reach its residual target.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history(std::move(history)) {}

    std::vector<double> residual_history;
};

}  // namespace mdflow
