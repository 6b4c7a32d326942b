#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fbh {

/// Raised when a caller-supplied argument violates an operation precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: an iterative method did not reach its tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}

    std::vector<double> residual_history;
};

/// A mathematical hypothesis of the pipeline does not hold for the data
/// (ellipticity, positivity of u/x_n, ...).
class HypothesisViolation : public std::runtime_error {
public:
    HypothesisViolation(const std::string& what, double value)
        : std::runtime_error(what), value(value) {}

    double value;
};

class NoFreeBoundary : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonGraph : public std::runtime_error {
public:
    NonGraph(const std::string& what, std::vector<double> columns)
        : std::runtime_error(what), columns(std::move(columns)) {}

    /// x' positions of the offending columns.
    std::vector<double> columns;
};

/// A coefficient of a majorant right-hand side became infinite.
class InfiniteCoefficient : public std::runtime_error {
public:
    InfiniteCoefficient(const std::string& what, int order)
        : std::runtime_error(what), order(order) {}

    int order;
};

}  // namespace fbh
