#pragma once

#include <stdexcept>
#include <string>

namespace mpedge {

// Thrown when an operation is evaluated with the barrier on the wrong side
// of the spectrum (u >= lambda_min for the lower potential, u <= lambda_max
// for the upper one). Walks catch this to log a violation instead of
// propagating NaNs.
class barrier_violation : public std::runtime_error {
public:
    explicit barrier_violation(const std::string& what) : std::runtime_error(what) {}
};

// Numerical precondition failures that are not barrier-side issues, e.g. a
// near-singular Sherman-Morrison denominator or an exhausted alpha budget.
class numeric_precondition_error : public std::runtime_error {
public:
    explicit numeric_precondition_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpedge
