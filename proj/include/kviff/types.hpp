#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kviff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Vector>;

/// Caller violated a precondition (dimension mismatch, bad argument).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A factorization or solve failed, or a numerical result is unusable.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The particle flow produced a non-finite state.
class DivergenceError : public NumericalError {
public:
    DivergenceError(int flow_step, const std::string& what)
        : NumericalError(what), flow_step_(flow_step) {}
    int flow_step() const noexcept { return flow_step_; }

private:
    int flow_step_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw UsageError(msg);
}

}  // namespace kviff
