#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kviff/kernel.hpp"
#include "kviff/oracle.hpp"

// Certification routines shared by `kviff validate` and the acceptance suite.
namespace kviff::validation {

struct DescentReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double max_delta = 0.0;        // max over steps of L_{n+1} - L_n
    double max_clipped_mass = 0.0;
    int steps = 0;
    double seconds = 0.0;
    std::vector<double> losses;
};

struct DescentSetup {
    double bandwidth = 2.0;
    double lo = -8.0;
    double hi = 8.0;
    int nodes = 801;
    double dt_flow = 1e-3;
    int steps = 500;
    double target_mean = 0.0;
    double initial_mean = 1.0;
};

/// Integrates the density flow from N(initial_mean, 1) toward N(target_mean, 1).
DescentReport fokker_planck_descent(const DescentSetup& setup = {});

struct FixedPointReport {
    double max_abs_velocity = 0.0;
    double max_abs_change = 0.0;
};

FixedPointReport grid_fixed_point(const DescentSetup& setup = {});

/// Scalar linear-gaussian model x' = a x + w, y = x + v used by the KF/grid check.
struct ScalarLinearModel {
    double a = 0.9;
    double process_var = 0.2;
    double measurement_var = 0.5;
    double prior_mean = 0.0;
    double prior_var = 1.0;
    int steps = 20;
    std::uint64_t seed = 7;
};

struct KfGridReport {
    std::vector<double> observations;
    std::vector<double> kf_means, kf_vars;
    std::vector<double> grid_means, grid_vars;
    double max_mean_diff = 0.0;
    double max_var_diff = 0.0;
};

KfGridReport kf_vs_grid(const ScalarLinearModel& model = {}, double lo = -10.0, double hi = 10.0, int nodes = 1001);

using GradientFn = std::function<Vector(const kernel::KernelSpec&, VectorRef, VectorRef)>;

struct GradientCheckReport {
    double max_relative_error = 0.0;
    int cases = 0;
};

/// Central finite differences of kernel_eval in its second argument against
/// `gradient`, for random pairs in dimensions 1..10 and bandwidths {1, 2, 10}.
GradientCheckReport gradient_fd_sweep(const GradientFn& gradient, double step = 1e-5, std::uint64_t seed = 11);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationOptions {
    GradientFn gradient = [](const kernel::KernelSpec& k, VectorRef x, VectorRef y) {
        return kernel::kernel_grad2(k, x, y);
    };
};

std::vector<CheckResult> run_validation(const ValidationOptions& options = {});

}  // namespace kviff::validation
