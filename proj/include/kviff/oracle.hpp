#pragma once

#include <functional>

#include "kviff/kernel.hpp"
#include "kviff/types.hpp"

// Grid and sample based reference computations, independent of the particle
// filters.  Everything here is one dimensional except mmd2_estimate.
namespace kviff::oracle {

/// Density sampled on n equispaced nodes of [lo, hi].
struct Grid1D {
    double lo = 0.0;
    double hi = 1.0;
    Vector values;

    static Grid1D from_function(double lo, double hi, int n, const std::function<double(double)>& density);

    Eigen::Index size() const noexcept { return values.size(); }
    double spacing() const { return (hi - lo) / static_cast<double>(values.size() - 1); }
    double node(Eigen::Index i) const { return lo + static_cast<double>(i) * spacing(); }
    Vector nodes() const;
    /// Trapezoid quadrature weights.
    Vector weights() const;

    double integral() const;
    double mean() const;
    double variance() const;
    Grid1D normalized() const;
    bool same_grid(const Grid1D& other) const;
    void validate() const;
};

/// Posterior on the grid: prior * exp(log_lik), renormalized.
Grid1D grid_bayes_update(const Grid1D& prior, const std::function<double(double)>& log_lik);

/// Chapman-Kolmogorov prediction q(x') = int T(x' | x) p(x) dx by trapezoid
/// quadrature; `transition_density(to, from)`.
Grid1D grid_predict(const Grid1D& prior, const std::function<double(double, double)>& transition_density);

/// L(p, q) = int int (p - q)(x) k(x, x') (p - q)(x') dx dx'.
double weighted_l2_loss(const kernel::KernelSpec& kernel, const Grid1D& p, const Grid1D& q);

struct FlowStepReport {
    Grid1D q;
    double mass_before_clip = 0.0;
    double clipped_mass = 0.0;
    double max_abs_velocity = 0.0;
};

/// Explicit Euler for dq/dt = -div(q phi) with
///   phi(x) = int grad2 k(s, x) (p(s) - q(s)) ds,
/// the continuum limit of kernel::kvif_direction.  Fluxes use a conservative
/// central scheme with zero flux through both ends of the interval.  Caches
/// the kernel blocks for one grid.
class FokkerPlanckIntegrator {
public:
    FokkerPlanckIntegrator(const kernel::KernelSpec& kernel, const Grid1D& target);

    Vector velocity(const Grid1D& q) const;
    FlowStepReport step(const Grid1D& q, double dt_flow) const;
    double loss(const Grid1D& q) const;

private:
    kernel::KernelSpec kernel_;
    Grid1D target_;
    Vector weights_;
    Matrix gram_;  // k(x_i, x_j)
    Matrix grad_;  // grad2 k(x_j, x_i) stored at (i, j)
};

FlowStepReport fokker_planck_step(const kernel::KernelSpec& kernel, const Grid1D& p, const Grid1D& q,
                                  double dt_flow);

/// Biased (V-statistic) squared MMD between two sample sets (columns).
double mmd2_estimate(const kernel::KernelSpec& kernel, const Matrix& xs, const Matrix& ys);

}  // namespace kviff::oracle
