#pragma once

#include <span>

#include "kviff/types.hpp"

namespace kviff::kernel {

enum class Family { rbf };

/// RBF kernel k(x, y) = exp(-|x - y|^2 / bandwidth).
struct KernelSpec {
    Family family = Family::rbf;
    double bandwidth = 1.0;

    static KernelSpec rbf(double bandwidth);
    void validate() const;
};

double squared_distance(VectorRef x, VectorRef y);

double kernel_eval(const KernelSpec& spec, VectorRef x, VectorRef y);

/// Gradient of k(x, .) evaluated at y, i.e. with respect to the second
/// argument: (2/h)(x - y) k(x, y).  Equals minus the first-argument gradient.
Vector kernel_grad2(const KernelSpec& spec, VectorRef x, VectorRef y);

/// Flow direction at `eval_point`:
///   (1/N) sum_j grad2 k(s_j, e) Q_j  -  (1/N) sum_j grad2 k(t_j, e)
/// with s_j = prediction particles (columns), Q_j their normalized likelihood
/// ratios (mean ~1), and t_j the current flow particles (columns).
Vector kvif_direction(const KernelSpec& spec, const Matrix& prediction_particles,
                      std::span<const double> normalized_likelihood,
                      const Matrix& flow_particles, const Vector& eval_point);

/// Batched form: one direction per column of `eval_points`.  Each column is
/// computed with the same summation order as the pointwise call.
Matrix kvif_directions(const KernelSpec& spec, const Matrix& prediction_particles,
                       std::span<const double> normalized_likelihood,
                       const Matrix& flow_particles, const Matrix& eval_points);

/// Stein variational direction (1/N) sum_j [k(x_j, e) score_j + grad1 k(x_j, e)].
/// Needs the target score at each particle; used for diagnostics only.
Vector svgd_direction(const KernelSpec& spec, const Matrix& particles,
                      const Matrix& score_values, const Vector& eval_point);

/// Dense N x M block K_ij = k(x_i, y_j) for column sets x and y.
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& xs, const Matrix& ys);

/// Median heuristic bandwidth med(|x_i - x_j|^2) / log(N + 1).  Not used by
/// default; configs pin the bandwidth explicitly.
double median_heuristic_bandwidth(const Matrix& particles);

}  // namespace kviff::kernel
