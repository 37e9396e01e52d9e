#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kviff/kernel.hpp"
#include "kviff/models.hpp"
#include "kviff/random.hpp"
#include "kviff/types.hpp"

namespace kviff::filters {

using models::ScenarioSpec;
using models::StateSpaceModel;
using models::TruthRun;

/// Particle belief.  Columns of `particles` are the N states (d x N).
struct Ensemble {
    Matrix particles;
    int step = 0;

    Eigen::Index size() const noexcept { return particles.cols(); }
    Eigen::Index dim() const noexcept { return particles.rows(); }
};

struct GaussianBelief {
    Vector mean;
    Matrix covariance;
};

enum class Initializer { raw, pf, enkf };

struct KvifConfig {
    kernel::KernelSpec kernel = kernel::KernelSpec{kernel::Family::rbf, 10.0};
    double step_size = 1e-3;
    int num_steps = 50;
    Initializer initializer = Initializer::pf;
    bool median_heuristic = false;  // recompute the bandwidth from the prediction cloud each update

    void validate() const;
};

Initializer parse_initializer(const std::string& name);
std::string to_string(Initializer init);

// -- shared stages ----------------------------------------------------------

/// x_i <- f_k(x_i) + w_i under the model's assumed process noise.
Ensemble predict(const StateSpaceModel& model, const Ensemble& ensemble, Rng& rng);

/// Softmax of log-likelihoods with max subtraction.  All -inf (or NaN)
/// inputs give uniform weights.
std::vector<double> weights_from_log_likelihoods(std::span<const double> log_lik);

/// N * softmax(log_lik): the ratios Q~(x_j) / C_Q with C_Q the sample mean of
/// Q~.  Identical inputs give exactly 1.
std::vector<double> likelihood_ratios_from_log_likelihoods(std::span<const double> log_lik);

std::vector<double> ensemble_log_likelihoods(const StateSpaceModel& model, const Ensemble& ensemble,
                                             const Vector& y_effective);

std::vector<double> normalized_weights(const StateSpaceModel& model, const Ensemble& ensemble,
                                       const Vector& y_effective);

/// Systematic resampling with positions u + i/N for a given offset u in [0, 1/N).
std::vector<std::size_t> systematic_resample(std::span<const double> weights, double offset);
/// Same, drawing the offset from `rng`.
std::vector<std::size_t> systematic_resample(std::span<const double> weights, Rng& rng);

Vector estimate(const Ensemble& ensemble);

// -- updates ----------------------------------------------------------------

Ensemble pf_update(const StateSpaceModel& model, const Ensemble& ensemble, const Vector& y_effective,
                   Rng& rng);

/// Stochastic EnKF with perturbed observations.  Needs N >= 2.
Ensemble enkf_update(const StateSpaceModel& model, const Ensemble& ensemble, const Vector& y_effective,
                     Rng& rng);

GaussianBelief kf_predict(const GaussianBelief& belief, const Matrix& A, const Matrix& Q);
GaussianBelief kf_update(const GaussianBelief& belief, const Matrix& H, const Matrix& R, const Vector& y);

/// Update stage of the kernel variational inference flow filter: pick the
/// starting cloud with the configured initializer, then run `num_steps`
/// synchronous Euler steps of the flow against the frozen prediction cloud.
Ensemble kvif_update(const StateSpaceModel& model, const Ensemble& prediction, const Vector& y_effective,
                     const KvifConfig& config, Rng& rng);

// -- full runs --------------------------------------------------------------

enum class Method { kf, pf, enkf, kviff };

Method parse_method(const std::string& name);
std::string to_string(Method method);

struct FilterParams {
    Method method = Method::pf;
    int num_particles = 100;
    KvifConfig kviff;
};

struct FilterResult {
    std::vector<Vector> estimates;  // x^_1 .. x^_K
    std::vector<double> spread;     // RMS distance of particles to their mean (KF: sqrt(tr P))
};

FilterResult run_filter(const ScenarioSpec& scenario, const FilterParams& params, const TruthRun& truth,
                        std::uint64_t seed);

/// Cholesky of a symmetric matrix with diagonal jitter escalating from 1e-12 to
/// 1e-6.  Throws NumericalError if every attempt fails.
Eigen::LLT<Matrix> robust_cholesky(const Matrix& s, const char* what);

}  // namespace kviff::filters
