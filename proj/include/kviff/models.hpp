#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kviff/random.hpp"
#include "kviff/types.hpp"

namespace kviff::models {

/// Covariance that is not symmetric positive semi-definite.
class InvalidCovariance : public UsageError {
public:
    using UsageError::UsageError;
};

enum class NoiseKind { gaussian, cauchy, lognormal };

/// Additive noise law.  Gaussian laws carry a full covariance; Cauchy and
/// log-normal laws are i.i.d. across dimensions.  Build through the
/// factories so the sampling factor is computed and validated.
class NoiseSpec {
public:
    NoiseSpec() = default;

    static NoiseSpec gaussian(Vector mean, Matrix covariance);
    static NoiseSpec gaussian_iso(int dim, double variance, double mean = 0.0);
    static NoiseSpec cauchy(Vector location, double scale);
    static NoiseSpec lognormal(int dim, double log_mean, double log_std);

    NoiseKind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }

    const Vector& mean() const noexcept { return mean_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    const Matrix& factor() const noexcept { return factor_; }
    const Vector& location() const noexcept { return location_; }
    double scale() const noexcept { return scale_; }
    double log_mean() const noexcept { return log_mean_; }
    double log_std() const noexcept { return log_std_; }

    /// Gaussian log-density of `value`.  Singular covariances are treated as
    /// degenerate laws: mass off the support gives -inf.
    double log_density(const Vector& value) const;

private:
    NoiseKind kind_ = NoiseKind::gaussian;
    int dim_ = 0;
    Vector mean_;
    Matrix covariance_;
    Matrix factor_;  // L with L L^T = covariance
    // precision structure for log_density
    bool full_rank_ = false;
    Matrix chol_;  // lower Cholesky factor when full rank
    Matrix eigvecs_;
    Vector eigvals_;
    double log_norm_ = 0.0;
    Vector location_;
    double scale_ = 0.0;
    double log_mean_ = 0.0;
    double log_std_ = 0.0;
};

Vector sample_noise(const NoiseSpec& noise, Rng& rng);

using StepMap = std::function<Vector(int step, const Vector& x)>;

/// Present when transition(x) = F x and measurement(x) = H x; enables the KF.
struct LinearStructure {
    Matrix transition;
    Matrix measurement;
};

/// x_{k+1} = transition(k, x_k) + w_k ;  y_k = measurement(k, x_k) + v_k.
/// For cumulative-observation models `measurement` returns the per-step
/// increment (dt * core(x)) and the recorded observation is the running sum.
struct StateSpaceModel {
    int dim_x = 0;
    int dim_y = 0;
    StepMap transition;
    StepMap measurement;
    NoiseSpec process_noise;
    NoiseSpec measurement_noise;
    bool cumulative_observation = false;
    std::optional<LinearStructure> linear;
};

struct ScenarioSpec {
    std::string name;
    std::string description;
    StateSpaceModel model;
    StepMap data_transition;
    NoiseSpec data_process_noise;
    NoiseSpec data_measurement_noise;
    double dt = 0.1;
    int horizon = 1;
    Vector x0_truth;
    NoiseSpec init_ensemble;

    void validate() const;
};

struct TruthRun {
    std::vector<Vector> states;        // x_0 .. x_K
    std::vector<Vector> observations;  // y_1 .. y_K as recorded
    std::vector<Vector> increments;    // per-step measurement draws; equals observations unless cumulative
    std::uint64_t seed = 0;

    /// What the filters condition on at each step.
    const std::vector<Vector>& effective_observations() const noexcept { return increments; }
};

enum class LinearVariant { nominal, biased, correlated };
enum class CubicVariant { nominal, cauchy, lognormal_bias };
enum class MultiTargetVariant { nominal, velocity_bias };

ScenarioSpec build_linear10d(LinearVariant variant);
ScenarioSpec build_cubic_sensor(int dim, CubicVariant variant);
ScenarioSpec build_multi_target(MultiTargetVariant variant);

/// The drift matrix A of the 10D linear problem (f(x) = x + dt A x).
Matrix linear10d_drift();

namespace multitarget {
inline constexpr int num_objects = 4;
inline constexpr double amplitude = 10.0;
inline constexpr double d0 = 0.1;
/// 5 x 5 sensor lattice on [-4, 4]^2, columns are sensor positions.
Matrix sensor_locations();
Vector velocity_field(const Vector& position);
double hamiltonian(const Vector& position);
/// Noiseless acoustic amplitudes for a stacked (2 * num_objects) state.
Vector acoustic_amplitudes(const Vector& state, const Matrix& sensors);
}  // namespace multitarget

/// The eight named scenarios exposed on the command line.
const std::vector<std::string>& scenario_names();
ScenarioSpec build_scenario(const std::string& name);

TruthRun simulate_truth(const ScenarioSpec& scenario, std::uint64_t seed);

/// log p(y_effective | x) under the model's assumed Gaussian measurement noise.
double log_likelihood(const StateSpaceModel& model, int step, const Vector& y_effective,
                      const Vector& x);

}  // namespace kviff::models
