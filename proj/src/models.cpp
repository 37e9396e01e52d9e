#include <string>

#include "kviff/models.hpp"

namespace kviff::models {

namespace {
constexpr std::uint64_t kTruthStream = 0x7472757468ULL;  // "truth"
}

void ScenarioSpec::validate() const {
    require(horizon >= 1, "scenario " + name + ": horizon must be >= 1");
    require(dt > 0.0, "scenario " + name + ": dt must be positive");
    require(model.dim_x >= 1 && model.dim_y >= 1, "scenario " + name + ": empty dimensions");
    require(static_cast<bool>(model.transition) && static_cast<bool>(model.measurement) &&
                static_cast<bool>(data_transition),
            "scenario " + name + ": missing transition or measurement map");
    require(model.process_noise.dim() == model.dim_x && data_process_noise.dim() == model.dim_x,
            "scenario " + name + ": process noise dimension mismatch");
    require(model.measurement_noise.dim() == model.dim_y && data_measurement_noise.dim() == model.dim_y,
            "scenario " + name + ": measurement noise dimension mismatch");
    require(model.process_noise.kind() == NoiseKind::gaussian &&
                model.measurement_noise.kind() == NoiseKind::gaussian,
            "scenario " + name + ": filter-assumed noise laws must be gaussian");
    require(x0_truth.size() == model.dim_x, "scenario " + name + ": x0 dimension mismatch");
    require(init_ensemble.kind() == NoiseKind::gaussian && init_ensemble.dim() == model.dim_x,
            "scenario " + name + ": initial ensemble law must be a gaussian of state dimension");
}

TruthRun simulate_truth(const ScenarioSpec& scenario, std::uint64_t seed) {
    scenario.validate();
    Rng rng = make_rng(seed, {kTruthStream});
    const int K = scenario.horizon;
    TruthRun run;
    run.seed = seed;
    run.states.reserve(static_cast<std::size_t>(K) + 1);
    run.observations.reserve(static_cast<std::size_t>(K));
    run.increments.reserve(static_cast<std::size_t>(K));
    run.states.push_back(scenario.x0_truth);
    Vector y_prev = Vector::Zero(scenario.model.dim_y);
    for (int k = 0; k < K; ++k) {
        Vector x = scenario.data_transition(k, run.states.back()) + sample_noise(scenario.data_process_noise, rng);
        Vector inc = scenario.model.measurement(k + 1, x) + sample_noise(scenario.data_measurement_noise, rng);
        if (scenario.model.cumulative_observation) {
            y_prev = y_prev + inc;
            run.observations.push_back(y_prev);
        } else {
            run.observations.push_back(inc);
        }
        run.increments.push_back(std::move(inc));
        run.states.push_back(std::move(x));
    }
    return run;
}

double log_likelihood(const StateSpaceModel& model, int step, const Vector& y_effective, const Vector& x) {
    require(x.size() == model.dim_x, "log_likelihood: state dimension mismatch");
    require(y_effective.size() == model.dim_y, "log_likelihood: observation dimension mismatch");
    return model.measurement_noise.log_density(y_effective - model.measurement(step, x));
}

}  // namespace kviff::models
