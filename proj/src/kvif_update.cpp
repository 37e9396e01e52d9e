#include <string>

#include "kviff/filters.hpp"

namespace kviff::filters {

Ensemble kvif_update(const StateSpaceModel& model, const Ensemble& prediction, const Vector& y_effective,
                     const KvifConfig& config, Rng& rng) {
    config.validate();
    const auto ratios = likelihood_ratios_from_log_likelihoods(
        ensemble_log_likelihoods(model, prediction, y_effective));

    Ensemble flow;
    switch (config.initializer) {
        case Initializer::raw: flow = prediction; break;
        case Initializer::pf: flow = pf_update(model, prediction, y_effective, rng); break;
        case Initializer::enkf: flow = enkf_update(model, prediction, y_effective, rng); break;
    }

    kernel::KernelSpec kernel = config.kernel;
    if (config.median_heuristic) kernel.bandwidth = kernel::median_heuristic_bandwidth(prediction.particles);

    // Explicit synchronous Euler: every direction of step tau is evaluated
    // against the iterate of step tau - 1.
    for (int tau = 1; tau <= config.num_steps; ++tau) {
        const Matrix dir = kernel::kvif_directions(kernel, prediction.particles, ratios,
                                                   flow.particles, flow.particles);
        flow.particles += config.step_size * dir;
        if (!flow.particles.allFinite())
            throw DivergenceError(tau, "kviff flow diverged at inner step " + std::to_string(tau) +
                                           " (time step " + std::to_string(prediction.step) +
                                           "); try a smaller epsilon");
    }
    return flow;
}

}  // namespace kviff::filters
