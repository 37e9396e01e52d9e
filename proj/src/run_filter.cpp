#include <cmath>

#include "kviff/filters.hpp"

namespace kviff::filters {

namespace {

// Substream tags: each (time step, stage) pair of a run owns a fresh stream.
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kPredictTag = 2;
constexpr std::uint64_t kUpdateTag = 3;

double ensemble_spread(const Ensemble& ens, const Vector& mean) {
    return std::sqrt((ens.particles.colwise() - mean).colwise().squaredNorm().mean());
}

}  // namespace

Method parse_method(const std::string& name) {
    if (name == "kf") return Method::kf;
    if (name == "pf") return Method::pf;
    if (name == "enkf") return Method::enkf;
    if (name == "kviff") return Method::kviff;
    throw UsageError("unknown method '" + name + "' (expected kf, pf, enkf or kviff)");
}

std::string to_string(Method method) {
    switch (method) {
        case Method::kf: return "kf";
        case Method::pf: return "pf";
        case Method::enkf: return "enkf";
        case Method::kviff: return "kviff";
    }
    return "?";
}

FilterResult run_filter(const ScenarioSpec& scenario, const FilterParams& params, const TruthRun& truth,
                        std::uint64_t seed) {
    scenario.validate();
    const auto& model = scenario.model;
    const auto& ys = truth.effective_observations();
    require(static_cast<int>(ys.size()) == scenario.horizon,
            "run_filter: truth run length does not match scenario horizon");
    const auto K = static_cast<std::size_t>(scenario.horizon);

    FilterResult result;
    result.estimates.reserve(K);
    result.spread.reserve(K);

    if (params.method == Method::kf) {
        if (!model.linear)
            throw UsageError("kf requires a linear-gaussian scenario; '" + scenario.name + "' is nonlinear");
        const auto& lin = *model.linear;
        GaussianBelief belief{scenario.init_ensemble.mean(), scenario.init_ensemble.covariance()};
        for (std::size_t k = 0; k < K; ++k) {
            belief = kf_predict(belief, lin.transition, model.process_noise.covariance());
            belief.mean += model.process_noise.mean();
            belief = kf_update(belief, lin.measurement, model.measurement_noise.covariance(),
                               ys[k] - model.measurement_noise.mean());
            result.estimates.push_back(belief.mean);
            result.spread.push_back(std::sqrt(std::max(0.0, belief.covariance.trace())));
        }
        return result;
    }

    const int n = params.num_particles;
    require(n >= 1, "run_filter: num_particles must be >= 1");
    if (params.method == Method::enkf || (params.method == Method::kviff &&
                                          params.kviff.initializer == Initializer::enkf))
        require(n >= 2, "run_filter: the ensemble Kalman update needs at least two particles");
    if (params.method == Method::kviff) params.kviff.validate();

    Ensemble ens{Matrix(model.dim_x, n), 0};
    {
        Rng rng = make_rng(seed, {kInitTag});
        for (int i = 0; i < n; ++i) ens.particles.col(i) = models::sample_noise(scenario.init_ensemble, rng);
    }

    for (std::size_t k = 0; k < K; ++k) {
        const auto step = static_cast<std::uint64_t>(k + 1);
        Rng rng_predict = make_rng(seed, {kPredictTag, step});
        ens = predict(model, ens, rng_predict);
        Rng rng_update = make_rng(seed, {kUpdateTag, step});
        switch (params.method) {
            case Method::pf: ens = pf_update(model, ens, ys[k], rng_update); break;
            case Method::enkf: ens = enkf_update(model, ens, ys[k], rng_update); break;
            case Method::kviff: ens = kvif_update(model, ens, ys[k], params.kviff, rng_update); break;
            case Method::kf: break;
        }
        Vector est = estimate(ens);
        result.spread.push_back(ensemble_spread(ens, est));
        result.estimates.push_back(std::move(est));
    }
    return result;
}

}  // namespace kviff::filters
