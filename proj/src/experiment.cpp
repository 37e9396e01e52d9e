#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "kviff/harness.hpp"

namespace kviff::harness {

namespace {
constexpr std::uint64_t kMethodTag = 0x6d6574686f64ULL;  // "method"
}

std::vector<double> l2_error_series(const std::vector<Vector>& estimates, const std::vector<Vector>& truth) {
    require(estimates.size() == truth.size(), "l2_error_series: length mismatch");
    std::vector<double> e(estimates.size());
    for (std::size_t k = 0; k < e.size(); ++k) {
        require(estimates[k].size() == truth[k].size(), "l2_error_series: dimension mismatch");
        e[k] = (estimates[k] - truth[k]).norm();
    }
    return e;
}

double median(std::vector<double> values) {
    require(!values.empty(), "median: empty input");
    const auto n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    return base_seed ^ static_cast<std::uint64_t>(trial);
}

std::uint64_t method_seed(std::uint64_t trial_seed, std::size_t method_index) {
    return derive_seed(trial_seed, {kMethodTag, static_cast<std::uint64_t>(method_index)});
}

unsigned worker_threads(unsigned jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KVIFF_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<unsigned>(v);
    }
    return std::max(1u, std::min(n, jobs));
}

std::vector<MethodSummary> summarize(const std::vector<RunRecord>& records) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const RunRecord*>> by_method;
    for (const auto& r : records) {
        if (!by_method.contains(r.method)) order.push_back(r.method);
        by_method[r.method].push_back(&r);
    }
    std::vector<MethodSummary> out;
    for (const auto& name : order) {
        const auto& runs = by_method[name];
        MethodSummary s;
        s.method = name;
        const auto K = runs.front()->per_step_error.size();
        s.median_error.resize(K);
        std::vector<double> column(runs.size());
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t t = 0; t < runs.size(); ++t) column[t] = runs[t]->per_step_error.at(k);
            s.median_error[k] = median(column);
        }
        for (std::size_t t = 0; t < runs.size(); ++t) column[t] = runs[t]->aggregate_error;
        s.median_aggregate = median(column);
        for (std::size_t t = 0; t < runs.size(); ++t) column[t] = runs[t]->wall_time;
        s.median_wall_time = median(column);
        double acc = 0.0;
        for (double v : s.median_error) acc += v;
        s.mean_of_median_series = K ? acc / static_cast<double>(K) : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const auto scenario = models::build_scenario(config.scenario);
    const auto n_methods = config.methods.size();
    const auto repeats = static_cast<std::size_t>(config.repeats);

    std::vector<std::vector<RunRecord>> per_trial(repeats);
    std::vector<Trajectory> first_trial;
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    int failed_trial = -1;

    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= repeats) return;
            {
                std::lock_guard lock(error_mutex);
                if (error) return;
            }
            const auto seed = trial_seed(config.base_seed, static_cast<int>(t));
            try {
                const auto truth = models::simulate_truth(scenario, seed);
                const std::vector<Vector> truth_states(truth.states.begin() + 1, truth.states.end());
                std::vector<RunRecord> recs;
                std::vector<Trajectory> traj;
                if (t == 0) traj.push_back({"truth", truth.states});
                for (std::size_t m = 0; m < n_methods; ++m) {
                    const auto& spec = config.methods[m];
                    filters::FilterParams params{spec.method, config.num_particles, spec.kviff};
                    const auto start = std::chrono::steady_clock::now();
                    auto res = filters::run_filter(scenario, params, truth, method_seed(seed, m));
                    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
                    RunRecord r;
                    r.method = spec.label;
                    r.trial = static_cast<int>(t);
                    r.per_step_error = l2_error_series(res.estimates, truth_states);
                    double acc = 0.0;
                    for (double v : r.per_step_error) acc += v;
                    r.aggregate_error = acc / static_cast<double>(r.per_step_error.size());
                    r.wall_time = elapsed.count();
                    recs.push_back(std::move(r));
                    if (t == 0) {
                        std::vector<Vector> path{truth.states.front()};
                        path.insert(path.end(), res.estimates.begin(), res.estimates.end());
                        traj.push_back({spec.label, std::move(path)});
                    }
                }
                per_trial[t] = std::move(recs);
                if (t == 0) first_trial = std::move(traj);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                    failed_trial = static_cast<int>(t);
                }
                return;
            }
        }
    };

    const unsigned threads = worker_threads(static_cast<unsigned>(repeats));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    if (error) {
        const auto seed = trial_seed(config.base_seed, failed_trial);
        try {
            std::rethrow_exception(error);
        } catch (const std::exception& e) {
            throw ExperimentError(failed_trial, seed,
                                  "trial " + std::to_string(failed_trial) + " (seed " + std::to_string(seed) +
                                      ") failed: " + e.what());
        }
    }

    ExperimentResult result;
    for (auto& recs : per_trial)
        for (auto& r : recs) result.records.push_back(std::move(r));
    result.summary = summarize(result.records);
    result.first_trial = std::move(first_trial);
    return result;
}

}  // namespace kviff::harness
