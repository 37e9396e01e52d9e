#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kviff/filters.hpp"
#include "kviff/models.hpp"

namespace kviff::harness {

/// Invalid or unreadable experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trial failed; carries the trial index and its seed.
class ExperimentError : public std::runtime_error {
public:
    ExperimentError(int trial, std::uint64_t seed, const std::string& what)
        : std::runtime_error(what), trial(trial), seed(seed) {}
    int trial;
    std::uint64_t seed;
};

struct MethodSpec {
    std::string label;  // unique within an experiment; defaults to the method name
    filters::Method method = filters::Method::pf;
    filters::KvifConfig kviff;
};

struct ExperimentConfig {
    std::string scenario;
    std::vector<MethodSpec> methods;
    int num_particles = 0;
    int repeats = 10;
    std::uint64_t base_seed = 0;
    std::string output_dir = "out";
    bool plot = false;
    nlohmann::json resolved;  // the validated document, defaults filled in
};

/// Validates a parsed document.  Unknown keys, wrong types and illegal values
/// raise ConfigError naming the field.
ExperimentConfig config_from_json(const nlohmann::json& doc);

nlohmann::json parse_config_text(const std::string& text, const std::string& origin);

/// Applies `a.b.c=value` overrides; the value is parsed as JSON when possible,
/// otherwise taken as a string.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

struct RunRecord {
    std::string method;
    int trial = 0;
    std::vector<double> per_step_error;
    double aggregate_error = 0.0;
    double wall_time = 0.0;
};

struct MethodSummary {
    std::string method;
    std::vector<double> median_error;  // pointwise median over trials
    double median_aggregate = 0.0;     // median over trials of the time-mean error
    double mean_of_median_series = 0.0;
    double median_wall_time = 0.0;
};

struct Trajectory {
    std::string name;
    std::vector<Vector> states;
};

struct ExperimentResult {
    std::vector<RunRecord> records;  // ordered by (trial, method)
    std::vector<MethodSummary> summary;
    std::vector<Trajectory> first_trial;  // truth followed by each method's estimates
};

std::vector<double> l2_error_series(const std::vector<Vector>& estimates, const std::vector<Vector>& truth);

/// Median with the usual midpoint convention for even sizes.
double median(std::vector<double> values);

std::uint64_t trial_seed(std::uint64_t base_seed, int trial);
std::uint64_t method_seed(std::uint64_t trial_seed, std::size_t method_index);

/// Number of worker threads, from KVIFF_THREADS when set.
unsigned worker_threads(unsigned jobs);

ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<MethodSummary> summarize(const std::vector<RunRecord>& records);

// -- output -----------------------------------------------------------------

std::string format_double(double v);

void write_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::vector<RunRecord> read_csv(const std::filesystem::path& path);
void write_summary_csv(const std::vector<MethodSummary>& summary, const std::filesystem::path& summary_path,
                       const std::filesystem::path& aggregate_path);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotLabels {
    std::string title;
    std::string x_label;
    std::string y_label;
};

std::string render_svg_plot(const std::vector<PlotSeries>& series, const PlotLabels& labels);
void write_svg_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                    const PlotLabels& labels = {});

/// Writes runs.csv, summary.csv, aggregate.csv, config.resolved.json and,
/// when plotting, error.svg and trajectory.svg.  Returns the files written.
std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace kviff::harness
