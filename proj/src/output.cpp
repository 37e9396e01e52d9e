#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "kviff/harness.hpp"

namespace kviff::harness {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

}  // namespace

void write_csv(const std::vector<RunRecord>& records, const fs::path& path) {
    auto out = open_for_write(path);
    out << "method,trial,step,error\n";
    for (const auto& r : records)
        for (std::size_t k = 0; k < r.per_step_error.size(); ++k)
            out << r.method << ',' << r.trial << ',' << (k + 1) << ',' << format_double(r.per_step_error[k]) << '\n';
    finish(out, path);
}

std::vector<RunRecord> read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "method,trial,step,error")
        throw std::runtime_error(path.string() + ":1: unexpected header");
    std::vector<RunRecord> out;
    std::map<std::pair<std::string, int>, std::size_t> index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string method, trial, step, err;
        if (!std::getline(ss, method, ',') || !std::getline(ss, trial, ',') || !std::getline(ss, step, ',') ||
            !std::getline(ss, err))
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
        const int t = std::stoi(trial);
        const auto key = std::make_pair(method, t);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            out.push_back(RunRecord{method, t, {}, 0.0, 0.0});
        }
        auto& rec = out[it->second];
        if (static_cast<std::size_t>(std::stoul(step)) != rec.per_step_error.size() + 1)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": steps out of order");
        rec.per_step_error.push_back(parse_double(err, path, lineno));
    }
    for (auto& r : out) {
        double acc = 0.0;
        for (double v : r.per_step_error) acc += v;
        r.aggregate_error = r.per_step_error.empty() ? 0.0 : acc / static_cast<double>(r.per_step_error.size());
    }
    return out;
}

void write_summary_csv(const std::vector<MethodSummary>& summary, const fs::path& summary_path,
                       const fs::path& aggregate_path) {
    auto out = open_for_write(summary_path);
    out << "method,step,median_error\n";
    for (const auto& s : summary)
        for (std::size_t k = 0; k < s.median_error.size(); ++k)
            out << s.method << ',' << (k + 1) << ',' << format_double(s.median_error[k]) << '\n';
    finish(out, summary_path);

    auto agg = open_for_write(aggregate_path);
    agg << "method,median_aggregate,mean_of_median_series\n";
    for (const auto& s : summary)
        agg << s.method << ',' << format_double(s.median_aggregate) << ',' << format_double(s.mean_of_median_series)
            << '\n';
    finish(agg, aggregate_path);
}

std::vector<fs::path> write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
    const fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

    std::vector<fs::path> written;
    written.push_back(dir / "runs.csv");
    write_csv(result.records, written.back());
    written.push_back(dir / "summary.csv");
    written.push_back(dir / "aggregate.csv");
    write_summary_csv(result.summary, written[1], written[2]);
    written.push_back(dir / "config.resolved.json");
    {
        auto out = open_for_write(written.back());
        out << config.resolved.dump(2) << '\n';
        finish(out, written.back());
    }

    if (config.plot) {
        std::vector<PlotSeries> err;
        for (const auto& s : result.summary) {
            PlotSeries p{s.method, {}, s.median_error};
            for (std::size_t k = 0; k < s.median_error.size(); ++k) p.x.push_back(static_cast<double>(k + 1));
            err.push_back(std::move(p));
        }
        written.push_back(dir / "error.svg");
        write_svg_plot(err, written.back(), {config.scenario + ": median L2 error", "step", "error"});

        // First object / first two state dimensions.
        std::vector<PlotSeries> traj;
        for (const auto& t : result.first_trial) {
            PlotSeries p{t.name, {}, {}};
            for (const auto& x : t.states) {
                p.x.push_back(x[0]);
                p.y.push_back(x.size() > 1 ? x[1] : 0.0);
            }
            traj.push_back(std::move(p));
        }
        written.push_back(dir / "trajectory.svg");
        write_svg_plot(traj, written.back(), {config.scenario + ": trajectories (trial 0)", "x[0]", "x[1]"});
    }
    return written;
}

}  // namespace kviff::harness
