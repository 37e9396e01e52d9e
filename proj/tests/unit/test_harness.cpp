#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "kviff/harness.hpp"

using namespace kviff;
using namespace kviff::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("kviff_test_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

json small_doc(const fs::path& out) {
    return json{{"scenario", "cubic2d"},
                {"methods", {"pf", "enkf", "kviff"}},
                {"num_particles", 20},
                {"repeats", 3},
                {"base_seed", 4},
                {"output_dir", out.string()},
                {"kviff", {{"num_steps", 2}, {"kernel", {{"bandwidth", 1.0}}}}}};
}

}  // namespace

TEST_CASE("config defaults") {
    auto cfg = config_from_json(json{{"scenario", "linear10d"}, {"methods", {"pf"}}, {"num_particles", 30}});
    CHECK(cfg.repeats == 10);
    CHECK(cfg.plot == false);
    CHECK(cfg.base_seed == 0);
    CHECK(cfg.output_dir == "out");
    REQUIRE(cfg.methods.size() == 1);
    CHECK(cfg.methods[0].label == "pf");
    CHECK(cfg.resolved["kviff"]["epsilon"] == 1e-3);
    CHECK(cfg.resolved["kviff"]["init"] == "pf");
}

TEST_CASE("config validation errors") {
    auto base = json{{"scenario", "cubic2d"}, {"methods", {"pf"}}, {"num_particles", 30}};
    SUBCASE("kf on a nonlinear scenario") {
        auto doc = base;
        doc["methods"] = {"kf"};
        CHECK_THROWS_AS(config_from_json(doc), ConfigError);
    }
    SUBCASE("unknown key is named") {
        auto doc = base;
        doc["particles"] = 3;
        try {
            config_from_json(doc);
            FAIL("expected an error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("particles") != std::string::npos);
        }
        auto nested = base;
        nested["kviff"] = {{"kernel", {{"width", 2.0}}}};
        try {
            config_from_json(nested);
            FAIL("expected an error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("kviff.kernel.width") != std::string::npos);
        }
    }
    SUBCASE("bad values") {
        for (auto [key, value] : std::vector<std::pair<std::string, json>>{
                 {"repeats", 0}, {"num_particles", -1}, {"scenario", "nowhere"}, {"plot", "yes"}, {"methods", json::array()}}) {
            auto doc = base;
            doc[key] = value;
            CHECK_THROWS_AS(config_from_json(doc), ConfigError);
        }
        auto doc = base;
        doc["methods"] = {"pf", "pf"};
        CHECK_THROWS_AS(config_from_json(doc), ConfigError);
        doc["methods"] = {"ukf"};
        CHECK_THROWS_AS(config_from_json(doc), ConfigError);
    }
}

TEST_CASE("shipped linear config values") {
    auto cfg = load_config(fs::path(KVIFF_SOURCE_DIR) / "configs" / "linear10d.json");
    CHECK(cfg.scenario == "linear10d");
    CHECK(cfg.num_particles == 1000);
    CHECK(cfg.repeats == 10);
    auto kv = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                           [](const MethodSpec& m) { return m.method == filters::Method::kviff; });
    REQUIRE(kv != cfg.methods.end());
    CHECK(kv->kviff.step_size == 1e-3);
    CHECK(kv->kviff.num_steps == 50);
    CHECK(kv->kviff.kernel.bandwidth == 10.0);
    CHECK(kv->kviff.initializer == filters::Initializer::pf);
}

TEST_CASE("every shipped config loads") {
    for (const auto& name : models::scenario_names()) {
        auto cfg = load_config(fs::path(KVIFF_SOURCE_DIR) / "configs" / (name + ".json"));
        CHECK(cfg.scenario == name);
    }
}

TEST_CASE("parse errors carry the line") {
    const std::string text = "{\n  \"scenario\": \"linear10d\",\n  \"methods\": [pf]\n}\n";
    try {
        parse_config_text(text, "demo.json");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).rfind("demo.json:3:", 0) == 0);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/kviff.json"), ConfigError);
}

TEST_CASE("dotted overrides") {
    json doc{{"scenario", "linear10d"}, {"methods", {"pf"}}, {"num_particles", 30}};
    apply_overrides(doc, {"num_particles=50", "kviff.epsilon=5e-5", "kviff.init=enkf", "kviff.kernel.bandwidth=2",
                          "output_dir=some/where"});
    CHECK(doc["num_particles"] == 50);
    CHECK(doc["kviff"]["epsilon"] == 5e-5);
    CHECK(doc["kviff"]["init"] == "enkf");
    CHECK(doc["kviff"]["kernel"]["bandwidth"] == 2);
    CHECK(doc["output_dir"] == "some/where");
    CHECK_THROWS_AS(apply_overrides(doc, {"missing_equals"}), ConfigError);
    auto cfg = config_from_json(doc);
    CHECK(cfg.num_particles == 50);
}

TEST_CASE("per-method kviff blocks") {
    json doc{{"scenario", "multitarget"},
             {"methods",
              {"enkf",
               {{"name", "kviff"}, {"label", "kviff-enkf"}, {"kviff", {{"init", "enkf"}}}},
               {{"name", "kviff"}, {"label", "kviff-raw"}, {"kviff", {{"init", "raw"}, {"num_steps", 7}}}}}},
             {"num_particles", 10},
             {"kviff", {{"epsilon", 5e-5}, {"num_steps", 200}}}};
    auto cfg = config_from_json(doc);
    REQUIRE(cfg.methods.size() == 3);
    CHECK(cfg.methods[1].label == "kviff-enkf");
    CHECK(cfg.methods[1].kviff.initializer == filters::Initializer::enkf);
    CHECK(cfg.methods[1].kviff.num_steps == 200);
    CHECK(cfg.methods[2].kviff.num_steps == 7);
    CHECK(cfg.methods[2].kviff.step_size == 5e-5);
}

TEST_CASE("l2 error series") {
    std::vector<Vector> truth{Vector::Zero(2), Vector::Ones(2)};
    CHECK(l2_error_series(truth, truth) == std::vector<double>{0.0, 0.0});
    std::vector<Vector> est{(Vector(2) << 3.0, 4.0).finished(), Vector::Ones(2)};
    CHECK(l2_error_series(est, truth) == std::vector<double>{5.0, 0.0});
    std::vector<Vector> t1{Vector::Constant(1, 0.5), Vector::Constant(1, -2.0)};
    std::vector<Vector> e1{Vector::Constant(1, 1.5), Vector::Constant(1, -1.0)};
    CHECK(l2_error_series(e1, t1) == std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(l2_error_series(est, {Vector::Zero(2)}), UsageError);
}

TEST_CASE("property: median is an order statistic") {
    Rng rng(13);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + 2 * (trial % 15);
        std::vector<double> v(n);
        for (auto& x : v) x = g(rng);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        CHECK(median(v) == sorted[n / 2]);
    }
    CHECK(median({1.0, 4.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(median({}), UsageError);
}

TEST_CASE("seeds") {
    CHECK(trial_seed(10, 3) == (10u ^ 3u));
    CHECK(method_seed(5, 0) != method_seed(5, 1));
    CHECK(method_seed(5, 1) == method_seed(5, 1));
}

TEST_CASE("csv output") {
    auto dir = scratch_dir("csv");
    SUBCASE("empty record list") {
        write_csv({}, dir / "empty.csv");
        CHECK(slurp(dir / "empty.csv") == "method,trial,step,error\n");
    }
    SUBCASE("one record with two steps") {
        write_csv({RunRecord{"pf", 0, {0.5, 0.25}, 0.375, 0.0}}, dir / "one.csv");
        CHECK(slurp(dir / "one.csv") == "method,trial,step,error\npf,0,1,0.5\npf,0,2,0.25\n");
    }
    SUBCASE("property: round trip") {
        Rng rng(21);
        std::exponential_distribution<double> ex(0.7);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<RunRecord> recs;
            for (int t = 0; t < 3; ++t)
                for (const char* m : {"pf", "kviff-enkf"}) {
                    RunRecord r{m, t, {}, 0.0, 0.0};
                    for (int k = 0; k < 1 + rep; ++k) r.per_step_error.push_back(ex(rng) * std::pow(10.0, rep % 7 - 3));
                    recs.push_back(r);
                }
            write_csv(recs, dir / "rt.csv");
            auto back = read_csv(dir / "rt.csv");
            REQUIRE(back.size() == recs.size());
            for (std::size_t i = 0; i < recs.size(); ++i) {
                CHECK(back[i].method == recs[i].method);
                CHECK(back[i].trial == recs[i].trial);
                CHECK(back[i].per_step_error == recs[i].per_step_error);
            }
        }
    }
    SUBCASE("summary files") {
        std::vector<MethodSummary> s{{"pf", {1.0, 2.0}, 1.5, 1.5, 0.1}, {"enkf", {0.5, 0.75}, 0.625, 0.625, 0.2}};
        write_summary_csv(s, dir / "summary.csv", dir / "aggregate.csv");
        CHECK(slurp(dir / "summary.csv") ==
              "method,step,median_error\npf,1,1\npf,2,2\nenkf,1,0.5\nenkf,2,0.75\n");
        CHECK(slurp(dir / "aggregate.csv") ==
              "method,median_aggregate,mean_of_median_series\npf,1.5,1.5\nenkf,0.625,0.625\n");
    }
    SUBCASE("io errors name the path") {
        try {
            write_csv({}, dir / "no" / "such" / "dir.csv");
            FAIL("expected an io error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("dir.csv") != std::string::npos);
        }
    }
}

TEST_CASE("svg plots") {
    PlotSeries flat{"flat", {1, 2, 3, 4}, {2, 2, 2, 2}};
    PlotSeries ramp{"ramp", {1, 2, 3, 4}, {0, 1, 2, 3}};
    auto one = render_svg_plot({flat}, {"t", "step", "error"});
    CHECK(count_of(one, "<polyline") == 1);
    CHECK(one.rfind("<svg", 0) == 0);
    // a flat series draws every point at the same height
    auto pts = one.substr(one.find("points=\"") + 8);
    pts = pts.substr(0, pts.find('"'));
    std::set<std::string> heights;
    std::stringstream ss(pts);
    for (std::string pair; ss >> pair;) heights.insert(pair.substr(pair.find(',') + 1));
    CHECK(heights.size() == 1);

    auto two = render_svg_plot({flat, ramp}, {"t", "step", "error"});
    CHECK(count_of(two, "<polyline") == 2);
    auto legend = two.substr(two.find("class=\"legend\""));
    CHECK(count_of(legend, "<text") == 2);
    CHECK(render_svg_plot({flat, ramp}, {"t", "step", "error"}) == two);
    CHECK_THROWS_AS(render_svg_plot({}, {}), UsageError);
}

TEST_CASE("experiments") {
    auto dir = scratch_dir("run");
    auto cfg = config_from_json(small_doc(dir / "a"));
    auto result = run_experiment(cfg);
    CHECK(result.records.size() == 9);
    REQUIRE(result.summary.size() == 3);
    for (const auto& r : result.records) {
        CHECK(r.per_step_error.size() == 200);
        double mean = 0.0;
        for (double e : r.per_step_error) {
            CHECK(e >= 0.0);
            mean += e;
        }
        mean /= static_cast<double>(r.per_step_error.size());
        CHECK(std::abs(mean - r.aggregate_error) <= 1e-12);
    }
    for (const auto& s : result.summary) {
        std::vector<double> aggs;
        for (const auto& r : result.records)
            if (r.method == s.method) aggs.push_back(r.aggregate_error);
        CHECK(s.median_aggregate == median(aggs));
    }

    SUBCASE("shared truth per trial") {
        auto scenario = models::build_scenario(cfg.scenario);
        const auto seed = trial_seed(cfg.base_seed, 1);
        auto a = models::simulate_truth(scenario, seed), b = models::simulate_truth(scenario, seed);
        for (std::size_t k = 0; k < a.observations.size(); ++k) CHECK(a.observations[k] == b.observations[k]);
        // first-trial trajectories start with the truth used by every method
        REQUIRE(!result.first_trial.empty());
        CHECK(result.first_trial[0].name == "truth");
        auto t0 = models::simulate_truth(scenario, trial_seed(cfg.base_seed, 0));
        CHECK(result.first_trial[0].states.back() == t0.states.back());
    }
    SUBCASE("identical bytes on rerun") {
        auto files_a = write_outputs(cfg, result);
        auto doc_b = small_doc(dir / "b");
        auto cfg_b = config_from_json(doc_b);
        auto files_b = write_outputs(cfg_b, run_experiment(cfg_b));
        CHECK(files_a.size() == 4);
        for (const char* f : {"runs.csv", "summary.csv", "aggregate.csv"})
            CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    SUBCASE("plots when asked") {
        auto doc = small_doc(dir / "p");
        doc["plot"] = true;
        doc["repeats"] = 1;
        auto c = config_from_json(doc);
        auto r = run_experiment(c);
        auto files = write_outputs(c, r);
        CHECK(files.size() == 6);
        CHECK(fs::exists(dir / "p" / "error.svg"));
        CHECK(fs::exists(dir / "p" / "trajectory.svg"));
        // one trial: the median is that trial
        for (const auto& s : r.summary)
            for (const auto& rec : r.records)
                if (rec.method == s.method) CHECK(s.median_error == rec.per_step_error);
    }
}

TEST_CASE("worker threads honour the environment") {
    CHECK(worker_threads(1) == 1);
    CHECK(worker_threads(0) >= 1);
}
