#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "kviff/cli.hpp"

using namespace kviff;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(KVIFF_SOURCE_DIR) / "configs";

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("kviff_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, '\t');) cells.push_back(cell);
    return cells;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(KVIFF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("scenarios listing") {
    std::ostringstream out;
    CHECK(cli::cmd_scenarios(out) == cli::kOk);
    auto lines = split_lines(out.str());
    REQUIRE(lines.size() == 9);
    CHECK(lines[0] == "name\tdim_x\tdim_y\tK\tdt\tmismatch");
    std::map<std::string, std::vector<std::string>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_tabs(lines[i]);
        REQUIRE(cells.size() == 6);
        rows[cells[0]] = cells;
    }
    CHECK(rows.size() == 8);
    REQUIRE(rows.contains("linear10d"));
    CHECK(rows["linear10d"][1] == "10");
    CHECK(rows["linear10d"][3] == "100");
    REQUIRE(rows.contains("cubic2d"));
    CHECK(rows["cubic2d"][3] == "200");
    CHECK(rows["multitarget"][2] == "25");
}

TEST_CASE("run exit codes") {
    std::ostringstream out, err;
    CHECK(cli::cmd_run("/nonexistent/config.json", {}, std::nullopt, std::nullopt, out, err) == cli::kConfigError);
    CHECK(err.str().find("config") != std::string::npos);

    std::ostringstream out2, err2;
    CHECK(cli::cmd_run((kConfigs / "linear10d.json").string(), {"num_particles=0"}, std::nullopt, std::nullopt, out2,
                       err2) == cli::kConfigError);

    // output directory that cannot be created
    std::ostringstream out3, err3;
    CHECK(cli::cmd_run((kConfigs / "cubic2d.json").string(), {"num_particles=5", "repeats=1", "kviff.num_steps=1"},
                       std::nullopt, "/proc/kviff_cannot_write_here", out3, err3) == cli::kRuntimeError);
    CHECK(err3.str().find("runtime error") != std::string::npos);
}

TEST_CASE("run the shipped linear config at small scale") {
    auto dir = scratch_dir("linear");
    std::ostringstream out, err;
    const int code = cli::cmd_run((kConfigs / "linear10d.json").string(),
                                  {"num_particles=50", "repeats=1", "plot=false", "kviff.num_steps=5"}, 3u, dir.string(),
                                  out, err);
    INFO(err.str());
    REQUIRE(code == cli::kOk);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) files += entry.is_regular_file();
    CHECK(files == 4);
    CHECK(out.str().find("N=50") != std::string::npos);
    for (const char* m : {"kf", "pf", "enkf", "kviff"}) CHECK(out.str().find(m) != std::string::npos);

    std::ifstream resolved(dir / "config.resolved.json");
    auto doc = nlohmann::json::parse(resolved);
    CHECK(doc["num_particles"] == 50);
    CHECK(doc["base_seed"] == 3);
}

TEST_CASE("validate") {
    std::ostringstream out, err;
    CHECK(cli::cmd_validate(out, err) == cli::kOk);
    auto lines = split_lines(out.str());
    CHECK(lines.size() == 4);
    for (const auto& l : lines) CHECK(l.rfind("PASS ", 0) == 0);

    SUBCASE("a sabotaged gradient sign is caught") {
        validation::ValidationOptions bad;
        bad.gradient = [](const kernel::KernelSpec& k, VectorRef x, VectorRef y) -> Vector {
            return -kernel::kernel_grad2(k, x, y);
        };
        std::ostringstream o, e;
        CHECK(cli::cmd_validate(o, e, bad) != cli::kOk);
        CHECK(o.str().find("FAIL kernel-gradient-fd") != std::string::npos);
        CHECK(e.str().find("kernel-gradient-fd") != std::string::npos);
    }
}

TEST_CASE("binary entry point") {
    CHECK(run_binary("scenarios") == 0);
    CHECK(run_binary("run --config /nonexistent.json") == 1);
    CHECK(run_binary("run") != 0);
    CHECK(run_binary("bogus") != 0);
    auto dir = scratch_dir("binary");
    CHECK(run_binary("run --config " + (kConfigs / "cubic2d.json").string() +
                     " --set num_particles=10 --set repeats=1 --set kviff.num_steps=1 --seed 5 --out " + dir.string()) ==
          0);
    CHECK(fs::exists(dir / "runs.csv"));
    CHECK(fs::exists(dir / "error.svg"));
}
