#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kviff/harness.hpp"

namespace kviff::harness {

using nlohmann::json;

namespace {

constexpr double kDefaultEpsilon = 1e-3;
constexpr int kDefaultNumSteps = 50;
constexpr double kDefaultBandwidth = 10.0;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw ConfigError("config field '" + field + "': " + msg);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
}

int get_int(const json& obj, const std::string& key, const std::string& field, int lo) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(field, "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo) fail(field, "must be >= " + std::to_string(lo));
    if (x > 1'000'000'000LL) fail(field, "value too large");
    return static_cast<int>(x);
}

double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
}

// Fills defaults and validates a kviff block in place.
void resolve_kviff(json& block, const std::string& where) {
    if (!block.is_object()) fail(where, "expected an object");
    reject_unknown(block, {"epsilon", "num_steps", "init", "kernel"}, where);
    if (!block.contains("epsilon")) block["epsilon"] = kDefaultEpsilon;
    if (!block.contains("num_steps")) block["num_steps"] = kDefaultNumSteps;
    if (!block.contains("init")) block["init"] = "pf";
    if (!block.contains("kernel")) block["kernel"] = json::object();
    auto& kernel = block["kernel"];
    if (!kernel.is_object()) fail(where + ".kernel", "expected an object");
    reject_unknown(kernel, {"bandwidth", "median_heuristic"}, where + ".kernel");
    if (!kernel.contains("bandwidth")) kernel["bandwidth"] = kDefaultBandwidth;
    if (!kernel.contains("median_heuristic")) kernel["median_heuristic"] = false;

    const double eps = get_number(block["epsilon"], where + ".epsilon");
    const int steps = get_int(block, "num_steps", where + ".num_steps", 0);
    if (steps > 0 && !(eps > 0.0)) fail(where + ".epsilon", "must be positive");
    if (!block["init"].is_string()) fail(where + ".init", "expected a string");
    const auto init = block["init"].get<std::string>();
    if (init != "raw" && init != "pf" && init != "enkf") fail(where + ".init", "expected raw, pf or enkf");
    if (!(get_number(kernel["bandwidth"], where + ".kernel.bandwidth") > 0.0))
        fail(where + ".kernel.bandwidth", "must be positive");
    if (!kernel["median_heuristic"].is_boolean()) fail(where + ".kernel.median_heuristic", "expected a boolean");
}

filters::KvifConfig kviff_from_block(const json& block) {
    filters::KvifConfig c;
    c.step_size = block["epsilon"].get<double>();
    c.num_steps = block["num_steps"].get<int>();
    c.initializer = filters::parse_initializer(block["init"].get<std::string>());
    c.kernel = kernel::KernelSpec::rbf(block["kernel"]["bandwidth"].get<double>());
    c.median_heuristic = block["kernel"]["median_heuristic"].get<bool>();
    return c;
}

// Recursive merge of `patch` over `base` for objects.
json merged(json base, const json& patch) {
    for (const auto& [key, value] : patch.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object())
            base[key] = merged(base[key], value);
        else
            base[key] = value;
    }
    return base;
}

}  // namespace

json parse_config_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ConfigError(origin + ":" + std::to_string(line) + ": parse error: " + e.what());
    }
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "': expected key=value");
        const std::string path = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;
        }
        json* node = &doc;
        std::stringstream ss(path);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ss, part, '.')) {
            if (part.empty()) throw ConfigError("override '" + ov + "': empty path component");
            parts.push_back(part);
        }
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            if (!node->is_object()) throw ConfigError("override '" + ov + "': '" + parts[i] + "' is not an object");
            node = &(*node)[parts[i]];
            if (node->is_null()) *node = json::object();
        }
        if (!node->is_object()) throw ConfigError("override '" + ov + "': parent of '" + parts.back() + "' is not an object");
        (*node)[parts.back()] = value;
    }
}

ExperimentConfig config_from_json(const json& input) {
    if (!input.is_object()) throw ConfigError("config: top level must be a JSON object");
    json doc = input;
    reject_unknown(doc, {"scenario", "methods", "num_particles", "repeats", "base_seed", "output_dir", "plot", "kviff"},
                   "");

    for (const char* key : {"scenario", "methods", "num_particles"})
        if (!doc.contains(key)) fail(key, "required");
    if (!doc.contains("repeats")) doc["repeats"] = 10;
    if (!doc.contains("base_seed")) doc["base_seed"] = 0;
    if (!doc.contains("output_dir")) doc["output_dir"] = "out";
    if (!doc.contains("plot")) doc["plot"] = false;
    if (!doc.contains("kviff")) doc["kviff"] = json::object();

    ExperimentConfig cfg;
    if (!doc["scenario"].is_string()) fail("scenario", "expected a string");
    cfg.scenario = doc["scenario"].get<std::string>();
    const auto& names = models::scenario_names();
    if (std::find(names.begin(), names.end(), cfg.scenario) == names.end())
        fail("scenario", "unknown scenario '" + cfg.scenario + "'");
    const bool linear = models::build_scenario(cfg.scenario).model.linear.has_value();

    cfg.num_particles = get_int(doc, "num_particles", "num_particles", 1);
    cfg.repeats = get_int(doc, "repeats", "repeats", 1);
    if (!doc["base_seed"].is_number_unsigned() && !(doc["base_seed"].is_number_integer() && doc["base_seed"].get<long long>() >= 0))
        fail("base_seed", "expected a non-negative integer");
    cfg.base_seed = doc["base_seed"].get<std::uint64_t>();
    if (!doc["output_dir"].is_string()) fail("output_dir", "expected a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
    if (!doc["plot"].is_boolean()) fail("plot", "expected a boolean");
    cfg.plot = doc["plot"].get<bool>();
    resolve_kviff(doc["kviff"], "kviff");

    auto& methods = doc["methods"];
    if (!methods.is_array() || methods.empty()) fail("methods", "expected a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const std::string where = "methods[" + std::to_string(i) + "]";
        auto& entry = methods[i];
        if (entry.is_string()) entry = json{{"name", entry}};
        if (!entry.is_object()) fail(where, "expected a method name or an object");
        reject_unknown(entry, {"name", "label", "kviff"}, where);
        if (!entry.contains("name") || !entry["name"].is_string()) fail(where + ".name", "required string");
        MethodSpec spec;
        const auto name = entry["name"].get<std::string>();
        try {
            spec.method = filters::parse_method(name);
        } catch (const UsageError& e) {
            fail(where + ".name", e.what());
        }
        if (spec.method == filters::Method::kf && !linear)
            fail(where + ".name", "kf is only available for linear scenarios, not '" + cfg.scenario + "'");
        if (!entry.contains("label")) entry["label"] = name;
        if (!entry["label"].is_string()) fail(where + ".label", "expected a string");
        spec.label = entry["label"].get<std::string>();
        if (spec.label.empty() || spec.label.find_first_of(",\"\n\r") != std::string::npos)
            fail(where + ".label", "must be non-empty and free of commas, quotes and newlines");
        if (!labels.insert(spec.label).second) fail(where + ".label", "duplicate method label '" + spec.label + "'");
        if (spec.method == filters::Method::kviff) {
            json block = doc["kviff"];
            if (entry.contains("kviff")) {
                if (!entry["kviff"].is_object()) fail(where + ".kviff", "expected an object");
                block = merged(block, entry["kviff"]);
            }
            resolve_kviff(block, where + ".kviff");
            entry["kviff"] = block;
            spec.kviff = kviff_from_block(block);
        } else if (entry.contains("kviff")) {
            fail(where + ".kviff", "only valid for kviff methods");
        }
        const bool needs_two = spec.method == filters::Method::enkf ||
                               (spec.method == filters::Method::kviff &&
                                spec.kviff.initializer == filters::Initializer::enkf);
        if (needs_two && cfg.num_particles < 2) fail("num_particles", "ensemble Kalman updates need at least 2");
        cfg.methods.push_back(std::move(spec));
    }
    cfg.resolved = std::move(doc);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json doc = parse_config_text(buf.str(), path.string());
    apply_overrides(doc, overrides);
    return config_from_json(doc);
}

}  // namespace kviff::harness
