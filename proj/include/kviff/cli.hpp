#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kviff/validation.hpp"

namespace kviff::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kRuntimeError = 2;

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed, std::optional<std::string> out_dir, std::ostream& out,
            std::ostream& err);
int cmd_validate(std::ostream& out, std::ostream& err, const validation::ValidationOptions& options = {});
int cmd_scenarios(std::ostream& out);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kviff::cli
