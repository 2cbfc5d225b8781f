// commands.hpp: The propagate / fit / refmodel / check / sweep subcommands.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hhdeco/cli/config.hpp"

namespace hhdeco::cli {

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "HHDECO_OUTPUT_ROOT";

struct CommandOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    int jobs{1};
    std::vector<std::string> overrides;
    std::vector<std::string> inputs;  // trajectory files for `fit`
};

/// --out, else run.output, else $HHDECO_OUTPUT_ROOT/<command>, else ./hhdeco-out/<command>.
std::filesystem::path resolve_output(const CommandOptions& opts, const RunConfig& cfg, const std::string& command);

/// Each returns the process exit code; configuration and numerical failures throw.
int cmd_propagate(const CommandOptions& opts);
int cmd_fit(const CommandOptions& opts);
int cmd_refmodel(const CommandOptions& opts);
int cmd_check(const CommandOptions& opts);
int cmd_sweep(const CommandOptions& opts);

/// 2 for configuration errors, 3 for numerical failures, 4 for invariant failures, 1 otherwise.
int exit_code_for(const std::exception& e);

} // namespace hhdeco::cli
