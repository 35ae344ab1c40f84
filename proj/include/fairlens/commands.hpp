#ifndef FAIRLENS_COMMANDS_HPP_
#define FAIRLENS_COMMANDS_HPP_

// Subcommand implementations behind the fairlens executable. Each takes a
// parsed JSON configuration and returns the report; files named in the
// configuration are resolved against RunOptions::base_dir.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/error.hpp"
#include "json.hpp"

namespace fairlens {
namespace cli {

struct RunOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::filesystem::path base_dir;
  // Raw configuration text, echoed into the report when non-empty.
  std::string config_text;
};

nlohmann::json RunClassifyAudit(const nlohmann::json& config,
                                const RunOptions& options);
nlohmann::json RunRetrieveAudit(const nlohmann::json& config,
                                const RunOptions& options);
nlohmann::json RunDebiasFit(const nlohmann::json& config,
                            const RunOptions& options);
nlohmann::json RunApply(const nlohmann::json& config,
                        const RunOptions& options);
nlohmann::json RunProbe(const nlohmann::json& config,
                        const RunOptions& options);
nlohmann::json RunSynth(const nlohmann::json& config,
                        const RunOptions& options);

const std::vector<std::string>& CommandNames();
// Dispatches on the subcommand name; ConfigError for an unknown one.
nlohmann::json RunCommand(const std::string& command,
                          const nlohmann::json& config,
                          const RunOptions& options);

// 2 config, 3 data, 4 numeric.
int ExitCodeFor(const Error& error);

}  // namespace cli
}  // namespace fairlens

#endif  // FAIRLENS_COMMANDS_HPP_
