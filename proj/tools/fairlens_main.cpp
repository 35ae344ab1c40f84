// fairlens command-line front end.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fairlens/commands.hpp"
#include "fairlens/error.hpp"
#include "fairlens/io.hpp"
#include "json.hpp"

namespace {

int Run(const std::string& command, const std::string& config_path,
        const std::string& out_path, int threads,
        std::optional<std::uint64_t> seed) {
  using fairlens::Error;
  using fairlens::ErrorCode;
  const std::filesystem::path config_file(config_path);
  const std::string text = fairlens::io::ReadFileText(config_file);
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfigError,
                config_path + ": invalid configuration: " + e.what());
  }
  fairlens::cli::RunOptions options;
  options.threads = threads;
  options.seed = seed;
  options.base_dir = config_file.parent_path();
  options.config_text = text;
  const nlohmann::json report =
      fairlens::cli::RunCommand(command, config, options);
  if (out_path.empty() || out_path == "-") {
    std::cout << fairlens::io::RenderReport(report);
  } else {
    fairlens::io::WriteReport(report, out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness audits and debiasing transforms for embedding spaces",
               "fairlens"};
  app.set_version_flag("--version", std::string(FAIRLENS_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "report path (stdout when omitted)");
  app.add_option("--threads", threads, "worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed override for synth");

  const std::pair<const char*, const char*> commands[] = {
      {"classify-audit", "zero-shot classification fairness audit"},
      {"retrieve-audit", "top-k retrieval fairness audit"},
      {"debias-fit", "fit an MI-clip or fair PCA transform"},
      {"apply", "apply a fitted transform to embedding files"},
      {"probe", "linear-probe accuracy per attribute"},
      {"synth", "generate a synthetic biased dataset"},
  };
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return Run(command, config_path, out_path, threads, seed);
  } catch (const fairlens::Error& e) {
    std::cerr << "fairlens " << command << ": " << e.what() << "\n";
    return fairlens::cli::ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "fairlens " << command << ": " << e.what() << "\n";
    return 3;
  }
}
