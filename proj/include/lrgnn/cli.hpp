#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lrgnn/mpgnn.hpp"
#include "lrgnn/scenario.hpp"
#include "lrgnn/trainer.hpp"

namespace lrgnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run can be configured with. Plain-text form is one `key = value`
/// per line, `#` starts a comment; keys are the field names below.
struct RunConfig {
  ScenarioConfig scenario;
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::size_t eval_every = 1;
  std::string ranks = "dense";
  Selection selection = Selection::best_test;
  bool full_interference = false;
  bool deterministic = false;
  std::string output_dir;

  // Keys set explicitly (from a file or an override), not left at their default.
  std::set<std::string> explicit_keys;
};

std::vector<std::string> config_keys();

/// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

/// "dense" or "a1,a2" (both >= 1, within the layer limits for `n_tx`).
MpgnnArch parse_ranks(const std::string& text, std::size_t n_tx);

std::string to_string(Selection s);
Selection parse_selection(const std::string& text);

/// Entry point of the `lrgnn` tool; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lrgnn::cli
