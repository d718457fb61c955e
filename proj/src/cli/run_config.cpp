#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "lrgnn/cli.hpp"

namespace lrgnn::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_pairs", [](RunConfig& c, auto& k, auto& v) { c.scenario.n_pairs = to_u64(k, v); }},
      {"n_tx_antennas", [](RunConfig& c, auto& k, auto& v) { c.scenario.n_tx_antennas = to_u64(k, v); }},
      {"area_side", [](RunConfig& c, auto& k, auto& v) { c.scenario.area_side = to_double(k, v); }},
      {"d_min", [](RunConfig& c, auto& k, auto& v) { c.scenario.d_min = to_double(k, v); }},
      {"d_max", [](RunConfig& c, auto& k, auto& v) { c.scenario.d_max = to_double(k, v); }},
      {"edge_threshold", [](RunConfig& c, auto& k, auto& v) { c.scenario.edge_threshold = to_double(k, v); }},
      {"pathloss_log_base",
       [](RunConfig& c, auto&, auto& v) {
         try {
           c.scenario.pathloss_log_base = parse_log_base(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"antenna_gain_dbi", [](RunConfig& c, auto& k, auto& v) { c.scenario.antenna_gain_dbi = to_double(k, v); }},
      {"shadow_sigma_db", [](RunConfig& c, auto& k, auto& v) { c.scenario.shadow_sigma_db = to_double(k, v); }},
      {"p_max", [](RunConfig& c, auto& k, auto& v) { c.scenario.p_max = to_double(k, v); }},
      {"snr_db", [](RunConfig& c, auto& k, auto& v) { c.scenario.snr_db = to_double(k, v); }},
      {"weights_mode",
       [](RunConfig& c, auto&, auto& v) {
         try {
           c.scenario.weights_mode = parse_weights_mode(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.scenario.seed = to_u64(k, v); }},
      {"n_train", [](RunConfig& c, auto& k, auto& v) { c.n_train = to_u64(k, v); }},
      {"n_test", [](RunConfig& c, auto& k, auto& v) { c.n_test = to_u64(k, v); }},
      {"lr", [](RunConfig& c, auto& k, auto& v) { c.lr = to_double(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.batch_size = to_u64(k, v); }},
      {"epochs", [](RunConfig& c, auto& k, auto& v) { c.epochs = to_u64(k, v); }},
      {"eval_every", [](RunConfig& c, auto& k, auto& v) { c.eval_every = to_u64(k, v); }},
      {"ranks", [](RunConfig& c, auto&, auto& v) { c.ranks = v; }},
      {"selection",
       [](RunConfig& c, auto&, auto& v) {
         try {
           c.selection = parse_selection(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"full_interference", [](RunConfig& c, auto& k, auto& v) { c.full_interference = to_bool(k, v); }},
      {"deterministic", [](RunConfig& c, auto& k, auto& v) { c.deterministic = to_bool(k, v); }},
      {"output_dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
  cfg.explicit_keys.insert(key);
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

nlohmann::json to_json(const RunConfig& cfg) {
  const auto& s = cfg.scenario;
  return {
      {"n_pairs", s.n_pairs},
      {"n_tx_antennas", s.n_tx_antennas},
      {"area_side", s.area_side},
      {"d_min", s.d_min},
      {"d_max", s.d_max},
      {"edge_threshold", s.edge_threshold},
      {"pathloss_log_base", to_string(s.pathloss_log_base)},
      {"antenna_gain_dbi", s.antenna_gain_dbi},
      {"shadow_sigma_db", s.shadow_sigma_db},
      {"p_max", s.p_max},
      {"snr_db", s.snr_db},
      {"weights_mode", to_string(s.weights_mode)},
      {"seed", s.seed},
      {"n_train", cfg.n_train},
      {"n_test", cfg.n_test},
      {"lr", cfg.lr},
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"eval_every", cfg.eval_every},
      {"ranks", cfg.ranks},
      {"selection", to_string(cfg.selection)},
      {"full_interference", cfg.full_interference},
      {"deterministic", cfg.deterministic},
      {"output_dir", cfg.output_dir},
  };
}

MpgnnArch parse_ranks(const std::string& text, std::size_t n_tx) {
  if (text == "dense") return MpgnnArch::dense(n_tx);
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw ConfigError("ranks must be 'dense' or 'a1,a2', got '" + text + "'");
  }
  const std::uint64_t a1 = to_u64("ranks", trim(text.substr(0, comma)));
  const std::uint64_t a2 = to_u64("ranks", trim(text.substr(comma + 1)));
  if (a1 == 0 || a2 == 0) throw ConfigError("ranks must be >= 1, got '" + text + "'");
  auto arch = MpgnnArch::low_rank(n_tx, a1, a2);
  try {
    arch.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return arch;
}

std::string to_string(Selection s) {
  switch (s) {
    case Selection::best_test: return "best_test";
    case Selection::best_train: return "best_train";
    case Selection::last: return "last";
  }
  return "?";
}

Selection parse_selection(const std::string& text) {
  if (text == "best_test") return Selection::best_test;
  if (text == "best_train") return Selection::best_train;
  if (text == "last") return Selection::last;
  throw std::invalid_argument("unknown selection '" + text + "' (expected best_test, best_train or last)");
}

}  // namespace lrgnn::cli
