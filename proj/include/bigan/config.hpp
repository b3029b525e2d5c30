// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bigan/trainer.hpp"

namespace bigan {

struct EvalConfig {
  std::size_t folds = 5;
  std::uint64_t seed = 42;         // fold assignment and deletion plans
  std::size_t knn_k = 5;
  std::size_t mice_iter = 10;
  double rate = 0.1;               // imputation setting
  std::size_t obs_len = 4;         // prediction setting
  std::vector<double> rates = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::size_t> obs_lengths = {4, 6, 8, 10};
  std::string imputers = "bigan,mean,knn,mice";
  std::string protocol = "auto";   // kfold | split | auto (split when a test split exists)
  std::size_t threads = 1;
};

struct RunConfig {
  TrainConfig train;
  EvalConfig eval;

  /// The effective configuration in config-file syntax.
  std::string text() const;
};

struct ConfigKey {
  std::string section;
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;

  std::string qualified() const { return section + "." + key; }
  std::string env_name() const;  // BIGAN_<SECTION>_<KEY>
};

/// Every recognised key, in file order.
const std::vector<ConfigKey>& config_keys();

/// A complete configuration file holding every default.
std::string default_config_text();

/// Applies a config file body ("[section]" headers, "key = value" lines,
/// '#' comments). Unknown sections or keys and malformed values are
/// ConfigErrors. Unless `allow_missing`, every key must be present and the
/// error names the first missing key and its default.
void apply_config_text(RunConfig& config, std::string_view text, bool allow_missing);

struct ConfigSources {
  std::optional<std::filesystem::path> file;
  bool allow_missing = false;
  /// "section.key=value" (or "key=value" when the key is unambiguous).
  std::vector<std::string> overrides;
  /// Environment lookup; std::getenv when empty.
  std::function<std::optional<std::string>(const std::string&)> env;
};

/// Precedence: overrides > environment > file > defaults.
RunConfig load_config(const ConfigSources& sources);

}  // namespace bigan
