// SPDX-License-Identifier: Apache-2.0
#include "bigan/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bigan/errors.hpp"
#include "bigan/evaluation.hpp"

namespace bigan {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

template <class T>
T parse_unsigned(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string lower = v;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
  if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string b(bool v) { return v ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_number(values[k]);
    } else {
      out += std::to_string(values[k]);
    }
  }
  return out;
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  auto add = [&](std::string section, std::string key, std::string help, auto set, auto get) {
    keys.push_back({std::move(section), std::move(key), std::move(help), set, get});
  };
#define SIZE_KEY(sec, field, member, help)                                                              \
  add(sec, #member, help, [](RunConfig& c, const std::string& v) {                                      \
    c.field.member = parse_unsigned<std::size_t>(#member, v);                                           \
  }, [](const RunConfig& c) { return std::to_string(c.field.member); })
#define U64_KEY(sec, field, member, help)                                                               \
  add(sec, #member, help, [](RunConfig& c, const std::string& v) {                                      \
    c.field.member = parse_unsigned<std::uint64_t>(#member, v);                                         \
  }, [](const RunConfig& c) { return std::to_string(c.field.member); })
#define REAL_KEY(sec, field, member, help)                                                              \
  add(sec, #member, help, [](RunConfig& c, const std::string& v) { c.field.member = parse_real(#member, v); }, \
      [](const RunConfig& c) { return format_number(c.field.member); })
#define BOOL_KEY(sec, field, member, help)                                                              \
  add(sec, #member, help, [](RunConfig& c, const std::string& v) { c.field.member = parse_bool(#member, v); }, \
      [](const RunConfig& c) { return b(c.field.member); })

  SIZE_KEY("model", train, hidden, "generator hidden width H");
  SIZE_KEY("model", train, disc_hidden, "discriminator hidden width");
  add("model", "cell", "generator cell: simple | lstm",
      [](RunConfig& c, const std::string& v) { c.train.cell = parse_cell_kind(v); },
      [](const RunConfig& c) { return std::string(cell_kind_name(c.train.cell)); });
  add("model", "disc_cell", "discriminator cell: simple | lstm",
      [](RunConfig& c, const std::string& v) { c.train.disc_cell = parse_cell_kind(v); },
      [](const RunConfig& c) { return std::string(cell_kind_name(c.train.disc_cell)); });
  BOOL_KEY("model", train, disc_conditioning, "feed target mask and time gaps to the discriminator");
  add("model", "loss_mode", "adversarial loss: vanilla | wasserstein",
      [](RunConfig& c, const std::string& v) {
        try {
          c.train.loss_mode = parse_loss_mode(v);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      },
      [](const RunConfig& c) { return loss_mode_name(c.train.loss_mode); });
  BOOL_KEY("model", train, no_gan, "drop the discriminator and both adversarial losses");
  BOOL_KEY("model", train, no_lambda, "average the two directions instead of learned weights");
  BOOL_KEY("model", train, normalize_combination, "rescale the combination weights to sum to one");
  BOOL_KEY("model", train, non_saturating_g, "use -log D on generated steps as the generator's adversarial loss");

  SIZE_KEY("train", train, epochs, "maximum number of epochs");
  SIZE_KEY("train", train, batch_size, "samples per batch");
  REAL_KEY("train", train, lr_g, "generator learning rate (vanilla mode)");
  REAL_KEY("train", train, lr_d, "discriminator learning rate (vanilla mode)");
  REAL_KEY("train", train, wasserstein_lr, "learning rate of both networks in wasserstein mode");
  REAL_KEY("train", train, beta1, "first moment decay");
  REAL_KEY("train", train, beta2, "second moment decay");
  REAL_KEY("train", train, epsilon, "optimiser epsilon");
  U64_KEY("train", train, seed, "weight initialisation and shuffling seed");
  REAL_KEY("train", train, weight_r, "weight of the reconstruction loss");
  REAL_KEY("train", train, weight_c, "weight of the consistency loss");
  REAL_KEY("train", train, weight_g, "weight of the generator adversarial loss");
  REAL_KEY("train", train, clip, "critic weight clip (wasserstein mode)");
  SIZE_KEY("train", train, n_critic, "critic steps per generator step (wasserstein mode)");
  REAL_KEY("train", train, corruption_rate, "extra random target deletion applied to training inputs (0 = off)");
  SIZE_KEY("train", train, patience, "early-stopping patience in epochs");
  REAL_KEY("train", train, val_rate, "deletion rate of the validation scorer");
  U64_KEY("train", train, val_seed, "seed of the validation deletions");
  REAL_KEY("train", train, val_fraction, "share of train samples held out when there is no validation split");

  SIZE_KEY("eval", eval, folds, "number of cross-validation folds");
  U64_KEY("eval", eval, seed, "fold assignment and deletion-plan seed");
  SIZE_KEY("eval", eval, knn_k, "neighbours of the knn baseline");
  SIZE_KEY("eval", eval, mice_iter, "iterations of the mice baseline");
  REAL_KEY("eval", eval, rate, "deletion rate of the imputation setting");
  SIZE_KEY("eval", eval, obs_len, "observation window of the prediction setting");
  add("eval", "rates", "deletion rates of the missing-rate sweep",
      [](RunConfig& c, const std::string& v) {
        c.eval.rates.clear();
        for (const auto& item : split_list(v)) c.eval.rates.push_back(parse_real("rates", item));
      },
      [](const RunConfig& c) { return join(c.eval.rates); });
  add("eval", "obs_lengths", "observation windows of the window sweep",
      [](RunConfig& c, const std::string& v) {
        c.eval.obs_lengths.clear();
        for (const auto& item : split_list(v)) c.eval.obs_lengths.push_back(parse_unsigned<std::size_t>("obs_lengths", item));
      },
      [](const RunConfig& c) { return join(c.eval.obs_lengths); });
  add("eval", "imputers", "comma list from bigan, mean, knn, mice, interp",
      [](RunConfig& c, const std::string& v) { c.eval.imputers = v; }, [](const RunConfig& c) { return c.eval.imputers; });
  add("eval", "protocol", "kfold | split | auto (split when the data has a test split)",
      [](RunConfig& c, const std::string& v) {
        if (v != "kfold" && v != "split" && v != "auto") throw ConfigError("config key 'protocol': expected kfold, split or auto");
        c.eval.protocol = v;
      },
      [](const RunConfig& c) { return c.eval.protocol; });
  SIZE_KEY("eval", eval, threads, "worker threads (evaluation runs sequentially; kept for compatibility)");
#undef SIZE_KEY
#undef U64_KEY
#undef REAL_KEY
#undef BOOL_KEY
  return keys;
}

const ConfigKey& find_key(const std::string& name) {
  const auto& keys = config_keys();
  const auto dot = name.find('.');
  const ConfigKey* found = nullptr;
  for (const auto& k : keys) {
    const bool match = dot == std::string::npos ? k.key == name : k.qualified() == name;
    if (!match) continue;
    if (found) throw ConfigError("config key '" + name + "' is ambiguous; qualify it with its section");
    found = &k;
  }
  if (!found) throw ConfigError("unknown config key '" + name + "'");
  return *found;
}

}  // namespace

std::string ConfigKey::env_name() const {
  std::string out = "BIGAN_" + section + "_" + key;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

std::string RunConfig::text() const {
  std::string out, section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.key + " = " + k.get(*this) + "\n";
  }
  return out;
}

std::string default_config_text() { return RunConfig{}.text(); }

void apply_config_text(RunConfig& config, std::string_view text, bool allow_missing) {
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "train" && section != "eval") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a [section]");
    const std::string name = section + "." + trim(line.substr(0, eq));
    const ConfigKey* key = nullptr;
    try {
      key = &find_key(name);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    if (!seen.insert(name).second) throw ConfigError(where + "duplicate key '" + name + "'");
    key->set(config, trim(line.substr(eq + 1)));
  }
  if (allow_missing) return;
  const RunConfig defaults;
  for (const auto& k : config_keys()) {
    if (!seen.count(k.qualified())) {
      throw ConfigError("missing config key '" + k.qualified() + "' (default: " + k.get(defaults) + ")");
    }
  }
}

RunConfig load_config(const ConfigSources& sources) {
  RunConfig config;
  if (sources.file) {
    std::ifstream in(*sources.file);
    if (!in) throw ConfigError("cannot read config file '" + sources.file->string() + "'");
    std::stringstream body;
    body << in.rdbuf();
    apply_config_text(config, body.str(), sources.allow_missing);
  }
  for (const auto& k : config_keys()) {
    std::optional<std::string> value;
    if (sources.env) {
      value = sources.env(k.env_name());
    } else if (const char* raw = std::getenv(k.env_name().c_str())) {
      value = raw;
    }
    if (value) k.set(config, trim(*value));
  }
  for (const auto& o : sources.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' must be key=value");
    find_key(trim(o.substr(0, eq))).set(config, trim(o.substr(eq + 1)));
  }
  try {
    config.train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  if (config.eval.folds < 2) throw ConfigError("invalid configuration: eval.folds must be at least 2");
  if (config.eval.knn_k == 0 || config.eval.mice_iter == 0) {
    throw ConfigError("invalid configuration: eval.knn_k and eval.mice_iter must be positive");
  }
  return config;
}

}  // namespace bigan
