// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "bigan/config.hpp"
#include "bigan/errors.hpp"

using namespace bigan;

namespace {

std::string without_line(const std::string& text, const std::string& prefix) {
  std::string out, line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) continue;
    out += line + "\n";
  }
  return out;
}

std::string replace_line(const std::string& text, const std::string& prefix, const std::string& with) {
  std::string out, line;
  std::istringstream in(text);
  while (std::getline(in, line)) out += (line.rfind(prefix, 0) == 0 ? with : line) + "\n";
  return out;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& body) {
    path = std::filesystem::temp_directory_path() / ("bigan_config_" + std::to_string(std::rand()) + ".ini");
    std::ofstream(path) << body;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

auto no_env() {
  return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

}  // namespace

TEST_CASE("the default text parses back to the defaults") {
  RunConfig c;
  apply_config_text(c, default_config_text(), false);
  CHECK(c.text() == RunConfig{}.text());
  CHECK(c.train.hash() == TrainConfig{}.hash());
  for (const auto& k : config_keys()) {
    CHECK(default_config_text().find(k.key + " = " + k.get(RunConfig{})) != std::string::npos);
    CHECK(k.env_name().rfind("BIGAN_", 0) == 0);
  }
}

TEST_CASE("a missing key names the key and its default") {
  RunConfig c;
  const std::string text = without_line(default_config_text(), "hidden =");
  CHECK_THROWS_WITH_AS(apply_config_text(c, text, false),
                       doctest::Contains("missing config key 'model.hidden' (default: 32)"), ConfigError);
  RunConfig lenient;
  apply_config_text(lenient, text, true);
  CHECK(lenient.train.hidden == 32);
}

TEST_CASE("unknown keys, sections and duplicates are rejected with a line number") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(apply_config_text(c, "[model]\nwidth = 3\n", true), doctest::Contains("width"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_config_text(c, "[nope]\n", true), doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_config_text(c, "[model]\nhidden = 3\nhidden = 4\n", true), doctest::Contains("line 3"),
                       ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "[model]\nhidden = many\n", true), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "[model]\ncell = gru\n", true), ConfigError);
}

TEST_CASE("values of every kind are parsed") {
  RunConfig c;
  apply_config_text(c,
                    "# comment\n[model]\ncell = lstm\nno_gan = true\nloss_mode = wasserstein\n"
                    "[train]\nlr_g = 0.005\nseed = 9\n[eval]\nrates = 0.2,0.4\nimputers = mean,knn\n",
                    true);
  CHECK(c.train.cell == CellKind::lstm);
  CHECK(c.train.no_gan);
  CHECK(c.train.loss_mode == LossMode::wasserstein);
  CHECK(c.train.lr_g == 0.005);
  CHECK(c.train.seed == 9);
  CHECK(c.eval.rates == std::vector<double>{0.2, 0.4});
  CHECK(c.eval.imputers == "mean,knn");
}

TEST_CASE("flags beat the environment, which beats the file") {
  const TempFile file(replace_line(replace_line(default_config_text(), "hidden =", "hidden = 8"), "epochs =",
                                   "epochs = 7"));
  std::map<std::string, std::string> env = {{"BIGAN_MODEL_HIDDEN", "16"}};
  ConfigSources sources;
  sources.file = file.path;
  sources.env = [&](const std::string& name) -> std::optional<std::string> {
    const auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  RunConfig c = load_config(sources);
  CHECK(c.train.hidden == 16);
  CHECK(c.train.epochs == 7);

  sources.overrides = {"model.hidden=4", "batch_size=5"};
  c = load_config(sources);
  CHECK(c.train.hidden == 4);
  CHECK(c.train.batch_size == 5);

  sources.overrides = {"no.such=1"};
  CHECK_THROWS_AS(load_config(sources), ConfigError);
}

TEST_CASE("loaded configs are validated") {
  ConfigSources sources;
  sources.env = no_env();
  sources.overrides = {"train.batch_size=0"};
  CHECK_THROWS_AS(load_config(sources), ConfigError);
  sources.overrides = {};
  const RunConfig c = load_config(sources);
  CHECK(c.text() == RunConfig{}.text());
}
