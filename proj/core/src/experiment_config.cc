// Copyright 2026 The lrdwm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lrdwm/experiment_config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lrdwm/errors.h"
#include "lrdwm/rng.h"

namespace lrdwm {
namespace {

using nlohmann::json;

constexpr char kFormat[] = "lrdwm-experiment";
constexpr int kVersion = 1;

// Reads fields of one JSON object and rejects the ones nobody asked for.
class FieldReader {
 public:
  FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(ErrorKind::kConfig, path_ + " must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      Fail(ErrorKind::kConfig, Path(key) + ": " + e.what());
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string Path(const char* key) const { return path_ + "." + key; }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        Fail(ErrorKind::kConfig, "unknown field " + path_ + "." + key);
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

void Require(bool ok, const std::string& what) {
  if (!ok) Fail(ErrorKind::kConfig, "invalid config: " + what);
}

}  // namespace

bool IsKnownMethod(std::string_view method) {
  return method == "lr" || method == "left" || method == "dmark" ||
         method == "none";
}

ExperimentConfig::ExperimentConfig() {
  for (int i = 1; i <= 32; ++i) robustness.delta_grid.push_back(0.25 * i);
}

void ExperimentConfig::Validate() const {
  Require(corpus.vocab_size >= 4, "corpus.vocab_size must be >= 4");
  Require(corpus.branching >= 1 && corpus.branching <= corpus.vocab_size,
          "corpus.branching must lie in [1, vocab_size]");
  Require(std::isfinite(corpus.zipf) && corpus.zipf >= 0.0,
          "corpus.zipf must be >= 0");
  Require(corpus.train_sequences >= 1, "corpus.train_sequences must be >= 1");
  Require(corpus.length >= 3, "corpus.length must be >= 3");
  Require(model.order == 2 || model.order == 3, "model.order must be 2 or 3");
  Require(model.smoothing > 0.0 && std::isfinite(model.smoothing),
          "model.smoothing must be > 0");
  Require(!methods.empty(), "methods must not be empty");
  for (const std::string& m : methods) {
    Require(IsKnownMethod(m), "unknown method '" + m + "'");
  }
  for (double d : deltas) {
    Require(d >= 0.0 && std::isfinite(d), "deltas must be finite and >= 0");
  }
  Require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  Require(gen.prompt_len >= 1, "gen.prompt_len must be >= 1");
  Require(gen.length >= 3, "gen.length must be >= 3");
  Require(gen.steps >= 1 && gen.steps <= gen.length,
          "gen.steps must lie in [1, gen.length]");
  Require(gen.block_len >= 1, "gen.block_len must be >= 1");
  Require(gen.temperature >= 0.0 && std::isfinite(gen.temperature),
          "gen.temperature must be >= 0");
  Require(corpus.length >= gen.prompt_len + gen.length + 1 ||
              !run_detectability,
          "corpus.length must exceed gen.prompt_len + gen.length so null "
          "sequences cover the scored window");
  Require(detect.count >= 1, "detect.count must be >= 1");
  Require(detect.null_count >= 1, "detect.null_count must be >= 1");
  Require(detect.calibration_count >= 2,
          "detect.calibration_count must be >= 2");
  Require(!detect.fprs.empty(), "detect.fprs must not be empty");
  bool primary_listed = false;
  for (double f : detect.fprs) {
    Require(f > 0.0 && f < 1.0, "detect.fprs entries must lie in (0, 1)");
    primary_listed |= f == detect.primary_fpr;
  }
  Require(primary_listed, "detect.primary_fpr must appear in detect.fprs");
  Require(detect.min_scored_len >= 1, "detect.min_scored_len must be >= 1");
  if (efficiency.enabled) {
    Require(!efficiency.vocab_sizes.empty(),
            "efficiency.vocab_sizes must not be empty");
    for (int v : efficiency.vocab_sizes) {
      Require(v >= 4, "efficiency.vocab_sizes entries must be >= 4");
    }
    Require(efficiency.sequences >= 1, "efficiency.sequences must be >= 1");
    Require(efficiency.warmup >= 0, "efficiency.warmup must be >= 0");
    Require(efficiency.length >= 3, "efficiency.length must be >= 3");
    Require(efficiency.steps >= 1 && efficiency.steps <= efficiency.length,
            "efficiency.steps must lie in [1, efficiency.length]");
    Require(efficiency.delta >= 0.0, "efficiency.delta must be >= 0");
    Require(efficiency.train_sequences >= 1,
            "efficiency.train_sequences must be >= 1");
    for (const std::string& m : efficiency.methods) {
      Require(IsKnownMethod(m), "unknown efficiency method '" + m + "'");
    }
  }
  if (robustness.enabled) {
    Require(robustness.count >= 1, "robustness.count must be >= 1");
    Require(robustness.delta >= 0.0, "robustness.delta must be >= 0");
    for (const AttackSpec& a : robustness.attacks) {
      Require(a.rate >= 0.0 && a.rate < 1.0,
              "robustness attack rates must lie in [0, 1)");
    }
  }
  if (!key_left.empty()) WatermarkKey::FromHex(key_left);
  if (!key_right.empty()) WatermarkKey::FromHex(key_right);
  Require(threads >= 0, "threads must be >= 0");
}

WatermarkKey ExperimentConfig::LeftKey() const {
  if (!key_left.empty()) return WatermarkKey::FromHex(key_left);
  return WatermarkKey{DeriveSeed(seed, "key-left")};
}

WatermarkKey ExperimentConfig::RightKey() const {
  if (!key_right.empty()) return WatermarkKey::FromHex(key_right);
  return WatermarkKey{DeriveSeed(seed, "key-right")};
}

std::string ExperimentConfig::ToJson() const {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["name"] = name;
  j["seed"] = seed;
  j["corpus"] = {{"vocab_size", corpus.vocab_size},
                 {"branching", corpus.branching},
                 {"zipf", corpus.zipf},
                 {"train_sequences", corpus.train_sequences},
                 {"length", corpus.length}};
  j["model"] = {{"order", model.order}, {"smoothing", model.smoothing}};
  j["methods"] = methods;
  j["deltas"] = deltas;
  j["gamma"] = gamma;
  j["gen"] = {{"prompt_len", gen.prompt_len},
              {"length", gen.length},
              {"steps", gen.steps},
              {"schedule", std::string(ScheduleKindName(gen.schedule))},
              {"block_len", gen.block_len},
              {"temperature", gen.temperature},
              {"forward", std::string(ForwardModeName(gen.forward))}};
  j["detect"] = {{"count", detect.count},
                 {"null_count", detect.null_count},
                 {"calibration_count", detect.calibration_count},
                 {"fprs", detect.fprs},
                 {"primary_fpr", detect.primary_fpr},
                 {"min_scored_len", detect.min_scored_len}};
  j["efficiency"] = {{"enabled", efficiency.enabled},
                     {"vocab_sizes", efficiency.vocab_sizes},
                     {"sequences", efficiency.sequences},
                     {"warmup", efficiency.warmup},
                     {"length", efficiency.length},
                     {"steps", efficiency.steps},
                     {"delta", efficiency.delta},
                     {"methods", efficiency.methods},
                     {"train_sequences", efficiency.train_sequences}};
  json attacks = json::array();
  for (const AttackSpec& a : robustness.attacks) {
    attacks.push_back(
        {{"kind", std::string(AttackKindName(a.kind))}, {"rate", a.rate}});
  }
  j["robustness"] = {{"enabled", robustness.enabled},
                     {"count", robustness.count},
                     {"delta", robustness.delta},
                     {"attacks", attacks},
                     {"delta_grid", robustness.delta_grid}};
  j["key_left"] = key_left;
  j["key_right"] = key_right;
  j["threads"] = threads;
  j["parallel_timing"] = parallel_timing;
  j["run_detectability"] = run_detectability;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::FromJson(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kConfig, std::string("config is not valid JSON: ") +
                                 e.what());
  }
  ExperimentConfig c;
  FieldReader root(j, "config");
  std::string format = kFormat;
  int version = kVersion;
  root.Get("format", format);
  root.Get("version", version);
  if (format != kFormat) {
    Fail(ErrorKind::kConfig, "config.format must be \"" +
                                 std::string(kFormat) + "\"");
  }
  if (version != kVersion) {
    Fail(ErrorKind::kConfig, "unsupported config version " +
                                 std::to_string(version));
  }
  root.Get("name", c.name);
  root.Get("seed", c.seed);
  root.Get("methods", c.methods);
  root.Get("deltas", c.deltas);
  root.Get("gamma", c.gamma);
  root.Get("key_left", c.key_left);
  root.Get("key_right", c.key_right);
  root.Get("threads", c.threads);
  root.Get("parallel_timing", c.parallel_timing);
  root.Get("run_detectability", c.run_detectability);
  if (const json* sub = root.Child("corpus")) {
    FieldReader r(*sub, "config.corpus");
    r.Get("vocab_size", c.corpus.vocab_size);
    r.Get("branching", c.corpus.branching);
    r.Get("zipf", c.corpus.zipf);
    r.Get("train_sequences", c.corpus.train_sequences);
    r.Get("length", c.corpus.length);
    r.Finish();
  }
  if (const json* sub = root.Child("model")) {
    FieldReader r(*sub, "config.model");
    r.Get("order", c.model.order);
    r.Get("smoothing", c.model.smoothing);
    r.Finish();
  }
  if (const json* sub = root.Child("gen")) {
    FieldReader r(*sub, "config.gen");
    std::string schedule(ScheduleKindName(c.gen.schedule));
    std::string forward(ForwardModeName(c.gen.forward));
    r.Get("prompt_len", c.gen.prompt_len);
    r.Get("length", c.gen.length);
    r.Get("steps", c.gen.steps);
    r.Get("schedule", schedule);
    r.Get("block_len", c.gen.block_len);
    r.Get("temperature", c.gen.temperature);
    r.Get("forward", forward);
    r.Finish();
    c.gen.schedule = ParseScheduleKind(schedule);
    c.gen.forward = ParseForwardMode(forward);
  }
  if (const json* sub = root.Child("detect")) {
    FieldReader r(*sub, "config.detect");
    r.Get("count", c.detect.count);
    r.Get("null_count", c.detect.null_count);
    r.Get("calibration_count", c.detect.calibration_count);
    r.Get("fprs", c.detect.fprs);
    r.Get("primary_fpr", c.detect.primary_fpr);
    r.Get("min_scored_len", c.detect.min_scored_len);
    r.Finish();
  }
  if (const json* sub = root.Child("efficiency")) {
    FieldReader r(*sub, "config.efficiency");
    r.Get("enabled", c.efficiency.enabled);
    r.Get("vocab_sizes", c.efficiency.vocab_sizes);
    r.Get("sequences", c.efficiency.sequences);
    r.Get("warmup", c.efficiency.warmup);
    r.Get("length", c.efficiency.length);
    r.Get("steps", c.efficiency.steps);
    r.Get("delta", c.efficiency.delta);
    r.Get("methods", c.efficiency.methods);
    r.Get("train_sequences", c.efficiency.train_sequences);
    r.Finish();
  }
  if (const json* sub = root.Child("robustness")) {
    FieldReader r(*sub, "config.robustness");
    r.Get("enabled", c.robustness.enabled);
    r.Get("count", c.robustness.count);
    r.Get("delta", c.robustness.delta);
    r.Get("delta_grid", c.robustness.delta_grid);
    if (const json* attacks = r.Child("attacks")) {
      if (!attacks->is_array()) {
        Fail(ErrorKind::kConfig, "config.robustness.attacks must be an array");
      }
      c.robustness.attacks.clear();
      for (const json& a : *attacks) {
        FieldReader ar(a, "config.robustness.attacks[]");
        std::string kind = "delete";
        AttackSpec spec;
        ar.Get("kind", kind);
        ar.Get("rate", spec.rate);
        ar.Finish();
        spec.kind = ParseAttackKind(kind);
        c.robustness.attacks.push_back(spec);
      }
    }
    r.Finish();
  }
  root.Finish();
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kResource, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

std::string ExperimentConfig::Digest() const {
  const std::string canonical = json::parse(ToJson()).dump();
  return WatermarkKey{Fnv1a64(canonical)}.ToHex();
}

}  // namespace lrdwm
