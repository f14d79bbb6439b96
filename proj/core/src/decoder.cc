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

#include "lrdwm/decoder.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "lrdwm/errors.h"

namespace lrdwm {
namespace {

constexpr double kConfidenceTieTolerance = 1e-12;

std::string Hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Picks `count` masked positions with the highest confidence; ties go to the
// lower position.
std::vector<int> TopConfident(const std::vector<int>& masked,
                              const std::vector<double>& confidence,
                              int count) {
  std::vector<int> chosen;
  std::vector<unsigned char> taken(masked.size(), 0);
  for (int k = 0; k < count; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < masked.size(); ++i) {
      if (!taken[i]) best = std::max(best, confidence[i]);
    }
    for (std::size_t i = 0; i < masked.size(); ++i) {
      if (!taken[i] && confidence[i] >= best - kConfidenceTieTolerance) {
        taken[i] = 1;
        chosen.push_back(masked[i]);
        break;
      }
    }
  }
  return chosen;
}

}  // namespace

std::string_view ForwardModeName(ForwardMode mode) {
  return mode == ForwardMode::kAllMasked ? "all" : "selected";
}

ForwardMode ParseForwardMode(std::string_view name) {
  if (name == "all") return ForwardMode::kAllMasked;
  if (name == "selected") return ForwardMode::kSelectedOnly;
  Fail(ErrorKind::kConfig, "unknown forward mode '" + std::string(name) +
                               "' (expected all or selected)");
}

std::uint64_t LogitDigest(std::span<const double> logits) {
  return Fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(logits.data()),
      logits.size() * sizeof(double)));
}

TokenId SampleToken(std::span<const double> logits, double temperature,
                    Rng& rng) {
  if (temperature < 0.0 || !std::isfinite(temperature)) {
    Fail(ErrorKind::kConfig, "temperature must be finite and >= 0");
  }
  if (temperature == 0.0) return Argmax(logits);
  double m = -std::numeric_limits<double>::infinity();
  for (double x : logits) m = std::max(m, x);
  double total = 0.0;
  for (double x : logits) total += std::exp((x - m) / temperature);
  const double u = rng.Uniform() * total;
  double acc = 0.0;
  TokenId last = 0;
  for (std::size_t v = 0; v < logits.size(); ++v) {
    const double p = std::exp((logits[v] - m) / temperature);
    if (p <= 0.0) continue;
    acc += p;
    last = static_cast<TokenId>(v);
    if (u < acc) return last;
  }
  return last;
}

DecodeResult Decode(const BaseModel& model, std::span<const TokenId> prompt,
                    const Schedule& schedule, const DecodeOptions& options,
                    const LogitProcessor* processor) {
  if (options.temperature < 0.0 || !std::isfinite(options.temperature)) {
    Fail(ErrorKind::kConfig, "temperature must be finite and >= 0, got " +
                                 std::to_string(options.temperature));
  }
  if (static_cast<int>(prompt.size()) != schedule.prompt_len()) {
    Fail(ErrorKind::kConfig, "prompt has " + std::to_string(prompt.size()) +
                                 " tokens but the schedule expects " +
                                 std::to_string(schedule.prompt_len()));
  }
  const Vocabulary vocab(model.vocab_size());
  for (TokenId t : prompt) {
    if (t == vocab.mask_id()) Fail(ErrorKind::kData, "prompt contains MASK");
  }
  const auto v = static_cast<std::size_t>(vocab.size());

  DecodeResult result{
      SequenceState(prompt, schedule.length() - schedule.prompt_len(), vocab),
      {},
      0};
  SequenceState& state = result.state;
  Rng rng(options.seed);

  const bool full_forward = options.forward == ForwardMode::kAllMasked ||
                            !schedule.predetermined();
  std::vector<double> scratch(v);
  std::vector<double> biased(processor ? v : 0);
  std::vector<std::vector<double>> rows;
  std::vector<int> masked;
  std::vector<double> confidence;
  std::size_t peak_rows = 0;

  struct Decision {
    int pos;
    TokenId token;
  };
  std::vector<Decision> decisions;

  for (int step = 0; step < schedule.steps(); ++step) {
    std::vector<int> selected;
    if (schedule.predetermined()) {
      selected = schedule.step_positions()[static_cast<std::size_t>(step)];
      std::sort(selected.begin(), selected.end());
    }
    rows.assign(selected.size(), {});

    if (full_forward) {
      masked.clear();
      confidence.clear();
      for (int p = schedule.prompt_len(); p < state.length(); ++p) {
        if (state.revealed(p)) continue;
        model.BaseLogitsInto(state, p, scratch);
        masked.push_back(p);
        confidence.push_back(
            std::exp(*std::max_element(scratch.begin(), scratch.end())));
        const auto it = std::lower_bound(selected.begin(), selected.end(), p);
        if (it != selected.end() && *it == p) {
          rows[static_cast<std::size_t>(it - selected.begin())] = scratch;
        }
      }
      if (!schedule.predetermined()) {
        const int count = schedule.step_counts()[static_cast<std::size_t>(step)];
        selected = TopConfident(masked, confidence, count);
        std::sort(selected.begin(), selected.end());
        rows.assign(selected.size(), {});
      }
    }
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (rows[i].empty()) {
        rows[i].resize(v);
        model.BaseLogitsInto(state, selected[i], rows[i]);
      }
    }
    peak_rows = std::max(peak_rows, rows.size());

    decisions.clear();
    for (std::size_t i = 0; i < selected.size(); ++i) {
      const int pos = selected[i];
      if (state.revealed(pos)) {
        Fail(ErrorKind::kUsage, "schedule revisits position " + std::to_string(pos));
      }
      const std::vector<double>& raw = rows[i];
      AuditEntry entry;
      entry.pos = pos;
      entry.step = step;
      entry.mode = GetBoundaryMode(state, pos);
      entry.raw_digest = LogitDigest(raw);
      std::span<const double> final_logits = raw;
      if (processor) {
        entry.bias = processor->Apply(raw, state, pos, biased);
        final_logits = biased;
      }
      entry.token = SampleToken(final_logits, options.temperature, rng);
      if (options.keep_logits) {
        entry.raw_logits = raw;
        entry.biased_logits.assign(final_logits.begin(), final_logits.end());
      }
      decisions.push_back(Decision{pos, entry.token});
      result.audit.push_back(std::move(entry));
    }
    for (const Decision& d : decisions) state.Reveal(d.pos, d.token);
  }
  if (!state.complete()) {
    Fail(ErrorKind::kConfig, "schedule left " +
                                 std::to_string(state.masked_count()) +
                                 " positions masked");
  }
  result.working_bytes = state.ByteSize() +
                         (peak_rows + 1 + (processor ? 1 : 0)) * v * sizeof(double) +
                         static_cast<std::size_t>(state.length()) *
                             (sizeof(int) + sizeof(double));
  return result;
}

void WriteAuditJsonl(std::ostream& out, std::span<const AuditEntry> audit) {
  for (const AuditEntry& e : audit) {
    nlohmann::json j;
    j["pos"] = e.pos;
    j["step"] = e.step;
    j["mode"] = std::string(BoundaryModeName(e.mode));
    j["raw_digest"] = Hex64(e.raw_digest);
    j["left_active"] = e.bias.left_active;
    j["right_active"] = e.bias.right_active;
    j["left_digest"] = Hex64(e.bias.left_mask_digest);
    j["right_digest"] = Hex64(e.bias.right_mask_digest);
    j["delta"] = e.bias.delta;
    j["token"] = e.token;
    out << j.dump() << '\n';
  }
}

}  // namespace lrdwm
