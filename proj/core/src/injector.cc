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

#include "lrdwm/injector.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "lrdwm/errors.h"
#include "lrdwm/log.h"

namespace lrdwm {

std::string_view BoundaryModeName(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::kBoth:
      return "both";
    case BoundaryMode::kLeftOnly:
      return "left-only";
    case BoundaryMode::kRightOnly:
      return "right-only";
    case BoundaryMode::kNone:
      return "none";
  }
  return "none";
}

BoundaryMode GetBoundaryMode(const SequenceState& state, int pos) {
  const bool left = state.InRange(pos - 1) && state.revealed(pos - 1);
  const bool right = state.InRange(pos + 1) && state.revealed(pos + 1);
  if (left && right) return BoundaryMode::kBoth;
  if (left) return BoundaryMode::kLeftOnly;
  if (right) return BoundaryMode::kRightOnly;
  return BoundaryMode::kNone;
}

void InjectorConfig::Check() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    Fail(ErrorKind::kConfig,
         "delta must be a finite nonnegative number, got " +
             std::to_string(delta));
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    Fail(ErrorKind::kConfig,
         "gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
}

void InjectorConfig::Validate() const {
  Check();
  if (key_left == key_right) {
    Warn("left and right watermark keys are equal; left/right signals will "
         "be correlated");
  }
}

void CheckInjectionTarget(std::span<const double> raw,
                          const SequenceState& state, int pos,
                          const Vocabulary& vocab) {
  if (!state.InRange(pos)) {
    Fail(ErrorKind::kUsage, "position " + std::to_string(pos) +
                                " outside sequence of length " +
                                std::to_string(state.length()));
  }
  if (state.revealed(pos)) {
    Fail(ErrorKind::kUsage,
         "position " + std::to_string(pos) + " is already revealed");
  }
  if (static_cast<int>(raw.size()) != vocab.size()) {
    Fail(ErrorKind::kUsage, "logit vector has length " +
                                std::to_string(raw.size()) + ", expected " +
                                std::to_string(vocab.size()));
  }
}

void AddMaskBias(const GreenMask& mask, double delta, std::span<double> out) {
  const auto words = mask.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      out[w * 64 + static_cast<std::size_t>(b)] += delta;
      bits &= bits - 1;
    }
  }
}

TokenId RevealedRealToken(const SequenceState& state, int pos,
                          const Vocabulary& vocab) {
  if (!state.InRange(pos) || !state.revealed(pos)) return -1;
  const TokenId t = state.token(pos);
  return vocab.IsReal(t) ? t : -1;
}

namespace {

BiasReport ApplyLrDwm(std::span<const double> raw, const SequenceState& state,
                      int pos, const InjectorConfig& config,
                      const Vocabulary& vocab, std::span<double> out) {
  CheckInjectionTarget(raw, state, pos, vocab);
  if (out.size() != raw.size()) {
    Fail(ErrorKind::kUsage, "output logit buffer has the wrong length");
  }
  std::copy(raw.begin(), raw.end(), out.begin());
  BiasReport report;
  report.delta = config.delta;
  if (const TokenId left = RevealedRealToken(state, pos - 1, vocab); left >= 0) {
    const GreenMask mask =
        ComputeGreenMask(left, config.key_left, vocab, config.gamma);
    AddMaskBias(mask, config.delta, out);
    report.left_active = true;
    report.left_mask_digest = mask.Digest();
  }
  if (const TokenId right = RevealedRealToken(state, pos + 1, vocab);
      right >= 0) {
    const GreenMask mask =
        ComputeGreenMask(right, config.key_right, vocab, config.gamma);
    AddMaskBias(mask, config.delta, out);
    report.right_active = true;
    report.right_mask_digest = mask.Digest();
  }
  return report;
}

}  // namespace

InjectionResult Inject(std::span<const double> logits,
                       const SequenceState& state, int pos,
                       const InjectorConfig& config, const Vocabulary& vocab) {
  config.Check();
  InjectionResult result;
  result.logits.resize(logits.size());
  result.report = ApplyLrDwm(logits, state, pos, config, vocab, result.logits);
  return result;
}

LrDwmInjector::LrDwmInjector(const InjectorConfig& config,
                             const Vocabulary& vocab)
    : config_(config), vocab_(vocab) {
  config_.Validate();
}

BiasReport LrDwmInjector::Apply(std::span<const double> raw,
                                const SequenceState& state, int pos,
                                std::span<double> out) const {
  return ApplyLrDwm(raw, state, pos, config_, vocab_, out);
}

std::size_t LrDwmInjector::ByteSize() const {
  // Two live masks, the permutation scratch and the biased logit buffer.
  const auto v = static_cast<std::size_t>(vocab_.size());
  return sizeof(*this) + 2 * ((v + 63) / 64) * sizeof(std::uint64_t) +
         v * sizeof(std::uint32_t) + v * sizeof(double);
}

}  // namespace lrdwm
