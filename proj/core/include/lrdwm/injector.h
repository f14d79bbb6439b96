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

#ifndef LRDWM_INJECTOR_H_
#define LRDWM_INJECTOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lrdwm/green_mask.h"
#include "lrdwm/sequence_state.h"
#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

// Which neighbors of a position exist and are revealed.
enum class BoundaryMode { kBoth, kLeftOnly, kRightOnly, kNone };

std::string_view BoundaryModeName(BoundaryMode mode);

// Classifies pos by the revealed flags of pos-1 and pos+1. Prompt tokens are
// revealed, so the first generated position can still have a left neighbor.
BoundaryMode GetBoundaryMode(const SequenceState& state, int pos);

struct BiasReport {
  bool left_active = false;
  bool right_active = false;
  // GreenMask::Digest() of the applied masks, 0 when inactive.
  std::uint64_t left_mask_digest = 0;
  std::uint64_t right_mask_digest = 0;
  double delta = 0.0;
};

// Hook the decoder calls for every position it is about to finalize.
class LogitProcessor {
 public:
  virtual ~LogitProcessor() = default;

  virtual std::string_view name() const = 0;

  // Writes the biased logits for masked position `pos` into `out`
  // (same length as `raw`). Must not depend on anything but the revealed
  // tokens of `state`.
  virtual BiasReport Apply(std::span<const double> raw,
                           const SequenceState& state, int pos,
                           std::span<double> out) const = 0;

  // Bytes of tables plus per-call working memory owned by the watermark.
  virtual std::size_t ByteSize() const = 0;
};

struct InjectorConfig {
  WatermarkKey key_left;
  WatermarkKey key_right;
  double delta = 2.0;
  double gamma = kDefaultGamma;

  // Throws kConfig for delta < 0 (or non-finite) and gamma outside (0, 1).
  void Check() const;
  // Check() plus a warning when the two keys are equal.
  void Validate() const;
};

struct InjectionResult {
  std::vector<double> logits;
  BiasReport report;
};

// l'_v = l_v + delta*[v in G_L] + delta*[v in G_R], where G_L is the green
// list of the revealed left neighbor under key_left and G_R that of the
// revealed right neighbor under key_right. A missing, masked or special
// neighbor contributes the empty set. `logits` is not modified.
// Throws kUsage for out-of-range or already revealed positions and for a
// logit vector whose length is not |V|.
InjectionResult Inject(std::span<const double> logits,
                       const SequenceState& state, int pos,
                       const InjectorConfig& config, const Vocabulary& vocab);

// The two-sided watermark as a decoder hook.
class LrDwmInjector : public LogitProcessor {
 public:
  LrDwmInjector(const InjectorConfig& config, const Vocabulary& vocab);

  std::string_view name() const override { return "lr"; }
  BiasReport Apply(std::span<const double> raw, const SequenceState& state,
                   int pos, std::span<double> out) const override;
  std::size_t ByteSize() const override;

  const InjectorConfig& config() const { return config_; }

 private:
  InjectorConfig config_;
  Vocabulary vocab_;
};

// Shared precondition checks for injectors.
void CheckInjectionTarget(std::span<const double> raw,
                          const SequenceState& state, int pos,
                          const Vocabulary& vocab);

// Adds delta to out[v] for every set bit of mask.
void AddMaskBias(const GreenMask& mask, double delta, std::span<double> out);

// The token at pos if it is revealed and real, otherwise -1.
TokenId RevealedRealToken(const SequenceState& state, int pos,
                          const Vocabulary& vocab);

}  // namespace lrdwm

#endif  // LRDWM_INJECTOR_H_
