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

#ifndef LRDWM_DECODER_H_
#define LRDWM_DECODER_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "lrdwm/base_model.h"
#include "lrdwm/injector.h"
#include "lrdwm/rng.h"
#include "lrdwm/schedule.h"
#include "lrdwm/sequence_state.h"

namespace lrdwm {

enum class ForwardMode {
  // Every step evaluates the denoiser at every masked position, as a
  // diffusion LM's full-sequence forward pass does. This is the cost model
  // used for efficiency measurements.
  kAllMasked,
  // Only positions about to be revealed are evaluated. Produces the same
  // output for predetermined schedules; confidence schedules always use the
  // full pass.
  kSelectedOnly,
};

std::string_view ForwardModeName(ForwardMode mode);
ForwardMode ParseForwardMode(std::string_view name);

struct DecodeOptions {
  // 0 selects greedy decoding (argmax, lowest index on ties).
  double temperature = 0.0;
  ForwardMode forward = ForwardMode::kAllMasked;
  // Store full raw and biased logit vectors in the audit trail.
  bool keep_logits = false;
  // Seeds the sampler; unused for greedy decoding.
  std::uint64_t seed = 0;
};

struct AuditEntry {
  int pos = 0;
  int step = 0;
  BoundaryMode mode = BoundaryMode::kNone;
  std::uint64_t raw_digest = 0;
  BiasReport bias;
  TokenId token = 0;
  std::vector<double> raw_logits;
  std::vector<double> biased_logits;
};

struct DecodeResult {
  SequenceState state;
  std::vector<AuditEntry> audit;  // in reveal order
  // Bytes of decoder-owned buffers (state, logit rows, scratch).
  std::size_t working_bytes = 0;
};

// Fully-masked diffusion decoding. At each schedule step the selected
// positions are decided from the state at the start of the step (base
// logits, optional watermark bias, sampling) and then revealed together.
// Throws kConfig for negative temperature or a schedule/prompt mismatch.
DecodeResult Decode(const BaseModel& model, std::span<const TokenId> prompt,
                    const Schedule& schedule, const DecodeOptions& options,
                    const LogitProcessor* processor = nullptr);

// Greedy (temperature 0) or softmax(logits / temperature) sampling.
TokenId SampleToken(std::span<const double> logits, double temperature,
                    Rng& rng);

// FNV-1a over the IEEE-754 bytes of a logit vector.
std::uint64_t LogitDigest(std::span<const double> logits);

// One JSON object per line: pos, step, mode, raw_digest, left_active,
// right_active, left_digest, right_digest, delta, token. Digests are
// 16-digit hex strings.
void WriteAuditJsonl(std::ostream& out, std::span<const AuditEntry> audit);

}  // namespace lrdwm

#endif  // LRDWM_DECODER_H_
