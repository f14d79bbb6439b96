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

#ifndef LRDWM_BASE_MODEL_H_
#define LRDWM_BASE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrdwm/sequence_state.h"
#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

// Revealed neighborhood of a masked position; -1 marks an unavailable slot.
// left1/right1 are the immediate neighbors, left2/right2 the next ones out
// (used only by order-3 models, and only when the inner slot is available).
struct NgramContext {
  TokenId left2 = -1;
  TokenId left1 = -1;
  TokenId right1 = -1;
  TokenId right2 = -1;
};

// Bidirectional n-gram denoiser. At a masked position the candidate scores
// combine in log space:
//   both neighbors:  log P(v | left) + log P(v | right) - log P(v)
//   one neighbor:    log P(v | that side)
//   none:            log P(v)
// and are then log-normalized, so exp(logits) sums to 1. For a first-order
// Markov source the two-sided case is the exact conditional
// P(v | l, r) ∝ P(v | l) P(r | v). Probabilities use additive smoothing.
// Immutable after construction; safe to share across threads.
class BaseModel {
 public:
  static BaseModel Train(const Corpus& corpus, int vocab_size, int order = 2,
                         double smoothing = 0.1);

  int vocab_size() const { return vocab_size_; }
  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  std::uint64_t token_count() const { return total_; }

  // Context for a masked position; special/unrevealed neighbors are -1.
  NgramContext ContextAt(const SequenceState& state, int pos) const;

  // Logits (length |V|, real tokens only) for a masked generation position.
  // Throws kUsage if pos is in the prompt, revealed, or out of range.
  std::vector<double> BaseLogits(const SequenceState& state, int pos) const;
  void BaseLogitsInto(const SequenceState& state, int pos,
                      std::span<double> out) const;
  // Scalar lookup; the MASK id and any other special id map to -infinity.
  double Logit(const SequenceState& state, int pos, TokenId token) const;

  void ContextLogits(const NgramContext& context, std::span<double> out) const;

  // Left-to-right log P(next | history), for perplexity. Uses the last
  // order-1 tokens of history.
  double ForwardLogProb(std::span<const TokenId> history, TokenId next) const;

  // Unsmoothed counts, exposed for oracles.
  std::uint64_t UnigramCount(TokenId v) const;
  std::uint64_t BigramCount(TokenId a, TokenId b) const;

  std::size_t ByteSize() const;

  std::string ToJson() const;
  static BaseModel FromJson(std::string_view text);
  void Save(const std::string& path) const;
  static BaseModel Load(const std::string& path);

 private:
  struct Entry {
    TokenId token;
    std::uint32_t count;
  };
  // Sparse rows: row r spans entries[offsets[r], offsets[r+1]).
  struct SparseRows {
    std::vector<std::uint32_t> offsets;
    std::vector<Entry> entries;
    std::vector<std::uint64_t> totals;

    std::span<const Entry> Row(std::size_t r) const {
      return std::span<const Entry>(entries).subspan(
          offsets[r], offsets[r + 1] - offsets[r]);
    }
    std::size_t ByteSize() const;
  };

  BaseModel(int vocab_size, int order, double smoothing);

  static void Check(int vocab_size, int order, double smoothing);
  void Build(std::vector<std::uint64_t> unigram,
             std::vector<std::uint64_t> bigram_keys,
             std::vector<std::uint32_t> bigram_counts,
             std::vector<std::uint64_t> trigram_keys,
             std::vector<std::uint32_t> trigram_counts);

  // Accumulates log P(v | side) - offset into out (dense, then sparse).
  void AddSide(const SparseRows& rows, std::size_t row, double weight,
               std::span<double> out) const;
  const SparseRows* TrigramLeft(TokenId a, TokenId b, std::size_t* row) const;
  const SparseRows* TrigramRight(TokenId r1, TokenId r2,
                                 std::size_t* row) const;

  int vocab_size_;
  int order_;
  double smoothing_;
  double log_smoothing_;
  std::uint64_t total_ = 0;

  std::vector<std::uint64_t> unigram_;
  std::vector<double> unigram_log_;  // log P(v)
  SparseRows next_;                  // row a: successors b with c(a, b)
  SparseRows prev_;                  // row b: predecessors a with c(a, b)
  SparseRows tri_next_;              // row (a, b): successors v
  SparseRows tri_prev_;              // row (r1, r2): predecessors v
  std::unordered_map<std::uint64_t, std::uint32_t> tri_next_index_;
  std::unordered_map<std::uint64_t, std::uint32_t> tri_prev_index_;
};

// Index of the largest logit; values within kTieTolerance of the maximum
// count as tied and the lowest index wins.
inline constexpr double kTieTolerance = 1e-9;
TokenId Argmax(std::span<const double> logits);

// log(sum(exp(x))) computed stably.
double LogSumExp(std::span<const double> logits);

}  // namespace lrdwm

#endif  // LRDWM_BASE_MODEL_H_
