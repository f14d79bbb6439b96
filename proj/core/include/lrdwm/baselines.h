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

#ifndef LRDWM_BASELINES_H_
#define LRDWM_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lrdwm/injector.h"
#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

// KGW-style injection driven by the revealed left neighbor only.
class LeftOnlyInjector : public LogitProcessor {
 public:
  LeftOnlyInjector(WatermarkKey key, double delta, const Vocabulary& vocab,
                   double gamma = kDefaultGamma);

  std::string_view name() const override { return "left"; }
  BiasReport Apply(std::span<const double> raw, const SequenceState& state,
                   int pos, std::span<double> out) const override;
  std::size_t ByteSize() const override;

  WatermarkKey key() const { return key_; }

 private:
  WatermarkKey key_;
  double delta_;
  double gamma_;
  Vocabulary vocab_;
};

inline constexpr int kMaxInverseTableVocab = 16384;

// rows[u] = { v : u in G(v) } under a left-context key: the tokens v whose
// green list contains u. Built once per key.
class InverseTable {
 public:
  // Throws kResource when |V| exceeds kMaxInverseTableVocab.
  InverseTable(WatermarkKey key, const Vocabulary& vocab,
               double gamma = kDefaultGamma);

  WatermarkKey key() const { return key_; }
  int vocab_size() const { return size_; }
  bool Contains(TokenId u, TokenId v) const {
    return (Row(u)[static_cast<std::size_t>(v) >> 6] >>
            (static_cast<unsigned>(v) & 63)) &
           1U;
  }
  std::span<const std::uint64_t> Row(TokenId u) const {
    return std::span<const std::uint64_t>(words_).subspan(
        static_cast<std::size_t>(u) * words_per_row_, words_per_row_);
  }
  int RowCount(TokenId u) const;

  // |V| * ceil(|V| / 64) * 8 bytes plus bookkeeping.
  std::size_t ByteSize() const;

 private:
  WatermarkKey key_;
  int size_;
  std::size_t words_per_row_;
  std::vector<std::uint64_t> words_;
};

// Bit-matrix memory of an inverse table for |V| without building it.
std::size_t InverseTableBytes(int vocab_size);

// Inverse-table baseline. With a revealed right neighbor u, adds delta to
// every v with u in G(v), so the pair (v, u) tends to be green under the
// forward hash. Otherwise the logits pass through unchanged, unless
// `bias_left` also enables the ordinary left-context bias.
class DmarkStyleInjector : public LogitProcessor {
 public:
  // Throws kConfig when table.key() != key.
  DmarkStyleInjector(WatermarkKey key, double delta, const InverseTable& table,
                     const Vocabulary& vocab, double gamma = kDefaultGamma,
                     bool bias_left = false);

  std::string_view name() const override { return "dmark"; }
  BiasReport Apply(std::span<const double> raw, const SequenceState& state,
                   int pos, std::span<double> out) const override;
  std::size_t ByteSize() const override;

 private:
  WatermarkKey key_;
  double delta_;
  double gamma_;
  bool bias_left_;
  const InverseTable& table_;
  Vocabulary vocab_;
};

struct KgwResult {
  long long green_count = 0;
  int scored_len = 0;
  double z = 0.0;
};

// Left-context z-test: counts tokens green under their left neighbor,
// z = (count - gamma T) / sqrt(T gamma (1 - gamma)). Scores positions
// start..n-1 (start >= 1) whose token and left neighbor are real.
KgwResult KgwDetect(std::span<const TokenId> tokens, WatermarkKey key,
                    const Vocabulary& vocab, double gamma = kDefaultGamma,
                    int start = 1);

// Same statistic with precomputed green lists for batch scoring.
class KgwScorer {
 public:
  KgwScorer(WatermarkKey key, const Vocabulary& vocab,
            double gamma = kDefaultGamma);
  KgwResult Score(std::span<const TokenId> tokens, int start = 1) const;

 private:
  double gamma_;
  Vocabulary vocab_;
  GreenListTable table_;
};

}  // namespace lrdwm

#endif  // LRDWM_BASELINES_H_
