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

#include "lrdwm/baselines.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "lrdwm/errors.h"
#include "lrdwm/green_mask.h"
#include "lrdwm/rng.h"

namespace lrdwm {

LeftOnlyInjector::LeftOnlyInjector(WatermarkKey key, double delta,
                                   const Vocabulary& vocab, double gamma)
    : key_(key), delta_(delta), gamma_(gamma), vocab_(vocab) {
  InjectorConfig{key, key, delta, gamma}.Check();
}

BiasReport LeftOnlyInjector::Apply(std::span<const double> raw,
                                   const SequenceState& state, int pos,
                                   std::span<double> out) const {
  CheckInjectionTarget(raw, state, pos, vocab_);
  std::copy(raw.begin(), raw.end(), out.begin());
  BiasReport report;
  report.delta = delta_;
  if (const TokenId left = RevealedRealToken(state, pos - 1, vocab_);
      left >= 0) {
    const GreenMask mask = ComputeGreenMask(left, key_, vocab_, gamma_);
    AddMaskBias(mask, delta_, out);
    report.left_active = true;
    report.left_mask_digest = mask.Digest();
  }
  return report;
}

std::size_t LeftOnlyInjector::ByteSize() const {
  const auto v = static_cast<std::size_t>(vocab_.size());
  return sizeof(*this) + ((v + 63) / 64) * sizeof(std::uint64_t) +
         v * sizeof(std::uint32_t) + v * sizeof(double);
}

std::size_t InverseTableBytes(int vocab_size) {
  const auto v = static_cast<std::size_t>(vocab_size);
  return v * ((v + 63) / 64) * sizeof(std::uint64_t);
}

InverseTable::InverseTable(WatermarkKey key, const Vocabulary& vocab,
                           double gamma)
    : key_(key), size_(vocab.size()) {
  if (size_ > kMaxInverseTableVocab) {
    Fail(ErrorKind::kResource,
         "inverse table for |V| = " + std::to_string(size_) + " needs " +
             std::to_string(InverseTableBytes(size_)) +
             " bytes; the limit is |V| <= " +
             std::to_string(kMaxInverseTableVocab));
  }
  words_per_row_ = (static_cast<std::size_t>(size_) + 63) / 64;
  words_.assign(static_cast<std::size_t>(size_) * words_per_row_, 0);
  for (TokenId v = 0; v < size_; ++v) {
    const GreenMask mask = ComputeGreenMask(v, key, vocab, gamma);
    const auto words = mask.words();
    const std::size_t col_word = static_cast<std::size_t>(v) >> 6;
    const std::uint64_t col_bit = std::uint64_t{1}
                                  << (static_cast<unsigned>(v) & 63);
    for (std::size_t w = 0; w < words.size(); ++w) {
      std::uint64_t bits = words[w];
      while (bits) {
        const auto u = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        words_[u * words_per_row_ + col_word] |= col_bit;
        bits &= bits - 1;
      }
    }
  }
}

int InverseTable::RowCount(TokenId u) const {
  int n = 0;
  for (std::uint64_t w : Row(u)) n += std::popcount(w);
  return n;
}

std::size_t InverseTable::ByteSize() const {
  return sizeof(*this) + words_.size() * sizeof(std::uint64_t);
}

DmarkStyleInjector::DmarkStyleInjector(WatermarkKey key, double delta,
                                       const InverseTable& table,
                                       const Vocabulary& vocab, double gamma,
                                       bool bias_left)
    : key_(key),
      delta_(delta),
      gamma_(gamma),
      bias_left_(bias_left),
      table_(table),
      vocab_(vocab) {
  InjectorConfig{key, key, delta, gamma}.Check();
  if (table.key() != key) {
    Fail(ErrorKind::kConfig, "inverse table was built for a different key");
  }
  if (table.vocab_size() != vocab.size()) {
    Fail(ErrorKind::kConfig, "inverse table vocabulary size mismatch");
  }
}

BiasReport DmarkStyleInjector::Apply(std::span<const double> raw,
                                     const SequenceState& state, int pos,
                                     std::span<double> out) const {
  CheckInjectionTarget(raw, state, pos, vocab_);
  std::copy(raw.begin(), raw.end(), out.begin());
  BiasReport report;
  report.delta = delta_;
  if (const TokenId left = RevealedRealToken(state, pos - 1, vocab_);
      bias_left_ && left >= 0) {
    const GreenMask mask = ComputeGreenMask(left, key_, vocab_, gamma_);
    AddMaskBias(mask, delta_, out);
    report.left_active = true;
    report.left_mask_digest = mask.Digest();
  }
  if (const TokenId right = RevealedRealToken(state, pos + 1, vocab_);
      right >= 0) {
    const auto row = table_.Row(right);
    for (std::size_t w = 0; w < row.size(); ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        out[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))] +=
            delta_;
        bits &= bits - 1;
      }
    }
    report.right_active = true;
    report.right_mask_digest = Fnv1a64(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(row.data()),
        row.size() * sizeof(std::uint64_t)));
  }
  return report;
}

std::size_t DmarkStyleInjector::ByteSize() const {
  const auto v = static_cast<std::size_t>(vocab_.size());
  return sizeof(*this) + table_.ByteSize() +
         ((v + 63) / 64) * sizeof(std::uint64_t) + v * sizeof(std::uint32_t) +
         v * sizeof(double);
}

namespace {

template <typename GreenFn>
KgwResult KgwCount(std::span<const TokenId> tokens, const Vocabulary& vocab,
                   double gamma, int start, GreenFn green) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    Fail(ErrorKind::kConfig, "gamma must lie in (0, 1)");
  }
  KgwResult r;
  for (std::size_t i = static_cast<std::size_t>(std::max(start, 1));
       i < tokens.size(); ++i) {
    if (!vocab.IsReal(tokens[i - 1]) || !vocab.IsReal(tokens[i])) continue;
    ++r.scored_len;
    if (green(tokens[i - 1], tokens[i])) ++r.green_count;
  }
  if (r.scored_len > 0) {
    const double t = r.scored_len;
    r.z = (static_cast<double>(r.green_count) - gamma * t) /
          std::sqrt(t * gamma * (1.0 - gamma));
  }
  return r;
}

}  // namespace

KgwResult KgwDetect(std::span<const TokenId> tokens, WatermarkKey key,
                    const Vocabulary& vocab, double gamma, int start) {
  return KgwCount(tokens, vocab, gamma, start, [&](TokenId prev, TokenId cur) {
    return ComputeGreenMask(prev, key, vocab, gamma).Test(cur);
  });
}

KgwScorer::KgwScorer(WatermarkKey key, const Vocabulary& vocab, double gamma)
    : gamma_(gamma), vocab_(vocab), table_(key, vocab, gamma) {}

KgwResult KgwScorer::Score(std::span<const TokenId> tokens, int start) const {
  return KgwCount(tokens, vocab_, gamma_, start,
                  [this](TokenId prev, TokenId cur) {
                    return table_.ForContext(prev).Test(cur);
                  });
}

}  // namespace lrdwm
