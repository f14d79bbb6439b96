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

#ifndef LRDWM_GREEN_MASK_H_
#define LRDWM_GREEN_MASK_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

inline constexpr double kDefaultGamma = 0.5;

// Bit vector over the real-token ids of a vocabulary; bit v set means token v
// is green. Immutable once built.
class GreenMask {
 public:
  // All-zero mask: the "no constraint" value used when a neighbor is absent.
  static GreenMask Empty(const Vocabulary& vocab);

  int size() const { return size_; }
  int Count() const;
  bool IsEmpty() const { return Count() == 0; }

  // Throws kDomain for token ids outside [0, size()).
  bool Contains(TokenId token) const;
  // No range check.
  bool Test(TokenId token) const {
    return (words_[static_cast<std::size_t>(token) >> 6] >>
            (static_cast<unsigned>(token) & 63)) &
           1U;
  }

  std::span<const std::uint64_t> words() const { return words_; }

  // FNV-1a over the little-endian bytes of the bit vector.
  std::uint64_t Digest() const;

  // ceil(size/8) bytes, byte b holds tokens 8b..8b+7 with token 8b in the
  // least significant bit; two lowercase hex digits per byte.
  std::string ToHex() const;
  static GreenMask FromHex(std::string_view hex, int size);

  std::size_t ByteSize() const { return words_.size() * sizeof(std::uint64_t); }

  friend bool operator==(const GreenMask&, const GreenMask&) = default;

 private:
  friend GreenMask ComputeGreenMask(TokenId, WatermarkKey, const Vocabulary&,
                                    double);
  explicit GreenMask(int size);

  void Set(TokenId token) {
    words_[static_cast<std::size_t>(token) >> 6] |=
        std::uint64_t{1} << (static_cast<unsigned>(token) & 63);
  }

  int size_ = 0;
  std::vector<std::uint64_t> words_;
};

// floor(gamma * |V|). Throws kConfig unless gamma is in (0, 1).
int GreenCount(int vocab_size, double gamma);

// Seed of the pseudorandom permutation for (key, context).
std::uint64_t MaskSeed(WatermarkKey key, TokenId context);

// Keyed green list conditioned on one context token: a SplitMix64-driven
// partial Fisher-Yates shuffle of [0, |V|), green = first floor(gamma*|V|)
// entries. Exactly floor(gamma*|V|) bits are set. Throws kDomain if the
// context is not a real token and kConfig for gamma outside (0, 1).
GreenMask ComputeGreenMask(TokenId context, WatermarkKey key,
                           const Vocabulary& vocab,
                           double gamma = kDefaultGamma);

inline GreenMask EmptyMask(const Vocabulary& vocab) {
  return GreenMask::Empty(vocab);
}

inline bool IsGreen(const GreenMask& mask, TokenId token) {
  return mask.Contains(token);
}

// Masks for every context token under one key, computed eagerly. Costs
// |V|^2 bits; meant for batch scoring, not for generation.
class GreenListTable {
 public:
  GreenListTable(WatermarkKey key, const Vocabulary& vocab,
                 double gamma = kDefaultGamma);

  const GreenMask& ForContext(TokenId context) const;
  WatermarkKey key() const { return key_; }
  std::size_t ByteSize() const;

 private:
  WatermarkKey key_;
  std::vector<GreenMask> masks_;
};

}  // namespace lrdwm

#endif  // LRDWM_GREEN_MASK_H_
