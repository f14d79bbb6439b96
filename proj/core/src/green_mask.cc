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

#include "lrdwm/green_mask.h"

#include <bit>
#include <cmath>
#include <numeric>

#include "lrdwm/errors.h"
#include "lrdwm/rng.h"

namespace lrdwm {

GreenMask::GreenMask(int size)
    : size_(size), words_((static_cast<std::size_t>(size) + 63) / 64, 0) {}

GreenMask GreenMask::Empty(const Vocabulary& vocab) {
  return GreenMask(vocab.size());
}

int GreenMask::Count() const {
  int n = 0;
  for (std::uint64_t w : words_) n += std::popcount(w);
  return n;
}

bool GreenMask::Contains(TokenId token) const {
  if (token < 0 || token >= size_) {
    Fail(ErrorKind::kDomain, "token " + std::to_string(token) +
                                 " outside mask range [0, " +
                                 std::to_string(size_) + ")");
  }
  return Test(token);
}

std::uint64_t GreenMask::Digest() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint64_t w : words_) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(w >> (8 * i));
    h = Fnv1a64(bytes, h);
  }
  return h;
}

std::string GreenMask::ToHex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t nbytes = (static_cast<std::size_t>(size_) + 7) / 8;
  std::string out;
  out.reserve(nbytes * 2);
  for (std::size_t b = 0; b < nbytes; ++b) {
    const auto byte =
        static_cast<unsigned>((words_[b / 8] >> (8 * (b % 8))) & 0xFF);
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0xF]);
  }
  return out;
}

GreenMask GreenMask::FromHex(std::string_view hex, int size) {
  const std::size_t nbytes = (static_cast<std::size_t>(size) + 7) / 8;
  if (size <= 0 || hex.size() != 2 * nbytes) {
    Fail(ErrorKind::kData, "mask hex has " + std::to_string(hex.size()) +
                               " digits, expected " +
                               std::to_string(2 * nbytes));
  }
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    Fail(ErrorKind::kData, "non-hex digit in mask");
  };
  GreenMask mask(size);
  for (std::size_t b = 0; b < nbytes; ++b) {
    const unsigned byte = (nibble(hex[2 * b]) << 4) | nibble(hex[2 * b + 1]);
    for (int bit = 0; bit < 8; ++bit) {
      const auto token = static_cast<TokenId>(8 * b + bit);
      if ((byte >> bit) & 1U) {
        if (token >= size) Fail(ErrorKind::kData, "mask bit beyond size");
        mask.Set(token);
      }
    }
  }
  return mask;
}

int GreenCount(int vocab_size, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    Fail(ErrorKind::kConfig,
         "gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
  return static_cast<int>(std::floor(gamma * vocab_size));
}

std::uint64_t MaskSeed(WatermarkKey key, TokenId context) {
  return Mix64(key.value ^
               Mix64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(
                         context)) +
                     kGoldenGamma));
}

GreenMask ComputeGreenMask(TokenId context, WatermarkKey key,
                           const Vocabulary& vocab, double gamma) {
  vocab.CheckReal(context);
  const int n = vocab.size();
  const int green = GreenCount(n, gamma);

  thread_local std::vector<std::uint32_t> perm;
  perm.resize(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0U);

  SplitMix64 gen(MaskSeed(key, context));
  GreenMask mask(n);
  for (int i = 0; i < green; ++i) {
    const auto j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(gen.Below(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
    mask.Set(static_cast<TokenId>(perm[static_cast<std::size_t>(i)]));
  }
  return mask;
}

GreenListTable::GreenListTable(WatermarkKey key, const Vocabulary& vocab,
                               double gamma)
    : key_(key) {
  masks_.reserve(static_cast<std::size_t>(vocab.size()));
  for (TokenId c = 0; c < vocab.size(); ++c) {
    masks_.push_back(ComputeGreenMask(c, key, vocab, gamma));
  }
}

const GreenMask& GreenListTable::ForContext(TokenId context) const {
  if (context < 0 || context >= static_cast<TokenId>(masks_.size())) {
    Fail(ErrorKind::kDomain,
         "context token " + std::to_string(context) + " outside vocabulary");
  }
  return masks_[static_cast<std::size_t>(context)];
}

std::size_t GreenListTable::ByteSize() const {
  std::size_t bytes = sizeof(*this);
  for (const auto& m : masks_) bytes += m.ByteSize();
  return bytes;
}

}  // namespace lrdwm
