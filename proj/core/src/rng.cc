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

#include "lrdwm/rng.h"

#include <cstdio>
#include <string>

#include "lrdwm/errors.h"
#include "lrdwm/types.h"

namespace lrdwm {

std::uint64_t Rng::Below(std::uint64_t n) {
  if (n == 0) Fail(ErrorKind::kUsage, "Rng::Below(0)");
  unsigned __int128 m = static_cast<unsigned __int128>(Next()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(Next()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t Fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t Fnv1a64(std::string_view text) {
  return Fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view label,
                         std::uint64_t index) {
  return Mix64(parent ^ Mix64(Fnv1a64(label) + index * kGoldenGamma));
}

WatermarkKey WatermarkKey::FromHex(std::string_view hex) {
  if (hex.size() != 16) {
    Fail(ErrorKind::kConfig,
         "watermark key must be exactly 16 hex digits, got '" +
             std::string(hex) + "'");
  }
  std::uint64_t value = 0;
  for (char c : hex) {
    int digit;
    if (c >= '0' && c <= '9') {
      digit = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      digit = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      digit = c - 'A' + 10;
    } else {
      Fail(ErrorKind::kConfig,
           "watermark key has a non-hex digit: '" + std::string(hex) + "'");
    }
    value = (value << 4) | static_cast<std::uint64_t>(digit);
  }
  return WatermarkKey{value};
}

std::string WatermarkKey::ToHex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace lrdwm
