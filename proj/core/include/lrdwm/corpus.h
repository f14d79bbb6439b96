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

#ifndef LRDWM_CORPUS_H_
#define LRDWM_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lrdwm/types.h"

namespace lrdwm {

struct MarkovSourceConfig {
  int vocab_size = 1024;
  // Distinct successors per token.
  int branching = 8;
  // Successor j (0-based rank) has weight 1 / (j + 1)^zipf.
  double zipf = 1.1;
  std::uint64_t seed = 1;
};

// Synthetic "human" text: a sparse first-order Markov chain with Zipf-shaped
// successor distributions. Stands in for natural text in every experiment.
class MarkovSource {
 public:
  explicit MarkovSource(const MarkovSourceConfig& config);

  const MarkovSourceConfig& config() const { return config_; }

  TokenSequence Sample(int length, std::uint64_t seed) const;

  // `count` sequences; sequence i uses DeriveSeed(stream_seed, "seq", i).
  Corpus SampleCorpus(int count, int length, std::uint64_t stream_seed) const;

  // True transition probability P(next | prev).
  double Transition(TokenId prev, TokenId next) const;

 private:
  MarkovSourceConfig config_;
  // Row-major successors/cumulative weights, `branching` entries per token.
  std::vector<TokenId> successors_;
  std::vector<double> cumulative_;
};

// Token files: one sequence per line, whitespace-separated decimal ids. Lines
// starting with '#' are comments; writers emit a "# lrdwm-tokens v1" header.
inline constexpr char kTokenFileHeader[] = "# lrdwm-tokens v1";

Corpus ReadTokens(std::istream& in);
Corpus ReadTokenFile(const std::string& path);
void WriteTokens(std::ostream& out, const Corpus& corpus);
void WriteTokenFile(const std::string& path, const Corpus& corpus);

}  // namespace lrdwm

#endif  // LRDWM_CORPUS_H_
