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

#include "lrdwm/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lrdwm/errors.h"
#include "lrdwm/rng.h"

namespace lrdwm {

MarkovSource::MarkovSource(const MarkovSourceConfig& config) : config_(config) {
  if (config.vocab_size < 4) {
    Fail(ErrorKind::kConfig, "Markov source needs at least 4 tokens");
  }
  if (config.branching < 1 || config.branching > config.vocab_size) {
    Fail(ErrorKind::kConfig, "branching must lie in [1, vocab_size]");
  }
  if (!(config.zipf >= 0.0)) {
    Fail(ErrorKind::kConfig, "zipf exponent must be nonnegative");
  }
  const auto v = static_cast<std::size_t>(config.vocab_size);
  const auto b = static_cast<std::size_t>(config.branching);

  std::vector<double> weights(b);
  double total = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    weights[j] = 1.0 / std::pow(static_cast<double>(j + 1), config.zipf);
    total += weights[j];
  }

  Rng rng(DeriveSeed(config.seed, "markov-structure"));
  std::vector<TokenId> pool(v);
  successors_.resize(v * b);
  cumulative_.resize(v * b);
  for (std::size_t t = 0; t < v; ++t) {
    std::iota(pool.begin(), pool.end(), 0);
    double acc = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t k = j + rng.Below(v - j);
      std::swap(pool[j], pool[k]);
      successors_[t * b + j] = pool[j];
      acc += weights[j] / total;
      cumulative_[t * b + j] = acc;
    }
    cumulative_[t * b + b - 1] = 1.0;
  }
}

TokenSequence MarkovSource::Sample(int length, std::uint64_t seed) const {
  if (length < 0) Fail(ErrorKind::kConfig, "negative sample length");
  TokenSequence out;
  out.reserve(static_cast<std::size_t>(length));
  if (length == 0) return out;
  Rng rng(seed);
  const auto b = static_cast<std::size_t>(config_.branching);
  auto current =
      static_cast<TokenId>(rng.Below(static_cast<std::uint64_t>(config_.vocab_size)));
  out.push_back(current);
  while (static_cast<int>(out.size()) < length) {
    const double u = rng.Uniform();
    const auto row = static_cast<std::size_t>(current) * b;
    const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(row);
    auto it = std::upper_bound(first, first + static_cast<std::ptrdiff_t>(b), u);
    if (it == first + static_cast<std::ptrdiff_t>(b)) --it;
    current = successors_[row + static_cast<std::size_t>(it - first)];
    out.push_back(current);
  }
  return out;
}

Corpus MarkovSource::SampleCorpus(int count, int length,
                                  std::uint64_t stream_seed) const {
  Corpus corpus;
  corpus.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    corpus.push_back(
        Sample(length, DeriveSeed(stream_seed, "seq", static_cast<std::uint64_t>(i))));
  }
  return corpus;
}

double MarkovSource::Transition(TokenId prev, TokenId next) const {
  const auto b = static_cast<std::size_t>(config_.branching);
  const auto row = static_cast<std::size_t>(prev) * b;
  double prob = 0.0;
  double below = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    const double c = cumulative_[row + j];
    if (successors_[row + j] == next) prob += c - below;
    below = c;
  }
  return prob;
}

Corpus ReadTokens(std::istream& in) {
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    TokenSequence seq;
    std::string field;
    while (fields >> field) {
      std::size_t used = 0;
      long long value = 0;
      try {
        value = std::stoll(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size() || value < 0 || value > INT32_MAX) {
        Fail(ErrorKind::kData, "line " + std::to_string(line_no) +
                                   ": bad token id '" + field + "'");
      }
      seq.push_back(static_cast<TokenId>(value));
    }
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

Corpus ReadTokenFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot open token file '" + path + "'");
  return ReadTokens(in);
}

void WriteTokens(std::ostream& out, const Corpus& corpus) {
  out << kTokenFileHeader << '\n';
  for (const auto& seq : corpus) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ' ';
      out << seq[i];
    }
    out << '\n';
  }
}

void WriteTokenFile(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kData, "cannot write token file '" + path + "'");
  WriteTokens(out, corpus);
  if (!out) Fail(ErrorKind::kData, "write failed for '" + path + "'");
}

}  // namespace lrdwm
