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

#include "lrdwm/base_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "lrdwm/errors.h"

namespace lrdwm {
namespace {

constexpr int kMaxVocab = 1 << 21;
constexpr int kModelFormatVersion = 1;

std::uint64_t PackPair(std::uint64_t a, std::uint64_t b) { return (a << 32) | b; }

std::uint64_t PackTriple(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return (a << 42) | (b << 21) | c;
}

// Sorted unique keys with run counts.
void CountRuns(std::vector<std::uint64_t>& keys,
               std::vector<std::uint32_t>* counts) {
  std::sort(keys.begin(), keys.end());
  std::size_t out = 0;
  counts->clear();
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    keys[out++] = keys[i];
    counts->push_back(static_cast<std::uint32_t>(j - i));
    i = j;
  }
  keys.resize(out);
}

}  // namespace

std::size_t BaseModel::SparseRows::ByteSize() const {
  return offsets.capacity() * sizeof(std::uint32_t) +
         entries.capacity() * sizeof(Entry) +
         totals.capacity() * sizeof(std::uint64_t);
}

BaseModel::BaseModel(int vocab_size, int order, double smoothing)
    : vocab_size_(vocab_size),
      order_(order),
      smoothing_(smoothing),
      log_smoothing_(std::log(smoothing)) {}

void BaseModel::Check(int vocab_size, int order, double smoothing) {
  if (vocab_size < 4 || vocab_size > kMaxVocab) {
    Fail(ErrorKind::kConfig, "vocab size must lie in [4, 2^21]");
  }
  if (order != 2 && order != 3) {
    Fail(ErrorKind::kConfig, "n-gram order must be 2 or 3");
  }
  if (!(smoothing > 0.0) || !std::isfinite(smoothing)) {
    Fail(ErrorKind::kConfig, "smoothing must be a positive finite number");
  }
}

BaseModel BaseModel::Train(const Corpus& corpus, int vocab_size, int order,
                           double smoothing) {
  Check(vocab_size, order, smoothing);
  std::vector<std::uint64_t> unigram(static_cast<std::size_t>(vocab_size), 0);
  std::vector<std::uint64_t> bigrams;
  std::vector<std::uint64_t> trigrams;
  std::uint64_t tokens = 0;
  for (const auto& seq : corpus) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const TokenId t = seq[i];
      if (t < 0 || t >= vocab_size) {
        Fail(ErrorKind::kDomain, "corpus token " + std::to_string(t) +
                                     " outside vocabulary of size " +
                                     std::to_string(vocab_size));
      }
      ++unigram[static_cast<std::size_t>(t)];
      ++tokens;
      if (i >= 1) {
        bigrams.push_back(PackPair(static_cast<std::uint64_t>(seq[i - 1]),
                                   static_cast<std::uint64_t>(t)));
      }
      if (order == 3 && i >= 2) {
        trigrams.push_back(PackTriple(static_cast<std::uint64_t>(seq[i - 2]),
                                      static_cast<std::uint64_t>(seq[i - 1]),
                                      static_cast<std::uint64_t>(t)));
      }
    }
  }
  if (tokens == 0) Fail(ErrorKind::kData, "training corpus is empty");

  std::vector<std::uint32_t> bigram_counts;
  std::vector<std::uint32_t> trigram_counts;
  CountRuns(bigrams, &bigram_counts);
  CountRuns(trigrams, &trigram_counts);

  BaseModel model(vocab_size, order, smoothing);
  model.Build(std::move(unigram), std::move(bigrams), std::move(bigram_counts),
              std::move(trigrams), std::move(trigram_counts));
  return model;
}

void BaseModel::Build(std::vector<std::uint64_t> unigram,
                      std::vector<std::uint64_t> bigram_keys,
                      std::vector<std::uint32_t> bigram_counts,
                      std::vector<std::uint64_t> trigram_keys,
                      std::vector<std::uint32_t> trigram_counts) {
  const auto v = static_cast<std::size_t>(vocab_size_);
  unigram_ = std::move(unigram);
  total_ = 0;
  for (auto c : unigram_) total_ += c;
  if (total_ == 0) Fail(ErrorKind::kData, "model has no unigram counts");

  const double log_norm = std::log(static_cast<double>(total_) +
                                   smoothing_ * static_cast<double>(v));
  unigram_log_.resize(v);
  for (std::size_t i = 0; i < v; ++i) {
    unigram_log_[i] =
        std::log(static_cast<double>(unigram_[i]) + smoothing_) - log_norm;
  }

  struct Triple {
    std::uint64_t row;
    TokenId token;
    std::uint32_t count;
  };
  // Dense rows indexed directly by token id.
  auto dense = [v](std::vector<Triple> items) {
    std::sort(items.begin(), items.end(), [](const Triple& a, const Triple& b) {
      return a.row != b.row ? a.row < b.row : a.token < b.token;
    });
    SparseRows rows;
    rows.offsets.assign(v + 1, 0);
    rows.totals.assign(v, 0);
    rows.entries.reserve(items.size());
    for (const auto& it : items) {
      ++rows.offsets[it.row + 1];
      rows.totals[it.row] += it.count;
      rows.entries.push_back(Entry{it.token, it.count});
    }
    for (std::size_t r = 0; r < v; ++r) rows.offsets[r + 1] += rows.offsets[r];
    return rows;
  };
  // Rows keyed by an arbitrary 64-bit context, indexed through a hash map.
  auto sparse = [](std::vector<Triple> items,
                   std::unordered_map<std::uint64_t, std::uint32_t>* index) {
    std::sort(items.begin(), items.end(), [](const Triple& a, const Triple& b) {
      return a.row != b.row ? a.row < b.row : a.token < b.token;
    });
    SparseRows rows;
    rows.offsets.push_back(0);
    index->clear();
    for (std::size_t i = 0; i < items.size();) {
      const std::uint64_t key = items[i].row;
      (*index)[key] = static_cast<std::uint32_t>(rows.totals.size());
      std::uint64_t total = 0;
      for (; i < items.size() && items[i].row == key; ++i) {
        rows.entries.push_back(Entry{items[i].token, items[i].count});
        total += items[i].count;
      }
      rows.totals.push_back(total);
      rows.offsets.push_back(static_cast<std::uint32_t>(rows.entries.size()));
    }
    return rows;
  };

  std::vector<Triple> fwd;
  std::vector<Triple> bwd;
  fwd.reserve(bigram_keys.size());
  bwd.reserve(bigram_keys.size());
  for (std::size_t i = 0; i < bigram_keys.size(); ++i) {
    const auto a = bigram_keys[i] >> 32;
    const auto b = bigram_keys[i] & 0xFFFFFFFFULL;
    if (a >= v || b >= v) Fail(ErrorKind::kData, "bigram id out of range");
    fwd.push_back(Triple{a, static_cast<TokenId>(b), bigram_counts[i]});
    bwd.push_back(Triple{b, static_cast<TokenId>(a), bigram_counts[i]});
  }
  next_ = dense(std::move(fwd));
  prev_ = dense(std::move(bwd));

  std::vector<Triple> tfwd;
  std::vector<Triple> tbwd;
  constexpr std::uint64_t kMask21 = (1ULL << 21) - 1;
  for (std::size_t i = 0; i < trigram_keys.size(); ++i) {
    const auto a = trigram_keys[i] >> 42;
    const auto b = (trigram_keys[i] >> 21) & kMask21;
    const auto c = trigram_keys[i] & kMask21;
    if (a >= v || b >= v || c >= v) {
      Fail(ErrorKind::kData, "trigram id out of range");
    }
    tfwd.push_back(Triple{PackPair(a, b), static_cast<TokenId>(c),
                          trigram_counts[i]});
    tbwd.push_back(Triple{PackPair(b, c), static_cast<TokenId>(a),
                          trigram_counts[i]});
  }
  tri_next_ = sparse(std::move(tfwd), &tri_next_index_);
  tri_prev_ = sparse(std::move(tbwd), &tri_prev_index_);
}

NgramContext BaseModel::ContextAt(const SequenceState& state, int pos) const {
  auto usable = [&](int p) -> TokenId {
    if (!state.InRange(p) || !state.revealed(p)) return -1;
    const TokenId t = state.token(p);
    return (t >= 0 && t < vocab_size_) ? t : -1;
  };
  NgramContext ctx;
  ctx.left1 = usable(pos - 1);
  ctx.right1 = usable(pos + 1);
  if (order_ >= 3) {
    if (ctx.left1 >= 0) ctx.left2 = usable(pos - 2);
    if (ctx.right1 >= 0) ctx.right2 = usable(pos + 2);
  }
  return ctx;
}

const BaseModel::SparseRows* BaseModel::TrigramLeft(TokenId a, TokenId b,
                                                    std::size_t* row) const {
  auto it = tri_next_index_.find(PackPair(static_cast<std::uint64_t>(a),
                                          static_cast<std::uint64_t>(b)));
  if (it == tri_next_index_.end()) return nullptr;
  *row = it->second;
  return &tri_next_;
}

const BaseModel::SparseRows* BaseModel::TrigramRight(TokenId r1, TokenId r2,
                                                     std::size_t* row) const {
  auto it = tri_prev_index_.find(PackPair(static_cast<std::uint64_t>(r1),
                                          static_cast<std::uint64_t>(r2)));
  if (it == tri_prev_index_.end()) return nullptr;
  *row = it->second;
  return &tri_prev_;
}

void BaseModel::AddSide(const SparseRows& rows, std::size_t row, double weight,
                        std::span<double> out) const {
  // log P(v | ctx) = log(c(ctx, v) + a) - log(N(ctx) + a|V|)
  const double log_norm =
      std::log(static_cast<double>(rows.totals[row]) +
               smoothing_ * static_cast<double>(vocab_size_));
  const double base = weight * (log_smoothing_ - log_norm);
  for (double& x : out) x += base;
  for (const Entry& e : rows.Row(row)) {
    out[static_cast<std::size_t>(e.token)] +=
        weight * (std::log(static_cast<double>(e.count) + smoothing_) -
                  log_smoothing_);
  }
}

void BaseModel::ContextLogits(const NgramContext& ctx,
                              std::span<double> out) const {
  if (static_cast<int>(out.size()) != vocab_size_) {
    Fail(ErrorKind::kUsage, "logit buffer has wrong length");
  }
  const bool left = ctx.left1 >= 0;
  const bool right = ctx.right1 >= 0;
  if (!left && !right) {
    std::copy(unigram_log_.begin(), unigram_log_.end(), out.begin());
  } else {
    if (left && right) {
      for (std::size_t v = 0; v < out.size(); ++v) out[v] = -unigram_log_[v];
    } else {
      std::fill(out.begin(), out.end(), 0.0);
    }
    if (left) {
      std::size_t row = static_cast<std::size_t>(ctx.left1);
      const SparseRows* rows = &next_;
      if (order_ >= 3 && ctx.left2 >= 0) {
        std::size_t tri_row = 0;
        if (const SparseRows* t = TrigramLeft(ctx.left2, ctx.left1, &tri_row)) {
          rows = t;
          row = tri_row;
        }
      }
      AddSide(*rows, row, 1.0, out);
    }
    if (right) {
      std::size_t row = static_cast<std::size_t>(ctx.right1);
      const SparseRows* rows = &prev_;
      if (order_ >= 3 && ctx.right2 >= 0) {
        std::size_t tri_row = 0;
        if (const SparseRows* t =
                TrigramRight(ctx.right1, ctx.right2, &tri_row)) {
          rows = t;
          row = tri_row;
        }
      }
      AddSide(*rows, row, 1.0, out);
    }
  }
  const double lse = LogSumExp(out);
  for (double& x : out) x -= lse;
}

void BaseModel::BaseLogitsInto(const SequenceState& state, int pos,
                               std::span<double> out) const {
  if (!state.InRange(pos)) {
    Fail(ErrorKind::kUsage, "position " + std::to_string(pos) +
                                " outside sequence of length " +
                                std::to_string(state.length()));
  }
  if (pos < state.prompt_len()) {
    Fail(ErrorKind::kUsage,
         "position " + std::to_string(pos) + " belongs to the prompt");
  }
  if (state.revealed(pos)) {
    Fail(ErrorKind::kUsage,
         "position " + std::to_string(pos) + " is already revealed");
  }
  ContextLogits(ContextAt(state, pos), out);
}

std::vector<double> BaseModel::BaseLogits(const SequenceState& state,
                                          int pos) const {
  std::vector<double> out(static_cast<std::size_t>(vocab_size_));
  BaseLogitsInto(state, pos, out);
  return out;
}

double BaseModel::Logit(const SequenceState& state, int pos,
                        TokenId token) const {
  const auto logits = BaseLogits(state, pos);
  if (token < 0 || token >= vocab_size_) {
    return -std::numeric_limits<double>::infinity();
  }
  return logits[static_cast<std::size_t>(token)];
}

double BaseModel::ForwardLogProb(std::span<const TokenId> history,
                                 TokenId next) const {
  if (next < 0 || next >= vocab_size_) {
    Fail(ErrorKind::kDomain, "token " + std::to_string(next) +
                                 " outside vocabulary");
  }
  const double a = smoothing_;
  const double av = smoothing_ * static_cast<double>(vocab_size_);
  auto lookup = [&](const SparseRows& rows, std::size_t row) {
    std::uint32_t c = 0;
    for (const Entry& e : rows.Row(row)) {
      if (e.token == next) c = e.count;
    }
    return std::log(static_cast<double>(c) + a) -
           std::log(static_cast<double>(rows.totals[row]) + av);
  };
  const std::size_t n = history.size();
  auto real = [&](TokenId t) { return t >= 0 && t < vocab_size_; };
  if (order_ >= 3 && n >= 2 && real(history[n - 2]) && real(history[n - 1])) {
    std::size_t row = 0;
    if (const SparseRows* t = TrigramLeft(history[n - 2], history[n - 1], &row)) {
      return lookup(*t, row);
    }
  }
  if (n >= 1 && real(history[n - 1])) {
    return lookup(next_, static_cast<std::size_t>(history[n - 1]));
  }
  return unigram_log_[static_cast<std::size_t>(next)];
}

std::uint64_t BaseModel::UnigramCount(TokenId v) const {
  if (v < 0 || v >= vocab_size_) return 0;
  return unigram_[static_cast<std::size_t>(v)];
}

std::uint64_t BaseModel::BigramCount(TokenId a, TokenId b) const {
  if (a < 0 || a >= vocab_size_) return 0;
  for (const Entry& e : next_.Row(static_cast<std::size_t>(a))) {
    if (e.token == b) return e.count;
  }
  return 0;
}

std::size_t BaseModel::ByteSize() const {
  return sizeof(*this) + unigram_.capacity() * sizeof(std::uint64_t) +
         unigram_log_.capacity() * sizeof(double) + next_.ByteSize() +
         prev_.ByteSize() + tri_next_.ByteSize() + tri_prev_.ByteSize() +
         (tri_next_index_.size() + tri_prev_index_.size()) *
             (sizeof(std::uint64_t) + sizeof(std::uint32_t) +
              2 * sizeof(void*));
}

std::string BaseModel::ToJson() const {
  nlohmann::json j;
  j["format"] = "lrdwm-model";
  j["version"] = kModelFormatVersion;
  j["order"] = order_;
  j["vocab_size"] = vocab_size_;
  j["smoothing"] = smoothing_;
  j["unigram"] = unigram_;
  auto bigrams = nlohmann::json::array();
  for (std::size_t a = 0; a < static_cast<std::size_t>(vocab_size_); ++a) {
    for (const Entry& e : next_.Row(a)) {
      bigrams.push_back({a, e.token, e.count});
    }
  }
  j["bigrams"] = std::move(bigrams);
  auto trigrams = nlohmann::json::array();
  std::vector<std::pair<std::uint64_t, std::uint32_t>> contexts(
      tri_next_index_.begin(), tri_next_index_.end());
  std::sort(contexts.begin(), contexts.end());
  for (const auto& [key, row] : contexts) {
    for (const Entry& e : tri_next_.Row(row)) {
      trigrams.push_back({key >> 32, key & 0xFFFFFFFFULL, e.token, e.count});
    }
  }
  j["trigrams"] = std::move(trigrams);
  return j.dump();
}

BaseModel BaseModel::FromJson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "lrdwm-model") {
      Fail(ErrorKind::kData, "not an lrdwm model file");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      Fail(ErrorKind::kData, "unsupported model version " +
                                 std::to_string(j.at("version").get<int>()));
    }
    const int vocab_size = j.at("vocab_size").get<int>();
    const int order = j.at("order").get<int>();
    const double smoothing = j.at("smoothing").get<double>();
    Check(vocab_size, order, smoothing);
    auto unigram = j.at("unigram").get<std::vector<std::uint64_t>>();
    if (unigram.size() != static_cast<std::size_t>(vocab_size)) {
      Fail(ErrorKind::kData, "unigram table has the wrong length");
    }
    std::vector<std::uint64_t> bkeys;
    std::vector<std::uint32_t> bcounts;
    for (const auto& row : j.at("bigrams")) {
      const auto a = row.at(0).get<std::uint64_t>();
      const auto b = row.at(1).get<std::uint64_t>();
      if (a >= static_cast<std::uint64_t>(vocab_size) ||
          b >= static_cast<std::uint64_t>(vocab_size)) {
        Fail(ErrorKind::kData, "bigram id out of range");
      }
      bkeys.push_back(PackPair(a, b));
      bcounts.push_back(row.at(2).get<std::uint32_t>());
    }
    std::vector<std::uint64_t> tkeys;
    std::vector<std::uint32_t> tcounts;
    for (const auto& row : j.at("trigrams")) {
      const auto a = row.at(0).get<std::uint64_t>();
      const auto b = row.at(1).get<std::uint64_t>();
      const auto c = row.at(2).get<std::uint64_t>();
      if (a >= static_cast<std::uint64_t>(vocab_size) ||
          b >= static_cast<std::uint64_t>(vocab_size) ||
          c >= static_cast<std::uint64_t>(vocab_size)) {
        Fail(ErrorKind::kData, "trigram id out of range");
      }
      tkeys.push_back(PackTriple(a, b, c));
      tcounts.push_back(row.at(3).get<std::uint32_t>());
    }
    BaseModel model(vocab_size, order, smoothing);
    model.Build(std::move(unigram), std::move(bkeys), std::move(bcounts),
                std::move(tkeys), std::move(tcounts));
    return model;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, std::string("malformed model file: ") + e.what());
  }
}

void BaseModel::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kData, "cannot write model file '" + path + "'");
  out << ToJson() << '\n';
}

BaseModel BaseModel::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

TokenId Argmax(std::span<const double> logits) {
  if (logits.empty()) Fail(ErrorKind::kUsage, "argmax of empty logits");
  double best = -std::numeric_limits<double>::infinity();
  for (double x : logits) best = std::max(best, x);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] >= best - kTieTolerance) return static_cast<TokenId>(i);
  }
  return 0;
}

double LogSumExp(std::span<const double> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : logits) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : logits) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace lrdwm
