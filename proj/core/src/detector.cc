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

#include "lrdwm/detector.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "lrdwm/errors.h"
#include "lrdwm/log.h"
#include "lrdwm/rng.h"

namespace lrdwm {
namespace {

using nlohmann::json;

constexpr double kFprMatchTolerance = 1e-12;

void CheckFpr(double fpr) {
  if (!(fpr > 0.0 && fpr < 1.0)) {
    Fail(ErrorKind::kConfig,
         "false-positive rate must lie in (0, 1), got " + std::to_string(fpr));
  }
}

bool SameFpr(double a, double b) {
  return std::abs(a - b) <= kFprMatchTolerance * std::max(1.0, std::abs(b));
}

std::uint64_t CorpusDigest(const Corpus& corpus) {
  std::uint64_t h = Fnv1a64(std::string_view{});
  for (const TokenSequence& seq : corpus) {
    h = Fnv1a64(std::span<const unsigned char>(
                    reinterpret_cast<const unsigned char*>(seq.data()),
                    seq.size() * sizeof(TokenId)),
                h);
    const std::uint32_t sep = 0xFFFFFFFFU;
    h = Fnv1a64(std::span<const unsigned char>(
                    reinterpret_cast<const unsigned char*>(&sep), sizeof(sep)),
                h);
  }
  return h;
}

int Median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v.empty() ? 0 : v[v.size() / 2];
}

}  // namespace

TokenScorer::TokenScorer(const InjectorConfig& config, const Vocabulary& vocab,
                         bool precompute)
    : config_(config), vocab_(vocab) {
  config_.Check();
  if (precompute) {
    left_ = std::make_unique<GreenListTable>(config_.key_left, vocab_,
                                             config_.gamma);
    right_ = std::make_unique<GreenListTable>(config_.key_right, vocab_,
                                              config_.gamma);
  }
}

bool TokenScorer::Green(WatermarkKey key, const GreenListTable* table,
                        TokenId context, TokenId token) const {
  if (table) return table->ForContext(context).Test(token);
  return ComputeGreenMask(context, key, vocab_, config_.gamma).Test(token);
}

std::vector<TokenScore> TokenScorer::Score(
    std::span<const TokenId> tokens) const {
  if (tokens.size() < 3) {
    Fail(ErrorKind::kInput, "scoring needs at least 3 tokens, got " +
                                std::to_string(tokens.size()));
  }
  std::vector<TokenScore> scores;
  scores.reserve(tokens.size() - 2);
  for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
    TokenScore s;
    s.pos = static_cast<int>(i);
    const TokenId prev = tokens[i - 1];
    const TokenId cur = tokens[i];
    const TokenId next = tokens[i + 1];
    if (vocab_.IsReal(cur)) {
      if (vocab_.IsReal(prev)) {
        ++s.defined_sides;
        s.m_left = Green(config_.key_left, left_.get(), prev, cur);
      }
      if (vocab_.IsReal(next)) {
        ++s.defined_sides;
        s.m_right = Green(config_.key_right, right_.get(), next, cur);
      }
    }
    s.value = static_cast<int>(s.m_left) + static_cast<int>(s.m_right) - 1;
    scores.push_back(s);
  }
  return scores;
}

ScoreSummary TokenScorer::Summarize(std::span<const TokenId> tokens) const {
  ScoreSummary summary;
  if (tokens.size() < 3) return summary;
  for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
    const TokenId prev = tokens[i - 1];
    const TokenId cur = tokens[i];
    const TokenId next = tokens[i + 1];
    if (!vocab_.IsReal(prev) || !vocab_.IsReal(cur) || !vocab_.IsReal(next)) {
      continue;
    }
    const int s = static_cast<int>(Green(config_.key_left, left_.get(), prev,
                                         cur)) +
                  static_cast<int>(Green(config_.key_right, right_.get(), next,
                                         cur)) -
                  1;
    summary.sum += s;
    summary.sum_squares += s * s;
    ++summary.count;
  }
  return summary;
}

std::vector<TokenScore> ScoreTokens(std::span<const TokenId> tokens,
                                    const InjectorConfig& config,
                                    const Vocabulary& vocab) {
  return TokenScorer(config, vocab, /*precompute=*/false).Score(tokens);
}

double ZFromSummary(const ScoreSummary& summary, double sigma2,
                    double null_mean) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    Fail(ErrorKind::kConfig,
         "score variance must be positive, got " + std::to_string(sigma2));
  }
  if (summary.count <= 0) {
    Fail(ErrorKind::kInput, "no scored tokens");
  }
  const double t = summary.count;
  return (static_cast<double>(summary.sum) - t * null_mean) /
         (std::sqrt(sigma2) * std::sqrt(t));
}

double ZStatistic(std::span<const TokenScore> scores, double sigma2,
                  double null_mean) {
  ScoreSummary summary;
  for (const TokenScore& s : scores) {
    if (!s.counted()) continue;
    summary.sum += s.value;
    ++summary.count;
  }
  return ZFromSummary(summary, sigma2, null_mean);
}

double ZStatistic(std::span<const int> scores, double sigma2,
                  double null_mean) {
  ScoreSummary summary;
  for (int s : scores) summary.sum += s;
  summary.count = static_cast<int>(scores.size());
  return ZFromSummary(summary, sigma2, null_mean);
}

double EmpiricalThreshold(std::vector<double> values, double fpr) {
  CheckFpr(fpr);
  if (values.empty()) Fail(ErrorKind::kData, "no null statistics");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil((1.0 - fpr) * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

double GaussianThreshold(double fpr) {
  CheckFpr(fpr);
  const boost::math::normal_distribution<double> normal(0.0, 1.0);
  return boost::math::quantile(boost::math::complement(normal, fpr));
}

std::uint64_t KeyDigest(const InjectorConfig& config) {
  return Mix64(Mix64(config.key_left.value ^ 0x6c6566742d6b6579ULL) ^
               config.key_right.value);
}

bool NullCalibration::HasFpr(double fpr) const {
  if (tables.empty()) return false;
  return std::any_of(
      tables.front().thresholds.begin(), tables.front().thresholds.end(),
      [fpr](const ThresholdEntry& e) { return SameFpr(e.fpr, fpr); });
}

double NullCalibration::Threshold(double fpr, int scored_len) const {
  CheckFpr(fpr);
  if (tables.empty()) Fail(ErrorKind::kConfig, "calibration has no tables");
  const ThresholdTable* best = &tables.front();
  for (const ThresholdTable& t : tables) {
    const int d = std::abs(t.scored_len - scored_len);
    const int best_d = std::abs(best->scored_len - scored_len);
    if (d < best_d || (d == best_d && t.scored_len > best->scored_len)) {
      best = &t;
    }
  }
  for (const ThresholdEntry& e : best->thresholds) {
    if (SameFpr(e.fpr, fpr)) return e.z;
  }
  Fail(ErrorKind::kConfig, "false-positive rate " + std::to_string(fpr) +
                               " was not calibrated");
}

std::string NullCalibration::ToJson() const {
  json j;
  j["format"] = "lrdwm-calibration";
  j["version"] = 1;
  j["gamma"] = gamma;
  j["vocab_size"] = vocab_size;
  j["key_digest"] = WatermarkKey{key_digest}.ToHex();
  j["sigma2"] = sigma2;
  j["null_mean"] = null_mean ? json(*null_mean) : json(nullptr);
  json tabs = json::array();
  for (const ThresholdTable& t : tables) {
    json entries = json::array();
    for (const ThresholdEntry& e : t.thresholds) {
      entries.push_back({{"fpr", e.fpr}, {"z", e.z}});
    }
    tabs.push_back({{"scored_len", t.scored_len}, {"thresholds", entries}});
  }
  j["tables"] = tabs;
  json gauss = json::array();
  for (const ThresholdEntry& e : gaussian_reference) {
    gauss.push_back({{"fpr", e.fpr}, {"z", e.z}});
  }
  j["gaussian_reference"] = gauss;
  j["corpus_meta"] = {{"size", corpus_meta.size},
                      {"min_length", corpus_meta.min_length},
                      {"max_length", corpus_meta.max_length},
                      {"source_digest",
                       WatermarkKey{corpus_meta.source_digest}.ToHex()}};
  j["warnings"] = warnings;
  return j.dump(2);
}

NullCalibration NullCalibration::FromJson(std::string_view text) {
  NullCalibration c;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "lrdwm-calibration") {
      Fail(ErrorKind::kData, "not a calibration file");
    }
    if (j.at("version") != 1) {
      Fail(ErrorKind::kData, "unsupported calibration version");
    }
    c.gamma = j.at("gamma").get<double>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.key_digest =
        WatermarkKey::FromHex(j.at("key_digest").get<std::string>()).value;
    c.sigma2 = j.at("sigma2").get<double>();
    if (!j.at("null_mean").is_null()) {
      c.null_mean = j.at("null_mean").get<double>();
    }
    for (const json& t : j.at("tables")) {
      ThresholdTable table;
      table.scored_len = t.at("scored_len").get<int>();
      for (const json& e : t.at("thresholds")) {
        table.thresholds.push_back(
            {e.at("fpr").get<double>(), e.at("z").get<double>()});
      }
      c.tables.push_back(std::move(table));
    }
    for (const json& e : j.at("gaussian_reference")) {
      c.gaussian_reference.push_back(
          {e.at("fpr").get<double>(), e.at("z").get<double>()});
    }
    const json& meta = j.at("corpus_meta");
    c.corpus_meta.size = meta.at("size").get<int>();
    c.corpus_meta.min_length = meta.at("min_length").get<int>();
    c.corpus_meta.max_length = meta.at("max_length").get<int>();
    c.corpus_meta.source_digest =
        WatermarkKey::FromHex(meta.at("source_digest").get<std::string>())
            .value;
    if (j.contains("warnings")) {
      c.warnings = j.at("warnings").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, std::string("malformed calibration: ") + e.what());
  }
  if (!(c.sigma2 > 0.0)) Fail(ErrorKind::kData, "calibration sigma2 <= 0");
  if (c.tables.empty()) Fail(ErrorKind::kData, "calibration has no tables");
  return c;
}

void NullCalibration::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kResource, "cannot write " + path);
  out << ToJson() << '\n';
  if (!out) Fail(ErrorKind::kResource, "failed writing " + path);
}

NullCalibration NullCalibration::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kResource, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

NullCalibration CalibrateNull(const Corpus& null_corpus,
                              const InjectorConfig& config,
                              const Vocabulary& vocab,
                              std::span<const double> fprs,
                              std::span<const int> lengths) {
  config.Check();
  if (fprs.empty()) Fail(ErrorKind::kConfig, "no false-positive rates given");
  for (double f : fprs) CheckFpr(f);
  if (null_corpus.empty()) Fail(ErrorKind::kData, "null corpus is empty");

  const TokenScorer scorer(config, vocab, /*precompute=*/true);
  NullCalibration cal;
  cal.gamma = config.gamma;
  cal.vocab_size = vocab.size();
  cal.key_digest = KeyDigest(config);

  // Pooled per-token moments over the full sequences.
  long long sum = 0;
  long long sum_sq = 0;
  long long count = 0;
  std::vector<int> scored_lengths;
  std::vector<int> seq_lengths;
  for (const TokenSequence& seq : null_corpus) {
    const ScoreSummary s = scorer.Summarize(seq);
    sum += s.sum;
    sum_sq += s.sum_squares;
    count += s.count;
    scored_lengths.push_back(s.count);
    seq_lengths.push_back(static_cast<int>(seq.size()));
  }
  if (count < 2) Fail(ErrorKind::kData, "null corpus has too few scored tokens");
  const double mean = static_cast<double>(sum) / static_cast<double>(count);
  cal.sigma2 = (static_cast<double>(sum_sq) -
                static_cast<double>(count) * mean * mean) /
               static_cast<double>(count - 1);
  if (!(cal.sigma2 > 0.0)) {
    Fail(ErrorKind::kData, "null corpus scores have zero variance");
  }
  const double null_mean_value =
      config.gamma == kDefaultGamma ? 0.0 : mean;
  if (config.gamma != kDefaultGamma) cal.null_mean = mean;

  auto thresholds_for = [&](std::span<const double> z) {
    std::vector<ThresholdEntry> out;
    for (double f : fprs) {
      out.push_back({f, EmpiricalThreshold({z.begin(), z.end()}, f)});
    }
    std::sort(out.begin(), out.end(),
              [](const ThresholdEntry& a, const ThresholdEntry& b) {
                return a.fpr > b.fpr;
              });
    return out;
  };

  std::vector<int> table_lengths(lengths.begin(), lengths.end());
  const bool truncate = !table_lengths.empty();
  if (!truncate) table_lengths.push_back(-1);
  for (int len : table_lengths) {
    std::vector<double> z;
    std::vector<int> used_scored;
    z.reserve(null_corpus.size());
    int skipped = 0;
    for (const TokenSequence& seq : null_corpus) {
      std::span<const TokenId> view(seq);
      if (truncate) {
        if (len < 3) Fail(ErrorKind::kConfig, "calibration length must be >= 3");
        if (static_cast<int>(seq.size()) < len) {
          ++skipped;
          continue;
        }
        view = view.first(static_cast<std::size_t>(len));
      }
      const ScoreSummary s = scorer.Summarize(view);
      if (s.count == 0) {
        ++skipped;
        continue;
      }
      z.push_back(ZFromSummary(s, cal.sigma2, null_mean_value));
      used_scored.push_back(s.count);
    }
    if (z.empty()) {
      Fail(ErrorKind::kData, "no null sequence long enough for length " +
                                 std::to_string(len));
    }
    if (skipped > 0) {
      const std::string msg = std::to_string(skipped) +
                              " null sequences skipped for length " +
                              std::to_string(len);
      cal.warnings.push_back(msg);
      Warn(msg);
    }
    ThresholdTable table;
    table.scored_len = Median(used_scored);
    table.thresholds = thresholds_for(z);
    cal.tables.push_back(std::move(table));
  }
  std::sort(cal.tables.begin(), cal.tables.end(),
            [](const ThresholdTable& a, const ThresholdTable& b) {
              return a.scored_len < b.scored_len;
            });

  for (double f : fprs) cal.gaussian_reference.push_back({f, GaussianThreshold(f)});
  std::sort(cal.gaussian_reference.begin(), cal.gaussian_reference.end(),
            [](const ThresholdEntry& a, const ThresholdEntry& b) {
              return a.fpr > b.fpr;
            });

  const double min_fpr = *std::min_element(fprs.begin(), fprs.end());
  if (static_cast<double>(null_corpus.size()) < 10.0 / min_fpr) {
    const std::string msg =
        "null corpus of " + std::to_string(null_corpus.size()) +
        " sequences is small for FPR " + std::to_string(min_fpr) +
        "; the empirical threshold rests on fewer than 10 exceedances";
    cal.warnings.push_back(msg);
    Warn(msg);
  }
  cal.corpus_meta.size = static_cast<int>(null_corpus.size());
  cal.corpus_meta.min_length =
      *std::min_element(seq_lengths.begin(), seq_lengths.end());
  cal.corpus_meta.max_length =
      *std::max_element(seq_lengths.begin(), seq_lengths.end());
  cal.corpus_meta.source_digest = CorpusDigest(null_corpus);
  return cal;
}

bool operator==(const DetectionResult& a, const DetectionResult& b) {
  auto same_double = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  if (a.status != b.status || !same_double(a.z, b.z) ||
      a.score_sum != b.score_sum || a.scored_len != b.scored_len ||
      a.decision != b.decision || !same_double(a.threshold_used, b.threshold_used) ||
      a.fpr != b.fpr || a.sigma2 != b.sigma2 ||
      a.per_token.size() != b.per_token.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.per_token.size(); ++i) {
    const TokenScore& x = a.per_token[i];
    const TokenScore& y = b.per_token[i];
    if (x.pos != y.pos || x.value != y.value || x.m_left != y.m_left ||
        x.m_right != y.m_right || x.defined_sides != y.defined_sides) {
      return false;
    }
  }
  return true;
}

DetectionResult Detect(std::span<const TokenId> tokens,
                       const InjectorConfig& config, const Vocabulary& vocab,
                       const NullCalibration& calibration, double fpr,
                       const DetectOptions& options) {
  config.Check();
  CheckFpr(fpr);
  if (calibration.key_digest != KeyDigest(config)) {
    Fail(ErrorKind::kConfig, "calibration was computed for different keys");
  }
  if (calibration.vocab_size != vocab.size()) {
    Fail(ErrorKind::kConfig,
         "calibration vocabulary size " +
             std::to_string(calibration.vocab_size) + " != " +
             std::to_string(vocab.size()));
  }
  if (calibration.gamma != config.gamma) {
    Fail(ErrorKind::kConfig, "calibration gamma differs from detector gamma");
  }
  if (config.gamma != kDefaultGamma && !calibration.null_mean) {
    Fail(ErrorKind::kConfig,
         "gamma != 0.5 requires a calibration with a custom null mean");
  }
  if (options.prompt_len < 0 ||
      options.prompt_len > static_cast<int>(tokens.size())) {
    Fail(ErrorKind::kInput, "prompt length outside the sequence");
  }
  // The last prompt token is kept as left context of the first generated one.
  const int offset = options.prompt_len > 0 ? options.prompt_len - 1 : 0;
  const std::span<const TokenId> span =
      tokens.subspan(static_cast<std::size_t>(offset));
  if (span.size() < 3) {
    Fail(ErrorKind::kInput, "scored span has " + std::to_string(span.size()) +
                                " tokens; at least 3 are needed");
  }
  const TokenScorer scorer(config, vocab, /*precompute=*/false);
  std::vector<TokenScore> scores = scorer.Score(span);
  for (TokenScore& s : scores) s.pos += offset;

  DetectionResult result;
  result.fpr = fpr;
  result.sigma2 = calibration.sigma2;
  for (const TokenScore& s : scores) {
    if (!s.counted()) continue;
    result.score_sum += s.value;
    ++result.scored_len;
  }
  if (options.keep_per_token) result.per_token = std::move(scores);
  result.threshold_used = calibration.Threshold(fpr, result.scored_len);
  if (result.scored_len > 0) {
    result.z = ZFromSummary({result.score_sum, result.scored_len, 0},
                            calibration.sigma2,
                            calibration.null_mean.value_or(0.0));
  }
  if (result.scored_len < options.min_scored_len) {
    result.status = DetectionStatus::kInsufficientLength;
    result.decision = false;
    return result;
  }
  result.decision = result.z > result.threshold_used;
  return result;
}

std::string DetectionResultToJson(const DetectionResult& result,
                                  bool include_per_token) {
  json j;
  j["status"] = result.status == DetectionStatus::kOk ? "ok"
                                                      : "insufficient_length";
  j["z"] = result.z;
  j["score_sum"] = result.score_sum;
  j["scored_len"] = result.scored_len;
  if (result.status == DetectionStatus::kOk) {
    j["decision"] = result.decision;
  } else {
    j["decision"] = nullptr;
  }
  j["threshold"] = result.threshold_used;
  j["threshold_used"] = result.threshold_used;
  j["fpr"] = result.fpr;
  j["sigma2"] = result.sigma2;
  if (include_per_token) {
    json per = json::array();
    for (const TokenScore& s : result.per_token) {
      per.push_back({{"pos", s.pos},
                     {"score", s.value},
                     {"m_left", s.m_left},
                     {"m_right", s.m_right},
                     {"defined_sides", s.defined_sides}});
    }
    j["per_token"] = per;
  }
  return j.dump();
}

}  // namespace lrdwm
