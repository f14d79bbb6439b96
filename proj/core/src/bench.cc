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

#include "lrdwm/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lrdwm/attacks.h"
#include "lrdwm/decoder.h"
#include "lrdwm/errors.h"
#include "lrdwm/log.h"
#include "lrdwm/parallel.h"
#include "lrdwm/rng.h"
#include "lrdwm/schedule.h"

namespace lrdwm {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double Millis(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

double Median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct PplStats {
  double geo_mean = kNaN;
  double sem = kNaN;
};

PplStats SummarizePpl(const std::vector<double>& ppl) {
  PplStats s;
  if (ppl.empty()) return s;
  double log_sum = 0.0;
  double sum = 0.0;
  for (double p : ppl) {
    log_sum += std::log(p);
    sum += p;
  }
  const double n = static_cast<double>(ppl.size());
  s.geo_mean = std::exp(log_sum / n);
  if (ppl.size() > 1) {
    const double mean = sum / n;
    double ss = 0.0;
    for (double p : ppl) ss += (p - mean) * (p - mean);
    s.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  } else {
    s.sem = 0.0;
  }
  return s;
}

void Note(std::vector<std::string>* warnings, const std::string& msg) {
  Warn(msg);
  if (warnings) warnings->push_back(msg);
}

std::string RateLabel(double rate) {
  std::ostringstream s;
  s << rate;
  return s.str();
}

ReportRow BaseRow(const World& world, std::string kind, std::string method) {
  ReportRow row;
  row.experiment = world.config.name;
  row.digest = world.config.Digest();
  row.kind = std::move(kind);
  row.method = std::move(method);
  row.schedule = std::string(ScheduleKindName(world.config.gen.schedule));
  row.vocab_size = world.vocab.size();
  return row;
}

// Continuation of `tokens` after an attack, with the last prompt token kept
// as left context.
TokenSequence AttackedWindow(std::span<const TokenId> tokens, int prompt_len,
                             const AttackSpec& attack, const Vocabulary& vocab,
                             std::uint64_t seed) {
  const auto continuation =
      tokens.subspan(static_cast<std::size_t>(prompt_len));
  TokenSequence attacked =
      ApplyAttack(attack.kind, continuation, attack.rate, vocab, seed);
  TokenSequence window;
  window.reserve(attacked.size() + 1);
  window.push_back(tokens[static_cast<std::size_t>(prompt_len - 1)]);
  window.insert(window.end(), attacked.begin(), attacked.end());
  return window;
}

int AttackedWindowLength(int gen_length, const AttackSpec& attack) {
  if (attack.kind == AttackKind::kSubstitute) return gen_length + 1;
  const int removed = static_cast<int>(
      std::floor(attack.rate * static_cast<double>(gen_length) + 1e-9));
  return gen_length - removed + 1;
}

struct DetectionBatch {
  double tpr = kNaN;
  double mean_z = kNaN;
  int kept = 0;
  std::vector<unsigned char> detected;
  std::vector<double> z;
};

}  // namespace

Corpus World::Sample(std::string_view label, int count, int length) const {
  return source.SampleCorpus(count, length, DeriveSeed(config.seed, label));
}

Corpus World::Prompts(int count) const {
  return Sample("prompts", count, config.gen.prompt_len);
}

World BuildWorld(const ExperimentConfig& config, int vocab_size,
                 int train_sequences) {
  config.Validate();
  const int v = vocab_size > 0 ? vocab_size : config.corpus.vocab_size;
  const int n = train_sequences > 0 ? train_sequences
                                    : config.corpus.train_sequences;
  MarkovSourceConfig source_config;
  source_config.vocab_size = v;
  source_config.branching = std::min(config.corpus.branching, v);
  source_config.zipf = config.corpus.zipf;
  source_config.seed = DeriveSeed(config.seed, "source");
  MarkovSource source(source_config);
  const Corpus train = source.SampleCorpus(n, config.corpus.length,
                                           DeriveSeed(config.seed, "train"));
  const Corpus held_out = source.SampleCorpus(
      n, config.corpus.length, DeriveSeed(config.seed, "oracle"));
  BaseModel model = BaseModel::Train(train, v, config.model.order,
                                     config.model.smoothing);
  BaseModel oracle = BaseModel::Train(held_out, v, config.model.order,
                                      config.model.smoothing);
  InjectorConfig keys;
  keys.key_left = config.LeftKey();
  keys.key_right = config.RightKey();
  keys.gamma = config.gamma;
  return World{config,           Vocabulary(v),     std::move(source),
               std::move(model), std::move(oracle), keys};
}

std::unique_ptr<LogitProcessor> MakeProcessor(std::string_view method,
                                              const InjectorConfig& keys,
                                              double delta,
                                              const Vocabulary& vocab,
                                              const InverseTable* table) {
  if (method == "none") return nullptr;
  if (method == "lr") {
    InjectorConfig c = keys;
    c.delta = delta;
    return std::make_unique<LrDwmInjector>(c, vocab);
  }
  if (method == "left") {
    return std::make_unique<LeftOnlyInjector>(keys.key_left, delta, vocab,
                                              keys.gamma);
  }
  if (method == "dmark") {
    if (!table) Fail(ErrorKind::kConfig, "dmark needs an inverse table");
    return std::make_unique<DmarkStyleInjector>(keys.key_left, delta, *table,
                                                vocab, keys.gamma);
  }
  Fail(ErrorKind::kConfig, "unknown method '" + std::string(method) + "'");
}

TokenSequence GenerateSequence(const World& world,
                               const LogitProcessor* processor,
                               std::span<const TokenId> prompt,
                               const GenSpec& gen, int index) {
  const int prompt_len = static_cast<int>(prompt.size());
  const Schedule schedule = MakeSchedule(
      gen.schedule, prompt_len + gen.length, prompt_len, gen.steps,
      gen.block_len,
      DeriveSeed(world.config.seed, "schedule", static_cast<std::uint64_t>(index)));
  DecodeOptions options;
  options.temperature = gen.temperature;
  options.forward = gen.forward;
  options.seed =
      DeriveSeed(world.config.seed, "sample", static_cast<std::uint64_t>(index));
  const DecodeResult result =
      Decode(world.model, prompt, schedule, options, processor);
  const auto tokens = result.state.tokens();
  return TokenSequence(tokens.begin(), tokens.end());
}

Corpus GenerateBatch(const World& world, const LogitProcessor* processor,
                     const Corpus& prompts, const GenSpec& gen, int threads) {
  Corpus out(prompts.size());
  ParallelFor(static_cast<int>(prompts.size()), threads, [&](int i) {
    out[static_cast<std::size_t>(i)] = GenerateSequence(
        world, processor, prompts[static_cast<std::size_t>(i)], gen, i);
  });
  return out;
}

std::span<const TokenId> ScoredWindow(std::span<const TokenId> tokens,
                                      int prompt_len) {
  const int offset = prompt_len > 0 ? prompt_len - 1 : 0;
  if (offset > static_cast<int>(tokens.size())) {
    Fail(ErrorKind::kInput, "prompt longer than the sequence");
  }
  return tokens.subspan(static_cast<std::size_t>(offset));
}

double SequencePerplexity(const BaseModel& oracle,
                          std::span<const TokenId> tokens, int start) {
  if (start < 1 || start >= static_cast<int>(tokens.size())) {
    Fail(ErrorKind::kInput, "perplexity needs 1 <= start < length");
  }
  double log_prob = 0.0;
  for (std::size_t i = static_cast<std::size_t>(start); i < tokens.size(); ++i) {
    log_prob += oracle.ForwardLogProb(tokens.first(i), tokens[i]);
  }
  const double n = static_cast<double>(tokens.size()) - start;
  return std::exp(-log_prob / n);
}

bool IsDegenerate(std::span<const TokenId> tokens) {
  if (tokens.empty()) return false;
  std::map<TokenId, int> counts;
  int best = 0;
  for (TokenId t : tokens) best = std::max(best, ++counts[t]);
  return 2 * best > static_cast<int>(tokens.size());
}

MethodDetector::MethodDetector(std::string_view method, const World& world,
                               const Corpus& null_windows,
                               std::span<const double> fprs,
                               std::span<const int> window_lengths,
                               int threads)
    : two_sided_(method == "lr" || method == "none"),
      gamma_(world.keys.gamma) {
  if (!IsKnownMethod(method)) {
    Fail(ErrorKind::kConfig, "unknown method '" + std::string(method) + "'");
  }
  if (two_sided_) {
    scorer_ = std::make_unique<TokenScorer>(world.keys, world.vocab,
                                            /*precompute=*/true);
    calibration_ =
        CalibrateNull(null_windows, world.keys, world.vocab, fprs,
                      window_lengths);
    return;
  }
  kgw_ = std::make_unique<KgwScorer>(world.keys.key_left, world.vocab,
                                     world.keys.gamma);
  calibration_.gamma = world.keys.gamma;
  calibration_.sigma2 = world.keys.gamma * (1.0 - world.keys.gamma);
  calibration_.vocab_size = world.vocab.size();
  calibration_.key_digest = KeyDigest(world.keys);
  for (int len : window_lengths) {
    std::vector<double> z(null_windows.size(), kNaN);
    std::vector<int> scored(null_windows.size(), 0);
    ParallelFor(static_cast<int>(null_windows.size()), threads, [&](int i) {
      const TokenSequence& seq = null_windows[static_cast<std::size_t>(i)];
      if (static_cast<int>(seq.size()) < len) return;
      const KgwResult r = kgw_->Score(
          std::span<const TokenId>(seq).first(static_cast<std::size_t>(len)));
      z[static_cast<std::size_t>(i)] = r.z;
      scored[static_cast<std::size_t>(i)] = r.scored_len;
    });
    std::vector<double> kept;
    for (double x : z) {
      if (!std::isnan(x)) kept.push_back(x);
    }
    if (kept.empty()) Fail(ErrorKind::kData, "null windows too short");
    ThresholdTable table;
    table.scored_len = len - 1;
    for (double f : fprs) table.thresholds.push_back({f, EmpiricalThreshold(kept, f)});
    calibration_.tables.push_back(std::move(table));
  }
  std::sort(calibration_.tables.begin(), calibration_.tables.end(),
            [](const ThresholdTable& a, const ThresholdTable& b) {
              return a.scored_len < b.scored_len;
            });
  for (double f : fprs) {
    calibration_.gaussian_reference.push_back({f, GaussianThreshold(f)});
  }
}

MethodDetector::Score MethodDetector::Evaluate(
    std::span<const TokenId> window) const {
  Score s;
  if (two_sided_) {
    const ScoreSummary summary = scorer_->Summarize(window);
    s.scored_len = summary.count;
    if (summary.count > 0) {
      s.z = ZFromSummary(summary, calibration_.sigma2,
                         calibration_.null_mean.value_or(0.0));
    }
  } else {
    const KgwResult r = kgw_->Score(window);
    s.scored_len = r.scored_len;
    s.z = r.z;
  }
  return s;
}

double MethodDetector::Threshold(double fpr, int scored_len) const {
  return calibration_.Threshold(fpr, scored_len);
}

bool MethodDetector::Decide(const Score& score, double fpr,
                            int min_scored_len) const {
  return score.scored_len >= min_scored_len &&
         score.z > Threshold(fpr, score.scored_len);
}

namespace {

DetectionBatch DetectBatch(const MethodDetector& detector, const Corpus& windows,
                           const std::vector<unsigned char>& keep, double fpr,
                           int min_scored_len, int threads) {
  DetectionBatch b;
  b.detected.assign(windows.size(), 0);
  b.z.assign(windows.size(), kNaN);
  ParallelFor(static_cast<int>(windows.size()), threads, [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    const MethodDetector::Score s = detector.Evaluate(windows[idx]);
    b.z[idx] = s.z;
    b.detected[idx] = detector.Decide(s, fpr, min_scored_len) ? 1 : 0;
  });
  int hits = 0;
  double z_sum = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!keep.empty() && !keep[i]) continue;
    ++b.kept;
    hits += b.detected[i];
    z_sum += b.z[i];
  }
  if (b.kept > 0) {
    b.tpr = static_cast<double>(hits) / b.kept;
    b.mean_z = z_sum / b.kept;
  }
  return b;
}

Corpus Windows(const Corpus& sequences, int prompt_len) {
  Corpus out;
  out.reserve(sequences.size());
  for (const TokenSequence& seq : sequences) {
    const auto w = ScoredWindow(seq, prompt_len);
    out.emplace_back(w.begin(), w.end());
  }
  return out;
}

Corpus Truncate(const Corpus& sequences, int length) {
  Corpus out;
  out.reserve(sequences.size());
  for (const TokenSequence& seq : sequences) {
    out.emplace_back(seq.begin(),
                     seq.begin() + std::min<std::size_t>(
                                       seq.size(), static_cast<std::size_t>(length)));
  }
  return out;
}

}  // namespace

std::vector<ReportRow> RunDetectability(const World& world,
                                        std::vector<TradeoffRow>* tradeoff,
                                        std::vector<std::string>* warnings) {
  const ExperimentConfig& cfg = world.config;
  const int threads = cfg.threads;
  const int window_len = cfg.gen.length + 1;
  const Corpus calib = world.Sample("null-calib", cfg.detect.calibration_count,
                                    cfg.corpus.length);
  const Corpus null_eval = Truncate(
      world.Sample("null-eval", cfg.detect.null_count, cfg.corpus.length),
      window_len);
  const Corpus prompts = world.Prompts(cfg.detect.count);
  const std::vector<int> lengths = {window_len};

  std::unique_ptr<InverseTable> table;
  std::vector<ReportRow> rows;
  std::map<std::string, std::unique_ptr<MethodDetector>> detectors;

  for (const std::string& method : cfg.methods) {
    const std::string family =
        (method == "lr" || method == "none") ? "two-sided" : "left-context";
    if (!detectors.count(family)) {
      detectors[family] = std::make_unique<MethodDetector>(
          method, world, calib, cfg.detect.fprs, lengths, threads);
    }
    const MethodDetector& detector = *detectors[family];
    if (method == "dmark" && !table) {
      table = std::make_unique<InverseTable>(world.keys.key_left, world.vocab,
                                             world.keys.gamma);
    }
    // Null sanity: empirical FPR on a disjoint null set.
    std::vector<DetectionBatch> null_batches;
    for (double fpr : cfg.detect.fprs) {
      null_batches.push_back(DetectBatch(detector, null_eval, {}, fpr,
                                         cfg.detect.min_scored_len, threads));
    }

    std::vector<double> deltas = cfg.deltas;
    if (method == "none") deltas = {0.0};
    std::vector<TradeoffRow> curve;
    for (double delta : deltas) {
      const auto processor =
          MakeProcessor(method, world.keys, delta, world.vocab, table.get());
      const Corpus generated =
          GenerateBatch(world, processor.get(), prompts, cfg.gen, threads);
      const Corpus windows = Windows(generated, cfg.gen.prompt_len);
      std::vector<unsigned char> keep(generated.size(), 1);
      std::vector<double> ppl;
      for (std::size_t i = 0; i < generated.size(); ++i) {
        const auto continuation = std::span<const TokenId>(generated[i]).subspan(
            static_cast<std::size_t>(cfg.gen.prompt_len));
        if (IsDegenerate(continuation)) {
          keep[i] = 0;
          continue;
        }
        ppl.push_back(
            SequencePerplexity(world.oracle, generated[i], cfg.gen.prompt_len));
      }
      const PplStats ppl_stats = SummarizePpl(ppl);
      for (std::size_t f = 0; f < cfg.detect.fprs.size(); ++f) {
        const double fpr = cfg.detect.fprs[f];
        const DetectionBatch batch = DetectBatch(
            detector, windows, keep, fpr, cfg.detect.min_scored_len, threads);
        ReportRow row = BaseRow(world, "detectability", method);
        row.delta = delta;
        row.n = static_cast<int>(generated.size());
        row.n_kept = batch.kept;
        row.fpr = fpr;
        row.threshold = detector.Threshold(fpr, cfg.gen.length - 1);
        row.tpr = batch.tpr;
        row.mean_z = batch.mean_z;
        row.mean_ppl = ppl_stats.geo_mean;
        row.ppl_sem = ppl_stats.sem;
        row.null_fpr = null_batches[f].tpr;
        row.null_n = null_batches[f].kept;
        row.null_ok = row.null_n < 2000 ||
                      (row.null_fpr >= 0.5 * fpr && row.null_fpr <= 2.0 * fpr);
        if (!row.null_ok) {
          Note(warnings, "null sanity check failed for " + method + " at FPR " +
                             RateLabel(fpr) + ": empirical " +
                             RateLabel(row.null_fpr));
        }
        if (row.n_kept < row.n) {
          Note(warnings, std::to_string(row.n - row.n_kept) + " of " +
                             std::to_string(row.n) +
                             " sequences dropped as degenerate (" + method +
                             ", delta " + RateLabel(delta) + ")");
        }
        if (fpr == cfg.detect.primary_fpr) {
          curve.push_back(TradeoffRow{method, "curve", kNaN, true, delta,
                                      batch.tpr, ppl_stats.geo_mean,
                                      ppl_stats.sem});
        }
        rows.push_back(std::move(row));
      }
    }
    if (tradeoff) {
      tradeoff->insert(tradeoff->end(), curve.begin(), curve.end());
      if (method == "none") continue;
      for (double target : {0.90, 0.99, 0.995}) {
        TradeoffRow t{method, "target", target, false, kNaN, kNaN, kNaN, kNaN};
        for (const TradeoffRow& c : curve) {  // deltas in config order
          if (c.tpr >= target && (!t.reached || c.delta < t.delta)) {
            t.reached = true;
            t.delta = c.delta;
            t.tpr = c.tpr;
            t.mean_ppl = c.mean_ppl;
            t.ppl_sem = c.ppl_sem;
          }
        }
        tradeoff->push_back(t);
      }
    }
  }
  return rows;
}

std::vector<ReportRow> RunEfficiency(const ExperimentConfig& config,
                                     std::vector<std::string>* warnings) {
  const EfficiencySpec& spec = config.efficiency;
  std::vector<ReportRow> rows;
  for (int vocab_size : spec.vocab_sizes) {
    const World world =
        BuildWorld(config, vocab_size, spec.train_sequences);
    GenSpec gen = config.gen;
    gen.length = spec.length;
    gen.steps = spec.steps;
    gen.forward = ForwardMode::kAllMasked;
    const int total = spec.warmup + spec.sequences;
    const Corpus prompts = world.Prompts(total);

    struct MethodState {
      std::string name;
      std::unique_ptr<InverseTable> table;
      double table_ms = kNaN;
      std::unique_ptr<LogitProcessor> processor;
      std::vector<double> times;
      std::size_t working_peak = 0;
    };
    std::vector<MethodState> methods;
    for (const std::string& m : spec.methods) {
      MethodState s;
      s.name = m;
      if (m == "dmark") {
        const auto t0 = Clock::now();
        s.table = std::make_unique<InverseTable>(world.keys.key_left,
                                                 world.vocab, world.keys.gamma);
        s.table_ms = Millis(Clock::now() - t0);
      }
      s.processor = MakeProcessor(m, world.keys, spec.delta, world.vocab,
                                  s.table.get());
      methods.push_back(std::move(s));
    }
    // Interleave methods per sequence so drift affects all alike.
    for (int i = 0; i < total; ++i) {
      const Schedule schedule = MakeSchedule(
          gen.schedule, gen.prompt_len + gen.length, gen.prompt_len, gen.steps,
          gen.block_len,
          DeriveSeed(config.seed, "schedule", static_cast<std::uint64_t>(i)));
      DecodeOptions options;
      options.temperature = gen.temperature;
      options.forward = gen.forward;
      options.seed = DeriveSeed(config.seed, "sample", static_cast<std::uint64_t>(i));
      for (MethodState& s : methods) {
        const auto t0 = Clock::now();
        const DecodeResult result =
            Decode(world.model, prompts[static_cast<std::size_t>(i)], schedule,
                   options, s.processor.get());
        const double ms = Millis(Clock::now() - t0);
        if (i >= spec.warmup) s.times.push_back(ms);
        s.working_peak = std::max(s.working_peak, result.working_bytes);
      }
    }
    const MethodState* baseline = nullptr;
    for (const MethodState& s : methods) {
      if (s.name == "none") baseline = &s;
    }
    std::vector<ReportRow> block;
    for (const MethodState& s : methods) {
      ReportRow row = BaseRow(world, "efficiency", s.name);
      row.delta = s.name == "none" ? 0.0 : spec.delta;
      row.n = static_cast<int>(s.times.size());
      row.n_kept = row.n;
      row.gen_time_ms = Median(s.times);
      row.peak_mem_bytes = world.model.ByteSize() + s.working_peak +
                           (s.processor ? s.processor->ByteSize() : 0);
      row.table_bytes = s.table ? s.table->ByteSize() : 0;
      row.table_build_ms = s.table_ms;
      block.push_back(row);
    }
    if (baseline) {
      const double base_ms = Median(baseline->times);
      const std::size_t base_mem =
          world.model.ByteSize() + baseline->working_peak;
      for (ReportRow& row : block) {
        row.time_ratio = row.gen_time_ms / base_ms;
        row.mem_overhead_bytes = static_cast<long long>(row.peak_mem_bytes) -
                                 static_cast<long long>(base_mem);
      }
    } else {
      Note(warnings, "efficiency run without the 'none' baseline; ratios omitted");
    }
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

std::vector<ReportRow> RunRobustness(const World& world,
                                     std::vector<std::string>* warnings) {
  const ExperimentConfig& cfg = world.config;
  const RobustnessSpec& spec = cfg.robustness;
  const int threads = cfg.threads;
  const double fpr = cfg.detect.primary_fpr;
  const int prompt_len = cfg.gen.prompt_len;

  std::set<int> length_set = {cfg.gen.length + 1};
  for (const AttackSpec& a : spec.attacks) {
    length_set.insert(AttackedWindowLength(cfg.gen.length, a));
  }
  const std::vector<int> lengths(length_set.begin(), length_set.end());
  const Corpus calib = world.Sample("null-calib", cfg.detect.calibration_count,
                                    cfg.corpus.length);
  const MethodDetector detector("lr", world, calib, cfg.detect.fprs, lengths,
                                threads);
  const Corpus prompts = world.Prompts(spec.count);

  // Operating point: the configured delta, or the first larger grid delta
  // whose clean TPR is 1.0. Sequences are checked in chunks so failing
  // deltas stop early.
  constexpr int kChunk = 50;
  std::vector<double> candidates = {spec.delta};
  for (double d : spec.delta_grid) {
    if (d > spec.delta) candidates.push_back(d);
  }
  std::sort(candidates.begin() + 1, candidates.end());
  double best_delta = spec.delta;
  double best_tpr = -1.0;
  Corpus best_generated;
  bool found = false;
  for (double delta : candidates) {
    const auto processor =
        MakeProcessor("lr", world.keys, delta, world.vocab, nullptr);
    Corpus generated(prompts.size());
    int hits = 0;
    int done = 0;
    bool failed = false;
    while (done < spec.count) {
      const int chunk = std::min(kChunk, spec.count - done);
      std::vector<unsigned char> ok(static_cast<std::size_t>(chunk), 0);
      ParallelFor(chunk, threads, [&](int c) {
        const int i = done + c;
        const auto idx = static_cast<std::size_t>(i);
        generated[idx] =
            GenerateSequence(world, processor.get(), prompts[idx], cfg.gen, i);
        const auto s = detector.Evaluate(ScoredWindow(generated[idx], prompt_len));
        ok[static_cast<std::size_t>(c)] =
            detector.Decide(s, fpr, cfg.detect.min_scored_len) ? 1 : 0;
      });
      for (unsigned char o : ok) hits += o;
      done += chunk;
      if (hits < done) {
        failed = true;
        break;
      }
    }
    const double tpr = static_cast<double>(hits) / done;
    if (!failed) {
      best_delta = delta;
      best_generated = std::move(generated);
      found = true;
      break;
    }
    if (tpr > best_tpr) {
      best_tpr = tpr;
      best_delta = delta;
    }
  }
  if (!found) {
    Note(warnings, "no robustness delta reached clean TPR 1.0; "
                   "using delta " + RateLabel(best_delta));
    const auto processor =
        MakeProcessor("lr", world.keys, best_delta, world.vocab, nullptr);
    best_generated =
        GenerateBatch(world, processor.get(), prompts, cfg.gen, threads);
  }

  std::vector<ReportRow> rows;
  const DetectionBatch clean = DetectBatch(detector, Windows(best_generated, prompt_len),
                                           {}, fpr, cfg.detect.min_scored_len,
                                           threads);
  ReportRow clean_row = BaseRow(world, "robustness", "lr");
  clean_row.delta = best_delta;
  clean_row.n = clean.kept;
  clean_row.n_kept = clean.kept;
  clean_row.fpr = fpr;
  clean_row.threshold = detector.Threshold(fpr, cfg.gen.length - 1);
  clean_row.tpr = clean.tpr;
  clean_row.mean_z = clean.mean_z;
  clean_row.attack = "clean";
  clean_row.attack_rate = 0.0;
  clean_row.z_drop = 0.0;
  rows.push_back(clean_row);

  for (const AttackSpec& attack : spec.attacks) {
    Corpus windows(best_generated.size());
    const std::string label = "attack-" + std::string(AttackKindName(attack.kind)) +
                              "-" + RateLabel(attack.rate);
    ParallelFor(static_cast<int>(best_generated.size()), threads, [&](int i) {
      const auto idx = static_cast<std::size_t>(i);
      windows[idx] = AttackedWindow(
          best_generated[idx], prompt_len, attack, world.vocab,
          DeriveSeed(cfg.seed, label, static_cast<std::uint64_t>(i)));
    });
    const DetectionBatch b = DetectBatch(detector, windows, {}, fpr,
                                         cfg.detect.min_scored_len, threads);
    ReportRow row = clean_row;
    row.attack = std::string(AttackKindName(attack.kind));
    row.attack_rate = attack.rate;
    row.threshold = detector.Threshold(
        fpr, AttackedWindowLength(cfg.gen.length, attack) - 2);
    row.tpr = b.tpr;
    row.mean_z = b.mean_z;
    row.z_drop = clean.mean_z - b.mean_z;
    rows.push_back(row);
  }
  return rows;
}

BenchOutputs RunBench(const ExperimentConfig& config, std::ostream* log) {
  config.Validate();
  BenchOutputs out;
  auto say = [log](const std::string& msg) {
    if (log) *log << msg << std::endl;
  };
  std::unique_ptr<World> world;
  if (config.run_detectability || config.robustness.enabled) {
    say("building world (|V| = " + std::to_string(config.corpus.vocab_size) + ")");
    world = std::make_unique<World>(BuildWorld(config));
  }
  if (config.run_detectability) {
    say("detectability and quality");
    auto rows = RunDetectability(*world, &out.tradeoff, &out.warnings);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  if (config.efficiency.enabled) {
    say("efficiency");
    auto rows = RunEfficiency(config, &out.warnings);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  if (config.robustness.enabled) {
    say("robustness");
    auto rows = RunRobustness(*world, &out.warnings);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

namespace {

std::string Num(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

json NumJson(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

constexpr const char* kRowColumns =
    "experiment,digest,kind,method,delta,schedule,vocab_size,n,n_kept,fpr,"
    "threshold,tpr,mean_z,mean_ppl,ppl_sem,null_fpr,null_n,null_ok,"
    "gen_time_ms,time_ratio,peak_mem_bytes,mem_overhead_bytes,table_bytes,"
    "table_build_ms,attack,attack_rate,z_drop";

void WriteRow(std::ostream& out, const ReportRow& r) {
  out << r.experiment << ',' << r.digest << ',' << r.kind << ',' << r.method
      << ',' << Num(r.delta) << ',' << r.schedule << ',' << r.vocab_size << ','
      << r.n << ',' << r.n_kept << ',' << Num(r.fpr) << ',' << Num(r.threshold)
      << ',' << Num(r.tpr) << ',' << Num(r.mean_z) << ',' << Num(r.mean_ppl)
      << ',' << Num(r.ppl_sem) << ',' << Num(r.null_fpr) << ',' << r.null_n
      << ',' << (r.null_ok ? "true" : "false") << ',' << Num(r.gen_time_ms)
      << ',' << Num(r.time_ratio) << ',' << r.peak_mem_bytes << ','
      << r.mem_overhead_bytes << ',' << r.table_bytes << ','
      << Num(r.table_build_ms) << ',' << r.attack << ',' << Num(r.attack_rate)
      << ',' << Num(r.z_drop) << '\n';
}

void WriteFile(const std::filesystem::path& path,
               const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kResource, "cannot write " + path.string());
  body(out);
  if (!out) Fail(ErrorKind::kResource, "failed writing " + path.string());
}

}  // namespace

void WriteRowsCsv(std::ostream& out, std::span<const ReportRow> rows) {
  out << kRowColumns << '\n';
  for (const ReportRow& r : rows) WriteRow(out, r);
}

void WriteRowsJsonl(std::ostream& out, std::span<const ReportRow> rows) {
  for (const ReportRow& r : rows) {
    json j;
    j["experiment"] = r.experiment;
    j["digest"] = r.digest;
    j["kind"] = r.kind;
    j["method"] = r.method;
    j["delta"] = r.delta;
    j["schedule"] = r.schedule;
    j["vocab_size"] = r.vocab_size;
    j["n"] = r.n;
    j["n_kept"] = r.n_kept;
    j["fpr"] = NumJson(r.fpr);
    j["threshold"] = NumJson(r.threshold);
    j["tpr"] = NumJson(r.tpr);
    j["mean_z"] = NumJson(r.mean_z);
    j["mean_ppl"] = NumJson(r.mean_ppl);
    j["ppl_sem"] = NumJson(r.ppl_sem);
    j["null_fpr"] = NumJson(r.null_fpr);
    j["null_n"] = r.null_n;
    j["null_ok"] = r.null_ok;
    j["gen_time_ms"] = NumJson(r.gen_time_ms);
    j["time_ratio"] = NumJson(r.time_ratio);
    j["peak_mem_bytes"] = r.peak_mem_bytes;
    j["mem_overhead_bytes"] = r.mem_overhead_bytes;
    j["table_bytes"] = r.table_bytes;
    j["table_build_ms"] = NumJson(r.table_build_ms);
    j["attack"] = r.attack;
    j["attack_rate"] = NumJson(r.attack_rate);
    j["z_drop"] = NumJson(r.z_drop);
    out << j.dump() << '\n';
  }
}

void WriteTradeoffCsv(std::ostream& out, std::span<const TradeoffRow> rows) {
  out << "method,kind,target_tpr,reached,delta,tpr,mean_ppl,ppl_sem\n";
  for (const TradeoffRow& r : rows) {
    out << r.method << ',' << r.kind << ',' << Num(r.target_tpr) << ','
        << (r.reached ? "true" : "false") << ',' << Num(r.delta) << ','
        << Num(r.tpr) << ',' << Num(r.mean_ppl) << ',' << Num(r.ppl_sem)
        << '\n';
  }
}

void WriteReports(const BenchOutputs& outputs, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorKind::kResource, "cannot create " + out_dir);
  std::vector<ReportRow> efficiency;
  std::vector<ReportRow> robustness;
  for (const ReportRow& r : outputs.rows) {
    if (r.kind == "efficiency") efficiency.push_back(r);
    if (r.kind == "robustness") robustness.push_back(r);
  }
  WriteFile(dir / "rows.csv", [&](std::ostream& o) { WriteRowsCsv(o, outputs.rows); });
  WriteFile(dir / "rows.jsonl",
            [&](std::ostream& o) { WriteRowsJsonl(o, outputs.rows); });
  WriteFile(dir / "tradeoff.csv",
            [&](std::ostream& o) { WriteTradeoffCsv(o, outputs.tradeoff); });
  WriteFile(dir / "efficiency.csv",
            [&](std::ostream& o) { WriteRowsCsv(o, efficiency); });
  WriteFile(dir / "robustness.csv",
            [&](std::ostream& o) { WriteRowsCsv(o, robustness); });
}

}  // namespace lrdwm
