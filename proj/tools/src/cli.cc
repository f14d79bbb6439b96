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

#include "cli.h"

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrdwm/attacks.h"
#include "lrdwm/base_model.h"
#include "lrdwm/baselines.h"
#include "lrdwm/bench.h"
#include "lrdwm/corpus.h"
#include "lrdwm/decoder.h"
#include "lrdwm/detector.h"
#include "lrdwm/errors.h"
#include "lrdwm/experiment_config.h"
#include "lrdwm/green_mask.h"
#include "lrdwm/injector.h"
#include "lrdwm/rng.h"
#include "lrdwm/schedule.h"

namespace lrdwm::cli {
namespace {

using nlohmann::json;

struct Common {
  bool json = false;
  std::uint64_t seed = 1;
};

struct KeyOptions {
  std::string left;
  std::string right;
  std::string file;
};

void AddCommon(CLI::App* app, Common* common) {
  app->add_flag("--json", common->json, "Print structured JSON output");
  app->add_option("--seed", common->seed, "Random seed")->capture_default_str();
}

void AddKeys(CLI::App* app, KeyOptions* keys) {
  app->add_option("--key-left", keys->left, "Left key, 16 hex digits");
  app->add_option("--key-right", keys->right, "Right key, 16 hex digits");
  app->add_option("--key-file", keys->file,
                  "JSON file {\"left\": HEX, \"right\": HEX}; keys default to "
                  "values derived from --seed");
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kResource, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

InjectorConfig ResolveKeys(const KeyOptions& opts, std::uint64_t seed,
                           double gamma) {
  std::string left = opts.left;
  std::string right = opts.right;
  if (!opts.file.empty()) {
    if (!left.empty() || !right.empty()) {
      Fail(ErrorKind::kUsage, "--key-file cannot be combined with --key-left/--key-right");
    }
    try {
      const json j = json::parse(ReadFile(opts.file));
      left = j.at("left").get<std::string>();
      right = j.at("right").get<std::string>();
    } catch (const json::exception& e) {
      Fail(ErrorKind::kData, "malformed key file " + opts.file + ": " + e.what());
    }
  }
  InjectorConfig c;
  c.key_left = left.empty() ? WatermarkKey{DeriveSeed(seed, "key-left")}
                            : WatermarkKey::FromHex(left);
  c.key_right = right.empty() ? WatermarkKey{DeriveSeed(seed, "key-right")}
                              : WatermarkKey::FromHex(right);
  c.gamma = gamma;
  return c;
}

int ResolveVocab(int vocab, const std::string& model_path) {
  if (vocab > 0) return vocab;
  if (!model_path.empty()) return BaseModel::Load(model_path).vocab_size();
  Fail(ErrorKind::kUsage, "--vocab or --model is required");
}

// Writes a token file to `path`, or to `out` when no path is given.
void EmitTokens(const Corpus& corpus, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    WriteTokens(out, corpus);
  } else {
    WriteTokenFile(path, corpus);
  }
}

json CorpusJson(const Corpus& corpus) {
  json seqs = json::array();
  for (const TokenSequence& s : corpus) seqs.push_back(s);
  return seqs;
}

// ---------------------------------------------------------------------------

struct CorpusCmd {
  Common common;
  int vocab = 1024;
  int branching = 8;
  double zipf = 1.1;
  int count = 100;
  int length = 400;
  std::uint64_t source_seed = 1;
  std::string output;

  void Register(CLI::App* app) {
    app->add_option("--vocab", vocab, "Vocabulary size")->capture_default_str();
    app->add_option("--branching", branching, "Successors per token")->capture_default_str();
    app->add_option("--zipf", zipf, "Zipf exponent of successor weights")->capture_default_str();
    app->add_option("--count", count, "Number of sequences")->capture_default_str();
    app->add_option("--length", length, "Tokens per sequence")->capture_default_str();
    app->add_option("--source-seed", source_seed,
                    "Seed of the Markov source; corpora sharing it share a language")
        ->capture_default_str();
    app->add_option("--output,-o", output, "Token file to write (default stdout)");
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    if (count < 1 || length < 1) Fail(ErrorKind::kConfig, "--count and --length must be >= 1");
    const MarkovSource source({vocab, branching, zipf, source_seed});
    const Corpus corpus = source.SampleCorpus(count, length, common.seed);
    if (output.empty() && common.json) {
      out << json{{"command", "corpus"}, {"vocab_size", vocab}, {"sequences", CorpusJson(corpus)}}
                 .dump()
          << '\n';
      return;
    }
    EmitTokens(corpus, output, out);
    if (output.empty()) return;
    if (common.json) {
      out << json{{"command", "corpus"},
                  {"vocab_size", vocab},
                  {"count", count},
                  {"length", length},
                  {"output", output}}
                 .dump()
          << '\n';
    } else {
      out << "wrote " << count << " sequences of length " << length << " to " << output << '\n';
    }
  }
};

struct TrainCmd {
  Common common;
  std::string corpus;
  int vocab = 0;
  int order = 2;
  double smoothing = 0.1;
  std::string output;

  void Register(CLI::App* app) {
    app->add_option("--corpus", corpus, "Training token file")->required();
    app->add_option("--vocab", vocab, "Vocabulary size")->required();
    app->add_option("--order", order, "N-gram order (2 or 3)")->capture_default_str();
    app->add_option("--smoothing", smoothing, "Additive smoothing")->capture_default_str();
    app->add_option("--out,-o", output, "Model file to write")->required();
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    const BaseModel model = BaseModel::Train(ReadTokenFile(corpus), vocab, order, smoothing);
    model.Save(output);
    if (common.json) {
      out << json{{"command", "train"},
                  {"vocab_size", vocab},
                  {"order", order},
                  {"smoothing", smoothing},
                  {"tokens", model.token_count()},
                  {"bytes", model.ByteSize()},
                  {"output", output}}
                 .dump()
          << '\n';
    } else {
      out << "trained order-" << order << " model on " << model.token_count()
          << " tokens; wrote " << output << '\n';
    }
  }
};

struct GenCmd {
  Common common;
  KeyOptions keys;
  std::string model;
  std::string prompt_file;
  int count = 1;
  int length = 300;
  int steps = 0;
  std::string schedule = "random";
  int block_len = 25;
  double temperature = 0.0;
  double delta = 2.0;
  double gamma = kDefaultGamma;
  std::string method = "lr";
  std::string forward = "all";
  std::string output;
  std::string audit;

  void Register(CLI::App* app) {
    app->add_option("--model", model, "Model file from `lrdwm train`")->required();
    app->add_option("--prompt-file", prompt_file,
                    "Token file with one prompt per line (default: one empty prompt)");
    app->add_option("--count", count, "Generations per prompt")->capture_default_str();
    app->add_option("--len", length, "Tokens to generate")->capture_default_str();
    app->add_option("--steps", steps, "Denoising steps (default: --len)");
    app->add_option("--schedule", schedule, "random, confidence or block")
        ->capture_default_str();
    app->add_option("--block-len", block_len, "Block length for the block schedule")
        ->capture_default_str();
    app->add_option("--temp", temperature, "Sampling temperature; 0 is greedy")
        ->capture_default_str();
    app->add_option("--delta", delta, "Bias per satisfied green constraint")
        ->capture_default_str();
    app->add_option("--gamma", gamma, "Green-list fraction")->capture_default_str();
    app->add_option("--method", method, "lr, left, dmark or none")->capture_default_str();
    app->add_option("--forward", forward,
                    "all: score every masked position per step; selected: only "
                    "the positions being revealed")
        ->capture_default_str();
    app->add_option("--output,-o", output, "Token file to write (default stdout)");
    app->add_option("--audit", audit, "Write the decode audit trail (JSON lines)");
    AddKeys(app, &keys);
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    if (!IsKnownMethod(method)) {
      Fail(ErrorKind::kConfig, "unknown method '" + method + "'");
    }
    if (count < 1) Fail(ErrorKind::kConfig, "--count must be >= 1");
    const BaseModel base = BaseModel::Load(model);
    const Vocabulary vocab(base.vocab_size());
    const InjectorConfig key_config = ResolveKeys(keys, common.seed, gamma);
    std::unique_ptr<InverseTable> table;
    if (method == "dmark") {
      table = std::make_unique<InverseTable>(key_config.key_left, vocab, gamma);
    }
    const auto processor = MakeProcessor(method, key_config, delta, vocab, table.get());
    const Corpus prompts =
        prompt_file.empty() ? Corpus{TokenSequence{}} : ReadTokenFile(prompt_file);
    if (!audit.empty() && prompts.size() * static_cast<std::size_t>(count) != 1) {
      Fail(ErrorKind::kUsage, "--audit needs exactly one generated sequence");
    }
    const ScheduleKind kind = ParseScheduleKind(schedule);
    DecodeOptions options;
    options.temperature = temperature;
    options.forward = ParseForwardMode(forward);

    Corpus sequences;
    std::vector<int> prompt_lens;
    std::uint64_t index = 0;
    for (const TokenSequence& prompt : prompts) {
      for (int c = 0; c < count; ++c, ++index) {
        const int plen = static_cast<int>(prompt.size());
        const Schedule sched =
            MakeSchedule(kind, plen + length, plen, steps > 0 ? steps : length, block_len,
                         DeriveSeed(common.seed, "schedule", index));
        options.seed = DeriveSeed(common.seed, "sample", index);
        const DecodeResult result = Decode(base, prompt, sched, options, processor.get());
        if (!audit.empty()) {
          std::ofstream a(audit);
          if (!a) Fail(ErrorKind::kResource, "cannot write " + audit);
          WriteAuditJsonl(a, result.audit);
        }
        const auto toks = result.state.tokens();
        sequences.emplace_back(toks.begin(), toks.end());
        prompt_lens.push_back(plen);
      }
    }

    json summary{{"command", "gen"},     {"format", "lrdwm-generation"},
                 {"version", 1},         {"method", method},
                 {"delta", delta},       {"schedule", schedule},
                 {"seed", common.seed},  {"prompt_lens", prompt_lens}};
    if (output.empty() && common.json) {
      summary["sequences"] = CorpusJson(sequences);
      out << summary.dump() << '\n';
      return;
    }
    EmitTokens(sequences, output, out);
    if (output.empty()) return;
    if (common.json) {
      summary["output"] = output;
      out << summary.dump() << '\n';
    } else {
      out << "generated " << sequences.size() << " sequences with method " << method
          << " (delta " << delta << "); wrote " << output << '\n';
    }
  }
};

struct CalibrateCmd {
  Common common;
  KeyOptions keys;
  std::string null_corpus;
  std::string output;
  std::vector<double> fprs = {0.01};
  std::vector<int> lengths;
  int vocab = 0;
  std::string model;
  double gamma = kDefaultGamma;

  void Register(CLI::App* app) {
    app->add_option("--null-corpus", null_corpus, "Unwatermarked token file")->required();
    app->add_option("--out,-o", output, "Calibration file to write")->required();
    app->add_option("--fprs", fprs, "Target false-positive rates, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--lengths", lengths,
                    "Window lengths for per-length thresholds, comma separated "
                    "(default: whole sequences)")
        ->delimiter(',');
    app->add_option("--vocab", vocab, "Vocabulary size");
    app->add_option("--model", model, "Model file, used for the vocabulary size");
    app->add_option("--gamma", gamma, "Green-list fraction")->capture_default_str();
    AddKeys(app, &keys);
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    const Vocabulary v(ResolveVocab(vocab, model));
    const NullCalibration cal = CalibrateNull(
        ReadTokenFile(null_corpus), ResolveKeys(keys, common.seed, gamma), v, fprs, lengths);
    cal.Save(output);
    if (common.json) {
      out << json::parse(cal.ToJson()).dump() << '\n';
      return;
    }
    out << "sigma2 = " << cal.sigma2 << " over " << cal.corpus_meta.size
        << " null sequences\n";
    for (const ThresholdTable& t : cal.tables) {
      for (const ThresholdEntry& e : t.thresholds) {
        out << "  scored_len " << t.scored_len << "  fpr " << e.fpr << "  z > " << e.z << '\n';
      }
    }
    for (const std::string& w : cal.warnings) out << "warning: " << w << '\n';
    out << "wrote " << output << '\n';
  }
};

struct DetectCmd {
  Common common;
  KeyOptions keys;
  std::string input;
  std::string calibration;
  double fpr = 0.01;
  int prompt_len = 0;
  int min_scored_len = kDefaultMinScoredLength;
  bool per_token = false;

  void Register(CLI::App* app) {
    app->add_option("--input", input, "Token file; each line is scored separately")
        ->required();
    app->add_option("--calibration", calibration, "Calibration file from `lrdwm calibrate`")
        ->required();
    app->add_option("--fpr", fpr, "False-positive rate of the decision threshold")
        ->capture_default_str();
    app->add_option("--prompt-len", prompt_len,
                    "Leading prompt tokens to skip (the last one stays as context)")
        ->capture_default_str();
    app->add_option("--min-scored-len", min_scored_len,
                    "Fewer scored tokens than this yield status insufficient_length")
        ->capture_default_str();
    app->add_flag("--per-token", per_token, "Include per-token scores in JSON output");
    AddKeys(app, &keys);
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    const NullCalibration cal = NullCalibration::Load(calibration);
    const InjectorConfig config = ResolveKeys(keys, common.seed, cal.gamma);
    const Vocabulary vocab(cal.vocab_size);
    DetectOptions options;
    options.prompt_len = prompt_len;
    options.min_scored_len = min_scored_len;
    options.keep_per_token = per_token;
    const Corpus sequences = ReadTokenFile(input);
    if (sequences.empty()) Fail(ErrorKind::kData, input + " contains no sequences");
    int positives = 0;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      const DetectionResult r = Detect(sequences[i], config, vocab, cal, fpr, options);
      positives += r.decision;
      if (common.json) {
        out << DetectionResultToJson(r, per_token) << '\n';
        continue;
      }
      out << "sequence " << i << ": z = " << r.z << ", scored_len = " << r.scored_len
          << ", threshold = " << r.threshold_used << ", decision = "
          << (r.status == DetectionStatus::kInsufficientLength
                  ? "insufficient_length"
                  : (r.decision ? "watermarked" : "not_watermarked"))
          << '\n';
    }
    if (!common.json && sequences.size() > 1) {
      out << positives << " of " << sequences.size() << " flagged at fpr " << fpr << '\n';
    }
  }
};

struct AttackCmd {
  Common common;
  std::string kind;
  double p = 0.0;
  std::string input;
  std::string output;
  int vocab = 0;
  std::string model;

  void Register(CLI::App* app) {
    app->add_option("--kind", kind, "delete or substitute")->required();
    app->add_option("--p", p, "Fraction of tokens to edit, in [0, 1)")->required();
    app->add_option("--input", input, "Token file to attack")->required();
    app->add_option("--output,-o", output, "Token file to write (default stdout)");
    app->add_option("--vocab", vocab, "Vocabulary size (substitution only)");
    app->add_option("--model", model, "Model file, used for the vocabulary size");
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    const AttackKind k = ParseAttackKind(kind);
    const Vocabulary v(k == AttackKind::kSubstitute ? ResolveVocab(vocab, model) : 4);
    Corpus attacked;
    std::uint64_t index = 0;
    for (const TokenSequence& s : ReadTokenFile(input)) {
      attacked.push_back(ApplyAttack(k, s, p, v, DeriveSeed(common.seed, "attack", index++)));
    }
    if (output.empty() && common.json) {
      out << json{{"command", "attack"},
                  {"kind", std::string(AttackKindName(k))},
                  {"p", p},
                  {"sequences", CorpusJson(attacked)}}
                 .dump()
          << '\n';
      return;
    }
    EmitTokens(attacked, output, out);
    if (output.empty()) return;
    if (common.json) {
      out << json{{"command", "attack"},
                  {"kind", std::string(AttackKindName(k))},
                  {"p", p},
                  {"count", attacked.size()},
                  {"output", output}}
                 .dump()
          << '\n';
    } else {
      out << AttackKindName(k) << " attack at p = " << p << " on " << attacked.size()
          << " sequences; wrote " << output << '\n';
    }
  }
};

struct BenchCmd {
  Common common;
  std::string config;
  std::string output;
  bool check_only = false;
  int threads = -1;
  bool quiet = false;
  CLI::Option* seed_option = nullptr;

  void Register(CLI::App* app) {
    app->add_option("--config", config, "Experiment config (JSON)")->required();
    app->add_option("--out,-o", output, "Directory for the report files");
    app->add_flag("--check-config", check_only, "Validate the config and exit");
    app->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
    app->add_flag("--quiet", quiet, "Suppress progress messages");
    AddCommon(app, &common);
    seed_option = app->get_option("--seed");
  }

  void Run(std::ostream& out, std::ostream& err) const {
    ExperimentConfig cfg = ExperimentConfig::Load(config);
    if (seed_option->count() > 0) cfg.seed = common.seed;
    if (threads >= 0) cfg.threads = threads;
    cfg.Validate();
    if (check_only) {
      if (common.json) {
        out << json{{"valid", true}, {"digest", cfg.Digest()},
                    {"config", json::parse(cfg.ToJson())}}
                   .dump()
            << '\n';
      } else {
        out << "config '" << cfg.name << "' is valid (digest " << cfg.Digest() << ")\n";
      }
      return;
    }
    if (output.empty()) Fail(ErrorKind::kUsage, "--out is required unless --check-config is given");
    const BenchOutputs results = RunBench(cfg, quiet ? nullptr : &err);
    WriteReports(results, output);
    if (common.json) {
      out << json{{"command", "bench"},
                  {"digest", cfg.Digest()},
                  {"rows", results.rows.size()},
                  {"warnings", results.warnings},
                  {"output", output}}
                 .dump()
          << '\n';
    } else {
      out << "wrote " << results.rows.size() << " rows to " << output << '\n';
      for (const std::string& w : results.warnings) out << "warning: " << w << '\n';
    }
  }
};

struct MaskDumpCmd {
  Common common;
  KeyOptions keys;
  int context = 0;
  int vocab = 0;
  double gamma = kDefaultGamma;
  std::string side = "left";

  void Register(CLI::App* app) {
    app->add_option("--context", context, "Context token id")->required();
    app->add_option("--vocab", vocab, "Vocabulary size")->required();
    app->add_option("--side", side, "Which key to use: left or right")->capture_default_str();
    app->add_option("--gamma", gamma, "Green-list fraction")->capture_default_str();
    AddKeys(app, &keys);
    AddCommon(app, &common);
  }

  void Run(std::ostream& out) const {
    if (side != "left" && side != "right") {
      Fail(ErrorKind::kConfig, "--side must be left or right");
    }
    const InjectorConfig k = ResolveKeys(keys, common.seed, gamma);
    const WatermarkKey key = side == "left" ? k.key_left : k.key_right;
    const GreenMask mask = ComputeGreenMask(context, key, Vocabulary(vocab), gamma);
    if (common.json) {
      out << json{{"context", context},
                  {"side", side},
                  {"key", key.ToHex()},
                  {"vocab_size", vocab},
                  {"gamma", gamma},
                  {"green_count", mask.Count()},
                  {"hex", mask.ToHex()}}
                 .dump()
          << '\n';
    } else {
      out << mask.ToHex() << '\n';
    }
  }
};

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-sided watermarking for diffusion-style decoding", "lrdwm"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  CorpusCmd corpus;
  TrainCmd train;
  GenCmd gen;
  CalibrateCmd calibrate;
  DetectCmd detect;
  AttackCmd attack;
  BenchCmd bench;
  MaskDumpCmd mask_dump;

  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  auto add = [&](const char* name, const char* help, auto& cmd, std::function<void()> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.Register(sub);
    commands.emplace_back(sub, std::move(run));
  };
  add("corpus", "Sample a token corpus from a seeded Markov source", corpus,
      [&] { corpus.Run(out); });
  add("train", "Train the n-gram base model", train, [&] { train.Run(out); });
  add("gen", "Generate sequences by masked parallel decoding", gen, [&] { gen.Run(out); });
  add("calibrate", "Estimate score variance and thresholds on null text", calibrate,
      [&] { calibrate.Run(out); });
  add("detect", "Score token sequences for the two-sided watermark", detect,
      [&] { detect.Run(out); });
  add("attack", "Apply random deletions or substitutions", attack, [&] { attack.Run(out); });
  add("bench", "Run an experiment grid and write reports", bench,
      [&] { bench.Run(out, err); });
  add("mask-dump", "Print a green list as a hex bit string", mask_dump,
      [&] { mask_dump.Run(out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) run();
    }
  } catch (const Error& e) {
    err << "lrdwm: " << e.what() << '\n';
    return e.kind() == ErrorKind::kUsage ? kExitUsage : kExitError;
  } catch (const std::exception& e) {
    err << "lrdwm: " << e.what() << '\n';
    return kExitError;
  }
  return kExitOk;
}

}  // namespace lrdwm::cli
