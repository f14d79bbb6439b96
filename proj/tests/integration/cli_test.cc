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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"

namespace lrdwm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Call(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lrdwm_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // corpus.txt (training), null.txt (held out) and model.json at |V| = 128.
  void MakeModel() {
    ASSERT_EQ(Call({"corpus", "--vocab", "128", "--count", "300", "--length", "120",
                    "--seed", "5", "-o", Path("corpus.txt")})
                  .code,
              kExitOk);
    ASSERT_EQ(Call({"corpus", "--vocab", "128", "--count", "2000", "--length", "120",
                    "--seed", "6", "-o", Path("null.txt")})
                  .code,
              kExitOk);
    ASSERT_EQ(Call({"train", "--corpus", Path("corpus.txt"), "--vocab", "128", "--out",
                    Path("model.json")})
                  .code,
              kExitOk);
  }

  fs::path dir_;
};

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Call({"--help"}).code, kExitOk);
  EXPECT_EQ(Call({}).code, kExitUsage);
  EXPECT_EQ(Call({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Call({"detect", "--input", "x", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(Call({"train", "--corpus", "x"}).code, kExitUsage);
  const Result missing = Call({"train", "--corpus", Path("nope.txt"), "--vocab", "8",
                               "--out", Path("m.json")});
  EXPECT_EQ(missing.code, kExitError);
  EXPECT_NE(missing.err.find("error"), std::string::npos);
  EXPECT_EQ(Call({"mask-dump", "--context", "0", "--vocab", "64", "--gamma", "1.5"}).code,
            kExitError);
}

TEST_F(CliTest, GenerationIsDeterministic) {
  MakeModel();
  const std::vector<std::string> args = {"gen", "--model", Path("model.json"), "--count",
                                         "3", "--len", "40", "--delta", "0", "--seed", "7"};
  const Result a = Call(args);
  const Result b = Call(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(Lines(a.out).size(), 4u);  // header + 3 sequences
  std::vector<std::string> other = args;
  other.back() = "8";
  EXPECT_NE(Call(other).out, a.out);
}

TEST_F(CliTest, CalibrateThenDetect) {
  MakeModel();
  const Result cal = Call({"calibrate", "--null-corpus", Path("null.txt"), "--model",
                           Path("model.json"), "--fprs", "0.01,0.05", "--out",
                           Path("cal.json"), "--seed", "3"});
  ASSERT_EQ(cal.code, kExitOk) << cal.err;

  const Result null = Call({"detect", "--input", Path("null.txt"), "--calibration",
                            Path("cal.json"), "--fpr", "0.01", "--seed", "3", "--json"});
  ASSERT_EQ(null.code, kExitOk) << null.err;
  const auto lines = Lines(null.out);
  ASSERT_EQ(lines.size(), 2000u);
  int positives = 0;
  for (const std::string& line : lines) {
    const json j = json::parse(line);
    for (const char* field : {"status", "z", "score_sum", "scored_len", "decision",
                              "threshold", "threshold_used", "fpr", "sigma2"}) {
      EXPECT_TRUE(j.contains(field)) << field;
    }
    positives += j["decision"].get<bool>();
  }
  EXPECT_GE(positives, 5);
  EXPECT_LE(positives, 20);

  ASSERT_EQ(Call({"gen", "--model", Path("model.json"), "--count", "20", "--len", "100",
                  "--delta", "4", "--seed", "3", "-o", Path("wm.txt")})
                .code,
            kExitOk);
  const Result wm = Call({"detect", "--input", Path("wm.txt"), "--calibration",
                          Path("cal.json"), "--fpr", "0.01", "--seed", "3"});
  ASSERT_EQ(wm.code, kExitOk) << wm.err;
  EXPECT_NE(wm.out.find("20 of 20 flagged"), std::string::npos) << wm.out;

  const Result wrong = Call({"detect", "--input", Path("wm.txt"), "--calibration",
                             Path("cal.json"), "--seed", "4"});
  EXPECT_EQ(wrong.code, kExitError);
  EXPECT_NE(wrong.err.find("config error"), std::string::npos) << wrong.err;
}

TEST_F(CliTest, KeyFileMatchesExplicitKeys) {
  std::ofstream(Path("keys.json"))
      << R"({"left": "0123456789abcdef", "right": "fedcba9876543210"})";
  const Result a = Call({"mask-dump", "--context", "9", "--vocab", "100", "--key-file",
                         Path("keys.json"), "--side", "right"});
  const Result b = Call({"mask-dump", "--context", "9", "--vocab", "100", "--key-right",
                         "fedcba9876543210", "--side", "right"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  const Result j = Call({"mask-dump", "--context", "9", "--vocab", "100", "--key-file",
                         Path("keys.json"), "--json"});
  const json parsed = json::parse(j.out);
  EXPECT_EQ(parsed["green_count"], 50);
  EXPECT_EQ(parsed["key"], "0123456789abcdef");
  EXPECT_EQ(parsed["hex"].get<std::string>().size(), 26u);
}

TEST_F(CliTest, AttackAndAudit) {
  MakeModel();
  ASSERT_EQ(Call({"gen", "--model", Path("model.json"), "--len", "50", "-o",
                  Path("one.txt"), "--audit", Path("audit.jsonl")})
                .code,
            kExitOk);
  EXPECT_EQ(Lines(ReadAll(Path("audit.jsonl"))).size(), 50u);
  const Result del = Call({"attack", "--kind", "delete", "--p", "0.2", "--input",
                           Path("one.txt")});
  ASSERT_EQ(del.code, kExitOk) << del.err;
  const auto lines = Lines(del.out);
  ASSERT_EQ(lines.size(), 2u);
  std::istringstream tokens(lines[1]);
  int count = 0;
  for (int t; tokens >> t;) ++count;
  EXPECT_EQ(count, 50 - 10);
  EXPECT_EQ(Call({"attack", "--kind", "delete", "--p", "1", "--input", Path("one.txt")})
                .code,
            kExitError);
  EXPECT_EQ(Call({"attack", "--kind", "substitute", "--p", "0.1", "--input",
                  Path("one.txt")})
                .code,
            kExitUsage);  // needs a vocabulary size
}

TEST_F(CliTest, BenchChecksShippedConfigs) {
  for (const char* name : {"smoke.json", "desk_scale.json"}) {
    const Result r = Call({"bench", "--config",
                           std::string(LRDWM_SOURCE_DIR) + "/configs/" + name,
                           "--check-config"});
    EXPECT_EQ(r.code, kExitOk) << name << ": " << r.err;
  }
  std::ofstream(Path("bad.json")) << R"({"format": "lrdwm-experiment", "version": 1, "x": 1})";
  EXPECT_EQ(Call({"bench", "--config", Path("bad.json"), "--check-config"}).code,
            kExitError);
}

}  // namespace
}  // namespace lrdwm::cli
