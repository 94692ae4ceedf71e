#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gtest/gtest.h"
#include "cfgevade/corpus.hpp"
#include "cfgevade/params_io.hpp"

namespace cfgevade {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("cfgevade_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary inside the test directory; returns its exit status.
  int Run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + CFGEVADE_BIN + "' " + args +
                            " >> log.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Read(const std::string& rel) const { return read_file(dir_ / rel); }

  // Small pipeline with the given seed and thread count, reports under `tag`.
  void Pipeline(const std::string& tag, const std::string& seed, const std::string& threads) {
    const std::string common = " --seed " + seed + " --threads " + threads;
    ASSERT_EQ(Run("gen-corpus --benign 40 --malicious 40 --out " + tag + "/corpus" + common), 0);
    ASSERT_EQ(Run("build-vocab --corpus " + tag + "/corpus --out " + tag + "/vocab.txt" + common), 0);
    ASSERT_EQ(Run("train --corpus " + tag + "/corpus --vocab " + tag + "/vocab.txt --out " + tag +
                  "/model --epochs 2 --d-model 16 --heads 2 --ff-dim 32 --layers 1" + common),
              0);
    ASSERT_EQ(Run("attack --corpus " + tag + "/corpus --vocab " + tag + "/vocab.txt --weights " + tag +
                  "/model/model.bin --rounds 1,2 --trials 2 --samples 8 --ig-steps 10 --outcomes --out " + tag +
                  "/attack" + common),
              0);
    ASSERT_EQ(Run("report --in " + tag + "/attack/report.json --out " + tag + "/report" + common), 0);
  }

  fs::path dir_;
};

TEST_F(Cli, GenCorpusWritesRequestedCounts) {
  ASSERT_EQ(Run("gen-corpus --benign 100 --malicious 100 --seed 7 --out corpus/"), 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "corpus")) files += e.is_regular_file();
  EXPECT_EQ(files, 200u);
  // A second run refuses to mix corpora unless forced.
  EXPECT_EQ(Run("gen-corpus --benign 5 --malicious 5 --out corpus/"), 2);
  EXPECT_EQ(Run("gen-corpus --benign 5 --malicious 5 --out corpus/ --force"), 0);
  EXPECT_EQ(load_corpus(dir_ / "corpus").size(), 10u);
}

TEST_F(Cli, SeedPrecedence) {
  write_file(dir_ / "cfg.json", R"({"seed": 5, "corpus": {"benign": 3, "malicious": 3}})");
  auto expect_seed = [&](const std::string& out, std::uint64_t seed) {
    CorpusConfig cfg;
    cfg.n_benign = 3;
    cfg.n_malicious = 3;
    cfg.seed = seed;
    EXPECT_EQ(load_corpus(dir_ / out), synth_corpus(cfg)) << out;
  };
  ASSERT_EQ(Run("gen-corpus --config cfg.json --out a"), 0);
  expect_seed("a", 5);
  ASSERT_EQ(Run("gen-corpus --config cfg.json --out b", "CFGEVADE_SEED=9"), 0);
  expect_seed("b", 9);
  ASSERT_EQ(Run("gen-corpus --config cfg.json --seed 11 --out c", "CFGEVADE_SEED=9"), 0);
  expect_seed("c", 11);
  ASSERT_EQ(Run("gen-corpus --config cfg.json --benign 4 --out d"), 0);
  EXPECT_EQ(load_corpus(dir_ / "d").size(), 7u);
}

TEST_F(Cli, PipelineIsDeterministicAcrossRunsAndThreads) {
  Pipeline("one", "7", "1");
  Pipeline("two", "7", "1");
  Pipeline("par", "7", "4");
  for (const char* f : {"attack/report.json", "attack/report.txt", "attack/outcomes.ndjson", "report/report.txt",
                        "model/model.bin", "model/train_log.ndjson", "vocab.txt"}) {
    const auto base = Read(std::string("one/") + f);
    EXPECT_FALSE(base.empty()) << f;
    EXPECT_EQ(base, Read(std::string("two/") + f)) << f;
    EXPECT_EQ(base, Read(std::string("par/") + f)) << f;
  }
  EXPECT_EQ(Read("one/attack/report.txt"), Read("one/report/report.txt"));
  EXPECT_NE(Read("one/attack/report.txt").find("Rounds"), std::string::npos);
}

TEST_F(Cli, EvalAndExplainOnHeldOutSplit) {
  Pipeline("p", "3", "2");
  ASSERT_EQ(Run("eval --corpus p/corpus --vocab p/vocab.txt --weights p/model/model.bin --split p/model/split.json "
                "--out p/eval"),
            0);
  const auto eval = Read("p/eval/eval.json");
  EXPECT_NE(eval.find("\"samples\": 16"), std::string::npos) << eval;
  ASSERT_EQ(Run("explain --corpus p/corpus --vocab p/vocab.txt --weights p/model/model.bin --sample malicious_00003 "
                "--steps 10 --out p/explain"),
            0);
  EXPECT_NE(Read("p/explain/explain.json").find("completeness_gap"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(Run("frobnicate"), 1);
  EXPECT_EQ(Run(""), 1);
  EXPECT_EQ(Run("gen-corpus --out x --no-such-flag"), 1);
  EXPECT_EQ(Run("gen-corpus --out x --signal 2"), 1);
  EXPECT_EQ(Run("gen-corpus --out x --seed -4"), 1);
  EXPECT_EQ(Run("gen-corpus --out x", "CFGEVADE_SEED=abc"), 1);
  write_file(dir_ / "bad.json", R"({"corpus": {"benign": "ten"}})");
  EXPECT_EQ(Run("gen-corpus --out x --config bad.json"), 1);
  write_file(dir_ / "broken.json", "{");
  EXPECT_EQ(Run("gen-corpus --out x --config broken.json"), 2);
  EXPECT_EQ(Run("build-vocab --corpus missing --out v.txt"), 2);

  ASSERT_EQ(Run("gen-corpus --benign 6 --malicious 6 --out c"), 0);
  ASSERT_EQ(Run("build-vocab --corpus c --out v.txt"), 0);
  EXPECT_EQ(Run("build-vocab --corpus c --out tiny.txt --size 10"), 1);
  write_file(dir_ / "w.bin", "not a model");
  EXPECT_EQ(Run("eval --corpus c --vocab v.txt --weights w.bin"), 2);
  EXPECT_EQ(Run("report --in missing.json"), 2);
  write_file(dir_ / "empty.json", R"({"campaigns": []})");
  EXPECT_EQ(Run("report --in empty.json"), 2);
  EXPECT_EQ(Run("--help"), 0);
}

}  // namespace
}  // namespace cfgevade
