// Copyright 2026 The fsreloc Authors
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


// Drives the command-line tool end to end on a tiny synthetic corpus.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fsreloc/eval.hpp"

namespace fs = std::filesystem;

namespace fsreloc {
namespace {

const std::string kSmall =
    " --set synth.name=desk --set synth.room_half=1.5 --set synth.room_height=2.2"
    " --set synth.train.count=8 --set synth.train.radius=0.6 --set synth.train.center=0,0,1.1"
    " --set synth.test.count=3 --set synth.test.radius=0.4 --set synth.test.center=0,0,1.1"
    " --set samples.per_frame=2400 --set ransac.pool_size=800"
    " --set ransac.inlier_threshold_px=12.5 --set ransac.early_reject_px=5"
    " --set train.epochs=1 --set train.max_triplets=300 --set few_shot.n=4";

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("fsreloc_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("synth --seed 5 --count 2 --out " + p("scenes")), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string p(const std::string& rel) { return (dir_ / rel).string(); }

  static int run(const std::string& args, bool small = true) {
    const std::string cmd = std::string(FSRELOC_CLI_PATH) + " " + args + (small ? kSmall : "") +
                            " >> " + p("log.txt") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static bool same(const std::string& a, const std::string& b) {
    return read_text(a) == read_text(b);
  }

  static inline fs::path dir_;
};

TEST_F(CliTest, PipelineIsDeterministic) {
  const std::string prior = " --scene " + p("scenes/desk-00");
  const std::string target = " --scene " + p("scenes/desk-01");
  for (const char* run_id : {"a", "b"}) {
    const std::string r = run_id;
    ASSERT_EQ(run("train-encoder --seed 3" + prior + " --out " + p("enc_" + r)), 0);
    ASSERT_EQ(run("build-tree --seed 3" + target + " --model " + p("enc_" + r) + " --out " +
                  p("tree_" + r)),
              0);
    ASSERT_EQ(run("localize --seed 3" + target + " --model " + p("enc_" + r) + " --tree " +
                  p("tree_" + r) + " --out " + p("loc_" + r)),
              0);
    ASSERT_EQ(run("evaluate --seed 3" + target + " --results " + p("loc_" + r + "/results.csv") +
                  " --out " + p("eval_" + r)),
              0);
  }
  ASSERT_EQ(run("localize --seed 3 --workers 2" + target + " --model " + p("enc_a") + " --tree " +
                p("tree_a") + " --out " + p("loc_w2")),
            0);
  EXPECT_TRUE(same(p("enc_a"), p("enc_b")));
  EXPECT_TRUE(same(p("tree_a"), p("tree_b")));
  for (const char* f : {"results.csv", "report.json", "report.csv"}) {
    EXPECT_TRUE(same(p("loc_a/") + f, p("loc_b/") + f)) << f;
    EXPECT_TRUE(same(p("loc_a/") + f, p("loc_w2/") + f)) << f;
  }
  EXPECT_TRUE(same(p("eval_a/report.json"), p("eval_b/report.json")));
  EXPECT_TRUE(same(p("eval_a/report.json"), p("loc_a/report.json")));
  EXPECT_TRUE(fs::exists(p("loc_a/timing.csv")));
}

TEST_F(CliTest, SynthIsDeterministic) {
  ASSERT_EQ(run("synth --seed 5 --count 1 --out " + p("again")), 0);
  for (const auto& e : fs::recursive_directory_iterator(p("again/desk-00"))) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), p("again"));
    EXPECT_TRUE(same(e.path().string(), p("scenes") + "/" + rel.string())) << rel;
  }
}

TEST_F(CliTest, ModeIsEchoed) {
  ASSERT_EQ(run("build-tree --seed 4 --set encoder.variant=baseline --scene " +
                p("scenes/desk-01") + " --model " + p("baseline_model") + " --out " +
                p("tree_base")),
            2);  // model file missing
  ASSERT_EQ(run("train-encoder --set encoder.variant=baseline --scene " + p("scenes/desk-00") +
                " --out " + p("baseline_model")),
            0);
  ASSERT_EQ(run("build-tree --seed 4 --scene " + p("scenes/desk-01") + " --model " +
                p("baseline_model") + " --out " + p("tree_base")),
            0);
  ASSERT_EQ(run("localize --seed 4 --mode vanilla_ransac --scene " + p("scenes/desk-01") +
                " --model " + p("baseline_model") + " --tree " + p("tree_base") + " --out " +
                p("loc_vanilla")),
            0);
  const auto j = nlohmann::json::parse(read_text(p("loc_vanilla/report.json")));
  EXPECT_EQ(j["config"]["mode"], "vanilla_ransac");
  EXPECT_EQ(j["config"]["seed"], "4");
}

TEST_F(CliTest, FewShotLargerThanSequenceIsClamped) {
  ASSERT_EQ(run("train-encoder --set encoder.variant=baseline --scene " + p("scenes/desk-00") +
                " --out " + p("baseline_clamp")),
            0);
  ASSERT_EQ(run("build-tree --scene " + p("scenes/desk-01") + " --model " + p("baseline_clamp") +
                    " --out " + p("tree_clamp") + " --set few_shot.n=100",
                false),
            0);
  EXPECT_NE(read_text(p("log.txt")).find("exceeds the 8 training frames"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("train-encoder --out " + p("nothing")), 2);
  EXPECT_EQ(run("localize --scene " + p("scenes/desk-01")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("synth --out " + p("x") + " --set no.such.key=1"), 2);
  write_text(p("empty.csv"), results_to_csv({}));
  EXPECT_EQ(run("evaluate --results " + p("empty.csv") + " --out " + p("eval_empty")), 2);
}

}  // namespace
}  // namespace fsreloc
