/*
 * Copyright 2026 The Stagefuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "commands.h"

#include <sstream>

#include <gtest/gtest.h>

#include "stagefuse/synth.h"
#include "test_util.h"

namespace stagefuse {
namespace {

using testing::ReadFile;
using testing::TempDir;
using testing::WriteText;

int RunArgs(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(RunArgs({}), kExitUsage);
  EXPECT_EQ(RunArgs({"--help"}), kExitOk);
  EXPECT_EQ(RunArgs({"train", "--help"}), kExitOk);
  EXPECT_EQ(RunArgs({"frobnicate"}), kExitUsage);
  EXPECT_EQ(RunArgs({"synth", "--rows", "100"}), kExitUsage);  // --seed missing
  EXPECT_EQ(RunArgs({"cv", "--data", "x.csv", "--seed", "1", "--modality", "both"}), kExitUsage);
  std::string err;
  EXPECT_EQ(RunArgs({"cv", "--data", "/nonexistent/d.csv", "--seed", "1"}, nullptr, &err),
            kExitData);
  EXPECT_NE(err.find("error:"), std::string::npos);
  TempDir dir("cli_codes");
  EXPECT_EQ(RunArgs({"synth", "--rows", "10", "--seed", "1", "--out", dir.path().string()}),
            kExitData);
  WriteText(dir / "bad.json", "{not json");
  EXPECT_EQ(RunArgs({"evaluate", "--model", dir / "bad.json", "--data", dir / "d.csv"}), kExitData);
}

TEST(CliTest, EvaluatePredictionsFile) {
  TempDir dir("cli_eval");
  WriteText(dir / "p.csv", "y_true,y_pred\n100,100\n200,200\n300,200\n400,400\n");
  std::string out;
  ASSERT_EQ(RunArgs({"evaluate", "--predictions", dir / "p.csv", "--out", dir.path().string()}, &out),
            kExitOk);
  EXPECT_EQ(ReadFile(dir.path() / "confusion.csv"),
            "actual,pred_0,pred_1,pred_2,pred_3\n0,1,0,0,0\n1,0,1,0,0\n2,0,1,0,0\n3,0,0,0,1\n");
  EXPECT_NE(out.find("0.75"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "roc_class0.csv"));
  WriteText(dir / "q.csv", "y_true,y_pred,p0,p1,p2,p3\n0,0,0.7,0.1,0.1,0.1\n1,1,0.1,0.7,0.1,0.1\n"
                           "2,2,0.1,0.1,0.7,0.1\n3,3,0.1,0.1,0.1,0.7\n");
  ASSERT_EQ(RunArgs({"evaluate", "--predictions", dir / "q.csv", "--out", dir.path().string()}),
            kExitOk);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "roc_class0.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "pr_class3.svg"));
  EXPECT_NE(ReadFile(dir.path() / "metrics.csv").find("auc_macro"), std::string::npos);
}

TEST(CliTest, EndToEndNumericOnlyAndDeterminism) {
  TempDir dir("cli_e2e");
  const std::string d = dir.path().string();
  ASSERT_EQ(RunArgs({"synth", "--rows", "400", "--seed", "3", "--out", d + "/a"}), kExitOk);
  ASSERT_EQ(RunArgs({"synth", "--rows", "400", "--seed", "3", "--out", d + "/b"}), kExitOk);
  EXPECT_EQ(ReadFile(dir.path() / "a/dataset.csv"), ReadFile(dir.path() / "b/dataset.csv"));
  const std::string data = d + "/a/dataset.csv";
  const std::vector<std::string> common = {"--data", data, "--modality", "numeric",
                                           "--trees", "10", "--seed", "5"};
  auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
    head.insert(head.end(), common.begin(), common.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };
  ASSERT_EQ(RunArgs(with({"train"}, {"--out", d + "/m1/model.json", "--threads", "1"})), kExitOk);
  ASSERT_EQ(RunArgs(with({"train"}, {"--out", d + "/m2/model.json", "--threads", "3"})), kExitOk);
  EXPECT_EQ(ReadFile(dir.path() / "m1/model.json"), ReadFile(dir.path() / "m2/model.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "m1/train_report.csv"));

  ASSERT_EQ(RunArgs({"evaluate", "--model", d + "/m1/model.json", "--data", data, "--out",
                 d + "/ev"}),
            kExitOk);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "ev/roc_class2.svg"));

  std::string out;
  ASSERT_EQ(RunArgs({"explain", "--model", d + "/m1/model.json", "--data", data, "--mode",
                 "sampling", "--samples", "4", "--background-rows", "10", "--permutations",
                 "8", "--seed", "1", "--out", d + "/ex"},
                &out),
            kExitOk);
  const std::string summary = ReadFile(dir.path() / "ex/shap_summary.csv");
  for (const auto& name : SynthNumericColumns()) {
    EXPECT_NE(summary.find("," + name + ","), std::string::npos) << name;
  }
  EXPECT_EQ(summary.find("textual_feature"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "ex/shap_summary_class3.svg"));
  // Exact mode refuses 18 features.
  EXPECT_EQ(RunArgs({"explain", "--model", d + "/m1/model.json", "--data", data, "--seed", "1",
                 "--out", d + "/ex2"}),
            kExitData);
}

TEST(CliTest, CvAndAblateWriteReports) {
  TempDir dir("cli_cv");
  const std::string d = dir.path().string();
  ASSERT_EQ(RunArgs({"synth", "--rows", "300", "--seed", "4", "--out", d}), kExitOk);
  ASSERT_EQ(RunArgs({"cv", "--data", d + "/dataset.csv", "--trees", "5", "--folds", "3", "--seed",
                 "2", "--out", d + "/cv"}),
            kExitOk);
  EXPECT_NE(ReadFile(dir.path() / "cv/cv_report.csv").find("mean,combined,1,"),
            std::string::npos);
  ASSERT_EQ(RunArgs({"ablate", "--data", d + "/dataset.csv", "--trees", "5", "--seed", "2",
                 "--out", d + "/ab"}),
            kExitOk);
  EXPECT_NE(ReadFile(dir.path() / "ab/ablation.csv").find("text,0,3,"), std::string::npos);
  // Ensembles train and report on a holdout.
  ASSERT_EQ(RunArgs({"train", "--data", d + "/dataset.csv", "--model-kind", "stacking", "--trees",
                 "5", "--seed", "2", "--test-fraction", "0.25", "--out", d + "/st/model.json"}),
            kExitOk);
  EXPECT_NE(ReadFile(dir.path() / "st/train_report.csv").find("test,"), std::string::npos);
}

}  // namespace
}  // namespace stagefuse
