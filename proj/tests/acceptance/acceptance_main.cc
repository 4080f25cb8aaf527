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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances and time budgets are fixed
// here and are not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "oracles.h"
#include "stagefuse/ensembles.h"
#include "stagefuse/explain.h"
#include "stagefuse/forest.h"
#include "stagefuse/metrics.h"
#include "stagefuse/pca.h"
#include "stagefuse/pipeline.h"
#include "stagefuse/resample.h"
#include "stagefuse/synth.h"
#include "test_util.h"

namespace stagefuse {
namespace {

namespace fs = std::filesystem;
using testing::RandomMatrix;
using testing::ReadFile;
using testing::TempDir;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool cond, const std::string& what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    }
  }
};

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string Fmt(double v, int decimals = 4) { return FormatFixed(v, decimals); }

int Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  if (code != kExitOk) std::cerr << err.str();
  return code;
}

// section,name,value -> value
std::map<std::string, double> ReadReport(const fs::path& p) {
  std::map<std::string, double> out;
  std::istringstream in(ReadFile(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) continue;
    try {
      out[line.substr(0, b)] = std::stod(line.substr(b + 1));
    } catch (const std::exception&) {
    }
  }
  return out;
}

// ---------------------------------------------------------------- AC1

Outcome Ac1() {
  constexpr int kDecimals = 2;
  const std::vector<std::vector<long>> counts = {
      {2, 2, 0, 0}, {0, 1534, 2, 0}, {0, 14, 131, 0}, {0, 7, 0, 62}};
  Labels t, p;
  for (size_t a = 0; a < 4; ++a) {
    for (size_t q = 0; q < 4; ++q) {
      t.insert(t.end(), static_cast<size_t>(counts[a][q]), static_cast<int>(a));
      p.insert(p.end(), static_cast<size_t>(counts[a][q]), static_cast<int>(q));
    }
  }
  const EvalReport r = Evaluate(t, p, kNumStages);
  Outcome o;
  auto same = [&](double got, const std::string& want, const std::string& what) {
    o.Require(FormatFixed(got, kDecimals) == want,
              what + " " + FormatFixed(got, kDecimals) + " != " + want);
  };
  const char* recall[] = {"0.50", "1.00", "0.90", "0.90"};
  for (int c = 0; c < 4; ++c) {
    same(r.prf.per_class[c].recall, recall[c], "recall class " + std::to_string(c));
  }
  same(r.prf.per_class[1].precision, "0.99", "precision class 1");
  same(r.accuracy, "0.99", "accuracy");
  same(r.prf.macro.recall, "0.83", "macro recall");
  same(r.prf.macro.f1, "0.89", "macro F1");

  // Same table through the command line on a predictions file.
  TempDir dir("ac1");
  std::string csv = "y_true,y_pred\n";
  for (size_t i = 0; i < t.size(); ++i) {
    csv += std::to_string(DecodeStage(t[i])) + "," + std::to_string(DecodeStage(p[i])) + "\n";
  }
  testing::WriteText(dir / "pred.csv", csv);
  o.Require(Cli({"evaluate", "--predictions", dir / "pred.csv", "--out", dir.path().string()}) ==
                kExitOk,
            "evaluate command failed");
  o.Require(ReadFile(dir.path() / "confusion.csv") == ConfusionCsv(r.confusion),
            "CLI confusion matrix differs");
  o.Require(ReadFile(dir.path() / "metrics.csv") == MetricsCsv(r), "CLI metrics differ");
  if (o.pass) {
    o.detail = "recall 0.50/1.00/0.90/0.90, p1 0.99, acc 0.99, macro R 0.83, macro F1 0.89";
  }
  return o;
}

// ---------------------------------------------------------------- AC2

Outcome Ac2() {
  constexpr double kOracleTol = 1e-12;
  constexpr double kEfficiencyTol = 1e-9;
  constexpr int kSamples = 100;
  Rng rng(2024);
  const Matrix x = RandomMatrix(rng, 300, 4);
  Labels y(300);
  for (size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    y[i] = (x(r, 0) > 0 ? 2 : 0) + (x(r, 1) + 0.5 * x(r, 3) > 0 ? 1 : 0);
  }
  ForestParams fp;
  fp.n_trees = 1;
  fp.max_depth = 2;
  fp.min_samples_leaf = 1;
  fp.features_per_split = FeatureSubset::Parse("all");
  fp.bootstrap = false;
  const ForestModel tree = FitForest(x, y, kNumStages, fp);
  Outcome o;
  o.Require(tree.trees[0].Depth() == 2, "tree depth is not 2");
  const ProbaFn f = ForestProbaFn(tree);
  const Matrix background = RandomMatrix(rng, 10, 4);
  double worst_oracle = 0.0, worst_eff = 0.0;
  for (int s = 0; s < kSamples; ++s) {
    const Vector xs = RandomMatrix(rng, 1, 4).row(0).transpose();
    const ShapResult r = ShapExact(f, xs, background);
    const Matrix want = oracle::BruteForceShapley(f, xs, background);
    worst_oracle = std::max(worst_oracle, (r.values - want).cwiseAbs().maxCoeff());
    const Matrix fx = f(xs.transpose());
    Vector f_empty = Vector::Zero(kNumStages);
    const Matrix fb = f(background);
    for (Eigen::Index b = 0; b < fb.rows(); ++b) f_empty += fb.row(b).transpose() / 10.0;
    const Vector gap = r.values.colwise().sum().transpose() - (fx.row(0).transpose() - f_empty);
    worst_eff = std::max(worst_eff, gap.cwiseAbs().maxCoeff());
  }
  o.Require(worst_oracle <= kOracleTol, "oracle deviation " + std::to_string(worst_oracle));
  o.Require(worst_eff <= kEfficiencyTol, "efficiency gap " + std::to_string(worst_eff));
  if (o.pass) {
    std::ostringstream d;
    d << "max |exact - brute| " << worst_oracle << ", max efficiency gap " << worst_eff;
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- AC3

Outcome Ac3() {
  constexpr double kTol = 0.02;
  constexpr int kPermutations = 20000;
  Rng rng(303);
  const Matrix x = RandomMatrix(rng, 400, 8);
  Labels y(400);
  for (size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double s = x(r, 0) + 0.8 * x(r, 1) * x(r, 2) - 0.6 * x(r, 5);
    y[i] = s < -0.8 ? 0 : (s < 0 ? 1 : (s < 0.8 ? 2 : 3));
  }
  ForestParams fp;
  fp.n_trees = 40;
  fp.max_depth = 6;
  fp.seed = 5;
  const ForestModel forest = FitForest(x, y, kNumStages, fp);
  const ProbaFn f = ForestProbaFn(forest);
  const Matrix background = RandomMatrix(rng, 10, 8);
  double worst = 0.0;
  for (int s = 0; s < 3; ++s) {
    const Vector xs = RandomMatrix(rng, 1, 8).row(0).transpose();
    const ShapResult exact = ShapExact(f, xs, background);
    const ShapResult est = ShapSampling(f, xs, background, kPermutations,
                                        DeriveSeed(99, static_cast<uint64_t>(s)));
    worst = std::max(worst, (exact.values - est.values).cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.Require(worst <= kTol, "max deviation " + Fmt(worst, 5));
  if (o.pass) o.detail = "max |sampling - exact| " + Fmt(worst, 5);
  return o;
}

// ---------------------------------------------------------------- AC4

Outcome Ac4() {
  constexpr int kDatasets = 1000;
  constexpr double kResidualTol = 1e-9;
  Rng rng(404);
  Outcome o;
  double worst = 0.0;
  size_t synthetic_rows = 0;
  for (int ds = 0; ds < kDatasets && o.pass; ++ds) {
    const int n_classes = 2 + static_cast<int>(rng.Below(3));
    const auto n = static_cast<size_t>(n_classes) + rng.Below(200 - n_classes + 1);
    const auto d = static_cast<Eigen::Index>(1 + rng.Below(10));
    Matrix x = RandomMatrix(rng, static_cast<Eigen::Index>(n), d);
    if (ds % 4 == 0) x = x.array().round().matrix();  // duplicates and ties
    std::vector<double> w(n_classes);
    for (auto& v : w) v = std::pow(rng.Uniform() + 0.01, 3);
    Labels y(n);
    for (size_t i = 0; i < n; ++i) {
      if (i < static_cast<size_t>(n_classes)) {
        y[i] = static_cast<int>(i);
        continue;
      }
      double u = rng.Uniform() * std::accumulate(w.begin(), w.end(), 0.0);
      int c = 0;
      while (c + 1 < n_classes && u >= w[c]) u -= w[c++];
      y[i] = c;
    }
    rng.Shuffle(y);
    const int k = 1 + static_cast<int>(rng.Below(7));
    const SmoteResult r = Smote(x, y, {k, static_cast<uint64_t>(ds)});
    const auto counts = ClassCounts(r.y, n_classes);
    o.Require(std::set<size_t>(counts.begin(), counts.end()).size() == 1,
              "unequal counts in dataset " + std::to_string(ds));
    o.Require(r.x.topRows(x.rows()) == x, "originals altered");
    std::vector<std::vector<size_t>> members(n_classes);
    for (size_t i = 0; i < n; ++i) members[y[i]].push_back(i);
    std::vector<std::vector<std::vector<size_t>>> nn(n_classes);
    for (int c = 0; c < n_classes; ++c) {
      const int kk = std::min<int>(k, static_cast<int>(members[c].size()) - 1);
      for (size_t a : members[c]) nn[c].push_back(oracle::BruteKnn(x, a, members[c], kk));
    }
    for (auto s = static_cast<Eigen::Index>(r.n_original); s < r.x.rows(); ++s) {
      const int c = r.y[static_cast<size_t>(s)];
      const double* z = r.x.data() + s * d;
      double best = 1e300;
      for (size_t ai = 0; ai < members[c].size(); ++ai) {
        const double* a = x.data() + static_cast<Eigen::Index>(members[c][ai]) * d;
        if (nn[c][ai].empty()) best = std::min(best, oracle::SegmentDistance(z, a, a, d));
        for (size_t b : nn[c][ai]) {
          best = std::min(best, oracle::SegmentDistance(
                                    z, a, x.data() + static_cast<Eigen::Index>(b) * d, d));
        }
      }
      worst = std::max(worst, best);
      ++synthetic_rows;
    }
  }
  o.Require(worst < kResidualTol, "segment residual " + std::to_string(worst));
  if (o.pass) {
    std::ostringstream s;
    s << synthetic_rows << " synthetic rows, max residual " << worst;
    o.detail = s.str();
  }
  return o;
}

// ---------------------------------------------------------------- AC5

Outcome Ac5() {
  constexpr int kMatrices = 200;
  constexpr double kTol = 1e-8;
  constexpr double kThreshold = 0.98;
  Rng rng(505);
  Outcome o;
  double worst_orth = 0.0, worst_evr = 0.0;
  for (int m = 0; m < kMatrices && o.pass; ++m) {
    const auto cols = static_cast<Eigen::Index>(2 + rng.Below(11));
    const auto rows = static_cast<Eigen::Index>(3 + rng.Below(58));
    Matrix z = RandomMatrix(rng, rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) z.col(j) *= std::exp(-0.7 * rng.Uniform() * j);
    if (m % 5 == 0 && cols > 2) z.col(cols - 1) = z.col(0) - 2.0 * z.col(1);  // rank loss
    const Matrix x = z * RandomMatrix(rng, cols, cols) + Matrix::Constant(rows, cols, 3.0);
    const PcaModel p = FitPca(x, kThreshold);
    const int k = p.n_components();
    const Matrix g = p.components * p.components.transpose();
    worst_orth = std::max(worst_orth, (g - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
    const auto ev = oracle::JacobiEigenvalues(oracle::Covariance(x));
    double total = 0.0;
    for (double v : ev) total += v;
    double cum = 0.0;
    int k_oracle = 0;
    for (size_t i = 0; i < ev.size(); ++i) {
      cum += ev[i] / total;
      if (cum >= kThreshold) {
        k_oracle = static_cast<int>(i) + 1;
        break;
      }
    }
    for (int i = 0; i < k; ++i) {
      worst_evr = std::max(worst_evr, std::abs(p.explained_variance_ratio(i) - ev[i] / total));
    }
    o.Require(k == k_oracle, "matrix " + std::to_string(m) + ": k " + std::to_string(k) +
                                 " vs minimal " + std::to_string(k_oracle));
  }
  o.Require(worst_orth <= kTol, "orthonormality error " + std::to_string(worst_orth));
  o.Require(worst_evr <= kTol, "EVR error " + std::to_string(worst_evr));
  if (o.pass) {
    std::ostringstream s;
    s << "max orthonormality error " << worst_orth << ", max EVR error " << worst_evr
      << ", k minimal in all " << kMatrices;
    o.detail = s.str();
  }
  return o;
}

// ---------------------------------------------------------------- AC6

Outcome Ac6() {
  SynthConfig sc;
  sc.n_rows = 5000;
  sc.seed = 6;
  const Dataset ds = GenerateSynthetic(sc);
  PipelineConfig cfg;
  cfg.impute_mode = ImputeMode::kLeakFree;
  cfg.pca_scope = PcaScope::kFold;
  cfg.seed = 6;
  cfg.forest.seed = 6;
  cfg.smote.seed = 6;
  const auto emb = EmbedForPipeline(ds, {}, cfg.text_placeholder);

  struct Call {
    int fold;
    std::string stage;
    std::vector<size_t> rows;
  };
  std::vector<Call> calls;
  const CvReport rep = RunCv(ds, &emb, cfg, [&](int f, const std::string& s,
                                                const std::vector<size_t>& r) {
    calls.push_back({f, s, r});
  });
  Outcome o;
  std::set<std::string> stages;
  for (const Call& c : calls) {
    o.Require(c.fold >= 0, "fit outside any fold: " + c.stage);
    if (c.fold < 0) continue;
    stages.insert(c.stage);
    const auto& val = rep.folds[static_cast<size_t>(c.fold)].validation_rows;
    const std::set<size_t> vset(val.begin(), val.end());
    for (size_t r : c.rows) {
      o.Require(!vset.count(r), "validation row " + std::to_string(r) + " reached " + c.stage +
                                    " in fold " + std::to_string(c.fold));
    }
  }
  o.Require(stages == std::set<std::string>{"imputation", "pca", "smote", "scaler", "forest"},
            "not every fit stage was observed");
  const auto totals = ClassCounts(ds.labels, kNumStages);
  for (const auto& fr : rep.folds) {
    Labels yv;
    for (size_t r : fr.validation_rows) yv.push_back(ds.labels[r]);
    const auto in = ClassCounts(yv, kNumStages);
    for (int c = 0; c < kNumStages; ++c) {
      const double want = static_cast<double>(totals[c]) / static_cast<double>(rep.folds.size());
      o.Require(std::abs(static_cast<double>(in[c]) - want) <= 1.0,
                "fold class count off by more than 1");
    }
  }
  // The instrumentation is not vacuous: pre-split whole-dataset imputation
  // is caught.
  PipelineConfig pre_split = cfg;
  pre_split.impute_mode = ImputeMode::kPreSplit;
  pre_split.modality = Modality::kNumericOnly;
  pre_split.forest.n_trees = 2;
  bool caught = false;
  RunCv(ds, nullptr, pre_split, [&](int f, const std::string& s, const std::vector<size_t>&) {
    if (f < 0 && s == "imputation") caught = true;
  });
  o.Require(caught, "instrumentation missed whole-dataset imputation");
  if (o.pass) {
    o.detail = std::to_string(calls.size()) +
               " fit calls clean (leak-free, fold PCA); whole-dataset imputation detected";
  }
  return o;
}

// ---------------------------------------------------------------- AC7

Outcome Ac7() {
  constexpr double kMinMacroF1 = 0.90;
  constexpr double kMinAccuracy = 0.95;
  constexpr double kAblationSlack = 0.02;
  TempDir dir("ac7");
  const std::string d = dir.path().string();
  Outcome o;
  o.Require(Cli({"synth", "--rows", "5000", "--seed", "7", "--out", d}) == kExitOk, "synth failed");
  o.Require(Cli({"train", "--data", d + "/dataset.csv", "--seed", "7", "--test-fraction", "0.2",
                 "--out", d + "/model/model.json"}) == kExitOk,
            "train failed");
  o.Require(Cli({"ablate", "--data", d + "/dataset.csv", "--seed", "7", "--out", d + "/ab"}) ==
                kExitOk,
            "ablate failed");
  if (!o.pass) return o;
  auto rep = ReadReport(dir.path() / "model/train_report.csv");
  const double f1 = rep["test,macro_f1"], acc = rep["test,accuracy"];
  o.Require(f1 >= kMinMacroF1, "macro F1 " + Fmt(f1));
  o.Require(acc >= kMinAccuracy, "accuracy " + Fmt(acc));
  // config,smote,class,recall,...
  std::map<std::string, std::vector<double>> recall;
  std::istringstream in(ReadFile(dir.path() / "ab/ablation.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    recall[cells[0]].push_back(std::stod(cells[3]));
  }
  std::ostringstream abl;
  for (int c : {2, 3}) {
    const double comb = recall["combined"][c];
    const double best = std::max(recall["numeric"][c], recall["text"][c]);
    o.Require(comb >= best - kAblationSlack,
              "class " + std::to_string(c) + " combined " + Fmt(comb) + " < " + Fmt(best));
    abl << ", class " << c << " combined/numeric/text " << Fmt(comb, 3) << "/"
        << Fmt(recall["numeric"][c], 3) << "/" << Fmt(recall["text"][c], 3);
  }
  if (o.pass) o.detail = "macro F1 " + Fmt(f1) + ", accuracy " + Fmt(acc) + abl.str();
  return o;
}

// ---------------------------------------------------------------- AC8

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = ReadFile(e.path());
  }
  return out;
}

Outcome Ac8() {
  TempDir dir("ac8");
  const fs::path root = dir.path();
  Outcome o;
  for (const char* run : {"s1", "s2"}) {
    o.Require(Cli({"synth", "--rows", "1500", "--seed", "8", "--out", (root / run).string()}) ==
                  kExitOk,
              "synth failed");
  }
  o.Require(Snapshot(root / "s1") == Snapshot(root / "s2"), "synth outputs differ");
  const std::string data = (root / "s1/dataset.csv").string();
  const std::vector<std::string> model = {"--data", data, "--trees", "60", "--seed", "8"};
  auto cmd = [&](std::vector<std::string> head, const std::vector<std::string>& extra,
                 const std::string& threads) {
    head.insert(head.end(), model.begin(), model.end());
    head.insert(head.end(), extra.begin(), extra.end());
    head.push_back("--threads");
    head.push_back(threads);
    return head;
  };
  size_t files = 0;
  for (const char* threads : {"1", "8"}) {
    const fs::path out = root / (std::string("t") + threads);
    const std::string o_str = out.string();
    const std::vector<std::vector<std::string>> runs = {
        cmd({"train"}, {"--test-fraction", "0.2", "--out", o_str + "/pipe/model.json"}, threads),
        cmd({"train"},
            {"--model-kind", "averaging", "--test-fraction", "0.2", "--out",
             o_str + "/avg/model.json"},
            threads),
        cmd({"train"},
            {"--model-kind", "stacking", "--test-fraction", "0.2", "--out",
             o_str + "/stack/model.json"},
            threads),
        cmd({"cv"}, {"--out", o_str + "/cv"}, threads),
        cmd({"ablate"}, {"--out", o_str + "/ablate"}, threads),
    };
    for (const auto& r : runs) o.Require(Cli(r) == kExitOk, "command failed: " + r[0]);
    for (const char* m : {"pipe", "stack"}) {
      o.Require(Cli({"evaluate", "--model", o_str + "/" + m + "/model.json", "--data", data,
                     "--threads", threads, "--out", o_str + "/eval_" + m}) == kExitOk,
                "evaluate failed");
    }
    o.Require(Cli({"explain", "--model", o_str + "/pipe/model.json", "--data", data, "--mode",
                   "sampling", "--samples", "5", "--background-rows", "20", "--permutations",
                   "32", "--seed", "8", "--threads", threads, "--out", o_str + "/explain"}) ==
                  kExitOk,
              "explain failed");
  }
  const auto a = Snapshot(root / "t1"), b = Snapshot(root / "t8");
  files = a.size();
  o.Require(a.size() == b.size(), "different file sets");
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    o.Require(it != b.end() && it->second == bytes, "differs across threads: " + name);
  }
  if (o.pass) {
    o.detail = "synth repeat identical; " + std::to_string(files) +
               " output files identical with --threads 1 vs 8";
  }
  return o;
}

// ---------------------------------------------------------------- AC9

Outcome Ac9() {
  constexpr int kCases = 1000;
  constexpr double kTol = 1e-12;
  Rng rng(909);
  Outcome o;
  double worst_trap = 0.0, worst_mono = 0.0, worst_weighted = 0.0;
  for (int t = 0; t < kCases && o.pass; ++t) {
    const size_t n = 4 + rng.Below(300);
    Labels y(n), yp(n);
    for (size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.Below(kNumStages));
      yp[i] = rng.Bernoulli(0.7) ? y[i] : static_cast<int>(rng.Below(kNumStages));
    }
    const EvalReport r = Evaluate(y, yp, kNumStages);
    o.Require(r.prf.weighted.recall == r.accuracy, "weighted recall != accuracy");
    double wr = 0.0;
    for (int c = 0; c < kNumStages; ++c) {
      wr += r.prf.per_class[c].recall * static_cast<double>(r.prf.per_class[c].support) /
            static_cast<double>(n);
    }
    worst_weighted = std::max(worst_weighted, std::abs(wr - r.accuracy));

    std::vector<int> pos(n);
    std::vector<double> s(n);
    for (size_t i = 0; i < n; ++i) {
      pos[i] = rng.Bernoulli(0.3);
      // Coarse grid so ties occur.
      s[i] = static_cast<double>(rng.Below(t % 2 ? 16 : 1000)) / 64.0;
    }
    pos[0] = 1;
    pos[1] = 0;
    const double auc = BinaryAuc(pos, s);
    worst_trap = std::max(worst_trap, std::abs(auc - TrapezoidArea(RocCurve(pos, s))));
    for (const auto& g : std::vector<std::function<double(double)>>{
             [](double v) { return std::exp(v); }, [](double v) { return v * v * v; },
             [](double v) { return 3.0 * v - 7.0; }}) {
      std::vector<double> gs(n);
      for (size_t i = 0; i < n; ++i) gs[i] = g(s[i]);
      worst_mono = std::max(worst_mono, std::abs(BinaryAuc(pos, gs) - auc));
    }
  }
  o.Require(worst_weighted <= kTol, "support-weighted recall off accuracy");
  o.Require(worst_trap <= kTol, "rank AUC vs trapezoid " + std::to_string(worst_trap));
  o.Require(worst_mono <= kTol, "AUC changed under a monotone map");
  if (o.pass) {
    std::ostringstream d;
    d << kCases << " cases; max |rank AUC - trapezoid| " << worst_trap
      << ", max monotone change " << worst_mono;
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- AC10

Outcome Ac10() {
  constexpr double kBudgetSeconds = 120.0;
  Outcome o;
  // Contracts on library-level synthetic data.
  SynthConfig sc;
  sc.n_rows = 2000;
  sc.seed = 10;
  const Dataset ds = GenerateSynthetic(sc);
  auto [train, test] = SplitTrainTest(ds, 0.2, 10);
  const auto etr = EmbedForPipeline(train, {}, kDefaultTextPlaceholder);
  const auto ete = EmbedForPipeline(test, {}, kDefaultTextPlaceholder);
  ModalityMatrices mtr;
  const auto in = FitModalityInputs(train, etr, 0.98, kDefaultTextPlaceholder, &mtr);
  const ModalityMatrices mte = ApplyModalityInputs(in, test, ete);
  EnsembleConfig cfg;
  cfg.forest.n_trees = 60;
  cfg.seed = 10;
  const AveragingModel avg = AveragingFit(mtr.numeric, mtr.text, train.labels, cfg);
  const AveragingModel swapped{avg.text, avg.numeric};
  o.Require(AveragingPredictProba(avg, mte.numeric, mte.text) ==
                AveragingPredictProba(swapped, mte.text, mte.numeric),
            "averaging not symmetric under base swap");
  std::vector<int> predicted(train.rows(), 0);
  bool disjoint = true;
  StackingFit(mtr.numeric, mtr.text, train.labels, cfg,
              [&](const std::vector<size_t>& tr, const std::vector<size_t>& pr) {
                const std::set<size_t> trs(tr.begin(), tr.end());
                for (size_t r : pr) {
                  disjoint = disjoint && !trs.count(r);
                  ++predicted[r];
                }
              });
  o.Require(disjoint, "stacking meta-feature row was in its base training fold");
  o.Require(std::all_of(predicted.begin(), predicted.end(), [](int c) { return c == 1; }),
            "a row did not get exactly one out-of-fold meta-feature");

  // End to end through the command line at 5000 rows.
  TempDir dir("ac10");
  const std::string d = dir.path().string();
  o.Require(Cli({"synth", "--rows", "5000", "--seed", "10", "--out", d}) == kExitOk,
            "synth failed");
  std::ostringstream timing;
  for (const char* kind : {"averaging", "stacking"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string mdir = d + "/" + kind;
    o.Require(Cli({"train", "--data", d + "/dataset.csv", "--model-kind", kind, "--seed", "10",
                   "--test-fraction", "0.2", "--out", mdir + "/model.json"}) == kExitOk,
              std::string(kind) + " train failed");
    o.Require(Cli({"evaluate", "--model", mdir + "/model.json", "--data", d + "/dataset.csv",
                   "--out", mdir + "/eval"}) == kExitOk,
              std::string(kind) + " evaluate failed");
    const double secs = Seconds(t0);
    o.Require(secs < kBudgetSeconds, std::string(kind) + " took " + Fmt(secs, 1) + " s");
    const double f1 = ReadReport(mdir + "/train_report.csv")["test,macro_f1"];
    timing << (timing.tellp() > 0 ? ", " : "") << kind << " " << Fmt(secs, 1)
           << " s (test macro F1 " << Fmt(f1, 3) << ")";
  }
  if (o.pass) o.detail = "swap symmetric, OOF clean; " + timing.str();
  return o;
}

struct Criterion {
  const char* id;
  const char* title;
  double budget_seconds;  // 0 = no budget
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace stagefuse

int main() {
  using namespace stagefuse;
  const std::vector<Criterion> criteria = {
      {"AC1", "metric fidelity on the reference confusion matrix", 1.0, Ac1},
      {"AC2", "exact Shapley vs brute-force enumeration", 10.0, Ac2},
      {"AC3", "sampled Shapley vs exact", 120.0, Ac3},
      {"AC4", "SMOTE balance and segment membership", 60.0, Ac4},
      {"AC5", "PCA orthonormality, EVR and minimal k", 60.0, Ac5},
      {"AC6", "cross-validation hygiene", 30.0, Ac6},
      {"AC7", "end-to-end synthetic benchmark and ablation", 120.0, Ac7},
      {"AC8", "determinism across repeats and thread counts", 0.0, Ac8},
      {"AC9", "metric identities", 30.0, Ac9},
      {"AC10", "ensemble contracts and runtime", 0.0, Ac10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = Seconds(t0);
    if (o.pass && c.budget_seconds > 0 && secs >= c.budget_seconds) {
      o.pass = false;
      o.detail = "over time budget of " + FormatFixed(c.budget_seconds, 0) + " s";
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.title << ": " << o.detail
              << " (" << FormatFixed(secs, 2) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed"
                              : std::to_string(failures) + " acceptance criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
