#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/classifier.hpp"
#include "core/eval.hpp"
#include "core/interp.hpp"
#include "core/rerank.hpp"
#include "core/sampler.hpp"
#include "core/synth.hpp"

namespace mdr {

enum class ClassifierMode { kNone, kLr, kGold };

// One row of the configuration ladder.
struct LadderConfig {
  std::string name;
  bool rescore = true;                  // false: keep the first-pass best
  ClassifierMode classifier = ClassifierMode::kNone;
  std::string rescoring_lm = "mixed";   // "mixed" or "sampled"
  bool domain_lms = false;              // per-domain LMs instead of the general LM
  bool geo_lms = false;                 // region LMs in the navigation branch
};

// C1..C7: first pass, general rescoring, + geo LMs, + LR domain LMs,
// gold domain labels, sampled rescoring LM, sampled + LR domain LMs.
std::vector<LadderConfig> default_ladder();

struct LadderOptions {
  SynthOptions world;  // world.seed is the master seed
  NBestGenOptions nbest{.n = 8, .noise_rate = 0.03, .homophone_rate = 0.5};
  int domain_order = 3;
  int rescoring_order = 4;
  // Sparse n-gram features need more descent than the library default.
  ClassifierTrainOptions classifier{.vectorizer = {}, .lr = {.l2 = 1e-4, .epochs = 2000, .step = 2.0, .decay = 0.01}};
  RerankConfig rerank;  // alpha, beta, eta, mu, threshold
  unsigned jobs = 1;
};

struct LadderTestSet {
  std::string name;
  std::vector<NBestList> lists;
  std::vector<Sentence> refs;
  std::vector<std::string> gold;
};

// Everything trained from the synthetic world. Registry names: "general",
// "navigation", "music", "chat", "geo:<region>", "rescore:mixed",
// "rescore:sampled", "decoy".
struct LadderArtifacts {
  ModelRegistry registry;
  std::vector<std::string> regions;
  DomainClassifier classifier;
  EmResult em;
  SamplingPlan plan;
  std::vector<LadderTestSet> test_sets;
};

LadderArtifacts build_ladder(const LadderOptions& options);

struct LadderRow {
  LadderConfig config;
  std::vector<CerReport> cer;  // aligned with test_sets
};

// Rerank config for one ladder row, built on top of base.
RerankConfig ladder_rerank_config(const LadderConfig& config, const LadderArtifacts& artifacts,
                                  const RerankConfig& base);

std::vector<LadderRow> run_ladder(const LadderArtifacts& artifacts, std::span<const LadderConfig> configs,
                                  const RerankConfig& base, unsigned jobs);

std::string ladder_tsv(const LadderArtifacts& artifacts, std::span<const LadderRow> rows);
std::string ladder_report_json(const LadderArtifacts& artifacts, std::span<const LadderRow> rows,
                               const LadderOptions& options);

// build + run the default ladder; writes ladder.tsv and report.json into out_dir.
std::vector<LadderRow> run_synthetic_ladder(const LadderOptions& options, const std::filesystem::path& out_dir);

}  // namespace mdr
