#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/classifier.hpp"
#include "core/corpus.hpp"
#include "core/lm.hpp"

namespace mdr {

struct Hypothesis {
  std::string text;
  Sentence tokens;
  double am_score = 0.0;  // acoustic log10 score
  double lm_score = 0.0;  // first-pass LM log10 score

  // Scores are divided by token count + 1, like LM sentence scores.
  double normalizer() const { return static_cast<double>(tokens.size() + 1); }
};

struct NBestList {
  std::string query_id;
  std::optional<std::string> region;
  std::vector<Hypothesis> hyps;  // hyps[0] is the first-pass best
};

struct RerankConfig {
  double alpha = 0.5;  // rescoring LM share of the language score
  double beta = 0.3;   // domain LM share in the geographical branch
  double eta = 0.6;    // acoustic share of the final score
  double mu = 0.3;     // first-pass LM share of the language part
  double threshold = 0.5;

  std::string rescoring_lm;
  // domain id -> LM name; must bind kOtherDomain.
  std::map<std::string, std::string> domain_lms;
  // The domain whose branch mixes in a region's geographical LM.
  std::string geo_domain = "navigation";
  // region key -> LM name.
  std::map<std::string, std::string> geo_lms;

  double gamma() const { return 1.0 - alpha - beta; }
  void validate() const;
};

class ModelRegistry {
 public:
  void add(const std::string& name, std::shared_ptr<const LanguageModel> lm);
  const LanguageModel& resolve(const std::string& name) const;
  bool contains(const std::string& name) const { return models_.count(name) != 0; }

  // Throws unless every name the config references resolves.
  void check(const RerankConfig& config) const;

 private:
  std::map<std::string, std::shared_ptr<const LanguageModel>> models_;
};

// Domain-conditioned language score from length-normalized log10 scores:
//   other:       alpha·P_r + (1-alpha)·P_o
//   geo domain:  alpha·P_r + beta·P_d + gamma·P_g   (region LM available)
//                alpha·P_r + (1-alpha)·P_d          (no region LM)
//   any other:   alpha·P_r + (1-alpha)·P_d
double language_score(const Hypothesis& hyp, const std::string& domain, const std::optional<std::string>& region,
                      const RerankConfig& config, const ModelRegistry& registry);

// eta·A + (1-eta)·(mu·L + (1-mu)·lang) with A and L length-normalized.
double final_score(const Hypothesis& hyp, double lang, const RerankConfig& config);

struct RerankResult {
  NBestList list;               // hypotheses in descending score order
  std::vector<double> scores;   // aligned with list.hyps
  DomainDecision decision;
};

// Scores every hypothesis under the given decision and stable-sorts.
RerankResult rerank(const NBestList& list, const DomainDecision& decision, const RerankConfig& config,
                    const ModelRegistry& registry);

// Classifies the first-pass best hypothesis, then reranks.
RerankResult rerank(const NBestList& list, const DomainClassifier& classifier, const RerankConfig& config,
                    const ModelRegistry& registry);

// Runs decide(i) + rerank over a batch on `jobs` threads; output order is the
// input order regardless of jobs.
template <typename Decide>
std::vector<RerankResult> rerank_batch(std::span<const NBestList> lists, Decide&& decide_fn,
                                       const RerankConfig& config, const ModelRegistry& registry, unsigned jobs);

// The decision used when no classifier runs: every query goes to `domain`.
DomainDecision fixed_decision(const std::string& domain, double threshold = 0.5);

// Rerank config JSON: the RerankConfig fields plus
//   "models": {name: arpa path}, "classifier": [model json paths],
//   "tokenizer": "char" | "whitespace".
// Relative paths resolve against model_dir.
struct RerankSetup {
  RerankConfig config;
  ModelRegistry registry;
  std::optional<DomainClassifier> classifier;
  TokenizerMode tokenizer = TokenizerMode::kChar;
};

RerankSetup load_rerank_setup(const std::filesystem::path& config_path, const std::filesystem::path& model_dir);
RerankConfig rerank_config_from_json(const std::string& text);

}  // namespace mdr

#include "core/rerank_batch.inl"
