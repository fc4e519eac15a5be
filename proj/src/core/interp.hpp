#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/lm.hpp"

namespace mdr {

// Convex mixture weights aligned to an ordered list of models.
struct InterpolationWeights {
  std::vector<std::string> names;  // optional; empty or same length as values
  std::vector<double> values;

  // Throws InvalidArgument unless every weight is in [0,1] and they sum to 1.
  void validate() const;
};

struct EmOptions {
  int max_iters = 100;
  double tol = 1e-5;  // stop when the L1 weight change falls below this
};

struct EmResult {
  InterpolationWeights weights;
  // Dev log10-likelihood at the initial uniform weights, then after every
  // update; non-decreasing.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

// Token-level EM over the dev corpus (every token plus </s>). Components must
// give every dev token positive probability; mle models are rejected.
EmResult em_fit(std::span<const LanguageModel* const> components, const DomainCorpus& dev,
                const EmOptions& options = {});

// Per-token linear mixture, combined in the probability domain.
class InterpolatedLM final : public LanguageModel {
 public:
  InterpolatedLM(std::vector<std::shared_ptr<const LanguageModel>> components, InterpolationWeights weights);

  double log_prob(std::span<const Token> history, const Token& word) const override;
  std::vector<double> token_log_probs(std::span<const Token> tokens) const override;

  const InterpolationWeights& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

 private:
  std::vector<std::shared_ptr<const LanguageModel>> components_;
  InterpolationWeights weights_;
};

// {"models": [names], "weights": [floats]} with 9 decimals per weight.
void save_weights(const InterpolationWeights& weights, const std::filesystem::path& path);
InterpolationWeights load_weights(const std::filesystem::path& path);
std::string weights_to_json(const InterpolationWeights& weights);

}  // namespace mdr
