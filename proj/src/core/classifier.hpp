#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core/corpus.hpp"

namespace mdr {

// Label of the fallback domain chosen when no classifier is confident.
inline constexpr const char* kOtherDomain = "other";

// Joins the tokens of an n-gram feature (U+241F SYMBOL FOR UNIT SEPARATOR).
inline constexpr const char* kFeatureSeparator = "\xE2\x90\x9F";

// Sparse feature vector; index 0 is the bias slot and is always present.
struct SparseVector {
  std::size_t dimension = 1;
  std::vector<std::pair<std::size_t, double>> entries;  // ascending index
};

struct VectorizerOptions {
  int max_order = 3;
  std::size_t min_df = 2;
};

// tf-idf over token n-grams of orders 1..max_order.
// idf(f) = ln((1 + N_docs) / (1 + df(f))) + 1; tf is the raw count; the
// non-bias part of each vector is L2-normalized.
class TfIdfVectorizer {
 public:
  TfIdfVectorizer() = default;
  TfIdfVectorizer(std::vector<std::string> features, std::vector<double> idf, int max_order = 3);

  static TfIdfVectorizer fit(std::span<const Sentence> documents, const VectorizerOptions& options = {});

  SparseVector vectorize(const Sentence& tokens) const;

  // Feature count including the bias slot.
  std::size_t dimension() const { return features_.size() + 1; }
  const std::vector<std::string>& features() const { return features_; }
  const std::vector<double>& idf() const { return idf_; }
  // 1-based feature index (0 is bias), or 0 when unknown.
  std::size_t index_of(const std::string& feature) const;

  bool operator==(const TfIdfVectorizer& other) const {
    return features_ == other.features_ && idf_ == other.idf_ && max_order_ == other.max_order_;
  }

 private:
  std::vector<std::string> features_;  // without the bias slot
  std::vector<double> idf_;            // aligned with features_
  std::unordered_map<std::string, std::size_t> index_;
  int max_order_ = 3;
};

// All n-grams of orders 1..max_order as feature strings.
std::vector<std::string> ngram_features(const Sentence& tokens, int max_order);

struct DomainLRModel {
  std::string domain_id;
  std::vector<double> theta;  // theta[0] is the bias
};

double sigmoid(double z);
double dot(const DomainLRModel& model, const SparseVector& x);
// P(domain | x) = sigmoid(theta . x); throws on dimension mismatch.
double predict_prob(const DomainLRModel& model, const SparseVector& x);

struct LabeledVector {
  SparseVector x;
  double label = 0.0;  // 1 for the domain, 0 otherwise
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Mean binary cross-entropy plus (l2/2)·||theta without bias||^2.
LossAndGradient lr_objective(std::span<const double> theta, std::span<const LabeledVector> data, double l2);

struct LrTrainOptions {
  double l2 = 1e-4;
  int epochs = 500;
  double step = 0.5;
  // Harmonic decay: step_t = step / (1 + decay * t).
  double decay = 0.01;
};

struct LrTrainResult {
  DomainLRModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Deterministic full-batch gradient descent. The L2 term is applied as a
// proximal shrink, which stays stable for any l2.
LrTrainResult train_lr(const std::string& domain_id, std::span<const Sentence> positives,
                       std::span<const Sentence> negatives, const TfIdfVectorizer& vectorizer,
                       const LrTrainOptions& options = {});

struct DomainDecision {
  std::string domain;  // a model's domain id, or kOtherDomain
  std::vector<std::pair<std::string, double>> scores;  // ascending domain id
  double threshold = 0.5;
};

// argmax over model probabilities when it reaches the threshold, else
// "other". Equal scores resolve to the lexicographically smallest id.
DomainDecision decide(std::vector<std::pair<std::string, double>> scores, double threshold);

DomainDecision classify(std::span<const DomainLRModel> models, const TfIdfVectorizer& vectorizer,
                        const Sentence& tokens, double threshold);

// A vectorizer with one LR model per domain.
struct DomainClassifier {
  TfIdfVectorizer vectorizer;
  std::vector<DomainLRModel> models;  // ascending domain id

  DomainDecision classify(const Sentence& tokens, double threshold) const {
    return mdr::classify(models, vectorizer, tokens, threshold);
  }
};

struct ClassifierTrainOptions {
  VectorizerOptions vectorizer;
  LrTrainOptions lr;
};

// One model per domain corpus: its sentences are positives, the sentences of
// every other domain corpus and of other_corpus (may be empty) negatives.
DomainClassifier train_classifier(std::span<const DomainCorpus> domains, const DomainCorpus& other_corpus,
                                  const ClassifierTrainOptions& options = {});

// {"domain": id, "features": [...], "idf": [...], "theta": [...], "bias": b}
std::string model_to_json(const DomainLRModel& model, const TfIdfVectorizer& vectorizer);
// Writes <dir>/<domain>.json for every model; returns the paths.
std::vector<std::filesystem::path> save_classifier(const DomainClassifier& classifier,
                                                   const std::filesystem::path& dir);
// All files must share the same vectorizer.
DomainClassifier load_classifier(std::span<const std::filesystem::path> files);

}  // namespace mdr
