#include "core/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "core/errors.hpp"

namespace mdr {

// --- features ---------------------------------------------------------------

std::vector<std::string> ngram_features(const Sentence& tokens, int max_order) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string feature = tokens[i];
    out.push_back(feature);
    for (int k = 1; k < max_order && i + static_cast<std::size_t>(k) < tokens.size(); ++k) {
      feature += kFeatureSeparator;
      feature += tokens[i + static_cast<std::size_t>(k)];
      out.push_back(feature);
    }
  }
  return out;
}

TfIdfVectorizer::TfIdfVectorizer(std::vector<std::string> features, std::vector<double> idf, int max_order)
    : features_(std::move(features)), idf_(std::move(idf)), max_order_(max_order) {
  if (features_.size() != idf_.size()) throw InvalidArgument("vectorizer: features and idf differ in length");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!(std::isfinite(idf_[i]) && idf_[i] > 0.0)) throw InvalidArgument("vectorizer: idf must be finite and > 0");
    if (!index_.emplace(features_[i], i + 1).second)
      throw InvalidArgument("vectorizer: duplicate feature '" + features_[i] + "'");
  }
}

TfIdfVectorizer TfIdfVectorizer::fit(std::span<const Sentence> documents, const VectorizerOptions& options) {
  if (documents.empty()) throw InvalidArgument("cannot fit a vectorizer on an empty corpus");
  if (options.max_order < 1) throw InvalidArgument("vectorizer max order must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    auto feats = ngram_features(doc, options.max_order);
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
    for (auto& f : feats) ++df[std::move(f)];
  }
  const auto n_docs = static_cast<double>(documents.size());
  std::vector<std::string> features;
  std::vector<double> idf;
  for (const auto& [feature, count] : df) {
    if (count < options.min_df) continue;
    features.push_back(feature);
    idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfIdfVectorizer(std::move(features), std::move(idf), options.max_order);
}

std::size_t TfIdfVectorizer::index_of(const std::string& feature) const {
  auto it = index_.find(feature);
  return it == index_.end() ? 0 : it->second;
}

SparseVector TfIdfVectorizer::vectorize(const Sentence& tokens) const {
  std::map<std::size_t, double> tf;
  for (const auto& f : ngram_features(tokens, max_order_)) {
    if (const std::size_t idx = index_of(f)) tf[idx] += 1.0;
  }
  SparseVector v;
  v.dimension = dimension();
  v.entries.emplace_back(0, 1.0);
  double norm = 0.0;
  for (auto& [idx, value] : tf) {
    value *= idf_[idx - 1];
    norm += value * value;
  }
  norm = std::sqrt(norm);
  for (const auto& [idx, value] : tf) v.entries.emplace_back(idx, value / norm);
  return v;
}

// --- logistic regression ----------------------------------------------------

double sigmoid(double z) {
  constexpr double kLow = std::numeric_limits<double>::min();
  constexpr double kHigh = 1.0 - 0x1.0p-53;
  const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, kLow, kHigh);
}

double dot(const DomainLRModel& model, const SparseVector& x) {
  if (x.dimension != model.theta.size())
    throw InvalidArgument(fmt::format("feature dimension {} does not match model '{}' dimension {}", x.dimension,
                                      model.domain_id, model.theta.size()));
  double z = 0.0;
  for (const auto& [idx, value] : x.entries) z += model.theta[idx] * value;
  return z;
}

double predict_prob(const DomainLRModel& model, const SparseVector& x) { return sigmoid(dot(model, x)); }

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LossAndGradient lr_objective(std::span<const double> theta, std::span<const LabeledVector> data, double l2) {
  LossAndGradient out;
  out.gradient.assign(theta.size(), 0.0);
  if (data.empty()) throw InvalidArgument("LR objective over an empty data set");
  const auto n = static_cast<double>(data.size());
  for (const auto& ex : data) {
    if (ex.x.dimension != theta.size()) throw InvalidArgument("LR objective: dimension mismatch");
    double z = 0.0;
    for (const auto& [idx, value] : ex.x.entries) z += theta[idx] * value;
    out.loss += softplus(z) - ex.label * z;
    const double residual = sigmoid(z) - ex.label;
    for (const auto& [idx, value] : ex.x.entries) out.gradient[idx] += residual * value;
  }
  out.loss /= n;
  for (auto& g : out.gradient) g /= n;
  for (std::size_t i = 1; i < theta.size(); ++i) {
    out.loss += 0.5 * l2 * theta[i] * theta[i];
    out.gradient[i] += l2 * theta[i];
  }
  return out;
}

LrTrainResult train_lr(const std::string& domain_id, std::span<const Sentence> positives,
                       std::span<const Sentence> negatives, const TfIdfVectorizer& vectorizer,
                       const LrTrainOptions& options) {
  if (positives.empty() || negatives.empty())
    throw InvalidArgument("LR model '" + domain_id + "' needs both positive and negative examples");
  if (!(options.l2 >= 0.0) || options.epochs < 0 || !(options.step > 0.0) || !(options.decay >= 0.0))
    throw InvalidArgument("invalid LR training options");

  std::vector<LabeledVector> data;
  data.reserve(positives.size() + negatives.size());
  for (const auto& s : positives) data.push_back({vectorizer.vectorize(s), 1.0});
  for (const auto& s : negatives) data.push_back({vectorizer.vectorize(s), 0.0});

  LrTrainResult result;
  result.model.domain_id = domain_id;
  auto& theta = result.model.theta;
  theta.assign(vectorizer.dimension(), 0.0);
  result.initial_loss = lr_objective(theta, data, options.l2).loss;

  const auto n = static_cast<double>(data.size());
  std::vector<double> grad(theta.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& ex : data) {
      double z = 0.0;
      for (const auto& [idx, value] : ex.x.entries) z += theta[idx] * value;
      const double residual = sigmoid(z) - ex.label;
      for (const auto& [idx, value] : ex.x.entries) grad[idx] += residual * value;
    }
    const double step = options.step / (1.0 + options.decay * epoch);
    const double shrink = 1.0 / (1.0 + step * options.l2);
    theta[0] -= step * grad[0] / n;
    for (std::size_t i = 1; i < theta.size(); ++i) theta[i] = (theta[i] - step * grad[i] / n) * shrink;
  }
  result.final_loss = lr_objective(theta, data, options.l2).loss;
  return result;
}

DomainDecision decide(std::vector<std::pair<std::string, double>> scores, double threshold) {
  if (scores.empty()) throw InvalidArgument("domain decision needs at least one model score");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("decision threshold must lie in (0, 1)");
  std::sort(scores.begin(), scores.end());
  DomainDecision d;
  d.threshold = threshold;
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].second > scores[best].second) best = i;
  d.domain = scores[best].second >= threshold ? scores[best].first : kOtherDomain;
  d.scores = std::move(scores);
  return d;
}

DomainDecision classify(std::span<const DomainLRModel> models, const TfIdfVectorizer& vectorizer,
                        const Sentence& tokens, double threshold) {
  if (models.empty()) throw InvalidArgument("classify needs at least one domain model");
  const SparseVector x = vectorizer.vectorize(tokens);
  std::vector<std::pair<std::string, double>> scores;
  scores.reserve(models.size());
  for (const auto& m : models) scores.emplace_back(m.domain_id, predict_prob(m, x));
  return decide(std::move(scores), threshold);
}

DomainClassifier train_classifier(std::span<const DomainCorpus> domains, const DomainCorpus& other_corpus,
                                  const ClassifierTrainOptions& options) {
  if (domains.empty()) throw InvalidArgument("classifier training needs at least one domain");
  std::set<std::string> ids;
  std::vector<Sentence> all;
  for (const auto& d : domains) {
    if (d.domain_id == kOtherDomain) throw InvalidArgument("'other' is reserved for the fallback domain");
    if (!ids.insert(d.domain_id).second) throw InvalidArgument("duplicate domain '" + d.domain_id + "'");
    all.insert(all.end(), d.sentences.begin(), d.sentences.end());
  }
  all.insert(all.end(), other_corpus.sentences.begin(), other_corpus.sentences.end());

  DomainClassifier out;
  out.vectorizer = TfIdfVectorizer::fit(all, options.vectorizer);
  for (const auto& d : domains) {
    std::vector<Sentence> negatives;
    for (const auto& other : domains)
      if (&other != &d) negatives.insert(negatives.end(), other.sentences.begin(), other.sentences.end());
    negatives.insert(negatives.end(), other_corpus.sentences.begin(), other_corpus.sentences.end());
    out.models.push_back(train_lr(d.domain_id, d.sentences, negatives, out.vectorizer, options.lr).model);
  }
  std::sort(out.models.begin(), out.models.end(),
            [](const DomainLRModel& a, const DomainLRModel& b) { return a.domain_id < b.domain_id; });
  return out;
}

// --- files ------------------------------------------------------------------

std::string model_to_json(const DomainLRModel& model, const TfIdfVectorizer& vectorizer) {
  if (model.theta.size() != vectorizer.dimension())
    throw InvalidArgument("model '" + model.domain_id + "' does not match the vectorizer");
  nlohmann::ordered_json doc;
  doc["domain"] = model.domain_id;
  doc["features"] = vectorizer.features();
  doc["idf"] = vectorizer.idf();
  doc["theta"] = std::vector<double>(model.theta.begin() + 1, model.theta.end());
  doc["bias"] = model.theta[0];
  return doc.dump() + "\n";
}

std::vector<std::filesystem::path> save_classifier(const DomainClassifier& classifier,
                                                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "'");
  std::vector<std::filesystem::path> paths;
  for (const auto& m : classifier.models) {
    const auto path = dir / (m.domain_id + ".json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << model_to_json(m, classifier.vectorizer);
    if (!out) throw IoError("write failed on '" + path.string() + "'");
    paths.push_back(path);
  }
  return paths;
}

DomainClassifier load_classifier(std::span<const std::filesystem::path> files) {
  if (files.empty()) throw InvalidArgument("no classifier model files given");
  DomainClassifier out;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i], std::ios::binary);
    if (!in) throw IoError("cannot open '" + files[i].string() + "'");
    DomainLRModel model;
    TfIdfVectorizer vectorizer;
    try {
      const auto doc = nlohmann::json::parse(in);
      model.domain_id = doc.at("domain").get<std::string>();
      auto features = doc.at("features").get<std::vector<std::string>>();
      auto idf = doc.at("idf").get<std::vector<double>>();
      const auto theta = doc.at("theta").get<std::vector<double>>();
      if (theta.size() != features.size()) throw ParseError("theta and features differ in length");
      model.theta.push_back(doc.at("bias").get<double>());
      model.theta.insert(model.theta.end(), theta.begin(), theta.end());
      vectorizer = TfIdfVectorizer(std::move(features), std::move(idf));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(files[i].string() + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(files[i].string() + ": " + e.what());
    }
    if (i == 0) {
      out.vectorizer = std::move(vectorizer);
    } else if (!(vectorizer == out.vectorizer)) {
      throw InvalidArgument(files[i].string() + ": vectorizer differs from '" + files[0].string() + "'");
    }
    out.models.push_back(std::move(model));
  }
  std::sort(out.models.begin(), out.models.end(),
            [](const DomainLRModel& a, const DomainLRModel& b) { return a.domain_id < b.domain_id; });
  for (std::size_t i = 1; i < out.models.size(); ++i)
    if (out.models[i].domain_id == out.models[i - 1].domain_id)
      throw InvalidArgument("duplicate classifier domain '" + out.models[i].domain_id + "'");
  return out;
}

}  // namespace mdr
