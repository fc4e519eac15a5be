#include "core/interp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/ngram.hpp"

namespace mdr {

void InterpolationWeights::validate() const {
  if (values.empty()) throw InvalidArgument("interpolation weights are empty");
  if (!names.empty() && names.size() != values.size())
    throw InvalidArgument("interpolation weight names and values differ in length");
  double sum = 0.0;
  for (double w : values) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument(fmt::format("interpolation weight {} outside [0,1]", w));
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument(fmt::format("interpolation weights sum to {}, not 1", sum));
}

EmResult em_fit(std::span<const LanguageModel* const> components, const DomainCorpus& dev,
                const EmOptions& options) {
  if (components.empty()) throw InvalidArgument("EM needs at least one component model");
  if (dev.empty()) throw InvalidArgument("EM needs a non-empty development corpus");
  if (options.max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
  if (!(options.tol >= 0.0)) throw InvalidArgument("tol must be >= 0");

  const std::size_t k = components.size();
  for (std::size_t j = 0; j < k; ++j) {
    const auto* ngram = dynamic_cast<const NGramModel*>(components[j]);
    if (ngram && ngram->smoothing() == Smoothing::kMle)
      throw InvalidArgument(fmt::format("component {} is an unsmoothed (mle) model; EM requires smoothed models", j));
  }

  // probs[t * k + j] = P_j(token t | context)
  std::vector<double> probs;
  for (const auto& sentence : dev.sentences) {
    std::vector<std::vector<double>> per_model;
    per_model.reserve(k);
    for (const auto* lm : components) per_model.push_back(lm->token_log_probs(sentence));
    for (std::size_t t = 0; t < per_model[0].size(); ++t) {
      for (std::size_t j = 0; j < k; ++j) {
        const double lp = per_model[j][t];
        if (lp <= kLogZero)
          throw InvalidArgument(fmt::format("component {} assigns zero probability to a dev token", j));
        probs.push_back(std::pow(10.0, lp));
      }
    }
  }
  const std::size_t tokens = probs.size() / k;

  EmResult result;
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  std::vector<double> next(k);

  // Extended precision keeps roundoff below the likelihood gains near
  // convergence.
  auto log_likelihood = [&](const std::vector<double>& weights) {
    long double ll = 0.0L;
    for (std::size_t t = 0; t < tokens; ++t) {
      long double mix = 0.0L;
      for (std::size_t j = 0; j < k; ++j) mix += static_cast<long double>(weights[j]) * probs[t * k + j];
      ll += std::log10(mix);
    }
    return static_cast<double>(ll);
  };

  result.log_likelihood.push_back(log_likelihood(w));
  for (int iter = 0; iter < options.max_iters; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t t = 0; t < tokens; ++t) {
      double mix = 0.0;
      for (std::size_t j = 0; j < k; ++j) mix += w[j] * probs[t * k + j];
      for (std::size_t j = 0; j < k; ++j) next[j] += w[j] * probs[t * k + j] / mix;
    }
    double sum = 0.0;
    for (auto& v : next) {
      v /= static_cast<double>(tokens);
      sum += v;
    }
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      next[j] /= sum;  // removes rounding drift off the simplex
      change += std::abs(next[j] - w[j]);
    }
    w.swap(next);
    result.iterations = iter + 1;
    result.log_likelihood.push_back(log_likelihood(w));
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.weights.values = std::move(w);
  return result;
}

// --- InterpolatedLM ---------------------------------------------------------

InterpolatedLM::InterpolatedLM(std::vector<std::shared_ptr<const LanguageModel>> components,
                               InterpolationWeights weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw InvalidArgument("interpolated model needs at least one component");
  if (components_.size() != weights_.values.size())
    throw InvalidArgument("interpolated model: component and weight counts differ");
  for (const auto& c : components_)
    if (!c) throw InvalidArgument("interpolated model: null component");
  weights_.validate();
}

namespace {

double mix_log10(std::span<const double> weights, std::span<const double> log_probs) {
  double p = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (weights[j] > 0.0) p += weights[j] * std::pow(10.0, log_probs[j]);
  return p > 0.0 ? std::log10(p) : kLogZero;
}

}  // namespace

double InterpolatedLM::log_prob(std::span<const Token> history, const Token& word) const {
  std::vector<double> lps;
  lps.reserve(components_.size());
  for (const auto& c : components_) lps.push_back(c->log_prob(history, word));
  return mix_log10(weights_.values, lps);
}

std::vector<double> InterpolatedLM::token_log_probs(std::span<const Token> tokens) const {
  std::vector<std::vector<double>> per_model;
  per_model.reserve(components_.size());
  for (const auto& c : components_) per_model.push_back(c->token_log_probs(tokens));
  std::vector<double> out(tokens.size() + 1);
  std::vector<double> column(components_.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t j = 0; j < components_.size(); ++j) column[j] = per_model[j][t];
    out[t] = mix_log10(weights_.values, column);
  }
  return out;
}

// --- weights file -----------------------------------------------------------

std::string weights_to_json(const InterpolationWeights& weights) {
  std::string out = "{\"models\": [";
  for (std::size_t i = 0; i < weights.values.size(); ++i) {
    if (i) out += ", ";
    const std::string name = i < weights.names.size() ? weights.names[i] : fmt::format("model{}", i);
    out += nlohmann::json(name).dump();
  }
  out += "], \"weights\": [";
  for (std::size_t i = 0; i < weights.values.size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("{:.9f}", weights.values[i]);
  }
  out += "]}\n";
  return out;
}

void save_weights(const InterpolationWeights& weights, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << weights_to_json(weights);
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

InterpolationWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  InterpolationWeights w;
  try {
    const auto doc = nlohmann::json::parse(in);
    w.names = doc.at("models").get<std::vector<std::string>>();
    w.values = doc.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (w.names.size() != w.values.size()) throw ParseError(path.string() + ": models and weights differ in length");
  // The file carries 9 decimals, so allow for the rounding of each entry.
  double sum = 0.0;
  for (double v : w.values) sum += v;
  if (std::abs(sum - 1.0) > 1e-9 * static_cast<double>(w.values.size()) + 1e-9)
    throw ParseError(path.string() + ": weights do not sum to 1");
  for (auto& v : w.values) v /= sum;
  return w;
}

}  // namespace mdr
