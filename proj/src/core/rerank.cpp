#include "core/rerank.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/ngram.hpp"

namespace mdr {

void RerankConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(fmt::format("{} = {} outside [0,1]", name, v));
  };
  unit(alpha, "alpha");
  unit(beta, "beta");
  unit(eta, "eta");
  unit(mu, "mu");
  if (gamma() < -1e-12) throw InvalidArgument(fmt::format("alpha + beta = {} exceeds 1", alpha + beta));
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  if (rescoring_lm.empty()) throw InvalidArgument("rerank config names no rescoring LM");
  if (!domain_lms.count(kOtherDomain)) throw InvalidArgument("rerank config must bind an LM to 'other'");
}

void ModelRegistry::add(const std::string& name, std::shared_ptr<const LanguageModel> lm) {
  if (!lm) throw InvalidArgument("null language model for '" + name + "'");
  models_[name] = std::move(lm);
}

const LanguageModel& ModelRegistry::resolve(const std::string& name) const {
  auto it = models_.find(name);
  if (it == models_.end()) throw InvalidArgument("unresolvable language model '" + name + "'");
  return *it->second;
}

void ModelRegistry::check(const RerankConfig& config) const {
  resolve(config.rescoring_lm);
  for (const auto& [domain, name] : config.domain_lms) resolve(name);
  for (const auto& [region, name] : config.geo_lms) resolve(name);
}

namespace {

double normalized_score(const LanguageModel& lm, const Sentence& tokens) { return lm.score(tokens).normalized(); }

}  // namespace

double language_score(const Hypothesis& hyp, const std::string& domain, const std::optional<std::string>& region,
                      const RerankConfig& config, const ModelRegistry& registry) {
  const double p_r = normalized_score(registry.resolve(config.rescoring_lm), hyp.tokens);
  auto bound = config.domain_lms.find(domain);
  if (bound == config.domain_lms.end())
    throw InvalidArgument("rerank config binds no LM to domain '" + domain + "'");
  const double p_d = normalized_score(registry.resolve(bound->second), hyp.tokens);

  if (domain == config.geo_domain && domain != kOtherDomain && region) {
    auto geo = config.geo_lms.find(*region);
    if (geo != config.geo_lms.end()) {
      const double p_g = normalized_score(registry.resolve(geo->second), hyp.tokens);
      return config.alpha * p_r + config.beta * p_d + config.gamma() * p_g;
    }
  }
  // "other", non-geographical domains, and the geo domain without a usable
  // region (gamma folded into beta).
  return config.alpha * p_r + (1.0 - config.alpha) * p_d;
}

double final_score(const Hypothesis& hyp, double lang, const RerankConfig& config) {
  const double a = hyp.am_score / hyp.normalizer();
  const double l = hyp.lm_score / hyp.normalizer();
  return config.eta * a + (1.0 - config.eta) * (config.mu * l + (1.0 - config.mu) * lang);
}

RerankResult rerank(const NBestList& list, const DomainDecision& decision, const RerankConfig& config,
                    const ModelRegistry& registry) {
  if (list.hyps.empty()) throw InvalidArgument("n-best list '" + list.query_id + "' is empty");
  std::vector<double> scores;
  scores.reserve(list.hyps.size());
  for (const auto& h : list.hyps)
    scores.push_back(final_score(h, language_score(h, decision.domain, list.region, config, registry), config));

  std::vector<std::size_t> order(list.hyps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RerankResult out;
  out.decision = decision;
  out.list.query_id = list.query_id;
  out.list.region = list.region;
  for (std::size_t i : order) {
    out.list.hyps.push_back(list.hyps[i]);
    out.scores.push_back(scores[i]);
  }
  return out;
}

RerankResult rerank(const NBestList& list, const DomainClassifier& classifier, const RerankConfig& config,
                    const ModelRegistry& registry) {
  if (list.hyps.empty()) throw InvalidArgument("n-best list '" + list.query_id + "' is empty");
  return rerank(list, classifier.classify(list.hyps.front().tokens, config.threshold), config, registry);
}

DomainDecision fixed_decision(const std::string& domain, double threshold) {
  DomainDecision d;
  d.domain = domain;
  d.threshold = threshold;
  return d;
}

// --- config file ------------------------------------------------------------

namespace {

template <typename T>
void read_optional(const nlohmann::json& doc, const char* key, T& into) {
  if (doc.contains(key) && !doc.at(key).is_null()) into = doc.at(key).get<T>();
}

}  // namespace

RerankConfig rerank_config_from_json(const std::string& text) {
  RerankConfig c;
  try {
    const auto doc = nlohmann::json::parse(text);
    read_optional(doc, "alpha", c.alpha);
    read_optional(doc, "beta", c.beta);
    read_optional(doc, "eta", c.eta);
    read_optional(doc, "mu", c.mu);
    read_optional(doc, "threshold", c.threshold);
    read_optional(doc, "rescoring_lm", c.rescoring_lm);
    read_optional(doc, "geo_domain", c.geo_domain);
    read_optional(doc, "domains", c.domain_lms);
    read_optional(doc, "geo", c.geo_lms);
    if (doc.contains("gamma")) {
      const double gamma = doc.at("gamma").get<double>();
      if (std::abs(gamma - c.gamma()) > 1e-9)
        throw InvalidArgument(fmt::format("gamma = {} but 1 - alpha - beta = {}", gamma, c.gamma()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rerank config: ") + e.what());
  }
  c.validate();
  return c;
}

RerankSetup load_rerank_setup(const std::filesystem::path& config_path, const std::filesystem::path& model_dir) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + config_path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  RerankSetup setup;
  setup.config = rerank_config_from_json(text);
  auto resolve_path = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : model_dir / path;
  };
  std::map<std::string, std::string> models;
  std::vector<std::string> classifier_files;
  std::string tokenizer = "char";
  try {
    const auto doc = nlohmann::json::parse(text);
    read_optional(doc, "models", models);
    read_optional(doc, "classifier", classifier_files);
    read_optional(doc, "tokenizer", tokenizer);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(config_path.string() + ": " + e.what());
  }
  setup.tokenizer = parse_tokenizer_mode(tokenizer);
  for (const auto& [name, path] : models)
    setup.registry.add(name, std::make_shared<NGramModel>(load_arpa(resolve_path(path))));
  setup.registry.check(setup.config);
  if (!classifier_files.empty()) {
    std::vector<std::filesystem::path> files;
    for (const auto& f : classifier_files) files.push_back(resolve_path(f));
    setup.classifier = load_classifier(files);
  }
  return setup;
}

}  // namespace mdr
