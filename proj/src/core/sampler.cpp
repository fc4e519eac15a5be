#include "core/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace mdr {

const CategoryPlan& SamplingPlan::category(const std::string& domain_id) const {
  for (const auto& c : categories)
    if (c.domain_id == domain_id) return c;
  throw InvalidArgument("plan has no category '" + domain_id + "'");
}

namespace {

void check_aligned(std::span<const CategorySize> categories, std::span<const double> weights) {
  if (categories.empty()) throw InvalidArgument("sampling plan needs at least one category");
  if (categories.size() != weights.size())
    throw InvalidArgument(fmt::format("{} categories but {} weights", categories.size(), weights.size()));
  std::set<std::string> ids;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (!ids.insert(categories[i].domain_id).second)
      throw InvalidArgument("duplicate category '" + categories[i].domain_id + "'");
    if (!(weights[i] >= 0.0 && weights[i] <= 1.0))
      throw InvalidArgument(fmt::format("weight of '{}' outside [0,1]", categories[i].domain_id));
  }
}

}  // namespace

SamplingPlan build_plan(std::span<const CategorySize> categories, std::span<const double> weights,
                        const std::set<std::string>& core) {
  check_aligned(categories, weights);
  if (core.empty()) throw InvalidArgument("core category set is empty");
  for (const auto& id : core) {
    const bool known = std::any_of(categories.begin(), categories.end(),
                                   [&](const CategorySize& c) { return c.domain_id == id; });
    if (!known) throw InvalidArgument("core category '" + id + "' is not among the categories");
  }
  for (const auto& c : categories)
    if (c.sentences == 0) throw InvalidArgument("category '" + c.domain_id + "' has no sentences");

  // Largest core category; ties go to the smallest domain id so the result
  // does not depend on input order.
  std::size_t largest = categories.size();
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (!core.count(categories[i].domain_id)) continue;
    if (largest == categories.size() || categories[i].sentences > categories[largest].sentences ||
        (categories[i].sentences == categories[largest].sentences &&
         categories[i].domain_id < categories[largest].domain_id))
      largest = i;
  }
  if (weights[largest] <= 0.0)
    throw InvalidArgument("largest core category '" + categories[largest].domain_id + "' has zero weight");

  SamplingPlan plan;
  plan.core.assign(core.begin(), core.end());
  plan.total = static_cast<double>(categories[largest].sentences) / weights[largest];
  for (std::size_t i = 0; i < categories.size(); ++i) {
    CategoryPlan c;
    c.domain_id = categories[i].domain_id;
    c.size = categories[i].sentences;
    c.weight = weights[i];
    c.target = plan.total * weights[i];
    const double s = static_cast<double>(c.size);
    if (c.target < s) {
      c.repeat = 1;
      c.keep = std::min(c.target / s, kMaxKeepProbability);
    } else {
      // A ratio a hair above an integer from floating-point noise must not
      // add a whole extra replica.
      c.repeat = static_cast<std::uint64_t>(std::ceil(c.target / s - 1e-9));
      c.repeat = std::max<std::uint64_t>(c.repeat, 1);
      c.keep = std::min(c.target / (static_cast<double>(c.repeat) * s), kMaxKeepProbability);
    }
    plan.categories.push_back(std::move(c));
  }
  return plan;
}

std::set<std::string> top_k_core(std::span<const CategorySize> categories, std::span<const double> weights,
                                 std::size_t k) {
  check_aligned(categories, weights);
  if (k == 0 || k > categories.size())
    throw InvalidArgument(fmt::format("top-k core needs 1 <= k <= {}", categories.size()));
  std::vector<std::size_t> order(categories.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return categories[a].domain_id < categories[b].domain_id;
  });
  std::set<std::string> core;
  for (std::size_t i = 0; i < k; ++i) core.insert(categories[order[i]].domain_id);
  return core;
}

SampledSet execute_plan(const SamplingPlan& plan, std::span<const DomainCorpus> corpora, std::uint64_t seed) {
  std::map<std::string, const DomainCorpus*> by_id;
  for (const auto& c : corpora) by_id[c.domain_id] = &c;

  SampledSet out;
  out.seed = seed;
  for (const auto& cat : plan.categories) {
    auto it = by_id.find(cat.domain_id);
    if (it == by_id.end()) throw InvalidArgument("no corpus supplied for category '" + cat.domain_id + "'");
    const DomainCorpus& corpus = *it->second;
    if (corpus.size() != cat.size)
      throw InvalidArgument(fmt::format("category '{}': plan expects {} sentences, corpus has {}", cat.domain_id,
                                        cat.size, corpus.size()));
    Rng rng(derive_seed(seed, cat.domain_id));
    for (const auto& sentence : corpus.sentences) {
      for (std::uint64_t r = 0; r < cat.repeat; ++r) {
        if (rng.bernoulli(cat.keep)) {
          out.sentences.push_back(sentence);
          out.provenance.push_back(cat.domain_id);
        }
      }
    }
  }

  std::vector<std::size_t> order(out.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  Rng mixer(derive_seed(seed, "\x01shuffle"));
  mixer.shuffle(order);
  SampledSet shuffled;
  shuffled.seed = seed;
  shuffled.sentences.reserve(order.size());
  shuffled.provenance.reserve(order.size());
  for (std::size_t i : order) {
    shuffled.sentences.push_back(std::move(out.sentences[i]));
    shuffled.provenance.push_back(std::move(out.provenance[i]));
  }
  return shuffled;
}

// --- plan file --------------------------------------------------------------

std::string plan_to_json(const SamplingPlan& plan) {
  nlohmann::ordered_json doc;
  doc["total"] = plan.total;
  doc["core"] = plan.core;
  auto& cats = doc["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : plan.categories) {
    nlohmann::ordered_json j;
    j["domain"] = c.domain_id;
    j["size"] = c.size;
    j["weight"] = c.weight;
    j["target"] = c.target;
    j["repeat"] = c.repeat;
    j["probability"] = c.keep;
    cats.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

SamplingPlan plan_from_json(const std::string& text) {
  SamplingPlan plan;
  try {
    const auto doc = nlohmann::json::parse(text);
    plan.total = doc.at("total").get<double>();
    plan.core = doc.at("core").get<std::vector<std::string>>();
    for (const auto& j : doc.at("categories")) {
      CategoryPlan c;
      c.domain_id = j.at("domain").get<std::string>();
      c.size = j.at("size").get<std::size_t>();
      c.weight = j.at("weight").get<double>();
      c.target = j.at("target").get<double>();
      c.repeat = j.at("repeat").get<std::uint64_t>();
      c.keep = j.at("probability").get<double>();
      plan.categories.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sampling plan: ") + e.what());
  }
  for (const auto& c : plan.categories) {
    if (!(c.keep >= 0.0 && c.keep <= kMaxKeepProbability) || c.repeat < 1)
      throw ParseError("sampling plan: category '" + c.domain_id + "' has invalid repeat/probability");
  }
  return plan;
}

void save_plan(const SamplingPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << plan_to_json(plan);
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

SamplingPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return plan_from_json(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_sampled_set(const SampledSet& set, TokenizerMode mode, const std::filesystem::path& corpus_path,
                       const std::filesystem::path& provenance_path) {
  write_corpus(corpus_path, set.sentences, mode);
  std::ofstream out(provenance_path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + provenance_path.string() + "'");
  for (const auto& id : set.provenance) out << id << '\n';
  if (!out) throw IoError("write failed on '" + provenance_path.string() + "'");
}

}  // namespace mdr
