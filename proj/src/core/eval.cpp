#include "core/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "core/classifier.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace mdr {

std::size_t edit_distance(std::span<const Token> ref, std::span<const Token> hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    prev.swap(cur);
  }
  return prev[hyp.size()];
}

CerReport cer(std::span<const Sentence> refs, std::span<const Sentence> hyps) {
  if (refs.size() != hyps.size())
    throw InvalidArgument(fmt::format("{} references but {} hypotheses", refs.size(), hyps.size()));
  CerReport r;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    r.edits += edit_distance(refs[i], hyps[i]);
    r.ref_chars += refs[i].size();
  }
  if (r.ref_chars == 0) throw InvalidArgument("reference corpus has no characters");
  r.cer = static_cast<double>(r.edits) / static_cast<double>(r.ref_chars);
  return r;
}

double relative_reduction(double baseline, double system) {
  if (baseline == 0.0) throw InvalidArgument("relative reduction against a zero baseline");
  return (baseline - system) / baseline;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

ClassifierReport classifier_report(std::span<const std::string> predicted, std::span<const std::string> gold,
                                   const std::set<std::string>& domains) {
  if (predicted.size() != gold.size())
    throw InvalidArgument(fmt::format("{} predictions but {} gold labels", predicted.size(), gold.size()));
  std::set<std::string> labels = domains;
  labels.insert(kOtherDomain);
  labels.insert(predicted.begin(), predicted.end());
  labels.insert(gold.begin(), gold.end());

  ClassifierReport r;
  for (const auto& d : labels) r.domains[d];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.confusion[gold[i]][predicted[i]];
    if (predicted[i] == gold[i]) {
      ++r.domains[gold[i]].true_positive;
    } else {
      ++r.domains[predicted[i]].false_positive;
      ++r.domains[gold[i]].false_negative;
    }
  }
  for (auto& [d, m] : r.domains) {
    const auto tp = static_cast<double>(m.true_positive);
    if (m.true_positive + m.false_positive) m.precision = tp / static_cast<double>(m.true_positive + m.false_positive);
    if (m.true_positive + m.false_negative) m.recall = tp / static_cast<double>(m.true_positive + m.false_negative);
    m.f1 = f1_score(m.precision, m.recall);
  }
  return r;
}

std::string cer_report_json(const CerReport& r) {
  nlohmann::ordered_json doc;
  doc["edits"] = r.edits;
  doc["ref_chars"] = r.ref_chars;
  doc["cer"] = r.cer;
  return doc.dump();
}

std::string classifier_report_json(const ClassifierReport& r) {
  nlohmann::ordered_json doc;
  auto& domains = doc["domains"] = nlohmann::ordered_json::object();
  for (const auto& [d, m] : r.domains) {
    domains[d] = {{"precision", m.precision}, {"recall", m.recall},       {"f1", m.f1},
                  {"tp", m.true_positive},   {"fp", m.false_positive}, {"fn", m.false_negative}};
  }
  auto& confusion = doc["confusion"] = nlohmann::ordered_json::object();
  for (const auto& [g, row] : r.confusion)
    for (const auto& [p, n] : row) confusion[g][p] = n;
  return doc.dump();
}

std::string classifier_report_text(const ClassifierReport& r) {
  std::size_t width = 6;
  for (const auto& [d, m] : r.domains) width = std::max(width, d.size());
  std::string out = fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}\n", "domain", width, "precision", "recall", "f1");
  for (const auto& [d, m] : r.domains)
    out += fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}\n", d, width, m.precision, m.recall, m.f1);
  return out;
}

// --- synthetic n-best lists -------------------------------------------------

ConfusionTable load_confusions(const std::filesystem::path& path) {
  ConfusionTable table;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path, true)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    const Sentence fields = tokenize(line, TokenizerMode::kWhitespace);
    if (fields.size() < 2) throw ParseError(path.string() + ": confusion line needs a token and alternatives", lineno);
    auto& alts = table.alternatives[fields[0]];
    for (std::size_t i = 1; i < fields.size(); ++i)
      if (fields[i] != fields[0] && std::find(alts.begin(), alts.end(), fields[i]) == alts.end())
        alts.push_back(fields[i]);
  }
  return table;
}

std::vector<NBestList> gen_nbest(std::span<const NBestRef> refs, const NBestGenOptions& options,
                                 const ConfusionTable& confusions, const LanguageModel& decoy, std::uint64_t seed) {
  const double homophone_rate = options.homophone_rate.value_or(options.noise_rate);
  if (options.n < 1) throw InvalidArgument("n-best size must be >= 1");
  if (!(options.noise_rate >= 0.0 && options.noise_rate < 1.0)) throw InvalidArgument("noise rate must lie in [0,1)");
  if (!(homophone_rate >= 0.0 && homophone_rate <= 1.0)) throw InvalidArgument("homophone rate must lie in [0,1]");
  if (!(options.jitter_sigma >= 0.0)) throw InvalidArgument("jitter sigma must be >= 0");

  std::set<Token> pool_set;
  for (const auto& r : refs) pool_set.insert(r.tokens.begin(), r.tokens.end());
  const std::vector<Token> pool(pool_set.begin(), pool_set.end());
  const bool perturb = options.noise_rate > 0.0 || homophone_rate > 0.0;

  std::vector<NBestList> out;
  out.reserve(refs.size());
  for (const auto& ref : refs) {
    Rng rng(derive_seed(seed, ref.id));

    struct Draft {
      Sentence tokens;
      double am;
    };
    std::vector<Draft> drafts;
    drafts.push_back({ref.tokens, options.jitter_sigma * rng.normal()});

    for (std::size_t v = 1; v < options.n; ++v) {
      Sentence tokens = ref.tokens;
      std::size_t random_edits = 0, homophone_edits = 0;

      auto substitute = [&](std::size_t pos, bool forced) {
        auto alt = confusions.alternatives.find(tokens[pos]);
        if (alt != confusions.alternatives.end() && !alt->second.empty()) {
          if (forced || rng.bernoulli(homophone_rate)) {
            tokens[pos] = alt->second[rng.below(alt->second.size())];
            ++homophone_edits;
          }
          return;
        }
        if (pool.size() < 2 || !(forced || rng.bernoulli(options.noise_rate))) return;
        Token replacement;
        do {
          replacement = pool[rng.below(pool.size())];
        } while (replacement == tokens[pos]);
        tokens[pos] = std::move(replacement);
        ++random_edits;
      };

      for (std::size_t pos = 0; pos < tokens.size(); ++pos) substitute(pos, false);
      if (perturb && random_edits + homophone_edits == 0 && !tokens.empty())
        substitute(static_cast<std::size_t>(rng.below(tokens.size())), true);

      const double am = -options.am_edit_cost * static_cast<double>(random_edits) -
                        options.am_homophone_cost * static_cast<double>(homophone_edits) +
                        options.jitter_sigma * rng.normal();
      drafts.push_back({std::move(tokens), am});
    }

    std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) { return a.am > b.am; });
    NBestList list;
    list.query_id = ref.id;
    list.region = ref.region;
    for (auto& d : drafts) {
      Hypothesis h;
      h.text = join_tokens(d.tokens, options.mode);
      h.am_score = d.am;
      h.lm_score = decoy.score(d.tokens).log_prob;
      h.tokens = std::move(d.tokens);
      list.hyps.push_back(std::move(h));
    }
    out.push_back(std::move(list));
  }
  return out;
}

}  // namespace mdr
