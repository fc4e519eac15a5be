#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/lm.hpp"
#include "core/rerank.hpp"

namespace mdr {

// Unit-cost Levenshtein distance.
std::size_t edit_distance(std::span<const Token> ref, std::span<const Token> hyp);

struct CerReport {
  std::size_t edits = 0;
  std::size_t ref_chars = 0;
  double cer = 0.0;  // edits / ref_chars, pooled over the corpus
};

CerReport cer(std::span<const Sentence> refs, std::span<const Sentence> hyps);

// (baseline - system) / baseline.
double relative_reduction(double baseline, double system);

double f1_score(double precision, double recall);

struct DomainMetrics {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassifierReport {
  std::map<std::string, DomainMetrics> domains;
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // gold -> predicted -> count
};

// One-vs-rest metrics for every domain in `domains`, "other", and any label
// that occurs in pred or gold.
ClassifierReport classifier_report(std::span<const std::string> predicted, std::span<const std::string> gold,
                                   const std::set<std::string>& domains);

std::string cer_report_json(const CerReport& r);
std::string classifier_report_json(const ClassifierReport& r);
std::string classifier_report_text(const ClassifierReport& r);

// --- synthetic n-best lists -------------------------------------------------

// token -> tokens it may be mistaken for (homophones).
struct ConfusionTable {
  std::map<Token, std::vector<Token>> alternatives;
};

// Lines "<token>\t<alt> <alt> ...", UTF-8.
ConfusionTable load_confusions(const std::filesystem::path& path);

struct NBestRef {
  std::string id;
  Sentence tokens;
  std::optional<std::string> region;
};

struct NBestGenOptions {
  std::size_t n = 10;
  double noise_rate = 0.1;               // per-token random substitution rate
  std::optional<double> homophone_rate;  // rate for tokens with confusions; defaults to noise_rate
  double am_edit_cost = 1.0;             // acoustic penalty per random substitution
  double am_homophone_cost = 0.0;        // acoustic penalty per homophone swap
  double jitter_sigma = 0.3;             // Gaussian acoustic jitter
  TokenizerMode mode = TokenizerMode::kChar;
};

// Each list holds the reference plus n-1 perturbed copies, ordered by
// acoustic score (best first). fp LM scores come from decoy. Each list draws
// from a stream derived from the seed and its query id.
std::vector<NBestList> gen_nbest(std::span<const NBestRef> refs, const NBestGenOptions& options,
                                 const ConfusionTable& confusions, const LanguageModel& decoy, std::uint64_t seed);

}  // namespace mdr
