#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/interp.hpp"

namespace mdr {

// Sentences can only be kept with at most this probability; the remainder
// filters noisy sentences out of machine-harvested corpora.
inline constexpr double kMaxKeepProbability = 0.95;

struct CategorySize {
  std::string domain_id;
  std::size_t sentences = 0;
};

struct CategoryPlan {
  std::string domain_id;
  std::size_t size = 0;     // s_i
  double weight = 0.0;      // w_i
  double target = 0.0;      // d_i = N * w_i (real-valued)
  std::uint64_t repeat = 1; // m_i
  double keep = 0.0;        // r_i

  double expected_kept() const { return static_cast<double>(repeat) * static_cast<double>(size) * keep; }
};

struct SamplingPlan {
  double total = 0.0;  // N
  std::vector<std::string> core;
  std::vector<CategoryPlan> categories;

  const CategoryPlan& category(const std::string& domain_id) const;
};

// categories and weights are aligned; core names a non-empty subset.
SamplingPlan build_plan(std::span<const CategorySize> categories, std::span<const double> weights,
                        const std::set<std::string>& core);

// The k categories with the largest weights (ties by domain id).
std::set<std::string> top_k_core(std::span<const CategorySize> categories, std::span<const double> weights,
                                 std::size_t k);

struct SampledSet {
  std::vector<Sentence> sentences;
  std::vector<std::string> provenance;  // domain id per sentence
  std::uint64_t seed = 0;
};

// Replicates each sentence of category i m_i times, keeps each replica with
// probability r_i, then mixes and shuffles everything. Each category draws
// from its own stream derived from the seed and its domain id.
SampledSet execute_plan(const SamplingPlan& plan, std::span<const DomainCorpus> corpora, std::uint64_t seed);

std::string plan_to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(const std::string& text);
void save_plan(const SamplingPlan& plan, const std::filesystem::path& path);
SamplingPlan load_plan(const std::filesystem::path& path);

// Corpus text file plus a sidecar with one domain id per line.
void write_sampled_set(const SampledSet& set, TokenizerMode mode, const std::filesystem::path& corpus_path,
                       const std::filesystem::path& provenance_path);

}  // namespace mdr
