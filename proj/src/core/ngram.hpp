#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/corpus.hpp"
#include "core/lm.hpp"

namespace mdr {

using WordId = std::uint32_t;

class Vocabulary {
 public:
  static constexpr WordId kBos = 0;
  static constexpr WordId kEos = 1;
  static constexpr WordId kUnk = 2;

  Vocabulary();

  WordId add(const Token& word);
  // Unknown words map to kUnk.
  WordId lookup(const Token& word) const;
  bool contains(const Token& word) const { return index_.count(word) != 0; }
  const Token& word(WordId id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<Token> words_;
  std::unordered_map<Token, WordId> index_;
};

struct IdSequenceHash {
  std::size_t operator()(const std::vector<WordId>& ids) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (WordId id : ids) {
      h ^= id;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

enum class Smoothing { kWittenBell, kMle, kUnknown };

Smoothing parse_smoothing(std::string_view name);
std::string_view to_string(Smoothing s);

struct NGramOptions {
  int order = 3;
  Smoothing smoothing = Smoothing::kWittenBell;
  // Probability mass given to <unk>, taken proportionally from the rest.
  // Ignored by mle, which gives <unk> no mass.
  double unk_floor = 1e-7;
  // Words added to the vocabulary without counts (e.g. a shared vocabulary
  // across domain models so unseen words get smoothed mass instead of <unk>).
  std::vector<Token> extra_vocabulary;
};

// Backoff n-gram model. Entries are grouped per context: the node for a
// context h holds log10 P(w|h) for every stored n-gram h·w and the log10
// backoff weight of h.
class NGramModel final : public LanguageModel {
 public:
  struct ContextNode {
    double log_backoff = 0.0;
    std::unordered_map<WordId, double> log_probs;
  };
  using NodeMap = std::unordered_map<std::vector<WordId>, ContextNode, IdSequenceHash>;

  NGramModel(int order, Vocabulary vocabulary, NodeMap nodes, Smoothing smoothing);

  int order() const { return order_; }
  Smoothing smoothing() const { return smoothing_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const NodeMap& nodes() const { return nodes_; }

  // Backoff recursion on ids. Only the last order-1 ids of history are used.
  double log_prob_ids(std::span<const WordId> history, WordId word) const;

  double log_prob(std::span<const Token> history, const Token& word) const override;
  std::vector<double> token_log_probs(std::span<const Token> tokens) const override;

  // Stored n-gram lookup without backoff; nullptr when absent.
  const double* find(std::span<const WordId> context, WordId word) const;
  const ContextNode* find_node(std::span<const WordId> context) const;

  // Number of stored n-grams of each order (index 0 = unigrams).
  std::vector<std::size_t> counts_per_order() const;

 private:
  int order_;
  Vocabulary vocab_;
  NodeMap nodes_;
  Smoothing smoothing_;
};

NGramModel train_ngram(const DomainCorpus& corpus, const NGramOptions& options);

// ARPA text format. See arpa.cpp for the exact layout.
void write_arpa(const NGramModel& model, std::ostream& out);
void save_arpa(const NGramModel& model, const std::filesystem::path& path);
NGramModel read_arpa(std::istream& in);
NGramModel load_arpa(const std::filesystem::path& path);

}  // namespace mdr
