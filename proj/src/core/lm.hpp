#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace mdr {

inline constexpr const char* kSentenceBegin = "<s>";
inline constexpr const char* kSentenceEnd = "</s>";
inline constexpr const char* kUnknown = "<unk>";

// log10 of "zero" probability, as in ARPA files.
inline constexpr double kLogZero = -99.0;

struct SentenceScore {
  double log_prob = 0.0;        // log10 P(<s> t_1 ... t_n </s>)
  std::size_t token_count = 0;  // n + 1

  double normalized() const { return log_prob / static_cast<double>(token_count); }
};

// Anything that can assign conditional probabilities to tokens. Every
// implementation is immutable after construction and safe for concurrent use.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  // log10 P(word | history). history starts with <s>; unknown tokens are
  // treated as <unk>.
  virtual double log_prob(std::span<const Token> history, const Token& word) const = 0;

  // log10 P(token_i | prefix) for every position of the padded sentence,
  // ending with </s>; size is tokens.size() + 1.
  virtual std::vector<double> token_log_probs(std::span<const Token> tokens) const;

  SentenceScore score(std::span<const Token> tokens) const;
};

// 10^(-(sum log_prob) / (sum token_count)) over a non-empty corpus.
double perplexity(const LanguageModel& lm, const DomainCorpus& corpus);

}  // namespace mdr
