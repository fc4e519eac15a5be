#include "core/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "core/errors.hpp"

namespace mdr {

Vocabulary::Vocabulary() {
  add(kSentenceBegin);
  add(kSentenceEnd);
  add(kUnknown);
}

WordId Vocabulary::add(const Token& word) {
  auto [it, inserted] = index_.try_emplace(word, static_cast<WordId>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

WordId Vocabulary::lookup(const Token& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

Smoothing parse_smoothing(std::string_view name) {
  if (name == "witten-bell" || name == "wb") return Smoothing::kWittenBell;
  if (name == "mle") return Smoothing::kMle;
  throw InvalidArgument("unknown smoothing '" + std::string(name) + "' (expected witten-bell or mle)");
}

std::string_view to_string(Smoothing s) {
  switch (s) {
    case Smoothing::kWittenBell: return "witten-bell";
    case Smoothing::kMle: return "mle";
    default: return "unknown";
  }
}

// --- LanguageModel defaults -------------------------------------------------

std::vector<double> LanguageModel::token_log_probs(std::span<const Token> tokens) const {
  std::vector<Token> history;
  history.reserve(tokens.size() + 1);
  history.emplace_back(kSentenceBegin);
  std::vector<double> out;
  out.reserve(tokens.size() + 1);
  for (const auto& t : tokens) {
    out.push_back(log_prob(history, t));
    history.push_back(t);
  }
  out.push_back(log_prob(history, kSentenceEnd));
  return out;
}

SentenceScore LanguageModel::score(std::span<const Token> tokens) const {
  SentenceScore s;
  for (double lp : token_log_probs(tokens)) s.log_prob += lp;
  s.token_count = tokens.size() + 1;
  return s;
}

double perplexity(const LanguageModel& lm, const DomainCorpus& corpus) {
  if (corpus.empty()) throw InvalidArgument("perplexity of an empty corpus");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : corpus.sentences) {
    const SentenceScore sc = lm.score(s);
    total += sc.log_prob;
    count += sc.token_count;
  }
  return std::pow(10.0, -total / static_cast<double>(count));
}

// --- NGramModel -------------------------------------------------------------

namespace {

const NGramModel::ContextNode* lookup_node(const NGramModel::NodeMap& nodes,
                                           std::span<const WordId> context) {
  thread_local std::vector<WordId> key;
  key.assign(context.begin(), context.end());
  auto it = nodes.find(key);
  return it == nodes.end() ? nullptr : &it->second;
}

double backoff_log_prob(const NGramModel::NodeMap& nodes, std::size_t max_context,
                        std::span<const WordId> history, WordId word) {
  const std::size_t n = std::min(history.size(), max_context);
  const auto context = history.last(n);
  double backoff = 0.0;
  for (std::size_t drop = 0; drop <= n; ++drop) {
    const NGramModel::ContextNode* node = lookup_node(nodes, context.subspan(drop));
    if (!node) continue;
    auto it = node->log_probs.find(word);
    if (it != node->log_probs.end()) return backoff + it->second;
    backoff += node->log_backoff;
  }
  return backoff + kLogZero;
}

}  // namespace

NGramModel::NGramModel(int order, Vocabulary vocabulary, NodeMap nodes, Smoothing smoothing)
    : order_(order), vocab_(std::move(vocabulary)), nodes_(std::move(nodes)), smoothing_(smoothing) {
  if (order_ < 1) throw InvalidArgument("n-gram order must be >= 1");
}

const NGramModel::ContextNode* NGramModel::find_node(std::span<const WordId> context) const {
  return lookup_node(nodes_, context);
}

const double* NGramModel::find(std::span<const WordId> context, WordId word) const {
  const ContextNode* node = find_node(context);
  if (!node) return nullptr;
  auto it = node->log_probs.find(word);
  return it == node->log_probs.end() ? nullptr : &it->second;
}

double NGramModel::log_prob_ids(std::span<const WordId> history, WordId word) const {
  return backoff_log_prob(nodes_, static_cast<std::size_t>(order_ - 1), history, word);
}

double NGramModel::log_prob(std::span<const Token> history, const Token& word) const {
  std::vector<WordId> ids;
  ids.reserve(history.size());
  for (const auto& t : history) ids.push_back(vocab_.lookup(t));
  return log_prob_ids(ids, vocab_.lookup(word));
}

std::vector<double> NGramModel::token_log_probs(std::span<const Token> tokens) const {
  std::vector<WordId> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(Vocabulary::kBos);
  for (const auto& t : tokens) ids.push_back(vocab_.lookup(t));
  ids.push_back(Vocabulary::kEos);
  std::vector<double> out;
  out.reserve(tokens.size() + 1);
  for (std::size_t i = 1; i < ids.size(); ++i)
    out.push_back(log_prob_ids(std::span(ids.data(), i), ids[i]));
  return out;
}

std::vector<std::size_t> NGramModel::counts_per_order() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(order_), 0);
  for (const auto& [context, node] : nodes_) counts.at(context.size()) += node.log_probs.size();
  return counts;
}

// --- training ---------------------------------------------------------------

namespace {

using CountTable = std::unordered_map<std::vector<WordId>, std::map<WordId, std::uint64_t>, IdSequenceHash>;

double log10_or_zero(double p) { return p > 0.0 ? std::log10(p) : kLogZero; }

}  // namespace

NGramModel train_ngram(const DomainCorpus& corpus, const NGramOptions& options) {
  if (options.order < 1) throw InvalidArgument("n-gram order must be >= 1, got " + std::to_string(options.order));
  if (corpus.empty()) throw InvalidArgument("cannot train an n-gram model on an empty corpus");
  if (options.smoothing == Smoothing::kUnknown) throw InvalidArgument("smoothing must be witten-bell or mle");
  if (!(options.unk_floor >= 0.0 && options.unk_floor < 1.0))
    throw InvalidArgument("unk floor must lie in [0, 1)");

  const auto order = static_cast<std::size_t>(options.order);
  Vocabulary vocab;
  std::vector<std::vector<WordId>> padded;
  padded.reserve(corpus.size());
  for (const auto& sentence : corpus.sentences) {
    std::vector<WordId> ids{Vocabulary::kBos};
    for (const auto& t : sentence) {
      if (t == kSentenceBegin || t == kSentenceEnd || t == kUnknown)
        throw InvalidArgument("corpus contains reserved token '" + t + "'");
      ids.push_back(vocab.add(t));
    }
    ids.push_back(Vocabulary::kEos);
    padded.push_back(std::move(ids));
  }
  for (const auto& t : options.extra_vocabulary) {
    if (t != kSentenceBegin && t != kSentenceEnd && t != kUnknown) vocab.add(t);
  }

  // counts[k][h][w] = c(h w) with |h| = k.
  std::vector<CountTable> counts(order);
  for (const auto& ids : padded) {
    for (std::size_t i = 1; i < ids.size(); ++i) {
      for (std::size_t k = 0; k < order && k <= i; ++k) {
        std::vector<WordId> context(ids.begin() + static_cast<std::ptrdiff_t>(i - k),
                                    ids.begin() + static_cast<std::ptrdiff_t>(i));
        ++counts[k][std::move(context)][ids[i]];
      }
    }
  }

  const bool wb = options.smoothing == Smoothing::kWittenBell;
  NGramModel::NodeMap nodes;

  // Unigrams. <s> is context-only and never predicted.
  {
    NGramModel::ContextNode unigrams;
    const auto& table = counts[0][{}];
    std::uint64_t total = 0;
    for (const auto& [w, c] : table) total += c;
    const auto types = static_cast<double>(table.size());
    const auto predictable = static_cast<double>(vocab.size() - 2);  // minus <s>, <unk>
    const double keep = 1.0 - options.unk_floor;
    for (WordId w = 0; w < vocab.size(); ++w) {
      if (w == Vocabulary::kBos || w == Vocabulary::kUnk) continue;
      auto it = table.find(w);
      const double c = it == table.end() ? 0.0 : static_cast<double>(it->second);
      const double p = wb ? keep * (c + types / predictable) / (static_cast<double>(total) + types)
                          : c / static_cast<double>(total);
      unigrams.log_probs[w] = log10_or_zero(p);
    }
    unigrams.log_probs[Vocabulary::kBos] = kLogZero;
    unigrams.log_probs[Vocabulary::kUnk] = wb ? log10_or_zero(options.unk_floor) : kLogZero;
    nodes.emplace(std::vector<WordId>{}, std::move(unigrams));
  }

  for (std::size_t k = 1; k < order; ++k) {
    // Orders below k+1 are complete here; the interpolated lower-order
    // estimate uses them through the ordinary backoff walk.
    NGramModel::NodeMap level;
    for (const auto& [context, followers] : counts[k]) {
      std::uint64_t total = 0;
      for (const auto& [w, c] : followers) total += c;
      const auto t = static_cast<double>(followers.size());
      const auto n = static_cast<double>(total);
      NGramModel::ContextNode node;
      for (const auto& [w, c] : followers) {
        double p;
        if (wb) {
          const double lower = std::pow(10.0, backoff_log_prob(nodes, k - 1, std::span(context).subspan(1), w));
          p = (static_cast<double>(c) + t * lower) / (n + t);
        } else {
          p = static_cast<double>(c) / n;
        }
        node.log_probs.emplace(w, log10_or_zero(p));
      }
      node.log_backoff = wb ? std::log10(t / (n + t)) : kLogZero;
      level.emplace(context, std::move(node));
    }
    nodes.merge(level);
  }
  return NGramModel(options.order, std::move(vocab), std::move(nodes), options.smoothing);
}

}  // namespace mdr
