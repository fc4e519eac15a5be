// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and runtime limits are pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "core/classifier.hpp"
#include "core/eval.hpp"
#include "core/interp.hpp"
#include "core/ladder.hpp"
#include "core/ngram.hpp"
#include "core/rerank.hpp"
#include "core/sampler.hpp"
#include "support/oracles.hpp"

using namespace mdr;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; keeps the first few messages.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
    pass = false;
  }
};

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;  // 0: no runtime limit
  std::function<Outcome()> run;
};

DomainCorpus ws(std::vector<Sentence> s, std::string id = "c") {
  return {std::move(id), TokenizerMode::kWhitespace, std::move(s)};
}

std::vector<Token> vocabulary_of(const NGramModel& m) {
  std::vector<Token> v;
  for (WordId id = 0; id < m.vocabulary().size(); ++id) v.push_back(m.vocabulary().word(id));
  return v;
}

std::set<Sentence> observed_contexts(const std::vector<Sentence>& corpus, int order) {
  std::set<Sentence> out;
  for (const auto& s : corpus) {
    const auto p = oracle::padded(s);
    for (std::size_t i = 1; i < p.size(); ++i)
      for (std::size_t k = 0; k < static_cast<std::size_t>(order) && k <= i; ++k)
        out.insert(Sentence(p.begin() + static_cast<long>(i - k), p.begin() + static_cast<long>(i)));
  }
  return out;
}

// --- 1 ----------------------------------------------------------------------

Outcome ngram_correctness() {
  Outcome o;
  std::mt19937_64 rng(1001);
  double worst_sum = 0.0;
  std::size_t mle_checked = 0;
  for (int c = 0; c < 20; ++c) {
    const auto corpus = oracle::random_corpus(rng, 1 + rng() % 200, 2 + rng() % 49, 12);
    for (int order = 1; order <= 3; ++order) {
      for (auto sm : {Smoothing::kWittenBell, Smoothing::kMle}) {
        NGramOptions opts;
        opts.order = order;
        opts.smoothing = sm;
        const auto m = train_ngram(ws(corpus), opts);
        const auto vocab = vocabulary_of(m);
        const oracle::CountTable counts(corpus, static_cast<std::size_t>(order));
        for (const auto& h : observed_contexts(corpus, order)) {
          double sum = 0.0;
          for (const auto& w : vocab) sum += std::pow(10.0, m.log_prob(h, w));
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
          if (sm != Smoothing::kMle) continue;
          // Every observed MLE event is a raw count ratio; unseen ones get
          // log10 "zero".
          for (const auto& w : vocab) {
            if (w == kSentenceBegin) continue;
            const double ratio = counts.mle(h, w);
            const double lp = m.log_prob(h, w);
            if (ratio == 0.0) {
              o.require(lp <= kLogZero, fmt::format("mle gives unseen P({}|{}) mass", w, fmt::join(h, " ")));
              continue;
            }
            ++mle_checked;
            o.require(lp == std::log10(ratio),
                      fmt::format("mle P({}|{}) differs from the count ratio", w, fmt::join(h, " ")));
          }
        }
      }
    }
  }
  o.require(worst_sum <= 1e-6, fmt::format("context sum off by {:.3g}", worst_sum));
  if (o.pass) o.detail = fmt::format("max |sum-1| {:.2e}, {} mle ratios exact", worst_sum, mle_checked);
  return o;
}

// --- 2 ----------------------------------------------------------------------

Outcome arpa_round_trip() {
  Outcome o;
  std::mt19937_64 rng(2002);
  oracle::TempDir dir("acceptance-arpa");
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto corpus = oracle::random_corpus(rng, 150, 30, 10);
    NGramOptions opts;
    opts.order = 1 + i % 4;
    opts.smoothing = i % 3 == 2 ? Smoothing::kMle : Smoothing::kWittenBell;
    const auto m = train_ngram(ws(corpus), opts);
    const auto path = dir / fmt::format("m{}.arpa", i);
    save_arpa(m, path);
    const auto back = load_arpa(path);
    // 100 sentences: half seen, half fresh (with unseen words).
    auto probe = oracle::random_corpus(rng, 50, 35, 10);
    probe.insert(probe.end(), corpus.begin(), corpus.begin() + 50);
    for (const auto& s : probe) {
      const double a = m.score(s).log_prob, b = back.score(s).log_prob;
      // MLE models give unseen events -99 per token under both; compare as is.
      worst = std::max(worst, std::abs(a - b));
    }
  }
  o.require(worst <= 1e-6, fmt::format("max |delta log-prob| {:.3g}", worst));
  if (o.pass) o.detail = fmt::format("max |delta log-prob| {:.2e}", worst);
  return o;
}

// --- 3 ----------------------------------------------------------------------

std::shared_ptr<NGramModel> unigram_model(const std::vector<std::string>& words, const std::vector<double>& probs) {
  std::ostringstream text;
  text << std::setprecision(17) << "\\data\\\nngram 1=" << words.size() << "\n\n\\1-grams:\n";
  for (std::size_t i = 0; i < words.size(); ++i) text << std::log10(probs[i]) << '\t' << words[i] << '\n';
  text << "\n\\end\\\n";
  std::istringstream in(text.str());
  return std::make_shared<NGramModel>(read_arpa(in));
}

Outcome em_checks() {
  Outcome o;
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> extra = {"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"};

  // Monotone likelihood on random smoothed mixtures.
  constexpr double kLikelihoodSlack = 1e-12;  // relative
  std::size_t iterations = 0;
  double worst_drop = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::shared_ptr<NGramModel>> models;
    std::vector<const LanguageModel*> parts;
    const std::size_t k = 2 + rng() % 3;
    for (std::size_t j = 0; j < k; ++j) {
      NGramOptions opts;
      opts.order = 1 + static_cast<int>(rng() % 3);
      opts.extra_vocabulary = extra;
      models.push_back(std::make_shared<NGramModel>(
          train_ngram(ws(oracle::random_corpus(rng, 40, 3 + rng() % 8, 8)), opts)));
      parts.push_back(models.back().get());
    }
    const auto r = em_fit(parts, ws(oracle::random_corpus(rng, 60, 10, 8)), {1000, 1e-9});
    iterations += r.log_likelihood.size();
    // Non-decreasing up to double roundoff: once EM has converged the weights
    // move by ulps and the likelihood can wobble by one ulp of its sum.
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) {
      const double drop = r.log_likelihood[i - 1] - r.log_likelihood[i];
      worst_drop = std::max(worst_drop, drop);
      o.require(drop <= kLikelihoodSlack * std::abs(r.log_likelihood[i - 1]),
                fmt::format("likelihood fell by {:.3g} at iteration {} of mixture {}", drop, i, trial));
    }
  }

  // Recovery of known two-component weights.
  const std::vector<std::string> words = {"a", "b", "c", "d", "</s>"};
  double worst = 0.0;
  for (double truth : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const std::vector<double> pa = {0.55, 0.2, 0.1, 0.05, 0.1}, pb = {0.05, 0.1, 0.2, 0.55, 0.1};
    const auto a = unigram_model(words, pa), b = unigram_model(words, pb);
    auto draw = [&](const std::vector<double>& p) {
      double r = u(rng);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (r < p[i]) return i;
        r -= p[i];
      }
      return p.size() - 1;
    };
    std::vector<Sentence> dev;
    for (int s = 0; s < 800; ++s) {
      Sentence sent;
      while (true) {
        const auto i = draw(u(rng) < truth ? pa : pb);
        if (words[i] == "</s>") break;
        sent.push_back(words[i]);
      }
      dev.push_back(sent);
    }
    const LanguageModel* parts[] = {a.get(), b.get()};
    const auto r = em_fit(parts, ws(dev), {1000, 1e-9});
    worst = std::max(worst, std::abs(r.weights.values[0] - truth));
  }
  o.require(worst <= 0.05, fmt::format("weight recovery error {:.4f} > 0.05", worst));
  if (o.pass) o.detail = fmt::format("{} EM states monotone (largest dip {:.1e}), max weight error {:.4f}",
                                      iterations, std::max(worst_drop, 0.0), worst);
  return o;
}

// --- 4 ----------------------------------------------------------------------

Outcome sampler_checks() {
  Outcome o;
  auto sizes = [](std::vector<std::size_t> s) {
    std::vector<CategorySize> out;
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back({"cat" + std::to_string(i + 1), s[i]});
    return out;
  };
  auto expect = [&](const CategoryPlan& c, double d, std::uint64_t m, double r) {
    o.require(c.target == d && c.repeat == m && c.keep == r,
              fmt::format("{}: d={} m={} r={}, expected {} {} {}", c.domain_id, c.target, c.repeat, c.keep, d, m, r));
  };

  const auto c1 = sizes({100, 50});
  const std::vector<double> w1 = {0.8, 0.2};
  const auto p1 = build_plan(c1, w1, {"cat1"});
  o.require(p1.total == 125.0, "fixture 1: N");
  expect(p1.category("cat1"), 100.0, 1, 0.95);
  expect(p1.category("cat2"), 25.0, 1, 0.5);

  const auto c2 = sizes({10, 5, 1000});
  const std::vector<double> w2 = {0.5, 0.4, 0.1};
  const auto p2 = build_plan(c2, w2, {"cat1", "cat2"});
  o.require(p2.total == 20.0, "fixture 2: N");
  expect(p2.category("cat1"), 10.0, 1, 0.95);
  expect(p2.category("cat2"), 8.0, 2, 0.8);
  expect(p2.category("cat3"), 2.0, 1, 0.002);

  const auto c3 = sizes({42});
  const std::vector<double> w3 = {1.0};
  const auto p3 = build_plan(c3, w3, {"cat1"});
  o.require(p3.total == 42.0, "fixture 3: N");
  expect(p3.category("cat1"), 42.0, 1, 0.95);

  // Monte-Carlo mean of the oversampled category.
  std::vector<DomainCorpus> corpora;
  for (const auto& c : c2) {
    DomainCorpus dc{c.domain_id, TokenizerMode::kWhitespace, {}};
    for (std::size_t i = 0; i < c.sentences; ++i) dc.sentences.push_back({c.domain_id, std::to_string(i)});
    corpora.push_back(std::move(dc));
  }
  const int trials = 10000;
  double kept = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto s = execute_plan(p2, corpora, static_cast<std::uint64_t>(t));
    kept += static_cast<double>(std::count(s.provenance.begin(), s.provenance.end(), "cat2"));
  }
  const double mean = kept / trials;
  o.require(std::abs(mean - 8.0) / 8.0 <= 0.01, fmt::format("mean kept {:.4f} not within 1% of 8", mean));
  if (o.pass) o.detail = fmt::format("3 fixtures exact, mean kept {:.4f} over {} trials", mean, trials);
  return o;
}

// --- 5 ----------------------------------------------------------------------

Outcome classifier_checks() {
  Outcome o;
  const double nav = f1_score(0.9191, 0.8814), music = f1_score(0.9754, 0.8628);
  o.require(std::abs(nav - 0.8999) <= 5e-5, fmt::format("navigation F1 {:.6f} vs 0.8999", nav));
  o.require(std::abs(music - 0.9156) <= 5e-5,
            fmt::format("music F1 {:.6f} vs 0.9156 (|diff| {:.2e} > 5e-5)", music, std::abs(music - 0.9156)));

  // Gradient against central differences.
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 3 + rng() % 8;
    std::vector<LabeledVector> data;
    for (int i = 0; i < 16; ++i) {
      SparseVector x{dim, {{0, 1.0}}};
      for (std::size_t j = 1; j < dim; ++j)
        if (rng() % 2) x.entries.push_back({j, u(rng)});
      data.push_back({x, static_cast<double>(rng() % 2)});
    }
    std::vector<double> theta(dim);
    for (auto& t : theta) t = u(rng);
    const double l2 = 0.05 * (trial % 4);
    const auto g = lr_objective(theta, data, l2);
    for (std::size_t j = 0; j < dim; ++j) {
      const double h = 1e-6;
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      const double numeric = (lr_objective(plus, data, l2).loss - lr_objective(minus, data, l2).loss) / (2 * h);
      worst_grad = std::max(worst_grad, std::abs(g.gradient[j] - numeric) / std::max(std::abs(numeric), 1e-3));
    }
  }
  o.require(worst_grad <= 1e-5, fmt::format("gradient relative error {:.3g}", worst_grad));

  // Separable two-domain set: disjoint vocabularies, held-out accuracy.
  auto make = [&](char prefix, std::size_t n) {
    std::vector<Sentence> out;
    for (std::size_t i = 0; i < n; ++i) {
      Sentence s;
      const auto len = 2 + rng() % 5;
      for (std::size_t k = 0; k < len; ++k) s.push_back(std::string(1, prefix) + std::to_string(rng() % 20));
      out.push_back(s);
    }
    return out;
  };
  const std::vector<DomainCorpus> train = {ws(make('m', 300), "music"), ws(make('n', 300), "navigation")};
  const auto cls = train_classifier(train, ws({}, kOtherDomain));
  std::size_t right = 0, total = 0;
  for (const auto& [prefix, label] : {std::pair{'m', "music"}, std::pair{'n', "navigation"}})
    for (const auto& s : make(prefix, 200)) {
      right += cls.classify(s, 0.5).domain == label;
      ++total;
    }
  const double accuracy = static_cast<double>(right) / static_cast<double>(total);
  o.require(accuracy >= 0.95, fmt::format("separable accuracy {:.4f}", accuracy));
  const std::string summary = fmt::format("F1 nav {:.6f}, music {:.6f}; grad err {:.2e}; accuracy {:.4f}", nav,
                                          music, worst_grad, accuracy);
  o.detail = o.pass ? summary : o.detail + " [" + summary + "]";
  return o;
}

// --- 6 ----------------------------------------------------------------------

Outcome reranker_limits() {
  Outcome o;
  std::mt19937_64 rng(6006);
  auto lm = [&](std::size_t sentences, std::size_t vocab) {
    NGramOptions opts;
    opts.order = 2;
    opts.extra_vocabulary = {"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9", "w10", "w11"};
    return std::make_shared<NGramModel>(train_ngram(ws(oracle::random_corpus(rng, sentences, vocab, 6)), opts));
  };
  ModelRegistry reg, edited;
  const auto r = lm(100, 12), n = lm(80, 8), g = lm(60, 6), other = lm(90, 12);
  for (auto* x : {&reg, &edited}) {
    x->add("r", r);
    x->add("n", n);
    x->add("g", g);
    x->add("o", other);
  }
  reg.add("m", lm(70, 10));
  edited.add("m", lm(200, 5));  // a different music LM

  RerankConfig base;
  base.rescoring_lm = "r";
  base.domain_lms = {{"music", "m"}, {"navigation", "n"}, {kOtherDomain, "o"}};
  base.geo_lms = {{"R1", "g"}};

  std::uniform_real_distribution<double> score(-30.0, -1.0), unit(0.0, 1.0);
  std::size_t lists = 0;
  for (int q = 0; q < 200; ++q) {
    NBestList list{"q" + std::to_string(q), q % 2 ? std::optional<std::string>("R1") : std::nullopt, {}};
    for (const auto& s : oracle::random_corpus(rng, 2 + rng() % 8, 12, 6)) {
      Hypothesis h;
      h.tokens = s;
      h.text = join_tokens(s, TokenizerMode::kWhitespace);
      h.am_score = score(rng);
      h.lm_score = score(rng);
      list.hyps.push_back(h);
    }
    ++lists;
    auto cfg = base;
    cfg.alpha = unit(rng);
    cfg.beta = (1.0 - cfg.alpha) * unit(rng);
    cfg.mu = unit(rng);

    // eta = 1: acoustic order.
    cfg.eta = 1.0;
    const std::string domain = std::vector<std::string>{"music", "navigation", kOtherDomain}[q % 3];
    const auto acoustic = rerank(list, fixed_decision(domain), cfg, reg);
    for (std::size_t i = 1; i < acoustic.list.hyps.size(); ++i) {
      const auto& a = acoustic.list.hyps[i - 1];
      const auto& b = acoustic.list.hyps[i];
      o.require(a.am_score / a.normalizer() >= b.am_score / b.normalizer(), "eta=1 is not acoustic order");
    }

    // alpha = 1: the language score is the rescoring LM's.
    auto only_r = cfg;
    only_r.alpha = 1.0;
    only_r.beta = 0.0;
    for (const auto& h : list.hyps)
      for (const char* d : {"music", "navigation", "other"})
        o.require(language_score(h, d, list.region, only_r, reg) == r->score(h.tokens).normalized(),
                  "alpha=1 differs from the rescoring score");

    // Branch isolation: a different music LM leaves the other branches alone.
    cfg.eta = unit(rng);
    for (const char* d : {"navigation", "other"}) {
      const auto before = rerank(list, fixed_decision(d), cfg, reg);
      const auto after = rerank(list, fixed_decision(d), cfg, edited);
      o.require(before.scores == after.scores, "music LM edit changed a non-music score");
    }
  }
  if (o.pass) o.detail = fmt::format("{} lists, 3 limits hold", lists);
  return o;
}

// --- 7 / 9 ------------------------------------------------------------------

Outcome ladder_directions(const std::filesystem::path& dir) {
  Outcome o;
  LadderOptions opts;
  const auto rows = run_synthetic_ladder(opts, dir);
  std::map<std::string, std::map<std::string, double>> cer;  // config -> set -> cer
  const std::vector<std::string> sets = {"music", "navigation"};
  // Test set order follows build_ladder: music, navigation.
  for (const auto& row : rows)
    for (std::size_t s = 0; s < row.cer.size(); ++s) cer[row.config.name][sets.at(s)] = row.cer[s].cer;

  auto c = [&](const char* config, const char* set) { return cer.at(config).at(set); };
  for (const auto& s : sets)
    o.require(c("C2", s.c_str()) < c("C1", s.c_str()), fmt::format("(a) C2 >= C1 on {}", s));
  bool strict = false;
  for (const auto& s : sets) {
    o.require(c("C4", s.c_str()) <= c("C2", s.c_str()), fmt::format("(b) C4 > C2 on {}", s));
    strict |= c("C4", s.c_str()) < c("C2", s.c_str());
  }
  o.require(strict, "(b) C4 never strictly below C2");
  for (const auto& s : sets)
    o.require(c("C5", s.c_str()) <= c("C4", s.c_str()), fmt::format("(c) C5 > C4 on {}", s));
  o.require(c("C6", "music") <= c("C2", "music"), "(d) C6 > C2 on music");
  o.require(c("C7", "music") <= c("C4", "music"), "(d) C7 > C4 on music");

  std::string table;
  for (const auto& name : {"C1", "C2", "C4", "C5", "C6", "C7"})
    table += fmt::format("{}{} {:.4f}/{:.4f}", table.empty() ? "" : ", ", name, c(name, "music"),
                         c(name, "navigation"));
  o.detail = (o.pass ? "" : o.detail + " ") + "[music/navigation CER " + table + "]";
  return o;
}

Outcome relative_reduction_checks() {
  Outcome o;
  const double a = relative_reduction(6.54, 5.67), b = relative_reduction(7.63, 5.93);
  o.require(std::abs(a * 100 - 13.3) <= 0.1, fmt::format("{:.3f}% vs 13.3%", a * 100));
  o.require(std::abs(b * 100 - 22.3) <= 0.1, fmt::format("{:.3f}% vs 22.3%", b * 100));
  if (o.pass) o.detail = fmt::format("{:.3f}% and {:.3f}%", a * 100, b * 100);
  return o;
}

Outcome determinism(const std::filesystem::path& first, const std::filesystem::path& second) {
  Outcome o;
  LadderOptions opts;
  run_synthetic_ladder(opts, second);
  for (const char* f : {"ladder.tsv", "report.json"}) {
    const auto a = oracle::read_file(first / f), b = oracle::read_file(second / f);
    o.require(!a.empty(), fmt::format("{} missing", f));
    o.require(a == b, fmt::format("{} differs between runs", f));
  }
  if (o.pass) o.detail = "ladder.tsv and report.json byte-identical";
  return o;
}

}  // namespace

int main() {
  oracle::TempDir first("acceptance-ladder-1"), second("acceptance-ladder-2");
  const std::vector<Criterion> criteria = {
      {1, "n-gram correctness", 10, ngram_correctness},
      {2, "ARPA round trip", 0, arpa_round_trip},
      {3, "EM monotonicity and weight recovery", 30, em_checks},
      {4, "sampling plan fixtures and Monte-Carlo mean", 20, sampler_checks},
      {5, "classifier F1 arithmetic, gradient, separable accuracy", 0, classifier_checks},
      {6, "reranker limits and branch isolation", 0, reranker_limits},
      {7, "desk-scale ladder directions", 300, [&] { return ladder_directions(first.path()); }},
      {8, "relative-reduction arithmetic", 0, relative_reduction_checks},
      {9, "ladder determinism", 0, [&] { return determinism(first.path(), second.path()); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds >= c.limit_seconds) {
      o.pass = false;
      o.detail += fmt::format(" (runtime over {:.0f} s)", c.limit_seconds);
    }
    failures += !o.pass;
    const std::string limit = c.limit_seconds > 0 ? fmt::format(" / limit {:.0f} s", c.limit_seconds) : "";
    std::cout << fmt::format("criterion {}: {} - {}: {} ({:.2f} s{})\n", c.id, o.pass ? "PASS" : "FAIL", c.title,
                             o.detail, seconds, limit)
              << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
