#include <doctest.h>

#include <cmath>
#include <random>

#include "core/classifier.hpp"
#include "core/errors.hpp"
#include "support/oracles.hpp"

using namespace mdr;

namespace {

std::string f(std::initializer_list<const char*> tokens) {
  std::string out;
  for (const char* t : tokens) {
    if (!out.empty()) out += kFeatureSeparator;
    out += t;
  }
  return out;
}

double value_at(const SparseVector& x, std::size_t index) {
  for (const auto& [i, v] : x.entries)
    if (i == index) return v;
  return 0.0;
}

// Two classes over disjoint vocabularies.
std::pair<std::vector<Sentence>, std::vector<Sentence>> separable(std::mt19937_64& rng, std::size_t n) {
  std::vector<Sentence> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence p, q;
    const auto len = 2 + rng() % 4;
    for (std::size_t k = 0; k < len; ++k) {
      p.push_back("p" + std::to_string(rng() % 12));
      q.push_back("n" + std::to_string(rng() % 12));
    }
    pos.push_back(p);
    neg.push_back(q);
  }
  return {pos, neg};
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("idf of a one-document corpus") {
    const std::vector<Sentence> docs = {{"a", "b"}};
    const auto v = TfIdfVectorizer::fit(docs, {3, 1});
    CHECK(v.features().size() == 3);
    CHECK(v.index_of("a") > 0);
    CHECK(v.index_of("b") > 0);
    CHECK(v.index_of(f({"a", "b"})) > 0);
    for (double idf : v.idf()) CHECK(idf == doctest::Approx(1.0));
  }

  TEST_CASE("idf over nine documents") {
    std::vector<Sentence> docs(9, Sentence{"x"});
    docs[0].push_back("rare");
    const auto v = TfIdfVectorizer::fit(docs, {1, 1});
    CHECK(v.idf()[v.index_of("x") - 1] == doctest::Approx(1.0));
    CHECK(v.idf()[v.index_of("rare") - 1] == doctest::Approx(std::log(10.0 / 2.0) + 1.0).epsilon(1e-12));
    CHECK(std::log(5.0) + 1.0 == doctest::Approx(2.6094).epsilon(1e-4));
  }

  TEST_CASE("min_df drops rare n-grams") {
    const std::vector<Sentence> docs = {{"a", "b"}, {"a", "c"}};
    const auto v = TfIdfVectorizer::fit(docs);
    CHECK(v.features() == std::vector<std::string>{"a"});
    CHECK_THROWS_AS(TfIdfVectorizer::fit(std::vector<Sentence>{}), InvalidArgument);
  }

  TEST_CASE("vectorize normalizes the non-bias part") {
    const TfIdfVectorizer v({"a", "b", "c"}, {3.0, 4.0, 1.0}, 1);
    const auto x = v.vectorize({"a", "b"});
    CHECK(x.dimension == 4);
    CHECK(value_at(x, 0) == 1.0);
    CHECK(value_at(x, v.index_of("a")) == doctest::Approx(0.6));
    CHECK(value_at(x, v.index_of("b")) == doctest::Approx(0.8));
    const auto one = v.vectorize({"c"});
    CHECK(value_at(one, v.index_of("c")) == doctest::Approx(1.0));
    const auto oov = v.vectorize({"zzz"});
    CHECK(oov.entries.size() == 1);
    CHECK(oov.entries[0] == std::pair<std::size_t, double>{0, 1.0});
    // Raw term frequency: "a a" counts a twice but normalizes to 1.
    CHECK(value_at(v.vectorize({"a", "a", "c"}), v.index_of("a")) ==
          doctest::Approx(6.0 / std::sqrt(36.0 + 1.0)));
  }

  TEST_CASE("n-gram features join tokens with the separator") {
    const auto fs = ngram_features({"a", "b", "c"}, 3);
    CHECK(fs.size() == 6);
    CHECK(std::find(fs.begin(), fs.end(), f({"a", "b", "c"})) != fs.end());
    CHECK(ngram_features({"a", "b"}, 1) == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("predict_prob is the sigmoid of the logit") {
    DomainLRModel m{"d", {0.0, 0.0}};
    SparseVector x{2, {{0, 1.0}, {1, 1.0}}};
    CHECK(predict_prob(m, x) == 0.5);
    m.theta = {0.0, std::log(9.0)};
    CHECK(predict_prob(m, x) == doctest::Approx(0.9).epsilon(1e-12));
    m.theta = {0.0, -std::log(9.0)};
    CHECK(predict_prob(m, x) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(predict_prob(DomainLRModel{"d", {0.0}}, x), InvalidArgument);
  }

  TEST_CASE("property: sigmoid symmetry and range") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 1000; ++i) {
      const double z = u(rng);
      CHECK(std::abs(sigmoid(-z) - (1.0 - sigmoid(z))) <= 1e-12);
      CHECK(sigmoid(z) > 0.0);
      CHECK(sigmoid(z) < 1.0);
    }
    CHECK(sigmoid(-1000) > 0.0);
    CHECK(sigmoid(1000) < 1.0);
  }

  TEST_CASE("property: analytic gradient matches central differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t dim = 2 + rng() % 6;
      std::vector<LabeledVector> data;
      for (int i = 0; i < 8; ++i) {
        SparseVector x{dim, {{0, 1.0}}};
        for (std::size_t j = 1; j < dim; ++j)
          if (rng() % 2) x.entries.push_back({j, u(rng)});
        data.push_back({x, static_cast<double>(rng() % 2)});
      }
      std::vector<double> theta(dim);
      for (auto& t : theta) t = u(rng);
      const double l2 = 0.1 * (trial % 3);
      const auto g = lr_objective(theta, data, l2);
      for (std::size_t j = 0; j < dim; ++j) {
        const double h = 1e-6;
        auto plus = theta, minus = theta;
        plus[j] += h;
        minus[j] -= h;
        const double numeric = (lr_objective(plus, data, l2).loss - lr_objective(minus, data, l2).loss) / (2 * h);
        const double scale = std::max(std::abs(numeric), 1e-3);
        CHECK(std::abs(g.gradient[j] - numeric) / scale <= 1e-5);
      }
    }
  }

  TEST_CASE("separable data trains to high accuracy and lower loss") {
    std::mt19937_64 rng(31);
    auto [pos, neg] = separable(rng, 200);
    std::vector<Sentence> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    const auto v = TfIdfVectorizer::fit(all);
    const auto r = train_lr("p", pos, neg, v);
    CHECK(r.final_loss <= r.initial_loss);
    std::size_t right = 0;
    for (const auto& s : pos) right += predict_prob(r.model, v.vectorize(s)) >= 0.5;
    for (const auto& s : neg) right += predict_prob(r.model, v.vectorize(s)) < 0.5;
    CHECK(static_cast<double>(right) / 400.0 >= 0.99);
  }

  TEST_CASE("huge L2 shrinks weights to zero and predicts the prior") {
    std::mt19937_64 rng(41);
    auto [pos, neg] = separable(rng, 100);
    neg.insert(neg.end(), neg.begin(), neg.end());
    neg.insert(neg.end(), neg.begin(), neg.begin() + 100);  // prior 0.25
    std::vector<Sentence> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    const auto v = TfIdfVectorizer::fit(all);
    LrTrainOptions o;
    o.l2 = 1e6;
    o.epochs = 2000;
    const auto r = train_lr("p", pos, neg, v, o);
    double norm = 0;
    for (std::size_t j = 1; j < r.model.theta.size(); ++j) norm += r.model.theta[j] * r.model.theta[j];
    CHECK(std::sqrt(norm) < 1e-6);
    CHECK(sigmoid(r.model.theta[0]) == doctest::Approx(0.25).epsilon(1e-3));
  }

  TEST_CASE("duplicating the training set keeps the boundary") {
    std::mt19937_64 rng(51);
    auto [pos, neg] = separable(rng, 60);
    // Some overlap so the optimum is interior.
    for (int i = 0; i < 10; ++i) neg.push_back(pos[static_cast<std::size_t>(i)]);
    std::vector<Sentence> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    const auto v = TfIdfVectorizer::fit(all);
    const auto once = train_lr("p", pos, neg, v);
    auto pos2 = pos, neg2 = neg;
    pos2.insert(pos2.end(), pos.begin(), pos.end());
    neg2.insert(neg2.end(), neg.begin(), neg.end());
    const auto twice = train_lr("p", pos2, neg2, v);
    double na = 0, nb = 0;
    for (std::size_t j = 0; j < once.model.theta.size(); ++j) {
      na += once.model.theta[j] * once.model.theta[j];
      nb += twice.model.theta[j] * twice.model.theta[j];
    }
    for (std::size_t j = 0; j < once.model.theta.size(); ++j)
      CHECK(std::abs(once.model.theta[j] / std::sqrt(na) - twice.model.theta[j] / std::sqrt(nb)) <= 1e-6);
  }

  TEST_CASE("training preconditions") {
    const TfIdfVectorizer v({"a"}, {1.0}, 1);
    const std::vector<Sentence> some = {{"a"}};
    CHECK_THROWS_AS(train_lr("d", some, {}, v), InvalidArgument);
    CHECK_THROWS_AS(train_lr("d", {}, some, v), InvalidArgument);
  }

  TEST_CASE("decision rule") {
    CHECK(decide({{"nav", 0.4}, {"music", 0.3}}, 0.5).domain == kOtherDomain);
    CHECK(decide({{"nav", 0.7}, {"music", 0.9}}, 0.5).domain == "music");
    CHECK(decide({{"nav", 0.6}, {"music", 0.6}}, 0.5).domain == "music");
    CHECK(decide({{"nav", 0.5}}, 0.5).domain == "nav");
    const auto d = decide({{"nav", 0.7}, {"music", 0.9}}, 0.5);
    CHECK(d.scores.front().first == "music");
    CHECK(d.threshold == 0.5);
  }

  TEST_CASE("property: other iff every score is below the threshold") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
      std::vector<std::pair<std::string, double>> s;
      const auto k = 1 + rng() % 4;
      for (std::size_t j = 0; j < k; ++j) s.push_back({"d" + std::to_string(j), u(rng)});
      const double t = 0.05 + 0.9 * u(rng);
      const bool all_below = std::all_of(s.begin(), s.end(), [&](auto& p) { return p.second < t; });
      const auto d = decide(s, t);
      CHECK((d.domain == kOtherDomain) == all_below);
      // Any strictly increasing transform applied to scores and threshold alike
      // gives the same decision.
      auto cube = s;
      for (auto& p : cube) p.second = p.second * p.second * p.second;
      CHECK(decide(cube, t * t * t).domain == d.domain);
    }
  }

  TEST_CASE("two-domain classifier and model files") {
    std::mt19937_64 rng(71);
    auto [a, b] = separable(rng, 80);
    const std::vector<DomainCorpus> domains = {{"alpha", TokenizerMode::kWhitespace, a},
                                               {"beta", TokenizerMode::kWhitespace, b}};
    const DomainCorpus other{kOtherDomain, TokenizerMode::kWhitespace, {{"zz", "yy"}, {"yy", "zz"}}};
    ClassifierTrainOptions o;
    o.lr.epochs = 1000;
    o.lr.step = 2.0;
    const auto cls = train_classifier(domains, other, o);
    REQUIRE(cls.models.size() == 2);
    CHECK(cls.models[0].domain_id == "alpha");
    CHECK(cls.classify(a[0], 0.5).domain == "alpha");
    CHECK(cls.classify(b[0], 0.5).domain == "beta");
    CHECK(cls.classify({"qq"}, 0.99).domain == kOtherDomain);

    oracle::TempDir dir("classifier");
    const auto files = save_classifier(cls, dir.path());
    REQUIRE(files.size() == 2);
    CHECK(files[0].filename() == "alpha.json");
    const auto back = load_classifier(files);
    CHECK(back.vectorizer == cls.vectorizer);
    for (std::size_t i = 0; i < 2; ++i) CHECK(back.models[i].theta == cls.models[i].theta);
    const auto text = oracle::read_file(files[0]);
    for (const char* key : {"\"domain\"", "\"features\"", "\"idf\"", "\"theta\"", "\"bias\""})
      CHECK(text.find(key) != std::string::npos);
  }
}
