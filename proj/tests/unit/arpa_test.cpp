#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "core/errors.hpp"
#include "core/ngram.hpp"
#include "support/oracles.hpp"

using namespace mdr;

namespace {

NGramModel parse(const std::string& text) {
  std::istringstream in(text);
  return read_arpa(in);
}

std::string dump(const NGramModel& m) {
  std::ostringstream out;
  write_arpa(m, out);
  return out.str();
}

}  // namespace

TEST_SUITE("arpa") {
  TEST_CASE("hand-written unigram file") {
    const auto m = parse("\\data\\\nngram 1=2\n\n\\1-grams:\n-0.30103\ta\n-0.30103\t</s>\n\n\\end\\\n");
    CHECK(m.order() == 1);
    CHECK(m.log_prob(Sentence{}, "a") == -0.30103);
    CHECK(m.log_prob(Sentence{}, "</s>") == -0.30103);
    CHECK(m.log_prob(Sentence{}, "<s>") == kLogZero);
    CHECK(m.smoothing() == Smoothing::kUnknown);
  }

  TEST_CASE("layout: header counts, tab rows, no backoff at the top order") {
    NGramOptions o;
    o.order = 2;
    const auto m = train_ngram({"t", TokenizerMode::kWhitespace, {{"a", "b"}}}, o);
    const auto text = dump(m);
    CHECK(text.rfind("\\data\\\nngram 1=", 0) == 0);
    CHECK(text.find("\\2-grams:\n") != std::string::npos);
    CHECK(text.find("\\end\\\n") == text.size() - 6);
    const auto bigrams = text.substr(text.find("\\2-grams:\n") + 10);
    const auto first = bigrams.substr(0, bigrams.find('\n'));
    CHECK(std::count(first.begin(), first.end(), '\t') == 1);
    const auto unigrams = text.substr(text.find("\\1-grams:\n") + 10);
    const auto row = unigrams.substr(0, unigrams.find('\n'));
    CHECK(std::count(row.begin(), row.end(), '\t') == 2);
  }

  TEST_CASE("declared count must match the body") {
    const std::string text =
        "\\data\\\nngram 1=3\nngram 2=2\n\n\\1-grams:\n-0.5\ta\t-0.3\n-0.5\tb\t-0.3\n-0.5\t</s>\n\n"
        "\\2-grams:\n-0.1\ta b\n-0.1\tb a\n-0.1\ta a\n\n\\end\\\n";
    try {
      parse(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() > 0);
    }
  }

  TEST_CASE("malformed input is rejected with a line number") {
    const std::vector<std::pair<std::string, std::size_t>> cases = {
        {"\\data\\\nngram 1=1\n\n\\1-grams:\nabc\ta\n\\end\\\n", 5},             // not a number
        {"\\data\\\nngram 1=1\n\n\\1-grams:\n0.5\ta\n\\end\\\n", 5},             // positive log-prob
        {"\\data\\\nngram 1=2\n\n\\1-grams:\n-0.5\ta\n-0.5\ta\n\\end\\\n", 6},   // duplicate
        {"ngram 1=1\n", 1},                                                       // no header
        {"\\data\\\nngram 1=1\n\n\\1-grams:\n-0.5\ta\n", 0},                      // missing trailer
    };
    for (const auto& [text, line] : cases) {
      CAPTURE(text);
      try {
        parse(text);
        FAIL("expected a parse error");
      } catch (const ParseError& e) {
        if (line) CHECK(e.line() == line);
      }
    }
  }

  TEST_CASE("higher-order tokens must be known unigrams") {
    CHECK_THROWS_AS(parse("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-0.5\ta\t0\n\n\\2-grams:\n-0.1\ta z\n\n\\end\\\n"),
                    ParseError);
  }

  TEST_CASE("property: save/load preserves sentence scores") {
    std::mt19937_64 rng(77);
    oracle::TempDir dir("arpa");
    for (int trial = 0; trial < 8; ++trial) {
      const auto corpus = oracle::random_corpus(rng, 50, 3 + rng() % 20, 8);
      NGramOptions o;
      o.order = 1 + static_cast<int>(rng() % 4);
      o.smoothing = trial % 3 == 0 ? Smoothing::kMle : Smoothing::kWittenBell;
      const auto m = train_ngram({"t", TokenizerMode::kWhitespace, corpus}, o);
      save_arpa(m, dir / "m.arpa");
      const auto back = load_arpa(dir / "m.arpa");
      CHECK(back.order() == m.order());
      CHECK(back.counts_per_order() == m.counts_per_order());
      const auto probes = oracle::random_corpus(rng, 40, 3 + rng() % 20, 8);
      for (const auto& s : probes) CHECK(std::abs(back.score(s).log_prob - m.score(s).log_prob) <= 1e-6);
      // Writing the loaded model reproduces the file.
      std::ostringstream again;
      write_arpa(back, again);
      CHECK(again.str() == oracle::read_file(dir / "m.arpa"));
    }
  }

  TEST_CASE("load errors name the file") {
    oracle::TempDir dir("arpa");
    try {
      load_arpa(dir / "none.arpa");
      FAIL("expected an I/O error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("none.arpa") != std::string::npos);
    }
  }
}
