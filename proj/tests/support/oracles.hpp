#pragma once

// Brute-force reference implementations and random generators shared by the
// unit and acceptance tests. Nothing here calls into the library's
// internals; the oracles recompute everything from raw data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Sentence = std::vector<std::string>;

inline std::vector<Sentence> random_corpus(std::mt19937_64& rng, std::size_t sentences, std::size_t vocab,
                                           std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len), word(0, vocab - 1);
  std::vector<Sentence> out(sentences);
  for (auto& s : out) {
    s.resize(len(rng));
    for (auto& t : s) t = "w" + std::to_string(word(rng));
  }
  return out;
}

inline Sentence padded(const Sentence& s) {
  Sentence p{"<s>"};
  p.insert(p.end(), s.begin(), s.end());
  p.push_back("</s>");
  return p;
}

// Occurrences of seq in the padded corpus, and occurrences of seq followed by
// any token (seq used as a context).
struct Counts {
  std::size_t ngram = 0;
  std::size_t as_context = 0;
};

inline Counts count(const std::vector<Sentence>& corpus, const Sentence& seq) {
  Counts c;
  for (const auto& s : corpus) {
    const Sentence p = padded(s);
    for (std::size_t i = 0; i + seq.size() <= p.size(); ++i) {
      if (!std::equal(seq.begin(), seq.end(), p.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      // <s> is never predicted: a match starting on it as the last token
      // does not count, and neither does a bare unigram <s>.
      if (seq.size() >= 1 && seq.back() == "<s>") continue;
      ++c.ngram;
      if (i + seq.size() < p.size()) ++c.as_context;
    }
  }
  return c;
}

// Number of distinct followers of context h.
inline std::size_t distinct_followers(const std::vector<Sentence>& corpus, const Sentence& h) {
  std::map<std::string, int> seen;
  for (const auto& s : corpus) {
    const Sentence p = padded(s);
    for (std::size_t i = 0; i + h.size() < p.size(); ++i)
      if (p[i + h.size()] != "<s>" && std::equal(h.begin(), h.end(), p.begin() + static_cast<std::ptrdiff_t>(i)))
        seen[p[i + h.size()]] = 1;
  }
  return seen.size();
}

inline std::size_t context_total(const std::vector<Sentence>& corpus, const Sentence& h) {
  std::size_t n = 0;
  for (const auto& s : corpus) {
    const Sentence p = padded(s);
    for (std::size_t i = 0; i + h.size() < p.size(); ++i)
      if (p[i + h.size()] != "<s>" && std::equal(h.begin(), h.end(), p.begin() + static_cast<std::ptrdiff_t>(i))) ++n;
  }
  return n;
}

// Maximum-likelihood P(w | h) from raw counts.
inline double mle(const std::vector<Sentence>& corpus, const Sentence& h, const std::string& w) {
  Sentence hw = h;
  hw.push_back(w);
  return static_cast<double>(count(corpus, hw).ngram) / static_cast<double>(context_total(corpus, h));
}

// The same counts tabulated in one pass, for bulk checks: every n-gram up to
// max_len tokens that ends on a predicted token, and how often each history
// is followed by one.
struct CountTable {
  std::map<Sentence, std::size_t> ngram;
  std::map<Sentence, std::size_t> context;

  CountTable(const std::vector<Sentence>& corpus, std::size_t max_len) {
    for (const auto& s : corpus) {
      const Sentence p = padded(s);
      for (std::size_t i = 1; i < p.size(); ++i)
        for (std::size_t k = 0; k < max_len && k <= i; ++k) {
          Sentence h(p.begin() + static_cast<std::ptrdiff_t>(i - k), p.begin() + static_cast<std::ptrdiff_t>(i));
          ++context[h];
          h.push_back(p[i]);
          ++ngram[h];
        }
    }
  }

  double mle(const Sentence& h, const std::string& w) const {
    Sentence hw = h;
    hw.push_back(w);
    auto c = ngram.find(hw);
    return c == ngram.end() ? 0.0 : static_cast<double>(c->second) / static_cast<double>(context.at(h));
  }
};

// Interpolated Witten-Bell probability, straight from the recursive
// definition. vocab excludes <s> and <unk> but includes </s>.
inline double witten_bell(const std::vector<Sentence>& corpus, const std::vector<std::string>& vocab,
                          Sentence h, const std::string& w, double unk_floor) {
  if (w == "<unk>" && h.empty()) return unk_floor;
  const double n = static_cast<double>(context_total(corpus, h));
  const double t = static_cast<double>(distinct_followers(corpus, h));
  Sentence hw = h;
  hw.push_back(w);
  const double c = static_cast<double>(count(corpus, hw).ngram);
  if (h.empty()) return (1.0 - unk_floor) * (c + t / static_cast<double>(vocab.size())) / (n + t);
  const double lower = witten_bell(corpus, vocab, Sentence(h.begin() + 1, h.end()), w, unk_floor);
  if (n == 0) return lower;
  return (c + t * lower) / (n + t);
}

// Full-matrix Levenshtein distance.
template <typename T>
std::size_t levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mdr-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace oracle
