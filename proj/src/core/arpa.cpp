#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "core/errors.hpp"
#include "core/ngram.hpp"

// Layout:
//
//   \data\ (header)
//   ngram 1=<count>
//   ...
//
//   \1-grams:
//   <log10 prob>\t<w1>\t<log10 backoff>
//   ...
//   \<order>-grams:
//   <log10 prob>\t<w1 ... wn>          (no backoff column at the top order)
//
//   \end\ (trailer)
//
// Log values are written with kArpaDecimals fixed decimals; values at or
// below -99 stand for probability zero.

namespace mdr {

namespace {

constexpr int kArpaDecimals = 10;

std::string format_log(double v) {
  if (v <= kLogZero) v = kLogZero;
  return fmt::format("{:.{}f}", v, kArpaDecimals);
}

double parse_log(std::string_view field, std::size_t line) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("malformed number '" + std::string(field) + "' in ARPA file", line);
  if (v > 0.0) throw ParseError("positive log probability in ARPA file", line);
  return v <= kLogZero ? kLogZero : v;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void write_arpa(const NGramModel& model, std::ostream& out) {
  const auto order = static_cast<std::size_t>(model.order());
  const Vocabulary& vocab = model.vocabulary();

  struct Row {
    std::vector<WordId> ngram;
    double log_prob;
  };
  std::vector<std::vector<Row>> rows(order);
  for (const auto& [context, node] : model.nodes()) {
    for (const auto& [w, lp] : node.log_probs) {
      std::vector<WordId> ngram = context;
      ngram.push_back(w);
      rows.at(context.size()).push_back({std::move(ngram), lp});
    }
  }
  for (auto& level : rows)
    std::sort(level.begin(), level.end(), [](const Row& a, const Row& b) { return a.ngram < b.ngram; });

  out << "\\data\\\n";
  for (std::size_t k = 0; k < order; ++k) out << "ngram " << k + 1 << '=' << rows[k].size() << '\n';
  for (std::size_t k = 0; k < order; ++k) {
    out << "\n\\" << k + 1 << "-grams:\n";
    for (const auto& row : rows[k]) {
      out << format_log(row.log_prob) << '\t';
      for (std::size_t i = 0; i < row.ngram.size(); ++i) {
        if (i) out << ' ';
        out << vocab.word(row.ngram[i]);
      }
      if (k + 1 < order) {
        const auto* node = model.find_node(row.ngram);
        out << '\t' << format_log(node ? node->log_backoff : 0.0);
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

void save_arpa(const NGramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_arpa(model, out);
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

NGramModel read_arpa(std::istream& in) {
  enum class State { kPreamble, kHeader, kSection, kDone };
  State state = State::kPreamble;
  std::vector<std::size_t> declared;
  std::vector<std::size_t> seen;
  std::size_t current = 0;  // order of the section being read, 1-based
  Vocabulary vocab;
  NGramModel::NodeMap nodes;
  nodes[{}];

  auto close_section = [&](std::size_t line) {
    if (current && seen[current - 1] != declared[current - 1])
      throw ParseError(fmt::format("header declares {} {}-grams but section lists {}", declared[current - 1],
                                   current, seen[current - 1]),
                       line);
  };

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (state == State::kDone) {
      if (!line.empty()) throw ParseError("content after \\end\\", lineno);
      continue;
    }
    if (line.empty()) continue;

    if (state == State::kPreamble) {
      if (line == "\\data\\") state = State::kHeader;
      continue;
    }
    if (line == "\\end\\") {
      close_section(lineno);
      if (state == State::kHeader) throw ParseError("no n-gram sections before \\end\\", lineno);
      for (std::size_t k = 0; k < declared.size(); ++k) {
        if (seen[k] != declared[k])
          throw ParseError(fmt::format("header declares {} {}-grams but file lists {}", declared[k], k + 1, seen[k]),
                           lineno);
      }
      state = State::kDone;
      continue;
    }
    if (line.front() == '\\') {
      // \k-grams:
      std::size_t k = 0;
      const auto body = line.substr(1);
      auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), k);
      if (ec != std::errc() || std::string_view(ptr, body.data() + body.size() - ptr) != "-grams:")
        throw ParseError("unrecognized section header '" + std::string(line) + "'", lineno);
      if (k == 0 || k > declared.size()) throw ParseError(fmt::format("undeclared {}-gram section", k), lineno);
      if (k != current + 1) throw ParseError(fmt::format("{}-gram section out of order", k), lineno);
      close_section(lineno);
      current = k;
      state = State::kSection;
      continue;
    }
    if (state == State::kHeader) {
      // ngram k=count
      if (line.substr(0, 6) != "ngram ") throw ParseError("expected 'ngram k=count'", lineno);
      const auto decl = trim(line.substr(6));
      const auto eq = decl.find('=');
      std::size_t k = 0, count = 0;
      if (eq == std::string_view::npos ||
          std::from_chars(decl.data(), decl.data() + eq, k).ec != std::errc() ||
          std::from_chars(decl.data() + eq + 1, decl.data() + decl.size(), count).ec != std::errc())
        throw ParseError("malformed count line '" + std::string(line) + "'", lineno);
      if (k != declared.size() + 1) throw ParseError("n-gram count lines out of order", lineno);
      declared.push_back(count);
      seen.push_back(0);
      continue;
    }

    // n-gram row
    const std::size_t order = declared.size();
    std::vector<std::string_view> fields;
    if (std::count(line.begin(), line.end(), '\t') >= 1) {
      std::size_t start = 0;
      while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(trim(line.substr(start, tab == std::string_view::npos ? tab : tab - start)));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
    } else {
      fields = split_whitespace(line);
    }
    std::vector<std::string_view> words;
    std::string_view backoff;
    if (fields.size() >= 2 && fields.size() <= 3 && split_whitespace(fields[1]).size() == current) {
      words = split_whitespace(fields[1]);
      if (fields.size() == 3) backoff = fields[2];
    } else {
      // Space-separated row: logprob w1 .. wk [backoff]
      words.assign(fields.begin() + 1, fields.end());
      if (words.size() == current + 1) {
        backoff = words.back();
        words.pop_back();
      }
    }
    if (fields.empty() || words.size() != current)
      throw ParseError(fmt::format("expected {} token(s) in {}-gram row", current, current), lineno);

    const double lp = parse_log(fields[0], lineno);
    std::vector<WordId> ngram;
    for (auto w : words) {
      const std::string word(w);
      if (current == 1) {
        ngram.push_back(vocab.add(word));
      } else {
        if (!vocab.contains(word)) throw ParseError("token '" + word + "' missing from unigrams", lineno);
        ngram.push_back(vocab.lookup(word));
      }
    }
    const WordId last = ngram.back();
    ngram.pop_back();
    auto& node = nodes[ngram];
    if (!node.log_probs.emplace(last, lp).second) throw ParseError("duplicate n-gram", lineno);
    if (!backoff.empty() && current < order) {
      ngram.push_back(last);
      nodes[ngram].log_backoff = parse_log(backoff, lineno);
    }
    if (++seen[current - 1] > declared[current - 1])
      throw ParseError(fmt::format("header declares {} {}-grams but section lists more", declared[current - 1], current),
                       lineno);
  }
  if (state != State::kDone) throw ParseError("missing \\end\\ marker", lineno);

  auto& unigrams = nodes[{}];
  for (WordId reserved : {Vocabulary::kBos, Vocabulary::kEos, Vocabulary::kUnk})
    unigrams.log_probs.try_emplace(reserved, kLogZero);
  return NGramModel(static_cast<int>(declared.size()), std::move(vocab), std::move(nodes), Smoothing::kUnknown);
}

NGramModel load_arpa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_arpa(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace mdr
