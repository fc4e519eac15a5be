#include "core/corpus.hpp"

#include <fstream>
#include <memory>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "core/errors.hpp"

namespace mdr {

TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "char") return TokenizerMode::kChar;
  if (name == "whitespace") return TokenizerMode::kWhitespace;
  throw InvalidArgument("unknown tokenizer mode '" + std::string(name) +
                        "' (expected char or whitespace)");
}

std::string_view to_string(TokenizerMode mode) {
  return mode == TokenizerMode::kChar ? "char" : "whitespace";
}

void validate_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) throw DecodeError("invalid UTF-8 sequence", static_cast<std::size_t>(start));
  }
}

std::string normalize_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const icu::UnicodeString source =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (nfc->isNormalized(source, status) && U_SUCCESS(status)) return std::string(text);
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

Sentence tokenize(std::string_view text, TokenizerMode mode) {
  validate_utf8(text);
  const std::string normalized = normalize_nfc(text);
  const auto* s = reinterpret_cast<const uint8_t*>(normalized.data());
  const auto length = static_cast<int32_t>(normalized.size());

  Sentence tokens;
  std::string current;
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    const bool space = u_isUWhiteSpace(c);
    if (mode == TokenizerMode::kChar) {
      if (!space) tokens.emplace_back(normalized, start, i - start);
      continue;
    }
    if (space) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.append(normalized, start, i - start);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join_tokens(const Sentence& tokens, TokenizerMode mode) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i && mode == TokenizerMode::kWhitespace) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::size_t DomainCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::vector<std::string> read_lines(const std::filesystem::path& path, bool keep_blank) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  std::size_t lineno = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      validate_utf8(line);
    } catch (const DecodeError& e) {
      throw DecodeError("invalid UTF-8 in '" + path.string() + "'", offset + e.byte_offset(), lineno);
    }
    offset += line.size() + 1;
    if (!keep_blank && line.find_first_not_of(" \t\v\f") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return lines;
}

DomainCorpus corpus_from_lines(const std::vector<std::string>& lines, std::string domain_id,
                               TokenizerMode mode) {
  DomainCorpus corpus{std::move(domain_id), mode, {}};
  corpus.sentences.reserve(lines.size());
  for (const auto& line : lines) {
    Sentence tokens = tokenize(line, mode);
    // Lines holding only Unicode whitespace count as blank too.
    if (!tokens.empty()) corpus.sentences.push_back(std::move(tokens));
  }
  return corpus;
}

DomainCorpus load_corpus(const std::filesystem::path& path, std::string domain_id, TokenizerMode mode) {
  return corpus_from_lines(read_lines(path), std::move(domain_id), mode);
}

void write_corpus(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                  TokenizerMode mode) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& s : sentences) out << join_tokens(s, mode) << '\n';
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

}  // namespace mdr
