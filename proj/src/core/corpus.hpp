#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mdr {

using Token = std::string;
using Sentence = std::vector<Token>;

enum class TokenizerMode { kChar, kWhitespace };

TokenizerMode parse_tokenizer_mode(std::string_view name);
std::string_view to_string(TokenizerMode mode);

// Checks UTF-8 well-formedness; throws DecodeError naming the offending byte.
void validate_utf8(std::string_view text);

// NFC-normalizes text (which must be valid UTF-8).
std::string normalize_nfc(std::string_view text);

// char mode: one token per non-whitespace code point.
// whitespace mode: split on runs of Unicode whitespace.
// Input is validated and NFC-normalized first.
Sentence tokenize(std::string_view text, TokenizerMode mode = TokenizerMode::kChar);

// Inverse of tokenize up to whitespace: tokens concatenated in char mode,
// joined with a single space in whitespace mode.
std::string join_tokens(const Sentence& tokens, TokenizerMode mode);

// One domain's sentences. Immutable once loaded.
struct DomainCorpus {
  std::string domain_id;
  TokenizerMode mode = TokenizerMode::kChar;
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;
};

// One sentence per line; blank (whitespace-only) lines are skipped.
DomainCorpus load_corpus(const std::filesystem::path& path, std::string domain_id,
                         TokenizerMode mode = TokenizerMode::kChar);

DomainCorpus corpus_from_lines(const std::vector<std::string>& lines, std::string domain_id,
                               TokenizerMode mode = TokenizerMode::kChar);

// Raw non-empty-line reader shared by the text file formats; validates UTF-8
// and reports the line number on failure. Keeps blank lines when asked.
std::vector<std::string> read_lines(const std::filesystem::path& path, bool keep_blank = false);

void write_corpus(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                  TokenizerMode mode);

}  // namespace mdr
