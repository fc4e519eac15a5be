#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/rerank.hpp"

namespace mdr {

// N-best JSONL, one query per line:
//   {"id": str, "region": str|null, "hyps": [{"text": str, "am": float, "lm": float}, ...]}
NBestList parse_nbest(const std::string& line, TokenizerMode mode, std::size_t lineno = 0);
std::vector<NBestList> read_nbest(const std::filesystem::path& path, TokenizerMode mode);

std::string nbest_to_json(const NBestList& list);
void write_nbest(const std::filesystem::path& path, const std::vector<NBestList>& lists);

// The input record plus "domain", the classifier "scores", and a "score" per
// hypothesis, hypotheses in reranked order.
std::string rerank_result_to_json(const RerankResult& result);

}  // namespace mdr
