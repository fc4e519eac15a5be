#include "core/nbest_io.hpp"

#include <fstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace mdr {

NBestList parse_nbest(const std::string& line, TokenizerMode mode, std::size_t lineno) {
  NBestList list;
  try {
    const auto doc = nlohmann::json::parse(line);
    list.query_id = doc.at("id").get<std::string>();
    if (doc.contains("region") && !doc.at("region").is_null()) list.region = doc.at("region").get<std::string>();
    for (const auto& h : doc.at("hyps")) {
      Hypothesis hyp;
      hyp.text = h.at("text").get<std::string>();
      hyp.am_score = h.at("am").get<double>();
      hyp.lm_score = h.at("lm").get<double>();
      hyp.tokens = tokenize(hyp.text, mode);
      list.hyps.push_back(std::move(hyp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("n-best record: ") + e.what(), lineno);
  } catch (const DecodeError& e) {
    throw ParseError(std::string("n-best record: ") + e.what(), lineno);
  }
  if (list.hyps.empty()) throw ParseError("n-best record '" + list.query_id + "' has no hypotheses", lineno);
  return list;
}

std::vector<NBestList> read_nbest(const std::filesystem::path& path, TokenizerMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<NBestList> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_nbest(line, mode, lineno));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json list_header(const NBestList& list) {
  nlohmann::ordered_json doc;
  doc["id"] = list.query_id;
  doc["region"] = list.region ? nlohmann::ordered_json(*list.region) : nlohmann::ordered_json(nullptr);
  return doc;
}

}  // namespace

std::string nbest_to_json(const NBestList& list) {
  auto doc = list_header(list);
  auto& hyps = doc["hyps"] = nlohmann::ordered_json::array();
  for (const auto& h : list.hyps) hyps.push_back({{"text", h.text}, {"am", h.am_score}, {"lm", h.lm_score}});
  return doc.dump();
}

void write_nbest(const std::filesystem::path& path, const std::vector<NBestList>& lists) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& l : lists) out << nbest_to_json(l) << '\n';
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

std::string rerank_result_to_json(const RerankResult& result) {
  auto doc = list_header(result.list);
  doc["domain"] = result.decision.domain;
  auto& scores = doc["domain_scores"] = nlohmann::ordered_json::object();
  for (const auto& [id, p] : result.decision.scores) scores[id] = p;
  auto& hyps = doc["hyps"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.list.hyps.size(); ++i) {
    const auto& h = result.list.hyps[i];
    hyps.push_back({{"text", h.text}, {"am", h.am_score}, {"lm", h.lm_score}, {"score", result.scores[i]}});
  }
  return doc.dump();
}

}  // namespace mdr
