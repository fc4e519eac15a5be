#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/eval.hpp"

namespace mdr {

// A seeded stand-in for a navigation + music speech product: character-level
// queries built from shared name "skeletons" whose one confusable slot is
// filled by a homophone that depends on the domain (and, for navigation, on
// the region of the POI). The general corpus is navigation-heavy, so music
// is the minority domain.
struct SynthOptions {
  std::uint64_t seed = 2021;
  std::size_t regions = 4;
  std::size_t skeletons = 240;
  std::size_t homophone_groups = 60;
  std::size_t navigation_train = 20000;
  std::size_t music_train = 4000;
  std::size_t chat_train = 6000;
  std::size_t dev_per_domain = 1000;
  std::size_t test_per_domain = 2000;
  std::size_t classifier_train_per_domain = 2000;
  double bare_name_rate = 0.25;  // queries that are just a name, no carrier phrase
};

struct TestQuery {
  std::string id;
  Sentence ref;
  std::string domain;
  std::optional<std::string> region;
};

struct SynthWorld {
  std::vector<DomainCorpus> train;                   // navigation, music, chat
  std::map<std::string, DomainCorpus> poi_names;     // region -> POI names
  DomainCorpus dev;                                  // mixed development set
  std::vector<DomainCorpus> classifier_train;        // labeled navigation, music
  DomainCorpus classifier_other;                     // labeled "other"
  std::map<std::string, std::vector<TestQuery>> tests;  // test set name -> queries
  ConfusionTable confusions;
  std::vector<Token> vocabulary;                     // every token in the world
};

SynthWorld make_synth_world(const SynthOptions& options);

}  // namespace mdr
