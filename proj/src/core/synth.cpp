#include "core/synth.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "core/errors.hpp"
#include "core/classifier.hpp"
#include "core/rng.hpp"

namespace mdr {

namespace {

std::string utf8(char32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xC0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    s += static_cast<char>(0xF0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return s;
}

const std::vector<std::string> kNavigationCarriers = {"导航到{}", "去{}", "{}在哪里", "到{}怎么走", "带我去{}"};
const std::vector<std::string> kMusicCarriers = {"播放{}", "我想听{}", "来一首{}", "放一首{}的歌"};
const std::vector<std::string> kChatPhrases = {
    "今天天气怎么样", "讲个笑话", "你叫什么名字", "现在几点了", "明天会下雨吗", "你好",   "谢谢你",
    "打开空调",       "音量大一点", "关闭屏幕",     "我有点累",   "附近有什么好吃的", "帮我打电话", "晚安"};

enum class Usage { kNavigation, kMusic, kShared };

struct Skeleton {
  Sentence prefix;
  std::size_t group = 0;
  Sentence suffix;
  Usage usage = Usage::kShared;
  std::vector<std::size_t> regions;  // navigation: regions carrying this POI
};

struct Name {
  Sentence tokens;
  std::string region;  // navigation only
};

Sentence name_tokens(const Skeleton& s, const Token& slot) {
  Sentence t = s.prefix;
  t.push_back(slot);
  t.insert(t.end(), s.suffix.begin(), s.suffix.end());
  return t;
}

Sentence fill(const std::string& carrier, const Sentence& name) {
  const auto at = carrier.find("{}");
  Sentence out = tokenize(carrier.substr(0, at));
  out.insert(out.end(), name.begin(), name.end());
  const Sentence tail = tokenize(carrier.substr(at + 2));
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

std::string region_id(std::size_t r) { return fmt::format("R{:02}", r + 1); }

}  // namespace

SynthWorld make_synth_world(const SynthOptions& o) {
  if (o.regions < 2 || o.skeletons < 4 || o.homophone_groups < 1)
    throw InvalidArgument("synthetic world needs >= 2 regions, >= 4 skeletons, >= 1 homophone group");
  Rng rng(derive_seed(o.seed, "synth-world"));

  std::set<Token> reserved;
  for (const auto* set : {&kNavigationCarriers, &kMusicCarriers, &kChatPhrases})
    for (const auto& s : *set)
      for (auto& t : tokenize(s)) reserved.insert(t);

  // Ordinary name characters and homophone triples come from disjoint
  // CJK blocks that avoid every carrier character.
  auto take = [&](char32_t start, std::size_t count) {
    std::vector<Token> out;
    for (char32_t cp = start; out.size() < count; ++cp) {
      auto s = utf8(cp);
      if (!reserved.count(s)) out.push_back(std::move(s));
    }
    return out;
  };
  const std::vector<Token> name_chars = take(0x8000, 400);
  const std::vector<Token> homophone_chars = take(0x6C00, 3 * o.homophone_groups);
  auto group_char = [&](std::size_t g, std::size_t v) -> const Token& { return homophone_chars[3 * g + v]; };

  SynthWorld world;
  for (std::size_t g = 0; g < o.homophone_groups; ++g)
    for (std::size_t v = 0; v < 3; ++v)
      for (std::size_t u = 0; u < 3; ++u)
        if (u != v) world.confusions.alternatives[group_char(g, v)].push_back(group_char(g, u));

  std::vector<Skeleton> skeletons(o.skeletons);
  for (auto& s : skeletons) {
    s.prefix = {name_chars[rng.below(name_chars.size())], name_chars[rng.below(name_chars.size())]};
    s.group = rng.below(o.homophone_groups);
    const std::size_t suffix_len = 1 + rng.below(2);
    for (std::size_t i = 0; i < suffix_len; ++i) s.suffix.push_back(name_chars[rng.below(name_chars.size())]);
    const double u = rng.uniform();
    s.usage = u < 0.4 ? Usage::kShared : (u < 0.75 ? Usage::kNavigation : Usage::kMusic);
    if (s.usage != Usage::kMusic) {
      // Two regions, each filling the slot with a different homophone.
      const std::size_t a = rng.below(o.regions);
      std::size_t b = rng.below(o.regions - 1);
      if (b >= a) ++b;
      s.regions = {a, b};
    }
  }

  std::vector<Name> pois;
  std::vector<Name> songs;
  for (const auto& s : skeletons) {
    for (std::size_t i = 0; i < s.regions.size(); ++i)
      pois.push_back({name_tokens(s, group_char(s.group, i)), region_id(s.regions[i])});
    if (s.usage != Usage::kNavigation) songs.push_back({name_tokens(s, group_char(s.group, 2)), {}});
  }
  for (const auto& p : pois) {
    auto& corpus = world.poi_names[p.region];
    corpus.domain_id = "geo:" + p.region;
    corpus.sentences.push_back(p.tokens);
  }

  auto navigation_query = [&](Rng& r, std::string* region) {
    const Name& poi = pois[r.below(pois.size())];
    if (region) *region = poi.region;
    if (r.bernoulli(o.bare_name_rate)) return poi.tokens;
    return fill(kNavigationCarriers[r.below(kNavigationCarriers.size())], poi.tokens);
  };
  auto music_query = [&](Rng& r) {
    const Name& song = songs[r.below(songs.size())];
    if (r.bernoulli(o.bare_name_rate)) return song.tokens;
    return fill(kMusicCarriers[r.below(kMusicCarriers.size())], song.tokens);
  };
  auto chat_query = [&](Rng& r) {
    Sentence s = tokenize(kChatPhrases[r.below(kChatPhrases.size())]);
    if (r.bernoulli(0.3)) {
      const Sentence more = tokenize(kChatPhrases[r.below(kChatPhrases.size())]);
      s.insert(s.end(), more.begin(), more.end());
    }
    return s;
  };

  auto corpus_of = [](std::string id, std::size_t n, auto&& make) {
    DomainCorpus c{std::move(id), TokenizerMode::kChar, {}};
    c.sentences.reserve(n);
    for (std::size_t i = 0; i < n; ++i) c.sentences.push_back(make());
    return c;
  };

  {
    Rng r(derive_seed(o.seed, "train"));
    world.train.push_back(corpus_of("navigation", o.navigation_train, [&] { return navigation_query(r, nullptr); }));
    world.train.push_back(corpus_of("music", o.music_train, [&] { return music_query(r); }));
    world.train.push_back(corpus_of("chat", o.chat_train, [&] { return chat_query(r); }));
  }
  {
    Rng r(derive_seed(o.seed, "dev"));
    world.dev.domain_id = "dev";
    for (std::size_t i = 0; i < o.dev_per_domain; ++i) {
      world.dev.sentences.push_back(navigation_query(r, nullptr));
      world.dev.sentences.push_back(music_query(r));
      if (i % 2 == 0) world.dev.sentences.push_back(chat_query(r));
    }
  }
  {
    Rng r(derive_seed(o.seed, "classifier"));
    const std::size_t n = o.classifier_train_per_domain;
    world.classifier_train.push_back(corpus_of("music", n, [&] { return music_query(r); }));
    world.classifier_train.push_back(corpus_of("navigation", n, [&] { return navigation_query(r, nullptr); }));
    world.classifier_other = corpus_of(kOtherDomain, n, [&] { return chat_query(r); });
  }
  {
    Rng r(derive_seed(o.seed, "test"));
    auto& nav = world.tests["navigation"];
    auto& music = world.tests["music"];
    for (std::size_t i = 0; i < o.test_per_domain; ++i) {
      std::string region;
      Sentence ref = navigation_query(r, &region);
      nav.push_back({fmt::format("nav-{:05}", i + 1), std::move(ref), "navigation", region});
    }
    for (std::size_t i = 0; i < o.test_per_domain; ++i) {
      // The user's location is known for every query, music included.
      music.push_back({fmt::format("music-{:05}", i + 1), music_query(r), "music", region_id(r.below(o.regions))});
    }
  }

  std::set<Token> vocab;
  for (const auto& c : world.train)
    for (const auto& s : c.sentences) vocab.insert(s.begin(), s.end());
  for (const auto& [region, c] : world.poi_names)
    for (const auto& s : c.sentences) vocab.insert(s.begin(), s.end());
  for (const auto& h : homophone_chars) vocab.insert(h);
  world.vocabulary.assign(vocab.begin(), vocab.end());
  return world;
}

}  // namespace mdr
