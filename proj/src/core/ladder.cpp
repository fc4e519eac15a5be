#include "core/ladder.hpp"

#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/ngram.hpp"
#include "core/rng.hpp"

namespace mdr {

namespace {

std::string_view to_string(ClassifierMode m) {
  switch (m) {
    case ClassifierMode::kNone: return "none";
    case ClassifierMode::kLr: return "LR";
    case ClassifierMode::kGold: return "gold";
  }
  return "none";
}

std::shared_ptr<const LanguageModel> train_shared(const DomainCorpus& corpus, int order,
                                                  const std::vector<Token>& vocabulary) {
  NGramOptions o;
  o.order = order;
  o.extra_vocabulary = vocabulary;
  return std::make_shared<NGramModel>(train_ngram(corpus, o));
}

DomainCorpus concat(std::span<const DomainCorpus> parts, std::string id) {
  DomainCorpus out{std::move(id), TokenizerMode::kChar, {}};
  for (const auto& c : parts) out.sentences.insert(out.sentences.end(), c.sentences.begin(), c.sentences.end());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("{}: cannot open for writing", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("{}: write failed", path.string()));
}

}  // namespace

std::vector<LadderConfig> default_ladder() {
  using M = ClassifierMode;
  return {
      {"C1", false, M::kNone, "", false, false},
      {"C2", true, M::kNone, "mixed", false, false},
      {"C3", true, M::kNone, "mixed", false, true},
      {"C4", true, M::kLr, "mixed", true, true},
      {"C5", true, M::kGold, "mixed", true, true},
      {"C6", true, M::kNone, "sampled", false, false},
      {"C7", true, M::kLr, "sampled", true, true},
  };
}

LadderArtifacts build_ladder(const LadderOptions& options) {
  const SynthWorld world = make_synth_world(options.world);
  const std::uint64_t seed = options.world.seed;
  const auto& vocab = world.vocabulary;
  LadderArtifacts a;

  std::vector<const LanguageModel*> components;
  for (const auto& c : world.train) {
    auto lm = train_shared(c, options.domain_order, vocab);
    components.push_back(lm.get());
    a.registry.add(c.domain_id, lm);
  }
  const DomainCorpus general = concat(world.train, "general");
  a.registry.add("general", train_shared(general, options.domain_order, vocab));
  a.registry.add("rescore:mixed", train_shared(general, options.rescoring_order, vocab));
  a.registry.add("decoy", train_shared(general, 1, vocab));
  for (const auto& [region, names] : world.poi_names) {
    a.regions.push_back(region);
    a.registry.add("geo:" + region, train_shared(names, options.domain_order, vocab));
  }

  a.em = em_fit(components, world.dev);
  for (const auto& c : world.train) a.em.weights.names.push_back(c.domain_id);
  std::vector<CategorySize> sizes;
  for (const auto& c : world.train) sizes.push_back({c.domain_id, c.size()});
  a.plan = build_plan(sizes, a.em.weights.values, top_k_core(sizes, a.em.weights.values, 2));
  const SampledSet sampled = execute_plan(a.plan, world.train, derive_seed(seed, "sample"));
  a.registry.add("rescore:sampled",
                 train_shared(DomainCorpus{"sampled", TokenizerMode::kChar, sampled.sentences},
                              options.rescoring_order, vocab));

  a.classifier = train_classifier(world.classifier_train, world.classifier_other, options.classifier);

  for (const auto& [name, queries] : world.tests) {
    LadderTestSet set;
    set.name = name;
    std::vector<NBestRef> refs;
    for (const auto& q : queries) {
      refs.push_back({q.id, q.ref, q.region});
      set.refs.push_back(q.ref);
      set.gold.push_back(q.domain);
    }
    set.lists = gen_nbest(refs, options.nbest, world.confusions, a.registry.resolve("decoy"),
                          derive_seed(seed, "nbest:" + name));
    a.test_sets.push_back(std::move(set));
  }
  return a;
}

RerankConfig ladder_rerank_config(const LadderConfig& config, const LadderArtifacts& artifacts,
                                  const RerankConfig& base) {
  RerankConfig cfg = base;
  cfg.rescoring_lm = "rescore:" + config.rescoring_lm;
  cfg.geo_domain = "navigation";
  if (config.domain_lms) {
    cfg.domain_lms = {{"navigation", "navigation"}, {"music", "music"}, {kOtherDomain, "general"}};
  } else {
    cfg.domain_lms = {{"navigation", "general"}, {"music", "general"}, {kOtherDomain, "general"}};
  }
  cfg.geo_lms.clear();
  if (config.geo_lms)
    for (const auto& r : artifacts.regions) cfg.geo_lms[r] = "geo:" + r;
  return cfg;
}

std::vector<LadderRow> run_ladder(const LadderArtifacts& artifacts, std::span<const LadderConfig> configs,
                                  const RerankConfig& base, unsigned jobs) {
  std::vector<LadderRow> rows;
  for (const auto& config : configs) {
    LadderRow row{config, {}};
    for (const auto& set : artifacts.test_sets) {
      std::vector<Sentence> best;
      best.reserve(set.lists.size());
      if (!config.rescore) {
        for (const auto& l : set.lists) best.push_back(l.hyps.front().tokens);
      } else {
        const RerankConfig cfg = ladder_rerank_config(config, artifacts, base);
        artifacts.registry.check(cfg);
        // Without a classifier every query takes one fixed branch: the
        // geographical one when region LMs are on, else the general one.
        const DomainDecision fixed = fixed_decision(config.geo_lms ? cfg.geo_domain : kOtherDomain, cfg.threshold);
        auto decide_fn = [&](std::size_t i) {
          switch (config.classifier) {
            case ClassifierMode::kLr:
              return artifacts.classifier.classify(set.lists[i].hyps.front().tokens, cfg.threshold);
            case ClassifierMode::kGold: return fixed_decision(set.gold[i], cfg.threshold);
            case ClassifierMode::kNone: break;
          }
          return fixed;
        };
        for (auto& r : rerank_batch(std::span<const NBestList>(set.lists), decide_fn, cfg, artifacts.registry, jobs))
          best.push_back(std::move(r.list.hyps.front().tokens));
      }
      row.cer.push_back(cer(set.refs, best));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ladder_tsv(const LadderArtifacts& artifacts, std::span<const LadderRow> rows) {
  std::string out = "configuration\tclassifier\trescoring_lm\tdomain_lm\tgeo_lm";
  for (const auto& s : artifacts.test_sets) out += "\tcer_" + s.name;
  out += '\n';
  for (const auto& r : rows) {
    const auto& c = r.config;
    out += fmt::format("{}\t{}\t{}\t{}\t{}", c.name, to_string(c.classifier), c.rescore ? c.rescoring_lm : "none",
                       c.domain_lms ? "yes" : "no", c.geo_lms ? "yes" : "no");
    for (const auto& e : r.cer) out += fmt::format("\t{:.6f}", e.cer);
    out += '\n';
  }
  return out;
}

std::string ladder_report_json(const LadderArtifacts& artifacts, std::span<const LadderRow> rows,
                               const LadderOptions& options) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["seed"] = options.world.seed;
  doc["rerank"] = {{"alpha", options.rerank.alpha},
                   {"beta", options.rerank.beta},
                   {"eta", options.rerank.eta},
                   {"mu", options.rerank.mu},
                   {"threshold", options.rerank.threshold}};
  auto& em = doc["em_weights"] = ordered_json::object();
  for (std::size_t i = 0; i < artifacts.em.weights.values.size(); ++i)
    em[artifacts.em.weights.names.empty() ? std::to_string(i) : artifacts.em.weights.names[i]] =
        artifacts.em.weights.values[i];
  doc["sampling_plan"] = ordered_json::parse(plan_to_json(artifacts.plan));

  auto& configs = doc["configurations"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["name"] = r.config.name;
    row["classifier"] = to_string(r.config.classifier);
    row["rescoring_lm"] = r.config.rescore ? r.config.rescoring_lm : "none";
    row["domain_lm"] = r.config.domain_lms;
    row["geo_lm"] = r.config.geo_lms;
    auto& cer_obj = row["cer"] = ordered_json::object();
    for (std::size_t i = 0; i < r.cer.size(); ++i)
      cer_obj[artifacts.test_sets[i].name] = ordered_json::parse(cer_report_json(r.cer[i]));
    configs.push_back(std::move(row));
  }

  // Classifier quality on the first-pass best hypothesis and on the reference.
  std::vector<std::string> gold, top1, reference;
  for (const auto& set : artifacts.test_sets) {
    for (std::size_t i = 0; i < set.lists.size(); ++i) {
      gold.push_back(set.gold[i]);
      top1.push_back(artifacts.classifier.classify(set.lists[i].hyps.front().tokens, options.rerank.threshold).domain);
      reference.push_back(artifacts.classifier.classify(set.refs[i], options.rerank.threshold).domain);
    }
  }
  std::set<std::string> domains;
  for (const auto& m : artifacts.classifier.models) domains.insert(m.domain_id);
  doc["classifier"] = {
      {"top1", ordered_json::parse(classifier_report_json(classifier_report(top1, gold, domains)))},
      {"reference", ordered_json::parse(classifier_report_json(classifier_report(reference, gold, domains)))}};
  return doc.dump(2) + "\n";
}

std::vector<LadderRow> run_synthetic_ladder(const LadderOptions& options, const std::filesystem::path& out_dir) {
  const LadderArtifacts artifacts = build_ladder(options);
  const auto configs = default_ladder();
  auto rows = run_ladder(artifacts, configs, options.rerank, options.jobs);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("{}: {}", out_dir.string(), ec.message()));
  write_text(out_dir / "ladder.tsv", ladder_tsv(artifacts, rows));
  write_text(out_dir / "report.json", ladder_report_json(artifacts, rows, options));
  return rows;
}

}  // namespace mdr
