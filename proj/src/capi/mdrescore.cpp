#include "mdrescore/mdrescore.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "core/classifier.hpp"
#include "core/corpus.hpp"
#include "core/errors.hpp"
#include "core/eval.hpp"
#include "core/interp.hpp"
#include "core/ladder.hpp"
#include "core/nbest_io.hpp"
#include "core/ngram.hpp"
#include "core/rerank.hpp"
#include "core/sampler.hpp"

struct mdr_corpus {
  mdr::DomainCorpus corpus;
};

struct mdr_lm {
  std::shared_ptr<const mdr::LanguageModel> lm;
};

struct mdr_weights {
  mdr::InterpolationWeights weights;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
};

struct mdr_plan {
  mdr::SamplingPlan plan;
};

struct mdr_classifier {
  mdr::DomainClassifier classifier;
};

struct mdr_reranker {
  mdr::RerankSetup setup;
};

namespace {

thread_local std::string last_error;

mdr_status fail(mdr_status status, const char* what) {
  last_error = what;
  return status;
}

// Runs f, translating exceptions into status codes.
template <typename F>
mdr_status guard(F&& f) noexcept {
  try {
    last_error.clear();
    f();
    return MDR_OK;
  } catch (const mdr::InvalidArgument& e) {
    return fail(MDR_ERR_INVALID_ARGUMENT, e.what());
  } catch (const mdr::IoError& e) {
    return fail(MDR_ERR_IO, e.what());
  } catch (const mdr::ParseError& e) {
    return fail(MDR_ERR_PARSE, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(MDR_ERR_PARSE, e.what());
  } catch (const mdr::Error& e) {
    return fail(MDR_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MDR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MDR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MDR_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw mdr::InvalidArgument(what);
}

mdr::TokenizerMode tokenizer_of(const char* name) {
  return name ? mdr::parse_tokenizer_mode(name) : mdr::TokenizerMode::kChar;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> read_label_file(const char* path) {
  std::vector<std::string> out;
  for (auto& line : mdr::read_lines(path)) {
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mdr::IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw mdr::IoError("write failed on '" + path + "'");
}

std::vector<mdr::CategorySize> category_sizes(const char* const* domains, const size_t* sizes, const double* weights,
                                              size_t count) {
  require(domains && sizes && weights && count > 0, "plan needs at least one category");
  std::vector<mdr::CategorySize> out;
  for (size_t i = 0; i < count; ++i) {
    require(domains[i] != nullptr, "null domain id");
    out.push_back({domains[i], sizes[i]});
  }
  return out;
}

}  // namespace

extern "C" {

const char* mdr_last_error(void) { return last_error.c_str(); }
const char* mdr_version(void) { return "1.0.0"; }
void mdr_string_free(char* s) { std::free(s); }

// ---- corpora

mdr_status mdr_corpus_load(const char* path, const char* domain_id, const char* tokenizer, mdr_corpus** out) {
  return guard([&] {
    require(path && out, "mdr_corpus_load: null argument");
    *out = new mdr_corpus{mdr::load_corpus(path, domain_id ? domain_id : "", tokenizer_of(tokenizer))};
  });
}

size_t mdr_corpus_size(const mdr_corpus* corpus) { return corpus ? corpus->corpus.size() : 0; }
size_t mdr_corpus_token_count(const mdr_corpus* corpus) { return corpus ? corpus->corpus.token_count() : 0; }
const char* mdr_corpus_domain(const mdr_corpus* corpus) { return corpus ? corpus->corpus.domain_id.c_str() : ""; }
void mdr_corpus_free(mdr_corpus* corpus) { delete corpus; }

// ---- language models

void mdr_ngram_options_init(mdr_ngram_options* options) {
  if (!options) return;
  const mdr::NGramOptions d;
  options->order = d.order;
  options->smoothing = "witten-bell";
  options->unk_floor = d.unk_floor;
}

mdr_status mdr_lm_train(const mdr_corpus* corpus, const mdr_ngram_options* options, mdr_lm** out) {
  return guard([&] {
    require(corpus && out, "mdr_lm_train: null argument");
    mdr::NGramOptions o;
    if (options) {
      o.order = options->order;
      if (options->smoothing) o.smoothing = mdr::parse_smoothing(options->smoothing);
      o.unk_floor = options->unk_floor;
    }
    *out = new mdr_lm{std::make_shared<mdr::NGramModel>(mdr::train_ngram(corpus->corpus, o))};
  });
}

mdr_status mdr_lm_load_arpa(const char* path, mdr_lm** out) {
  return guard([&] {
    require(path && out, "mdr_lm_load_arpa: null argument");
    *out = new mdr_lm{std::make_shared<mdr::NGramModel>(mdr::load_arpa(path))};
  });
}

mdr_status mdr_lm_save_arpa(const mdr_lm* lm, const char* path) {
  return guard([&] {
    require(lm && path, "mdr_lm_save_arpa: null argument");
    const auto* ngram = dynamic_cast<const mdr::NGramModel*>(lm->lm.get());
    require(ngram != nullptr, "only n-gram models can be written as ARPA");
    mdr::save_arpa(*ngram, path);
  });
}

mdr_status mdr_lm_score(const mdr_lm* lm, const char* text, const char* tokenizer, double* log_prob,
                        size_t* tokens) {
  return guard([&] {
    require(lm && text, "mdr_lm_score: null argument");
    const auto score = lm->lm->score(mdr::tokenize(text, tokenizer_of(tokenizer)));
    if (log_prob) *log_prob = score.log_prob;
    if (tokens) *tokens = score.token_count;
  });
}

mdr_status mdr_lm_perplexity(const mdr_lm* lm, const mdr_corpus* corpus, double* out) {
  return guard([&] {
    require(lm && corpus && out, "mdr_lm_perplexity: null argument");
    *out = mdr::perplexity(*lm->lm, corpus->corpus);
  });
}

mdr_status mdr_lm_interpolate(const mdr_lm* const* lms, const double* weights, size_t count, mdr_lm** out) {
  return guard([&] {
    require(lms && weights && out && count > 0, "mdr_lm_interpolate: null argument");
    std::vector<std::shared_ptr<const mdr::LanguageModel>> parts;
    for (size_t i = 0; i < count; ++i) {
      require(lms[i] != nullptr, "mdr_lm_interpolate: null model");
      parts.push_back(lms[i]->lm);
    }
    mdr::InterpolationWeights w;
    w.values.assign(weights, weights + count);
    *out = new mdr_lm{std::make_shared<mdr::InterpolatedLM>(std::move(parts), std::move(w))};
  });
}

void mdr_lm_free(mdr_lm* lm) { delete lm; }

// ---- interpolation weights

mdr_status mdr_em_fit(const mdr_lm* const* lms, const char* const* names, size_t count, const mdr_corpus* dev,
                      int max_iters, double tol, mdr_weights** out) {
  return guard([&] {
    require(lms && dev && out && count > 0, "mdr_em_fit: null argument");
    std::vector<const mdr::LanguageModel*> parts;
    for (size_t i = 0; i < count; ++i) {
      require(lms[i] != nullptr, "mdr_em_fit: null model");
      parts.push_back(lms[i]->lm.get());
    }
    auto result = mdr::em_fit(parts, dev->corpus, mdr::EmOptions{max_iters, tol});
    if (names)
      for (size_t i = 0; i < count; ++i) result.weights.names.emplace_back(names[i] ? names[i] : "");
    *out = new mdr_weights{std::move(result.weights), std::move(result.log_likelihood), result.iterations,
                           result.converged};
  });
}

size_t mdr_weights_count(const mdr_weights* w) { return w ? w->weights.values.size() : 0; }

double mdr_weights_value(const mdr_weights* w, size_t i) {
  return w && i < w->weights.values.size() ? w->weights.values[i] : 0.0;
}

const char* mdr_weights_name(const mdr_weights* w, size_t i) {
  return w && i < w->weights.names.size() ? w->weights.names[i].c_str() : "";
}

int mdr_weights_iterations(const mdr_weights* w) { return w ? w->iterations : 0; }
int mdr_weights_converged(const mdr_weights* w) { return w && w->converged ? 1 : 0; }
size_t mdr_weights_history_size(const mdr_weights* w) { return w ? w->history.size() : 0; }
double mdr_weights_history(const mdr_weights* w, size_t i) {
  return w && i < w->history.size() ? w->history[i] : 0.0;
}

mdr_status mdr_weights_save(const mdr_weights* w, const char* path) {
  return guard([&] {
    require(w && path, "mdr_weights_save: null argument");
    mdr::save_weights(w->weights, path);
  });
}

mdr_status mdr_weights_load(const char* path, mdr_weights** out) {
  return guard([&] {
    require(path && out, "mdr_weights_load: null argument");
    *out = new mdr_weights{mdr::load_weights(path), {}, 0, false};
  });
}

void mdr_weights_free(mdr_weights* w) { delete w; }

// ---- instance sampling

mdr_status mdr_plan_build(const char* const* domains, const size_t* sizes, const double* weights, size_t count,
                          const char* const* core, size_t core_count, mdr_plan** out) {
  return guard([&] {
    require(out && (core || core_count == 0), "mdr_plan_build: null argument");
    const auto cats = category_sizes(domains, sizes, weights, count);
    std::set<std::string> core_set;
    for (size_t i = 0; i < core_count; ++i) {
      require(core[i] != nullptr, "null core domain id");
      core_set.insert(core[i]);
    }
    *out = new mdr_plan{mdr::build_plan(cats, std::span<const double>(weights, count), core_set)};
  });
}

mdr_status mdr_plan_build_top_k(const char* const* domains, const size_t* sizes, const double* weights,
                                size_t count, size_t top_k, mdr_plan** out) {
  return guard([&] {
    require(out != nullptr, "mdr_plan_build_top_k: null argument");
    const auto cats = category_sizes(domains, sizes, weights, count);
    const std::span<const double> w(weights, count);
    *out = new mdr_plan{mdr::build_plan(cats, w, mdr::top_k_core(cats, w, top_k))};
  });
}

mdr_status mdr_plan_to_json(const mdr_plan* plan, char** out) {
  return guard([&] {
    require(plan && out, "mdr_plan_to_json: null argument");
    *out = dup_string(mdr::plan_to_json(plan->plan));
  });
}

mdr_status mdr_plan_save(const mdr_plan* plan, const char* path) {
  return guard([&] {
    require(plan && path, "mdr_plan_save: null argument");
    mdr::save_plan(plan->plan, path);
  });
}

mdr_status mdr_plan_load(const char* path, mdr_plan** out) {
  return guard([&] {
    require(path && out, "mdr_plan_load: null argument");
    *out = new mdr_plan{mdr::load_plan(path)};
  });
}

mdr_status mdr_plan_execute(const mdr_plan* plan, const mdr_corpus* const* corpora, size_t count, uint64_t seed,
                            const char* corpus_path, const char* provenance_path) {
  return guard([&] {
    require(plan && corpora && corpus_path && provenance_path, "mdr_plan_execute: null argument");
    // Order the corpora like the plan's categories.
    std::vector<mdr::DomainCorpus> ordered;
    for (const auto& cat : plan->plan.categories) {
      const mdr_corpus* match = nullptr;
      for (size_t i = 0; i < count; ++i)
        if (corpora[i] && corpora[i]->corpus.domain_id == cat.domain_id) match = corpora[i];
      if (!match) throw mdr::InvalidArgument("no corpus given for plan category '" + cat.domain_id + "'");
      ordered.push_back(match->corpus);
    }
    const mdr::TokenizerMode mode = ordered.empty() ? mdr::TokenizerMode::kChar : ordered.front().mode;
    mdr::write_sampled_set(mdr::execute_plan(plan->plan, ordered, seed), mode, corpus_path, provenance_path);
  });
}

void mdr_plan_free(mdr_plan* plan) { delete plan; }

// ---- domain classifier

void mdr_classifier_options_init(mdr_classifier_options* options) {
  if (!options) return;
  const mdr::ClassifierTrainOptions d;
  options->max_order = d.vectorizer.max_order;
  options->min_df = d.vectorizer.min_df;
  options->l2 = d.lr.l2;
  options->epochs = d.lr.epochs;
  options->step = d.lr.step;
  options->decay = d.lr.decay;
}

mdr_status mdr_classifier_train(const mdr_corpus* const* domains, size_t count, const mdr_corpus* other,
                                const mdr_classifier_options* options, mdr_classifier** out) {
  return guard([&] {
    require(domains && out && count > 0, "mdr_classifier_train: null argument");
    std::vector<mdr::DomainCorpus> parts;
    for (size_t i = 0; i < count; ++i) {
      require(domains[i] != nullptr, "mdr_classifier_train: null corpus");
      parts.push_back(domains[i]->corpus);
    }
    mdr::ClassifierTrainOptions o;
    if (options) {
      o.vectorizer = {options->max_order, options->min_df};
      o.lr = {options->l2, options->epochs, options->step, options->decay};
    }
    const mdr::DomainCorpus empty{mdr::kOtherDomain, mdr::TokenizerMode::kChar, {}};
    *out = new mdr_classifier{mdr::train_classifier(parts, other ? other->corpus : empty, o)};
  });
}

mdr_status mdr_classifier_save(const mdr_classifier* classifier, const char* dir) {
  return guard([&] {
    require(classifier && dir, "mdr_classifier_save: null argument");
    mdr::save_classifier(classifier->classifier, dir);
  });
}

mdr_status mdr_classifier_load(const char* const* files, size_t count, mdr_classifier** out) {
  return guard([&] {
    require(files && out && count > 0, "mdr_classifier_load: no model files");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      require(files[i] != nullptr, "mdr_classifier_load: null path");
      paths.emplace_back(files[i]);
    }
    *out = new mdr_classifier{mdr::load_classifier(paths)};
  });
}

namespace {

nlohmann::ordered_json decision_json(const mdr::DomainDecision& d) {
  nlohmann::ordered_json doc;
  doc["domain"] = d.domain;
  auto& scores = doc["scores"] = nlohmann::ordered_json::object();
  for (const auto& [id, p] : d.scores) scores[id] = p;
  return doc;
}

}  // namespace

mdr_status mdr_classifier_classify(const mdr_classifier* classifier, const char* text, const char* tokenizer,
                                   double threshold, char** json_out) {
  return guard([&] {
    require(classifier && text && json_out, "mdr_classifier_classify: null argument");
    require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    const auto d = classifier->classifier.classify(mdr::tokenize(text, tokenizer_of(tokenizer)), threshold);
    *json_out = dup_string(decision_json(d).dump());
  });
}

mdr_status mdr_classifier_classify_file(const mdr_classifier* classifier, const char* path, const char* tokenizer,
                                        double threshold, int labels_only, char** out) {
  return guard([&] {
    require(classifier && path && out, "mdr_classifier_classify_file: null argument");
    require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
    const auto mode = tokenizer_of(tokenizer);
    std::string text;
    for (const auto& line : mdr::read_lines(path)) {
      const auto d = classifier->classifier.classify(mdr::tokenize(line, mode), threshold);
      if (labels_only) {
        text += d.domain;
      } else {
        auto doc = decision_json(d);
        doc["text"] = line;
        text += doc.dump();
      }
      text += '\n';
    }
    *out = dup_string(text);
  });
}

void mdr_classifier_free(mdr_classifier* classifier) { delete classifier; }

// ---- reranking

mdr_status mdr_reranker_load(const char* config_path, const char* model_dir, mdr_reranker** out) {
  return guard([&] {
    require(config_path && out, "mdr_reranker_load: null argument");
    const std::filesystem::path dir =
        model_dir ? std::filesystem::path(model_dir) : std::filesystem::path(config_path).parent_path();
    *out = new mdr_reranker{mdr::load_rerank_setup(config_path, dir)};
  });
}

mdr_status mdr_reranker_run(const mdr_reranker* reranker, const char* nbest_path, const char* domain,
                            const char* out_path, const char* best_path, unsigned jobs) {
  return guard([&] {
    require(reranker && nbest_path && out_path, "mdr_reranker_run: null argument");
    const auto& setup = reranker->setup;
    if (!domain && !setup.classifier)
      throw mdr::InvalidArgument("the rerank config has no classifier; force a domain instead");
    const auto lists = mdr::read_nbest(nbest_path, setup.tokenizer);
    const auto fixed = mdr::fixed_decision(domain ? domain : "", setup.config.threshold);
    auto decide_fn = [&](std::size_t i) {
      if (domain) return fixed;
      return setup.classifier->classify(lists[i].hyps.front().tokens, setup.config.threshold);
    };
    const auto results = mdr::rerank_batch(std::span<const mdr::NBestList>(lists), decide_fn, setup.config,
                                           setup.registry, jobs == 0 ? 1 : jobs);
    std::string jsonl, best;
    for (const auto& r : results) {
      jsonl += mdr::rerank_result_to_json(r) + '\n';
      best += r.list.hyps.front().text + '\n';
    }
    write_file(out_path, jsonl);
    if (best_path) write_file(best_path, best);
  });
}

void mdr_reranker_free(mdr_reranker* reranker) { delete reranker; }

// ---- evaluation

mdr_status mdr_eval_cer_files(const char* ref_path, const char* hyp_path, const char* tokenizer,
                              mdr_cer_report* out) {
  return guard([&] {
    require(ref_path && hyp_path && out, "mdr_eval_cer_files: null argument");
    const auto mode = tokenizer_of(tokenizer);
    // Blank lines are kept so the files stay aligned.
    auto load = [&](const char* p) {
      std::vector<mdr::Sentence> out;
      for (const auto& line : mdr::read_lines(p, true)) out.push_back(mdr::tokenize(line, mode));
      return out;
    };
    const auto refs = load(ref_path);
    const auto hyps = load(hyp_path);
    const auto r = mdr::cer(refs, hyps);
    *out = {r.edits, r.ref_chars, r.cer};
  });
}

mdr_status mdr_eval_classifier_files(const char* pred_path, const char* gold_path, const char* const* domains,
                                     size_t count, int as_json, char** out) {
  return guard([&] {
    require(pred_path && gold_path && out && (domains || count == 0), "mdr_eval_classifier_files: null argument");
    const auto pred = read_label_file(pred_path);
    const auto gold = read_label_file(gold_path);
    std::set<std::string> ids;
    for (size_t i = 0; i < count; ++i)
      if (domains[i]) ids.insert(domains[i]);
    const auto report = mdr::classifier_report(pred, gold, ids);
    *out = dup_string(as_json ? mdr::classifier_report_json(report) : mdr::classifier_report_text(report));
  });
}

double mdr_relative_reduction(double baseline, double system) {
  return mdr::relative_reduction(baseline, system);
}

double mdr_f1_score(double precision, double recall) { return mdr::f1_score(precision, recall); }

void mdr_nbest_options_init(mdr_nbest_options* options) {
  if (!options) return;
  const mdr::NBestGenOptions d;
  options->n = d.n;
  options->noise_rate = d.noise_rate;
  options->homophone_rate = -1.0;
  options->am_edit_cost = d.am_edit_cost;
  options->am_homophone_cost = d.am_homophone_cost;
  options->jitter_sigma = d.jitter_sigma;
  options->tokenizer = "char";
}

mdr_status mdr_gen_nbest(const char* refs_path, const char* regions_path, const char* confusions_path,
                         const mdr_lm* decoy, const mdr_nbest_options* options, uint64_t seed,
                         const char* out_path) {
  return guard([&] {
    require(refs_path && decoy && out_path, "mdr_gen_nbest: null argument");
    mdr_nbest_options o;
    mdr_nbest_options_init(&o);
    if (options) o = *options;
    mdr::NBestGenOptions g;
    g.n = o.n;
    g.noise_rate = o.noise_rate;
    if (o.homophone_rate >= 0.0) g.homophone_rate = o.homophone_rate;
    g.am_edit_cost = o.am_edit_cost;
    g.am_homophone_cost = o.am_homophone_cost;
    g.jitter_sigma = o.jitter_sigma;
    g.mode = tokenizer_of(o.tokenizer);

    const auto lines = mdr::read_lines(refs_path);
    std::vector<std::string> regions;
    if (regions_path) {
      regions = read_label_file(regions_path);
      if (regions.size() != lines.size())
        throw mdr::InvalidArgument(fmt::format("{} regions for {} references", regions.size(), lines.size()));
    }
    std::vector<mdr::NBestRef> refs;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      mdr::NBestRef r{fmt::format("q{:06}", i + 1), mdr::tokenize(lines[i], g.mode), std::nullopt};
      if (!regions.empty() && regions[i] != "-") r.region = regions[i];
      refs.push_back(std::move(r));
    }
    const mdr::ConfusionTable confusions = confusions_path ? mdr::load_confusions(confusions_path)
                                                           : mdr::ConfusionTable{};
    mdr::write_nbest(out_path, mdr::gen_nbest(refs, g, confusions, *decoy->lm, seed));
  });
}

void mdr_ladder_options_init(mdr_ladder_options* options) {
  if (!options) return;
  const mdr::LadderOptions d;
  options->seed = d.world.seed;
  options->test_per_domain = d.world.test_per_domain;
  options->alpha = d.rerank.alpha;
  options->beta = d.rerank.beta;
  options->eta = d.rerank.eta;
  options->mu = d.rerank.mu;
  options->threshold = d.rerank.threshold;
  options->jobs = d.jobs;
}

mdr_status mdr_run_ladder(const mdr_ladder_options* options, const char* out_dir, char** tsv_out) {
  return guard([&] {
    require(out_dir != nullptr, "mdr_run_ladder: null output directory");
    mdr_ladder_options o;
    mdr_ladder_options_init(&o);
    if (options) o = *options;
    mdr::LadderOptions l;
    l.world.seed = o.seed;
    l.world.test_per_domain = o.test_per_domain;
    l.rerank.alpha = o.alpha;
    l.rerank.beta = o.beta;
    l.rerank.eta = o.eta;
    l.rerank.mu = o.mu;
    l.rerank.threshold = o.threshold;
    l.jobs = o.jobs == 0 ? 1 : o.jobs;
    require(o.test_per_domain > 0, "test_per_domain must be positive");
    l.rerank.rescoring_lm = "rescore:mixed";
    l.rerank.domain_lms = {{mdr::kOtherDomain, "general"}};
    l.rerank.validate();
    mdr::run_synthetic_ladder(l, out_dir);
    if (tsv_out) {
      std::ifstream in(std::filesystem::path(out_dir) / "ladder.tsv", std::ios::binary);
      std::stringstream buffer;
      buffer << in.rdbuf();
      *tsv_out = dup_string(buffer.str());
    }
  });
}

}  // extern "C"
