// mdr: train -> classify -> rerank -> evaluate, one subcommand per step.
// Talks to the toolkit only through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdrescore/mdrescore.h"

namespace {

// Exit codes: 0 ok, 1 validation, 2 I/O or parse, 3 internal.
int exit_code(mdr_status s) {
  switch (s) {
    case MDR_OK: return 0;
    case MDR_ERR_INVALID_ARGUMENT: return 1;
    case MDR_ERR_IO:
    case MDR_ERR_PARSE: return 2;
    default: return 3;
  }
}

struct Failure {
  int code;
};

bool verbose = false;

void check(mdr_status s) {
  if (s == MDR_OK) return;
  std::cerr << "mdr: error: " << mdr_last_error() << "\n";
  throw Failure{exit_code(s)};
}

void usage_error(const std::string& what) {
  std::cerr << "mdr: error: " << what << "\n";
  throw Failure{1};
}

template <typename... Args>
void log(const char* fmt, Args... args) {
  if (!verbose) return;
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

// RAII for C handles.
template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<mdr_corpus, Deleter<mdr_corpus, mdr_corpus_free>>;
using Lm = std::unique_ptr<mdr_lm, Deleter<mdr_lm, mdr_lm_free>>;
using Weights = std::unique_ptr<mdr_weights, Deleter<mdr_weights, mdr_weights_free>>;
using Plan = std::unique_ptr<mdr_plan, Deleter<mdr_plan, mdr_plan_free>>;
using Classifier = std::unique_ptr<mdr_classifier, Deleter<mdr_classifier, mdr_classifier_free>>;
using Reranker = std::unique_ptr<mdr_reranker, Deleter<mdr_reranker, mdr_reranker_free>>;

struct CString {
  char* p = nullptr;
  ~CString() { mdr_string_free(p); }
};

Corpus load_corpus(const std::string& path, const std::string& domain, const std::string& tokenizer) {
  mdr_corpus* c = nullptr;
  check(mdr_corpus_load(path.c_str(), domain.c_str(), tokenizer.c_str(), &c));
  return Corpus(c);
}

Lm load_lm(const std::string& path) {
  mdr_lm* lm = nullptr;
  check(mdr_lm_load_arpa(path.c_str(), &lm));
  return Lm(lm);
}

// "name=path", or a bare path named after its stem.
std::pair<std::string, std::string> named_path(const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos) return {std::filesystem::path(entry).stem().string(), entry};
  if (eq == 0 || eq + 1 == entry.size()) usage_error("expected NAME=PATH, got '" + entry + "'");
  return {entry.substr(0, eq), entry.substr(eq + 1)};
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "mdr: error: cannot write '" << out_path << "'\n";
    throw Failure{2};
  }
  out << text;
}

std::string default_model_dir() {
  const char* env = std::getenv("MDR_MODEL_DIR");
  return env ? env : "";
}

const auto kTokenizers = CLI::IsMember({"char", "whitespace"});

CLI::Validator open_unit(const char* name) {
  return CLI::Validator(
      [name](std::string& v) -> std::string {
        double x = 0;
        try {
          x = std::stod(v);
        } catch (...) {
          return std::string(name) + " must be a number";
        }
        return x > 0.0 && x < 1.0 ? "" : std::string(name) + " must lie in (0, 1)";
      },
      "(0,1)");
}

CLI::Validator half_open_unit(const char* name) {
  return CLI::Validator(
      [name](std::string& v) -> std::string {
        double x = 0;
        try {
          x = std::stod(v);
        } catch (...) {
          return std::string(name) + " must be a number";
        }
        return x >= 0.0 && x < 1.0 ? "" : std::string(name) + " must lie in [0, 1)";
      },
      "[0,1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mdr: multi-domain n-best rescoring toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");
  app.set_version_flag("--version", std::string(mdr_version()));

  std::string tokenizer = "char";
  auto add_tokenizer = [&](CLI::App* sub) {
    sub->add_option("--tokenizer", tokenizer, "char or whitespace")->check(kTokenizers);
  };

  // train-ngram
  auto* train_ngram = app.add_subcommand("train-ngram", "train a backoff n-gram LM and write it as ARPA");
  std::string corpus_path, out_path, smoothing = "witten-bell", domain_name;
  int order = 3;
  double unk_floor = 1e-7;
  train_ngram->add_option("--corpus", corpus_path, "training text, one sentence per line")->required();
  train_ngram->add_option("--out", out_path, "ARPA output path")->required();
  train_ngram->add_option("--order", order, "n-gram order")->check(CLI::PositiveNumber);
  train_ngram->add_option("--smoothing", smoothing, "witten-bell or mle")
      ->check(CLI::IsMember({"witten-bell", "wb", "mle"}));
  train_ngram->add_option("--unk-floor", unk_floor, "probability of <unk>")->check(open_unit("--unk-floor"));
  add_tokenizer(train_ngram);

  // interpolate
  auto* interpolate = app.add_subcommand("interpolate", "fit interpolation weights by EM on a dev set");
  std::vector<std::string> model_specs;
  std::string dev_path;
  int max_iters = 100;
  double tol = 1e-5;
  interpolate->add_option("--model", model_specs, "component LM as NAME=ARPA (repeatable)")->required();
  interpolate->add_option("--dev", dev_path, "development text")->required();
  interpolate->add_option("--out", out_path, "weights JSON output path")->required();
  interpolate->add_option("--max-iters", max_iters, "EM iteration cap")->check(CLI::PositiveNumber);
  interpolate->add_option("--tol", tol, "stop when the L1 weight change is below this")
      ->check(CLI::PositiveNumber);
  add_tokenizer(interpolate);

  // sample-plan
  auto* sample_plan = app.add_subcommand("sample-plan", "compute the instance-sampling plan");
  std::vector<std::string> corpus_specs, core;
  std::string weights_path;
  std::size_t top_k = 0;
  sample_plan->add_option("--corpus", corpus_specs, "category corpus as DOMAIN=PATH (repeatable)")->required();
  sample_plan->add_option("--weights", weights_path, "weights JSON from interpolate")->required();
  auto* core_opt = sample_plan->add_option("--core", core, "core domain ids")->delimiter(',');
  sample_plan->add_option("--top-k", top_k, "use the k heaviest categories as the core")
      ->check(CLI::PositiveNumber)
      ->excludes(core_opt);
  sample_plan->add_option("--out", out_path, "plan JSON output path (default stdout)");
  add_tokenizer(sample_plan);

  // sample-exec
  auto* sample_exec = app.add_subcommand("sample-exec", "draw the sampled training set from a plan");
  std::string plan_path, provenance_path;
  std::uint64_t seed = 1;
  sample_exec->add_option("--plan", plan_path, "plan JSON")->required();
  sample_exec->add_option("--corpus", corpus_specs, "category corpus as DOMAIN=PATH (repeatable)")->required();
  sample_exec->add_option("--out", out_path, "sampled corpus output path")->required();
  sample_exec->add_option("--provenance", provenance_path, "source domain per line (default <out>.domains)");
  sample_exec->add_option("--seed", seed, "random seed");
  add_tokenizer(sample_exec);

  // train-classifier
  auto* train_cls = app.add_subcommand("train-classifier", "train one tf-idf LR model per domain");
  std::vector<std::string> domain_specs;
  std::string other_path, out_dir;
  mdr_classifier_options cls_opts;
  mdr_classifier_options_init(&cls_opts);
  train_cls->add_option("--domain", domain_specs, "labeled corpus as DOMAIN=PATH (repeatable)")->required();
  train_cls->add_option("--other", other_path, "out-of-domain sentences (negatives only)");
  train_cls->add_option("--out-dir", out_dir, "directory for <domain>.json models")->required();
  train_cls->add_option("--max-order", cls_opts.max_order, "longest n-gram feature")->check(CLI::PositiveNumber);
  train_cls->add_option("--min-df", cls_opts.min_df, "minimum document frequency")->check(CLI::PositiveNumber);
  train_cls->add_option("--l2", cls_opts.l2, "L2 strength")->check(CLI::NonNegativeNumber);
  train_cls->add_option("--epochs", cls_opts.epochs, "gradient descent epochs")->check(CLI::PositiveNumber);
  train_cls->add_option("--step", cls_opts.step, "initial step size")->check(CLI::PositiveNumber);
  train_cls->add_option("--decay", cls_opts.decay, "harmonic step decay")->check(CLI::NonNegativeNumber);
  add_tokenizer(train_cls);

  // classify
  auto* classify = app.add_subcommand("classify", "assign a domain to every input line");
  std::vector<std::string> model_files;
  std::string model_dir = default_model_dir(), input_path;
  double threshold = 0.5;
  bool labels_only = false;
  classify->add_option("--model", model_files, "classifier model JSON (repeatable)");
  classify->add_option("--model-dir", model_dir, "load every *.json here (env MDR_MODEL_DIR)");
  classify->add_option("--input", input_path, "text, one query per line")->required();
  classify->add_option("--threshold", threshold, "minimum probability, else 'other'")
      ->check(open_unit("--threshold"));
  classify->add_flag("--labels", labels_only, "print one domain per line instead of JSONL");
  classify->add_option("--out", out_path, "output path (default stdout)");
  add_tokenizer(classify);

  // gen-nbest
  auto* gen = app.add_subcommand("gen-nbest", "synthesize n-best lists around reference sentences");
  std::string refs_path, regions_path, confusions_path, decoy_path;
  mdr_nbest_options nb;
  mdr_nbest_options_init(&nb);
  gen->add_option("--refs", refs_path, "reference text, one sentence per line")->required();
  gen->add_option("--regions", regions_path, "region key per line, '-' for none");
  gen->add_option("--confusions", confusions_path, "homophone table: TOKEN<tab>ALT ALT ...");
  gen->add_option("--decoy", decoy_path, "first-pass LM (ARPA)")->required();
  gen->add_option("--n", nb.n, "hypotheses per list")->check(CLI::PositiveNumber);
  gen->add_option("--noise-rate", nb.noise_rate, "random substitution rate")->check(half_open_unit("--noise-rate"));
  gen->add_option("--homophone-rate", nb.homophone_rate, "homophone swap rate (negative: noise rate)")
      ->check(CLI::Range(-1.0, 0.999999));
  gen->add_option("--am-edit-cost", nb.am_edit_cost, "acoustic penalty per substitution")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--am-homophone-cost", nb.am_homophone_cost, "acoustic penalty per homophone swap")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--jitter", nb.jitter_sigma, "acoustic Gaussian jitter sigma")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out_path, "n-best JSONL output path")->required();
  add_tokenizer(gen);

  // rerank
  auto* rerank = app.add_subcommand("rerank", "rerank n-best lists with domain-conditioned LMs");
  std::string config_path, nbest_path, best_path, forced_domain;
  unsigned jobs = 1;
  rerank->add_option("--config", config_path, "rerank config JSON")->required();
  rerank->add_option("--model-dir", model_dir, "base for relative model paths (env MDR_MODEL_DIR)");
  rerank->add_option("--nbest", nbest_path, "n-best JSONL")->required();
  rerank->add_option("--out", out_path, "reranked JSONL output path")->required();
  rerank->add_option("--best-out", best_path, "best hypothesis text per line");
  rerank->add_option("--domain", forced_domain, "skip the classifier and use this domain for every query");
  rerank->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  // eval-cer
  auto* eval_cer = app.add_subcommand("eval-cer", "pooled character error rate of aligned text files");
  std::string ref_path, hyp_path;
  bool as_json = false;
  eval_cer->add_option("--ref", ref_path, "reference text")->required();
  eval_cer->add_option("--hyp", hyp_path, "hypothesis text, line-aligned with --ref")->required();
  eval_cer->add_flag("--json", as_json, "print a JSON report");
  add_tokenizer(eval_cer);

  // eval-classifier
  auto* eval_cls = app.add_subcommand("eval-classifier", "per-domain precision, recall and F1");
  std::string pred_path, gold_path;
  std::vector<std::string> domain_ids;
  eval_cls->add_option("--pred", pred_path, "predicted labels, one per line")->required();
  eval_cls->add_option("--gold", gold_path, "gold labels, one per line")->required();
  eval_cls->add_option("--domain", domain_ids, "domain ids to report (others are added as seen)")
      ->delimiter(',');
  eval_cls->add_flag("--json", as_json, "print a JSON report");

  // run-ladder
  auto* ladder = app.add_subcommand("run-ladder", "run configurations C1..C7 on the seeded synthetic world");
  mdr_ladder_options lo;
  mdr_ladder_options_init(&lo);
  ladder->add_option("--out-dir", out_dir, "directory for ladder.tsv and report.json")->required();
  ladder->add_option("--seed", lo.seed, "master seed");
  ladder->add_option("--test-per-domain", lo.test_per_domain, "test queries per domain")
      ->check(CLI::PositiveNumber);
  ladder->add_option("--alpha", lo.alpha, "rescoring LM share")->check(CLI::Range(0.0, 1.0));
  ladder->add_option("--beta", lo.beta, "domain LM share in the geographical branch")->check(CLI::Range(0.0, 1.0));
  ladder->add_option("--eta", lo.eta, "acoustic share")->check(CLI::Range(0.0, 1.0));
  ladder->add_option("--mu", lo.mu, "first-pass LM share")->check(CLI::Range(0.0, 1.0));
  ladder->add_option("--threshold", lo.threshold, "classifier threshold")->check(open_unit("--threshold"));
  ladder->add_option("--jobs", lo.jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty() && argc > 1 && argv[1][0] != '-')
      std::cerr << "mdr: error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    else
      std::cerr << "mdr: error: " << e.what() << "\n\n"
                << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 1;
  }

  try {
    if (*train_ngram) {
      auto corpus = load_corpus(corpus_path, domain_name, tokenizer);
      mdr_ngram_options o;
      mdr_ngram_options_init(&o);
      o.order = order;
      o.smoothing = smoothing.c_str();
      o.unk_floor = unk_floor;
      mdr_lm* lm = nullptr;
      check(mdr_lm_train(corpus.get(), &o, &lm));
      Lm owned(lm);
      check(mdr_lm_save_arpa(lm, out_path.c_str()));
      log("trained order-%d %s model on %zu sentences", order, smoothing.c_str(), mdr_corpus_size(corpus.get()));
    } else if (*interpolate) {
      std::vector<Lm> lms;
      std::vector<std::string> names;
      for (const auto& entry : model_specs) {
        auto [name, path] = named_path(entry);
        names.push_back(name);
        lms.push_back(load_lm(path));
      }
      auto dev = load_corpus(dev_path, "dev", tokenizer);
      std::vector<const mdr_lm*> raw;
      std::vector<const char*> raw_names;
      for (std::size_t i = 0; i < lms.size(); ++i) {
        raw.push_back(lms[i].get());
        raw_names.push_back(names[i].c_str());
      }
      mdr_weights* w = nullptr;
      check(mdr_em_fit(raw.data(), raw_names.data(), raw.size(), dev.get(), max_iters, tol, &w));
      Weights owned(w);
      for (std::size_t i = 0; i < mdr_weights_history_size(w); ++i)
        log("iteration %zu: dev log10 likelihood %.6f", i, mdr_weights_history(w, i));
      log("%s after %d iterations", mdr_weights_converged(w) ? "converged" : "stopped", mdr_weights_iterations(w));
      check(mdr_weights_save(w, out_path.c_str()));
    } else if (*sample_plan) {
      mdr_weights* w = nullptr;
      check(mdr_weights_load(weights_path.c_str(), &w));
      Weights owned(w);
      std::vector<std::string> domains;
      std::vector<std::size_t> sizes;
      std::vector<double> weights;
      for (const auto& entry : corpus_specs) {
        auto [domain, path] = named_path(entry);
        auto c = load_corpus(path, domain, tokenizer);
        std::optional<double> weight;
        for (std::size_t i = 0; i < mdr_weights_count(w); ++i)
          if (domain == mdr_weights_name(w, i)) weight = mdr_weights_value(w, i);
        if (!weight) usage_error("weights file has no entry for domain '" + domain + "'");
        domains.push_back(domain);
        sizes.push_back(mdr_corpus_size(c.get()));
        weights.push_back(*weight);
      }
      std::vector<const char*> raw_domains, raw_core;
      for (const auto& d : domains) raw_domains.push_back(d.c_str());
      for (const auto& c : core) raw_core.push_back(c.c_str());
      mdr_plan* plan = nullptr;
      if (top_k > 0) {
        check(mdr_plan_build_top_k(raw_domains.data(), sizes.data(), weights.data(), domains.size(), top_k, &plan));
      } else {
        if (core.empty()) usage_error("pass --core or --top-k");
        check(mdr_plan_build(raw_domains.data(), sizes.data(), weights.data(), domains.size(), raw_core.data(),
                             raw_core.size(), &plan));
      }
      Plan owned_plan(plan);
      CString json;
      check(mdr_plan_to_json(plan, &json.p));
      emit(std::string(json.p) + "\n", out_path);
    } else if (*sample_exec) {
      mdr_plan* plan = nullptr;
      check(mdr_plan_load(plan_path.c_str(), &plan));
      Plan owned_plan(plan);
      std::vector<Corpus> corpora;
      std::vector<const mdr_corpus*> raw;
      for (const auto& entry : corpus_specs) {
        auto [domain, path] = named_path(entry);
        corpora.push_back(load_corpus(path, domain, tokenizer));
        raw.push_back(corpora.back().get());
      }
      if (provenance_path.empty()) provenance_path = out_path + ".domains";
      check(mdr_plan_execute(plan, raw.data(), raw.size(), seed, out_path.c_str(), provenance_path.c_str()));
    } else if (*train_cls) {
      std::vector<Corpus> corpora;
      std::vector<const mdr_corpus*> raw;
      for (const auto& entry : domain_specs) {
        auto [domain, path] = named_path(entry);
        corpora.push_back(load_corpus(path, domain, tokenizer));
        raw.push_back(corpora.back().get());
      }
      Corpus other;
      if (!other_path.empty()) other = load_corpus(other_path, "other", tokenizer);
      mdr_classifier* cls = nullptr;
      check(mdr_classifier_train(raw.data(), raw.size(), other.get(), &cls_opts, &cls));
      Classifier owned(cls);
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec) {
        std::cerr << "mdr: error: cannot create '" << out_dir << "': " << ec.message() << "\n";
        return 2;
      }
      check(mdr_classifier_save(cls, out_dir.c_str()));
    } else if (*classify) {
      if (model_files.empty()) {
        if (model_dir.empty()) usage_error("pass --model, --model-dir or set MDR_MODEL_DIR");
        std::error_code ec;
        for (const auto& entry : std::filesystem::directory_iterator(model_dir, ec))
          if (entry.path().extension() == ".json") model_files.push_back(entry.path().string());
        if (ec) {
          std::cerr << "mdr: error: cannot read '" << model_dir << "': " << ec.message() << "\n";
          return 2;
        }
        std::sort(model_files.begin(), model_files.end());
        if (model_files.empty()) usage_error("no *.json models in '" + model_dir + "'");
      }
      std::vector<const char*> raw;
      for (const auto& f : model_files) raw.push_back(f.c_str());
      mdr_classifier* cls = nullptr;
      check(mdr_classifier_load(raw.data(), raw.size(), &cls));
      Classifier owned(cls);
      CString text;
      check(mdr_classifier_classify_file(cls, input_path.c_str(), tokenizer.c_str(), threshold, labels_only,
                                         &text.p));
      emit(text.p, out_path);
    } else if (*gen) {
      auto decoy = load_lm(decoy_path);
      nb.tokenizer = tokenizer.c_str();
      check(mdr_gen_nbest(refs_path.c_str(), regions_path.empty() ? nullptr : regions_path.c_str(),
                          confusions_path.empty() ? nullptr : confusions_path.c_str(), decoy.get(), &nb, seed,
                          out_path.c_str()));
    } else if (*rerank) {
      mdr_reranker* r = nullptr;
      check(mdr_reranker_load(config_path.c_str(), model_dir.empty() ? nullptr : model_dir.c_str(), &r));
      Reranker owned(r);
      check(mdr_reranker_run(r, nbest_path.c_str(), forced_domain.empty() ? nullptr : forced_domain.c_str(),
                             out_path.c_str(), best_path.empty() ? nullptr : best_path.c_str(), jobs));
    } else if (*eval_cer) {
      mdr_cer_report rep;
      check(mdr_eval_cer_files(ref_path.c_str(), hyp_path.c_str(), tokenizer.c_str(), &rep));
      if (as_json)
        std::printf("{\"edits\": %zu, \"ref_chars\": %zu, \"cer\": %.17g}\n", rep.edits, rep.ref_chars, rep.cer);
      else
        std::printf("cer=%.6g edits=%zu ref_chars=%zu\n", rep.cer, rep.edits, rep.ref_chars);
    } else if (*eval_cls) {
      std::vector<const char*> raw;
      for (const auto& d : domain_ids) raw.push_back(d.c_str());
      CString text;
      check(mdr_eval_classifier_files(pred_path.c_str(), gold_path.c_str(), raw.data(), raw.size(), as_json,
                                      &text.p));
      std::cout << text.p;
    } else if (*ladder) {
      CString tsv;
      check(mdr_run_ladder(&lo, out_dir.c_str(), &tsv.p));
      std::cout << tsv.p;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
