#ifndef MDRESCORE_MDRESCORE_H
#define MDRESCORE_MDRESCORE_H

/*
 * mdrescore: multi-domain n-best rescoring toolkit, C interface.
 *
 * Every object is an opaque handle released with its *_free function
 * (passing NULL is a no-op). Functions return an mdr_status; on failure
 * mdr_last_error() describes the problem for the calling thread until the
 * next call on that thread. Strings returned through char** are owned by
 * the caller and released with mdr_string_free.
 *
 * Tokenizer names are "char" (default when NULL) and "whitespace".
 * All text is UTF-8.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MDR_BUILDING_LIBRARY)
#define MDR_API __declspec(dllexport)
#else
#define MDR_API __declspec(dllimport)
#endif
#else
#define MDR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mdr_status {
  MDR_OK = 0,
  MDR_ERR_INVALID_ARGUMENT = 1, /* precondition violated by a caller value */
  MDR_ERR_IO = 2,               /* file could not be opened, read or written */
  MDR_ERR_PARSE = 3,            /* malformed input, including invalid UTF-8 */
  MDR_ERR_INTERNAL = 4
} mdr_status;

MDR_API const char* mdr_last_error(void);
MDR_API const char* mdr_version(void);
MDR_API void mdr_string_free(char* s);

/* ---- corpora ----------------------------------------------------------- */

typedef struct mdr_corpus mdr_corpus;

/* One sentence per line; NFC-normalized and tokenized; blank lines skipped. */
MDR_API mdr_status mdr_corpus_load(const char* path, const char* domain_id, const char* tokenizer,
                                   mdr_corpus** out);
MDR_API size_t mdr_corpus_size(const mdr_corpus* corpus);
MDR_API size_t mdr_corpus_token_count(const mdr_corpus* corpus);
MDR_API const char* mdr_corpus_domain(const mdr_corpus* corpus);
MDR_API void mdr_corpus_free(mdr_corpus* corpus);

/* ---- language models --------------------------------------------------- */

typedef struct mdr_lm mdr_lm;

typedef struct mdr_ngram_options {
  int order;             /* >= 1, default 3 */
  const char* smoothing; /* "witten-bell" (default) or "mle" */
  double unk_floor;      /* probability of <unk>, default 1e-7 */
} mdr_ngram_options;

MDR_API void mdr_ngram_options_init(mdr_ngram_options* options);
MDR_API mdr_status mdr_lm_train(const mdr_corpus* corpus, const mdr_ngram_options* options, mdr_lm** out);
MDR_API mdr_status mdr_lm_load_arpa(const char* path, mdr_lm** out);
/* Only n-gram models can be written; interpolated ones fail with INVALID_ARGUMENT. */
MDR_API mdr_status mdr_lm_save_arpa(const mdr_lm* lm, const char* path);
/* log10 P(<s> text </s>) and the number of scored tokens (words + </s>). */
MDR_API mdr_status mdr_lm_score(const mdr_lm* lm, const char* text, const char* tokenizer, double* log_prob,
                                size_t* tokens);
MDR_API mdr_status mdr_lm_perplexity(const mdr_lm* lm, const mdr_corpus* corpus, double* out);
/* Probability-domain mixture; weights must be a distribution. */
MDR_API mdr_status mdr_lm_interpolate(const mdr_lm* const* lms, const double* weights, size_t count, mdr_lm** out);
MDR_API void mdr_lm_free(mdr_lm* lm);

/* ---- interpolation weights --------------------------------------------- */

typedef struct mdr_weights mdr_weights;

/* EM on the dev corpus; names label the components (may be NULL). */
MDR_API mdr_status mdr_em_fit(const mdr_lm* const* lms, const char* const* names, size_t count,
                              const mdr_corpus* dev, int max_iters, double tol, mdr_weights** out);
MDR_API size_t mdr_weights_count(const mdr_weights* weights);
MDR_API double mdr_weights_value(const mdr_weights* weights, size_t i);
MDR_API const char* mdr_weights_name(const mdr_weights* weights, size_t i);
/* EM diagnostics; zero/empty for weights read from a file. */
MDR_API int mdr_weights_iterations(const mdr_weights* weights);
MDR_API int mdr_weights_converged(const mdr_weights* weights);
MDR_API size_t mdr_weights_history_size(const mdr_weights* weights);
MDR_API double mdr_weights_history(const mdr_weights* weights, size_t i);
MDR_API mdr_status mdr_weights_save(const mdr_weights* weights, const char* path);
MDR_API mdr_status mdr_weights_load(const char* path, mdr_weights** out);
MDR_API void mdr_weights_free(mdr_weights* weights);

/* ---- instance sampling ------------------------------------------------- */

typedef struct mdr_plan mdr_plan;

/* domains, sizes and weights have count entries; core names core_count of them. */
MDR_API mdr_status mdr_plan_build(const char* const* domains, const size_t* sizes, const double* weights,
                                  size_t count, const char* const* core, size_t core_count, mdr_plan** out);
/* Same, with the core set to the top_k categories by weight. */
MDR_API mdr_status mdr_plan_build_top_k(const char* const* domains, const size_t* sizes, const double* weights,
                                        size_t count, size_t top_k, mdr_plan** out);
MDR_API mdr_status mdr_plan_to_json(const mdr_plan* plan, char** out);
MDR_API mdr_status mdr_plan_save(const mdr_plan* plan, const char* path);
MDR_API mdr_status mdr_plan_load(const char* path, mdr_plan** out);
/* corpora are matched to plan categories by domain id. Writes the sampled
 * corpus and a sidecar with one source domain per line. */
MDR_API mdr_status mdr_plan_execute(const mdr_plan* plan, const mdr_corpus* const* corpora, size_t count,
                                    uint64_t seed, const char* corpus_path, const char* provenance_path);
MDR_API void mdr_plan_free(mdr_plan* plan);

/* ---- domain classifier ------------------------------------------------- */

typedef struct mdr_classifier mdr_classifier;

typedef struct mdr_classifier_options {
  int max_order;  /* n-gram features up to this order, default 3 */
  size_t min_df;  /* default 2 */
  double l2;      /* default 1e-4 */
  int epochs;     /* default 500 */
  double step;    /* default 0.5 */
  double decay;   /* step_t = step / (1 + decay t), default 0.01 */
} mdr_classifier_options;

MDR_API void mdr_classifier_options_init(mdr_classifier_options* options);
/* One model per domain corpus; other (may be NULL) adds negatives only. */
MDR_API mdr_status mdr_classifier_train(const mdr_corpus* const* domains, size_t count, const mdr_corpus* other,
                                        const mdr_classifier_options* options, mdr_classifier** out);
/* Writes <dir>/<domain>.json per model. */
MDR_API mdr_status mdr_classifier_save(const mdr_classifier* classifier, const char* dir);
MDR_API mdr_status mdr_classifier_load(const char* const* files, size_t count, mdr_classifier** out);
/* {"domain": ..., "scores": {domain: p}} */
MDR_API mdr_status mdr_classifier_classify(const mdr_classifier* classifier, const char* text,
                                           const char* tokenizer, double threshold, char** json_out);
/* Classifies every non-blank line. labels_only: one domain per line, else JSONL. */
MDR_API mdr_status mdr_classifier_classify_file(const mdr_classifier* classifier, const char* path,
                                                const char* tokenizer, double threshold, int labels_only,
                                                char** out);
MDR_API void mdr_classifier_free(mdr_classifier* classifier);

/* ---- reranking --------------------------------------------------------- */

typedef struct mdr_reranker mdr_reranker;

/* Rerank config JSON; relative model paths resolve against model_dir
 * (the config's directory when model_dir is NULL). */
MDR_API mdr_status mdr_reranker_load(const char* config_path, const char* model_dir, mdr_reranker** out);
/* Reranks an n-best JSONL file. domain (may be NULL) forces every query into
 * one domain instead of classifying its first-pass best. Writes reranked JSONL
 * to out_path and, when best_path is set, the best hypothesis text per line. */
MDR_API mdr_status mdr_reranker_run(const mdr_reranker* reranker, const char* nbest_path, const char* domain,
                                    const char* out_path, const char* best_path, unsigned jobs);
MDR_API void mdr_reranker_free(mdr_reranker* reranker);

/* ---- evaluation -------------------------------------------------------- */

typedef struct mdr_cer_report {
  size_t edits;
  size_t ref_chars;
  double cer;
} mdr_cer_report;

/* Pooled CER of two line-aligned text files. */
MDR_API mdr_status mdr_eval_cer_files(const char* ref_path, const char* hyp_path, const char* tokenizer,
                                      mdr_cer_report* out);
/* Label files, one domain per line. as_json selects JSON over aligned text. */
MDR_API mdr_status mdr_eval_classifier_files(const char* pred_path, const char* gold_path,
                                             const char* const* domains, size_t count, int as_json, char** out);
MDR_API double mdr_relative_reduction(double baseline, double system);
MDR_API double mdr_f1_score(double precision, double recall);

typedef struct mdr_nbest_options {
  size_t n;                 /* hypotheses per list, default 10 */
  double noise_rate;        /* random substitution rate, default 0.1 */
  double homophone_rate;    /* swap rate for confusable tokens; < 0 means noise_rate */
  double am_edit_cost;      /* default 1.0 */
  double am_homophone_cost; /* default 0.0 */
  double jitter_sigma;      /* default 0.3 */
  const char* tokenizer;
} mdr_nbest_options;

MDR_API void mdr_nbest_options_init(mdr_nbest_options* options);
/* refs: one sentence per line; regions (may be NULL): a region key per line,
 * "-" for none; confusions (may be NULL): "<token>\t<alt> <alt> ..." lines. */
MDR_API mdr_status mdr_gen_nbest(const char* refs_path, const char* regions_path, const char* confusions_path,
                                 const mdr_lm* decoy, const mdr_nbest_options* options, uint64_t seed,
                                 const char* out_path);

typedef struct mdr_ladder_options {
  uint64_t seed;            /* default 2021 */
  size_t test_per_domain;   /* default 2000 */
  double alpha, beta, eta, mu, threshold;
  unsigned jobs;            /* default 1 */
} mdr_ladder_options;

MDR_API void mdr_ladder_options_init(mdr_ladder_options* options);
/* Builds the seeded synthetic two-domain world, runs configurations C1..C7
 * and writes ladder.tsv and report.json into out_dir. tsv_out (may be NULL)
 * receives the table. */
MDR_API mdr_status mdr_run_ladder(const mdr_ladder_options* options, const char* out_dir, char** tsv_out);

#ifdef __cplusplus
}
#endif

#endif /* MDRESCORE_MDRESCORE_H */
