/* skillscape.h — C interface to the skillscape analysis engine.
 *
 * The library is consumed through opaque handles and integer status codes.
 * Every function that can fail either returns a status code directly or
 * returns NULL/negative on failure; in all cases ssc_last_error() holds a
 * human-readable message for the calling thread until the next API call on
 * that thread.
 *
 * Status codes double as process exit codes for the bundled CLI:
 *   0  success
 *   1  internal error (bug, unexpected exception)
 *   2  configuration error (bad config file, bad override, bad argument)
 *   3  missing artifact (a pipeline stage ran before its producer)
 *   4  data error (malformed input data, missing skill, degenerate inputs)
 */
#ifndef SKILLSCAPE_H
#define SKILLSCAPE_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(SSC_BUILD)
#define SSC_API __declspec(dllexport)
#else
#define SSC_API __declspec(dllimport)
#endif
#else
#define SSC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  SSC_OK = 0,
  SSC_ERR_INTERNAL = 1,
  SSC_ERR_CONFIG = 2,
  SSC_ERR_MISSING_ARTIFACT = 3,
  SSC_ERR_DATA = 4
};

/* Library version as "major.minor.patch". Static storage; never freed. */
SSC_API const char *ssc_version(void);

/* Message for the most recent failure on the calling thread, or "" if the
 * last call succeeded. The pointer stays valid until the next skillscape
 * call on the same thread. */
SSC_API const char *ssc_last_error(void);

/* Default configuration document as pretty-printed JSON, listing every
 * recognised field with its default value. Static storage; never freed. */
SSC_API const char *ssc_default_config_json(void);

/* ------------------------------------------------------------------ */
/* Pipeline                                                            */
/* ------------------------------------------------------------------ */

typedef struct ssc_pipeline ssc_pipeline;

/* Load a configuration file (JSON) and apply `override_count` dotted
 * overrides of the form "section.field=value" on top of it. `overrides`
 * may be NULL when `override_count` is 0. Returns NULL on failure. */
SSC_API ssc_pipeline *ssc_pipeline_open(const char *config_path,
                                        const char *const *overrides,
                                        size_t override_count);

/* Same as ssc_pipeline_open but parses the configuration from a JSON
 * string instead of a file. "{}" yields the default configuration. */
SSC_API ssc_pipeline *ssc_pipeline_open_text(const char *config_json,
                                             const char *const *overrides,
                                             size_t override_count);

SSC_API void ssc_pipeline_close(ssc_pipeline *pipeline);

/* Hex digest identifying the effective configuration. Two pipelines have
 * equal hashes exactly when every effective field is equal. The pointer
 * stays valid until the pipeline is closed. */
SSC_API const char *ssc_pipeline_config_hash(const ssc_pipeline *pipeline);

/* Effective configuration as canonical JSON (alphabetical keys). The
 * pointer stays valid until the pipeline is closed. */
SSC_API const char *ssc_pipeline_config_json(const ssc_pipeline *pipeline);

/* Run one stage by name — "synth", "ingest", "train", "graph", "drift",
 * "atoms", "strata" — or "all" for the ingest→train→graph→drift→atoms→
 * strata chain. Returns a status code. */
SSC_API int ssc_pipeline_run(ssc_pipeline *pipeline, const char *stage);

/* ------------------------------------------------------------------ */
/* Trained embeddings                                                  */
/* ------------------------------------------------------------------ */

typedef struct ssc_embedding ssc_embedding;

/* Open the embedding written by the "train" stage from its directory
 * (the one containing embedding.json / embedding.f32 / vocab.txt).
 * Returns NULL on failure. */
SSC_API ssc_embedding *ssc_embedding_open(const char *dir);

SSC_API void ssc_embedding_close(ssc_embedding *embedding);

/* Vector dimension, or -1 if `embedding` is NULL. */
SSC_API int ssc_embedding_dimension(const ssc_embedding *embedding);

/* Number of skills in the vocabulary (0 if `embedding` is NULL). */
SSC_API size_t ssc_embedding_size(const ssc_embedding *embedding);

/* Skill name at `index` in vocabulary order, or NULL if out of range.
 * The pointer stays valid until the embedding is closed. */
SSC_API const char *ssc_embedding_skill(const ssc_embedding *embedding,
                                        size_t index);

/* Cosine similarity between two skills, written to *out. */
SSC_API int ssc_embedding_similarity(const ssc_embedding *embedding,
                                     const char *skill_a, const char *skill_b,
                                     double *out);

/* Compute the `count` nearest neighbours of `skill` by cosine similarity
 * (the skill itself excluded) and store them on the handle. On success the
 * result set is readable through the three accessors below until the next
 * ssc_embedding_nearest call or ssc_embedding_close. */
SSC_API int ssc_embedding_nearest(ssc_embedding *embedding, const char *skill,
                                  size_t count);

/* Number of stored neighbours from the last ssc_embedding_nearest call. */
SSC_API size_t ssc_embedding_result_count(const ssc_embedding *embedding);

/* Neighbour name at `index` (NULL if out of range). */
SSC_API const char *ssc_embedding_result_skill(const ssc_embedding *embedding,
                                               size_t index);

/* Neighbour cosine similarity at `index` (NaN if out of range). */
SSC_API double ssc_embedding_result_score(const ssc_embedding *embedding,
                                          size_t index);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SKILLSCAPE_H */
