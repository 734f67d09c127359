// C interface implementation: thin guards around the C++ core that turn
// exceptions into status codes and keep per-thread error messages.
#include "skillscape.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "skillscape/embed.hpp"
#include "skillscape/error.hpp"
#include "skillscape/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

// Runs `body`, records the outcome in the thread-local error slot, and
// returns a status code.
template <typename F>
int guarded(F&& body) noexcept {
  try {
    body();
    g_last_error.clear();
    return SSC_OK;
  } catch (const skillscape::Error& e) {
    g_last_error = e.what();
    return e.exit_code();
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SSC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SSC_ERR_INTERNAL;
  }
}

void set_error(const std::string& message) noexcept {
  try {
    g_last_error = message;
  } catch (...) {
  }
}

int fail_null_argument(const char* name) noexcept {
  set_error(std::string("null argument: ") + name);
  return SSC_ERR_CONFIG;
}

std::vector<std::string> collect_overrides(const char* const* overrides,
                                           size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (overrides[i] == nullptr) {
      throw skillscape::ConfigError("null override at position " +
                                    std::to_string(i));
    }
    out.emplace_back(overrides[i]);
  }
  return out;
}

}  // namespace

struct ssc_pipeline {
  skillscape::pipeline::PipelineConfig config;
  std::string hash;
  std::string json;
};

struct ssc_embedding {
  skillscape::embed::EmbeddingMatrix matrix;
  std::vector<std::pair<std::string, double>> results;
};

extern "C" {

const char* ssc_version(void) { return "0.1.0"; }

const char* ssc_last_error(void) { return g_last_error.c_str(); }

const char* ssc_default_config_json(void) {
  static const std::string doc = skillscape::pipeline::default_config_json();
  return doc.c_str();
}

ssc_pipeline* ssc_pipeline_open(const char* config_path,
                                const char* const* overrides,
                                size_t override_count) {
  if (config_path == nullptr) {
    fail_null_argument("config_path");
    return nullptr;
  }
  if (overrides == nullptr && override_count > 0) {
    fail_null_argument("overrides");
    return nullptr;
  }
  ssc_pipeline* handle = nullptr;
  guarded([&] {
    auto config = skillscape::pipeline::load_config(
        config_path, collect_overrides(overrides, override_count));
    handle = new ssc_pipeline{
        config, skillscape::pipeline::config_hash(config),
        skillscape::pipeline::config_to_json(config)};
  });
  return handle;
}

ssc_pipeline* ssc_pipeline_open_text(const char* config_json,
                                     const char* const* overrides,
                                     size_t override_count) {
  if (config_json == nullptr) {
    fail_null_argument("config_json");
    return nullptr;
  }
  if (overrides == nullptr && override_count > 0) {
    fail_null_argument("overrides");
    return nullptr;
  }
  ssc_pipeline* handle = nullptr;
  guarded([&] {
    auto config = skillscape::pipeline::config_from_json_text(
        config_json, collect_overrides(overrides, override_count));
    handle = new ssc_pipeline{
        config, skillscape::pipeline::config_hash(config),
        skillscape::pipeline::config_to_json(config)};
  });
  return handle;
}

void ssc_pipeline_close(ssc_pipeline* pipeline) { delete pipeline; }

const char* ssc_pipeline_config_hash(const ssc_pipeline* pipeline) {
  if (pipeline == nullptr) {
    fail_null_argument("pipeline");
    return nullptr;
  }
  return pipeline->hash.c_str();
}

const char* ssc_pipeline_config_json(const ssc_pipeline* pipeline) {
  if (pipeline == nullptr) {
    fail_null_argument("pipeline");
    return nullptr;
  }
  return pipeline->json.c_str();
}

int ssc_pipeline_run(ssc_pipeline* pipeline, const char* stage) {
  if (pipeline == nullptr) return fail_null_argument("pipeline");
  if (stage == nullptr) return fail_null_argument("stage");
  return guarded([&] {
    if (std::strcmp(stage, "all") == 0) {
      skillscape::pipeline::run_all(pipeline->config);
    } else {
      skillscape::pipeline::run_stage(pipeline->config,
                                      skillscape::pipeline::parse_stage(stage));
    }
  });
}

ssc_embedding* ssc_embedding_open(const char* dir) {
  if (dir == nullptr) {
    fail_null_argument("dir");
    return nullptr;
  }
  ssc_embedding* handle = nullptr;
  guarded([&] {
    handle = new ssc_embedding{skillscape::embed::load_embedding(dir), {}};
  });
  return handle;
}

void ssc_embedding_close(ssc_embedding* embedding) { delete embedding; }

int ssc_embedding_dimension(const ssc_embedding* embedding) {
  if (embedding == nullptr) {
    fail_null_argument("embedding");
    return -1;
  }
  return embedding->matrix.dimension;
}

size_t ssc_embedding_size(const ssc_embedding* embedding) {
  if (embedding == nullptr) {
    fail_null_argument("embedding");
    return 0;
  }
  return embedding->matrix.size();
}

const char* ssc_embedding_skill(const ssc_embedding* embedding, size_t index) {
  if (embedding == nullptr) {
    fail_null_argument("embedding");
    return nullptr;
  }
  if (index >= embedding->matrix.size()) {
    set_error("skill index out of range: " + std::to_string(index));
    return nullptr;
  }
  return embedding->matrix.skills[index].c_str();
}

int ssc_embedding_similarity(const ssc_embedding* embedding,
                             const char* skill_a, const char* skill_b,
                             double* out) {
  if (embedding == nullptr) return fail_null_argument("embedding");
  if (skill_a == nullptr) return fail_null_argument("skill_a");
  if (skill_b == nullptr) return fail_null_argument("skill_b");
  if (out == nullptr) return fail_null_argument("out");
  return guarded([&] {
    *out = skillscape::embed::cosine_similarity(embedding->matrix, skill_a,
                                                skill_b);
  });
}

int ssc_embedding_nearest(ssc_embedding* embedding, const char* skill,
                          size_t count) {
  if (embedding == nullptr) return fail_null_argument("embedding");
  if (skill == nullptr) return fail_null_argument("skill");
  return guarded([&] {
    embedding->results =
        skillscape::embed::nearest_skills(embedding->matrix, skill, count);
  });
}

size_t ssc_embedding_result_count(const ssc_embedding* embedding) {
  if (embedding == nullptr) {
    fail_null_argument("embedding");
    return 0;
  }
  return embedding->results.size();
}

const char* ssc_embedding_result_skill(const ssc_embedding* embedding,
                                       size_t index) {
  if (embedding == nullptr) {
    fail_null_argument("embedding");
    return nullptr;
  }
  if (index >= embedding->results.size()) return nullptr;
  return embedding->results[index].first.c_str();
}

double ssc_embedding_result_score(const ssc_embedding* embedding,
                                  size_t index) {
  if (embedding == nullptr || index >= embedding->results.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return embedding->results[index].second;
}

}  // extern "C"
