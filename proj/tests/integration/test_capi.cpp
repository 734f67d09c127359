// Exercises the public C API through the shared library boundary: handle
// lifecycles, status codes, thread-local error messages, and a full
// pipeline run driven purely through skillscape.h.
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "skillscape.h"
#include "support/tmpdir.hpp"

using testsupport::TempDir;

namespace {

// Overrides shared by the pipeline tests: a small planted corpus that the
// whole chain can digest in well under a second.
std::vector<std::string> small_chain_overrides(const std::string& out_dir) {
  return {
      "output_dir=" + out_dir,
      "synth.preset=paired_small",
      "synth.seed=4242",
      "input.postings=" + out_dir + "/synth/postings.jsonl",
      "input.demographics=" + out_dir + "/synth/demographics.csv",
      "input.job_zones=" + out_dir + "/synth/job_zones.csv",
      "input.mobility=" + out_dir + "/synth/mobility.csv",
      "embedding.dimension=16",
      "embedding.epochs=2",
      "embedding.negatives=4",
      "embedding.validation_pairs=500",
      "embedding.max_pairs_per_posting=80",
      "embedding.seed=7",
      "embedding.workers=1",
      "atoms.atom_count=12",
      "atoms.sparsity=3",
      "atoms.iterations=6",
      "atoms.top_skills=10",
      "atoms.layout_rows=3",
      "atoms.layout_cols=4",
      "strata.heatmap_bands=3",
  };
}

std::vector<const char*> pointers(const std::vector<std::string>& strings) {
  std::vector<const char*> out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back(s.c_str());
  return out;
}

}  // namespace

TEST_CASE("c api exposes version, defaults, and canonical hashing") {
  CHECK(std::string(ssc_version()) == "0.1.0");

  const std::string defaults = ssc_default_config_json();
  const auto doc = nlohmann::json::parse(defaults);
  CHECK(doc.contains("output_dir"));
  CHECK(doc.contains("embedding"));
  CHECK(doc["embedding"].contains("dimension"));

  ssc_pipeline* a = ssc_pipeline_open_text("{}", nullptr, 0);
  REQUIRE(a != nullptr);
  CHECK(std::string(ssc_last_error()).empty());
  const std::string hash_a = ssc_pipeline_config_hash(a);
  CHECK(hash_a.size() == 64);
  CHECK(hash_a.find_first_not_of("0123456789abcdef") == std::string::npos);

  // The defaults document round-trips to the same hash as "{}".
  ssc_pipeline* b = ssc_pipeline_open_text(defaults.c_str(), nullptr, 0);
  REQUIRE(b != nullptr);
  CHECK(std::string(ssc_pipeline_config_hash(b)) == hash_a);

  // An override changes the hash and shows up in the effective config.
  const std::vector<std::string> overrides = {"embedding.dimension=48"};
  auto ptrs = pointers(overrides);
  ssc_pipeline* c = ssc_pipeline_open_text("{}", ptrs.data(), ptrs.size());
  REQUIRE(c != nullptr);
  CHECK(std::string(ssc_pipeline_config_hash(c)) != hash_a);
  const auto effective = nlohmann::json::parse(ssc_pipeline_config_json(c));
  CHECK(effective["embedding"]["dimension"].get<int>() == 48);

  ssc_pipeline_close(a);
  ssc_pipeline_close(b);
  ssc_pipeline_close(c);
}

TEST_CASE("c api maps failures onto status codes and messages") {
  // Null arguments are config errors with a telling message.
  CHECK(ssc_pipeline_open(nullptr, nullptr, 0) == nullptr);
  CHECK(std::string(ssc_last_error()) == "null argument: config_path");

  // Broken JSON text.
  CHECK(ssc_pipeline_open_text("{not json", nullptr, 0) == nullptr);
  CHECK_FALSE(std::string(ssc_last_error()).empty());

  // Unknown keys are rejected by name.
  CHECK(ssc_pipeline_open_text("{\"wrong_key\": 1}", nullptr, 0) == nullptr);
  CHECK(std::string(ssc_last_error()).find("wrong_key") != std::string::npos);

  // Missing config file.
  CHECK(ssc_pipeline_open("/nonexistent/skillscape.json", nullptr, 0) ==
        nullptr);
  CHECK(std::string(ssc_last_error()).find("/nonexistent/skillscape.json") !=
        std::string::npos);

  // Null override entries are caught, not dereferenced.
  const char* bad[] = {nullptr};
  CHECK(ssc_pipeline_open_text("{}", bad, 1) == nullptr);
  CHECK(std::string(ssc_last_error()).find("null override") !=
        std::string::npos);

  ssc_pipeline* p = ssc_pipeline_open_text("{}", nullptr, 0);
  REQUIRE(p != nullptr);

  // Unknown stage name.
  CHECK(ssc_pipeline_run(p, "bogus") == SSC_ERR_CONFIG);
  CHECK(std::string(ssc_last_error()).find("bogus") != std::string::npos);
  CHECK(ssc_pipeline_run(nullptr, "ingest") == SSC_ERR_CONFIG);
  CHECK(ssc_pipeline_run(p, nullptr) == SSC_ERR_CONFIG);

  // ingest without a postings path is a config error; a stage whose
  // upstream artifacts are absent is a missing-artifact error.
  TempDir tmp;
  const std::vector<std::string> overrides = {"output_dir=" +
                                              tmp.file("out")};
  auto ptrs = pointers(overrides);
  ssc_pipeline* q = ssc_pipeline_open_text("{}", ptrs.data(), ptrs.size());
  REQUIRE(q != nullptr);
  CHECK(ssc_pipeline_run(q, "ingest") == SSC_ERR_CONFIG);
  CHECK(std::string(ssc_last_error()).find("input.postings") !=
        std::string::npos);
  CHECK(ssc_pipeline_run(q, "train") == SSC_ERR_MISSING_ARTIFACT);
  CHECK(std::string(ssc_last_error()).find("ingest") != std::string::npos);
  CHECK(ssc_pipeline_run(q, "drift") == SSC_ERR_MISSING_ARTIFACT);
  CHECK(ssc_pipeline_run(q, "strata") == SSC_ERR_MISSING_ARTIFACT);

  // A successful call clears the error slot.
  ssc_pipeline* ok = ssc_pipeline_open_text("{}", nullptr, 0);
  REQUIRE(ok != nullptr);
  CHECK(std::string(ssc_last_error()).empty());

  ssc_pipeline_close(p);
  ssc_pipeline_close(q);
  ssc_pipeline_close(ok);
  ssc_pipeline_close(nullptr);  // tolerated
}

TEST_CASE("c api drives the full pipeline and reads the embedding back") {
  TempDir tmp;
  const std::string out_dir = tmp.file("out");
  const auto overrides = small_chain_overrides(out_dir);
  auto ptrs = pointers(overrides);
  ssc_pipeline* p = ssc_pipeline_open_text("{}", ptrs.data(), ptrs.size());
  REQUIRE(p != nullptr);

  REQUIRE(ssc_pipeline_run(p, "synth") == SSC_OK);
  REQUIRE(ssc_pipeline_run(p, "all") == SSC_OK);
  CHECK(std::string(ssc_last_error()).empty());

  for (const char* relative :
       {"synth/postings.jsonl", "corpus/snapshots.csv",
        "embedding/embedding.f32", "graph/partition.csv",
        "drift/changes.csv", "atoms/grid.csv",
        "strata/regressions.csv"}) {
    CAPTURE(relative);
    CHECK(std::filesystem::exists(out_dir + "/" + std::string(relative)));
  }

  // Embedding handle over the trained artifacts.
  const std::string embedding_dir = out_dir + "/embedding";
  ssc_embedding* e = ssc_embedding_open(embedding_dir.c_str());
  REQUIRE(e != nullptr);
  CHECK(ssc_embedding_dimension(e) == 16);
  const size_t vocabulary = ssc_embedding_size(e);
  CHECK(vocabulary > 10);

  const char* first = ssc_embedding_skill(e, 0);
  REQUIRE(first != nullptr);
  CHECK(ssc_embedding_skill(e, vocabulary) == nullptr);  // out of range

  double self = 0.0;
  REQUIRE(ssc_embedding_similarity(e, first, first, &self) == SSC_OK);
  CHECK(std::abs(self - 1.0) < 1e-6);
  CHECK(ssc_embedding_similarity(e, first, first, nullptr) ==
        SSC_ERR_CONFIG);
  CHECK(ssc_embedding_similarity(e, first, "no-such-skill", &self) ==
        SSC_ERR_DATA);
  CHECK(std::string(ssc_last_error()).find("no-such-skill") !=
        std::string::npos);

  // Nearest neighbours: right count, descending scores, query excluded.
  REQUIRE(ssc_embedding_nearest(e, first, 5) == SSC_OK);
  REQUIRE(ssc_embedding_result_count(e) == 5);
  double previous = 1.0 + 1e-12;
  for (size_t i = 0; i < 5; ++i) {
    const char* name = ssc_embedding_result_skill(e, i);
    REQUIRE(name != nullptr);
    CHECK(std::string(name) != first);
    const double score = ssc_embedding_result_score(e, i);
    CHECK(score <= previous);
    previous = score;
  }
  CHECK(ssc_embedding_result_skill(e, 5) == nullptr);
  CHECK(std::isnan(ssc_embedding_result_score(e, 5)));

  CHECK(ssc_embedding_nearest(e, "no-such-skill", 3) == SSC_ERR_DATA);

  // Opening a directory that train never touched fails cleanly.
  CHECK(ssc_embedding_open(tmp.file("nowhere").c_str()) == nullptr);
  CHECK_FALSE(std::string(ssc_last_error()).empty());

  ssc_embedding_close(e);
  ssc_embedding_close(nullptr);  // tolerated
  ssc_pipeline_close(p);
}
