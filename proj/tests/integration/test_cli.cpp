// Drives the installed command-line binary as a subprocess and checks the
// documented contract: exit codes, the machine-parseable final stderr line,
// --help coverage, log verbosity, and the synth → all flow.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support/tmpdir.hpp"

using testsupport::TempDir;
using testsupport::slurp;
using testsupport::spit;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const TempDir& tmp, const std::string& args,
                  const std::string& env = "SKILLSCAPE_LOG=quiet") {
  static int sequence = 0;
  const std::string tag = std::to_string(sequence++);
  const std::string out_path = tmp.file("cli_stdout_" + tag);
  const std::string err_path = tmp.file("cli_stderr_" + tag);
  const std::string command = env + " " + std::string(SKILLSCAPE_CLI_PATH) +
                              " " + args + " >" + out_path + " 2>" + err_path;
  const int raw = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

std::string final_line(const std::string& text) {
  size_t end = text.size();
  while (end > 0 && text[end - 1] == '\n') --end;
  const size_t start = text.rfind('\n', end == 0 ? 0 : end - 1);
  return text.substr(start == std::string::npos ? 0 : start + 1,
                     end - (start == std::string::npos ? 0 : start + 1));
}

nlohmann::json error_object(const RunResult& result) {
  const auto parsed =
      nlohmann::json::parse(final_line(result.err), nullptr, false);
  REQUIRE_FALSE(parsed.is_discarded());
  REQUIRE(parsed.contains("error"));
  return parsed["error"];
}

std::string write_chain_config(const TempDir& tmp) {
  const std::string out_dir = tmp.file("out");
  nlohmann::json config = {
      {"output_dir", out_dir},
      {"synth", {{"preset", "paired_small"}, {"seed", 4242}}},
      {"input",
       {{"postings", out_dir + "/synth/postings.jsonl"},
        {"demographics", out_dir + "/synth/demographics.csv"},
        {"job_zones", out_dir + "/synth/job_zones.csv"},
        {"mobility", out_dir + "/synth/mobility.csv"}}},
      {"embedding",
       {{"dimension", 16},
        {"epochs", 2},
        {"negatives", 4},
        {"validation_pairs", 500},
        {"max_pairs_per_posting", 80},
        {"seed", 7}}},
      {"atoms",
       {{"atom_count", 12},
        {"sparsity", 3},
        {"iterations", 6},
        {"top_skills", 10},
        {"layout_rows", 3},
        {"layout_cols", 4}}},
      {"strata", {{"heatmap_bands", 3}}},
  };
  const std::string path = tmp.file("config.json");
  spit(path, config.dump(2) + "\n");
  return path;
}

}  // namespace

TEST_CASE("cli help documents the artifacts and subcommands") {
  TempDir tmp;
  const auto result = run_cli(tmp, "--help");
  CHECK(result.exit_code == 0);
  for (const char* name :
       {"synth", "ingest", "train", "graph", "drift", "atoms", "strata",
        "all", "--config", "--set", "--workers", "SKILLSCAPE_LOG"}) {
    CAPTURE(name);
    CHECK(result.out.find(name) != std::string::npos);
  }
  for (const char* artifact :
       {"postings.jsonl", "errors.jsonl", "vocab.csv", "snapshots.csv",
        "embedding.json", "embedding.f32", "vocab.txt", "embedding.txt",
        "edges.csv", "partition.csv", "changes.csv", "attributions.csv",
        "similarity_t0.csv", "similarity_t1.csv", "dictionary.json",
        "atoms.f32", "codes.csv", "skills.txt", "selection.csv",
        "profiles.csv", "importance.csv", "grid.csv", "atom_top_skills.csv",
        "labels.csv", "stratified_changes.csv", "hhi.csv",
        "hhi_occupation.csv", "dominance.csv", "heatmap.csv", "education.csv",
        "correlations.csv", "regressions.csv", "regressions.txt",
        "world.json", "demographics.csv", "job_zones.csv", "mobility.csv",
        "manifest.json"}) {
    CAPTURE(artifact);
    CHECK(result.out.find(artifact) != std::string::npos);
  }

  const auto version = run_cli(tmp, "--version");
  CHECK(version.exit_code == 0);
  CHECK(version.out.find("skillscape 0.1.0") != std::string::npos);
}

TEST_CASE("cli runs the synth-then-all flow and honours log verbosity") {
  TempDir tmp;
  const std::string config = write_chain_config(tmp);
  const std::string out_dir = tmp.file("out");

  const auto synth = run_cli(tmp, "-c " + config + " synth");
  REQUIRE(synth.exit_code == 0);
  CHECK(synth.err.empty());  // quiet means quiet

  const auto all =
      run_cli(tmp, "-c " + config + " --workers 1 all", "SKILLSCAPE_LOG=info");
  REQUIRE(all.exit_code == 0);
  for (const char* stage :
       {"running ingest", "running train", "running graph", "running drift",
        "running atoms", "running strata", "strata done"}) {
    CAPTURE(stage);
    CHECK(all.err.find(stage) != std::string::npos);
  }

  for (const char* relative :
       {"synth/manifest.json", "corpus/postings.jsonl", "corpus/manifest.json",
        "embedding/embedding.f32", "graph/edges.csv", "drift/changes.csv",
        "atoms/dictionary.json", "strata/stratified_changes.csv",
        "strata/regressions.txt"}) {
    CAPTURE(relative);
    CHECK(std::filesystem::exists(out_dir + "/" + std::string(relative)));
  }

  // Stage directories carry the config hash in their manifests.
  const auto manifest =
      nlohmann::json::parse(slurp(out_dir + "/corpus/manifest.json"));
  CHECK(manifest["stage"] == "ingest");
  CHECK(manifest["config_hash"].get<std::string>().size() == 64);
}

TEST_CASE("cli failures use the exit-code taxonomy with a final json line") {
  TempDir tmp;

  SUBCASE("missing artifact is exit 3") {
    const std::string config = write_chain_config(tmp);
    const auto result = run_cli(tmp, "-c " + config + " drift");
    CHECK(result.exit_code == 3);
    const auto error = error_object(result);
    CHECK(error["code"].get<int>() == 3);
    CHECK(error["kind"] == "missing_artifact");
    CHECK(error["message"].get<std::string>().find("ingest") !=
          std::string::npos);
  }

  SUBCASE("config mistakes are exit 2") {
    const auto bad_set = run_cli(tmp, "--set embedding.epochs=zero synth");
    CHECK(bad_set.exit_code == 2);
    CHECK(error_object(bad_set)["kind"] == "config");

    const auto bad_subcommand = run_cli(tmp, "resynthesize");
    CHECK(bad_subcommand.exit_code == 2);
    CHECK(error_object(bad_subcommand)["kind"] == "config");

    const auto bad_config = run_cli(tmp, "-c /nonexistent.json synth");
    CHECK(bad_config.exit_code == 2);
    CHECK(error_object(bad_config)["code"].get<int>() == 2);

    const auto no_subcommand = run_cli(tmp, "--workers 1");
    CHECK(no_subcommand.exit_code == 2);
    CHECK(error_object(no_subcommand)["kind"] == "config");
  }

  SUBCASE("data problems are exit 4") {
    // A readable postings file whose few records all fall below the
    // activity threshold leaves nothing to analyse.
    const std::string postings = tmp.file("sparse.jsonl");
    spit(postings,
         R"({"post_id":"a","occupation":"11-1011","year":2010,"skills":["x","y"],"employer":"e","lat":40.0,"lon":-80.0})"
         "\n"
         R"({"post_id":"b","occupation":"11-1011","year":2018,"skills":["x","z"],"employer":"e","lat":40.0,"lon":-80.0})"
         "\n");
    const auto result =
        run_cli(tmp, "--set input.postings=" + postings + " --set output_dir=" +
                         tmp.file("sparse_out") + " ingest");
    CHECK(result.exit_code == 4);
    const auto error = error_object(result);
    CHECK(error["code"].get<int>() == 4);
    CHECK(error["kind"] == "data");
  }

  SUBCASE("the error line is the only stderr line in quiet mode") {
    const auto result = run_cli(tmp, "--set output_dir=" + tmp.file("empty") +
                                         " train");
    CHECK(result.exit_code == 3);
    const std::string trimmed =
        result.err.substr(0, result.err.find_last_not_of('\n') + 1);
    CHECK(trimmed.find('\n') == std::string::npos);
    CHECK(final_line(result.err) == trimmed);
  }
}
