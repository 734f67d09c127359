// skillscape command-line interface.
//
// The CLI is a client of the public C API only (skillscape.h): it loads a
// configuration, applies flag overrides, runs pipeline stages, and reports
// failures as machine-parseable single-line JSON on the final stderr line.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "skillscape.h"

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level_from_env() {
  const char* raw = std::getenv("SKILLSCAPE_LOG");
  if (raw == nullptr) return LogLevel::info;
  const std::string value(raw);
  if (value == "quiet") return LogLevel::quiet;
  if (value == "debug") return LogLevel::debug;
  return LogLevel::info;
}

LogLevel g_log_level = LogLevel::info;

void log_line(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) <= static_cast<int>(g_log_level)) {
    std::cerr << "[skillscape] " << message << "\n";
  }
}

std::string json_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size() + 8);
  for (const char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x",
                        static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

const char* kind_for_code(int code) {
  switch (code) {
    case SSC_ERR_CONFIG: return "config";
    case SSC_ERR_MISSING_ARTIFACT: return "missing_artifact";
    case SSC_ERR_DATA: return "data";
    default: return "internal";
  }
}

// Prints the machine-parseable error object; must be the final stderr line.
void print_error_line(int code, const std::string& message) {
  std::cerr << "{\"error\":{\"code\":" << code << ",\"kind\":\""
            << kind_for_code(code) << "\",\"message\":\""
            << json_escape(message) << "\"}}" << std::endl;
}

int fail(int code, const std::string& message) {
  print_error_line(code, message);
  return code;
}

constexpr const char* kHelpFooter = R"(Environment:
  SKILLSCAPE_LOG          stderr verbosity: quiet, info (default), or debug

Artifacts are written under <output_dir>/<stage-directory>/, and every stage
also writes a manifest.json recording the config hash, input file digests,
and output names:
  synth/      postings.jsonl, demographics.csv, job_zones.csv, mobility.csv,
              world.json
  corpus/     postings.jsonl, errors.jsonl, vocab.csv, snapshots.csv
              (written by `ingest`)
  embedding/  embedding.json, embedding.f32, vocab.txt, embedding.txt
              (written by `train`)
  graph/      edges.csv, partition.csv
  drift/      changes.csv, attributions.csv, similarity_t0.csv,
              similarity_t1.csv
  atoms/      dictionary.json, atoms.f32, codes.csv, skills.txt,
              selection.csv, profiles.csv, importance.csv, grid.csv,
              atom_top_skills.csv, labels.csv (only with input.atom_labels)
  strata/     stratified_changes.csv, hhi.csv, hhi_occupation.csv,
              education.csv, dominance.csv (only with input.demographics),
              heatmap.csv (only with demographics and job zones),
              correlations.csv, regressions.csv, regressions.txt

Failures exit nonzero (1 internal, 2 config, 3 missing artifact, 4 data) and
print one machine-parseable JSON object as the final line of stderr.
)";

struct StageCommand {
  const char* name;
  const char* help;
};

constexpr StageCommand kStageCommands[] = {
    {"synth", "Generate a planted synthetic corpus and side inputs"},
    {"ingest", "Parse, deduplicate, and snapshot the posting corpus"},
    {"train", "Learn skill embeddings from co-occurrence"},
    {"graph", "Build the association graph and detect skill communities"},
    {"drift", "Measure per-occupation skill change between the two years"},
    {"atoms", "Learn a sparse dictionary of skill atoms and their shifts"},
    {"strata", "Stratified statistics, concentration, and regressions"},
};

constexpr const char* kChain[] = {"ingest", "train",  "graph",
                                  "drift",  "atoms",  "strata"};

}  // namespace

int main(int argc, char** argv) {
  g_log_level = log_level_from_env();

  CLI::App app{
      "skillscape — learns skill embeddings from job postings and "
      "quantifies occupational skill change"};
  app.footer(kHelpFooter);
  app.set_version_flag("--version", std::string("skillscape ") + ssc_version());
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  bool workers_given = false;

  app.add_option("-c,--config", config_path,
                 "Configuration file (JSON); defaults apply when omitted")
      ->option_text("PATH");
  app.add_option("-s,--set", overrides,
                 "Override a config field, e.g. --set embedding.epochs=10 "
                 "(repeatable)")
      ->option_text("KEY=VALUE");
  app.add_option("-w,--workers", workers,
                 "Worker threads for embedding training; 0 = all available "
                 "cores (default). Training is deterministic only with 1.")
      ->option_text("N")
      ->check(CLI::NonNegativeNumber);

  for (const auto& command : kStageCommands) {
    app.add_subcommand(command.name, command.help);
  }
  app.add_subcommand("all",
                     "Run ingest, train, graph, drift, atoms, and strata");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    return fail(SSC_ERR_CONFIG, e.what());
  }
  workers_given = app.count("--workers") > 0;

  // Worker resolution: an explicit --workers wins; otherwise a --set on
  // embedding.workers is respected; otherwise default to all cores.
  bool workers_set_by_override = false;
  for (const auto& entry : overrides) {
    if (entry.rfind("embedding.workers=", 0) == 0) {
      workers_set_by_override = true;
    }
  }
  if (workers_given || !workers_set_by_override) {
    int resolved = workers;
    if (resolved == 0) {
      const unsigned hw = std::thread::hardware_concurrency();
      resolved = hw > 0 ? static_cast<int>(hw) : 1;
    }
    overrides.push_back("embedding.workers=" + std::to_string(resolved));
  }

  std::vector<const char*> override_ptrs;
  override_ptrs.reserve(overrides.size());
  for (const auto& entry : overrides) override_ptrs.push_back(entry.c_str());

  ssc_pipeline* pipeline =
      config_path.empty()
          ? ssc_pipeline_open_text("{}", override_ptrs.data(),
                                   override_ptrs.size())
          : ssc_pipeline_open(config_path.c_str(), override_ptrs.data(),
                              override_ptrs.size());
  if (pipeline == nullptr) {
    return fail(SSC_ERR_CONFIG, ssc_last_error());
  }
  log_line(LogLevel::debug, std::string("config hash ") +
                                ssc_pipeline_config_hash(pipeline));

  std::vector<std::string> stages;
  const std::string chosen = app.get_subcommands().front()->get_name();
  if (chosen == "all") {
    stages.assign(std::begin(kChain), std::end(kChain));
  } else {
    stages.push_back(chosen);
  }

  int status = SSC_OK;
  for (const auto& stage : stages) {
    log_line(LogLevel::info, "running " + stage);
    status = ssc_pipeline_run(pipeline, stage.c_str());
    if (status != SSC_OK) {
      const std::string message = ssc_last_error();
      ssc_pipeline_close(pipeline);
      return fail(status, message);
    }
    log_line(LogLevel::info, stage + " done");
  }

  ssc_pipeline_close(pipeline);
  return status;
}
