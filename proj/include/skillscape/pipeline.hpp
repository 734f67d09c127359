#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skillscape/atoms.hpp"
#include "skillscape/drift.hpp"
#include "skillscape/embed.hpp"
#include "skillscape/graph.hpp"
#include "skillscape/strata.hpp"
#include "skillscape/synthlab.hpp"

namespace skillscape::pipeline {

// Every knob for a full run, loaded from one JSON file. Dotted-path overrides
// land on the same document before decoding, so the config hash covers them
// and changes iff some effective field changes.
struct PipelineConfig {
  // Inputs. `postings` feeds `ingest`; the side inputs are optional and the
  // analyses needing them are skipped when the path is empty.
  std::string postings_path;
  std::string demographics_path;
  std::string job_zones_path;
  std::string mobility_path;
  std::string atom_labels_path;
  std::string output_dir = "out";

  int year_t0 = 2010;
  int year_t1 = 2018;
  double core_quantile = 0.05;
  std::size_t min_ads_per_year = 100;

  embed::TrainingConfig training;

  drift::WeightMode weight_mode = drift::WeightMode::uniform;
  drift::SkillScope scope = drift::SkillScope::core();
  drift::ShareBasis share_basis = drift::ShareBasis::ad_share;
  drift::ReweightDirection reweight_direction = drift::ReweightDirection::t0_over_t1;

  graph::ConditionalConvention graph_convention = graph::ConditionalConvention::uniform;
  std::uint64_t louvain_seed = 1;

  atoms::KsvdConfig ksvd;
  std::vector<int> atom_grid;  // empty -> keep ksvd.atom_count as-is
  int layout_rows = 14;
  int layout_cols = 15;

  strata::SizeThresholds size_thresholds;
  strata::DominanceConfig dominance;
  strata::EducationConfig education;
  int heatmap_bands = 5;

  // `synth` stage: a named corpus preset plus its seed.
  std::string synth_preset = "desk";  // "desk" or "paired_small"
  std::uint64_t synth_seed = 9001;

  std::vector<int> years() const { return {year_t0, year_t1}; }
  synthlab::SynthSpec synth_spec() const;
};

enum class Stage { synth, ingest, train, graph, drift, atoms, strata };

// ingest -> train -> graph -> drift -> atoms -> strata (synth runs on demand).
const std::vector<Stage>& chain_stages();
std::string to_string(Stage stage);
Stage parse_stage(const std::string& name);  // ConfigError on unknown names

// Loading is strict: unknown keys anywhere are ConfigErrors so typos cannot
// silently fall back to defaults. Overrides are "dotted.path=value" applied
// to the document before decoding; values parse as JSON when they can and as
// strings otherwise.
PipelineConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides = {});
PipelineConfig config_from_json_text(const std::string& text,
                                     const std::vector<std::string>& overrides = {});

// Canonical serialization: stable key order, shortest round-trip numbers.
// load(config_to_json(c)) reproduces c exactly.
std::string config_to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);  // sha256 of the above
std::string default_config_json();                      // pretty-printed schema

struct StageResult {
  Stage stage = Stage::ingest;
  std::string directory;             // <output_dir>/<stage>
  std::vector<std::string> outputs;  // file names inside `directory`
};

// Runs one stage. Upstream artifacts are read from config.output_dir; a
// missing one raises MissingArtifactError naming the stage to run first,
// while missing or invalid user inputs raise ConfigError. Each stage writes
// <stage>/manifest.json holding the config hash, the digest of every input
// file, and the output list — no timestamps, so reruns are byte-identical.
StageResult run_stage(const PipelineConfig& config, Stage stage);

// The full ingest..strata chain, in order.
std::vector<StageResult> run_all(const PipelineConfig& config);

}  // namespace skillscape::pipeline
