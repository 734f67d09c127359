#include "skillscape/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "skillscape/corpus.hpp"
#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"
#include "skillscape/sha256.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace skillscape::pipeline {
namespace {

// ---------------------------------------------------------------------------
// Enum <-> string tables

template <typename T>
struct NamedValue {
  const char* name;
  T value;
};

template <typename T, std::size_t N>
std::string encode_enum(T value, const NamedValue<T> (&table)[N]) {
  for (const auto& entry : table) {
    if (entry.value == value) return entry.name;
  }
  throw ConfigError("unrepresentable enum value");
}

template <typename T, std::size_t N>
T decode_enum(const std::string& name, const NamedValue<T> (&table)[N],
              const std::string& field) {
  std::string valid;
  for (const auto& entry : table) {
    if (name == entry.name) return entry.value;
    if (!valid.empty()) valid += ", ";
    valid += entry.name;
  }
  throw ConfigError(field + ": unknown value \"" + name + "\" (expected one of: " + valid +
                    ")");
}

constexpr NamedValue<drift::WeightMode> kWeightModes[] = {
    {"uniform", drift::WeightMode::uniform},
    {"frequency", drift::WeightMode::frequency},
};
constexpr NamedValue<drift::SkillScope::Kind> kScopeKinds[] = {
    {"core", drift::SkillScope::Kind::core},
    {"top_fraction", drift::SkillScope::Kind::top_fraction},
    {"all", drift::SkillScope::Kind::all},
};
constexpr NamedValue<drift::ShareBasis> kShareBases[] = {
    {"ad_share", drift::ShareBasis::ad_share},
    {"occurrence_share", drift::ShareBasis::occurrence_share},
};
constexpr NamedValue<drift::ReweightDirection> kReweightDirections[] = {
    {"t0_over_t1", drift::ReweightDirection::t0_over_t1},
    {"t1_over_t0", drift::ReweightDirection::t1_over_t0},
};
constexpr NamedValue<graph::ConditionalConvention> kConventions[] = {
    {"uniform", graph::ConditionalConvention::uniform},
    {"binary", graph::ConditionalConvention::binary},
};

// ---------------------------------------------------------------------------
// Strict JSON access. The document is always the default document with the
// user's file merged over it, so every key exists; these helpers only check
// types and produce field-qualified messages.

const json& member(const json& doc, const char* key) { return doc.at(key); }

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field + " must be a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError(field + " must be true or false");
  return j.get<bool>();
}

int get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field + " must be an integer");
  return j.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& field) {
  if (!(j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0))) {
    throw ConfigError(field + " must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::size_t get_size(const json& j, const std::string& field) {
  return std::size_t(get_u64(j, field));
}

double get_double(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + " must be a number");
  return j.get<double>();
}

std::vector<int> get_int_array(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field + " must be an array of integers");
  std::vector<int> values;
  for (const auto& element : j) values.push_back(get_int(element, field + " entries"));
  return values;
}

// ---------------------------------------------------------------------------
// Config <-> JSON

json config_document(const PipelineConfig& c) {
  json doc;
  doc["input"]["postings"] = c.postings_path;
  doc["input"]["demographics"] = c.demographics_path;
  doc["input"]["job_zones"] = c.job_zones_path;
  doc["input"]["mobility"] = c.mobility_path;
  doc["input"]["atom_labels"] = c.atom_labels_path;
  doc["output_dir"] = c.output_dir;
  doc["years"]["t0"] = c.year_t0;
  doc["years"]["t1"] = c.year_t1;
  doc["corpus"]["core_quantile"] = c.core_quantile;
  doc["corpus"]["min_ads_per_year"] = c.min_ads_per_year;

  const auto& t = c.training;
  doc["embedding"]["dimension"] = t.dimension;
  doc["embedding"]["epochs"] = t.epochs;
  doc["embedding"]["negatives"] = t.negatives;
  doc["embedding"]["learning_rate_start"] = t.lr_start;
  doc["embedding"]["learning_rate_end"] = t.lr_end;
  doc["embedding"]["noise_exponent"] = t.noise_exponent;
  doc["embedding"]["subsample_threshold"] = t.subsample_threshold;
  doc["embedding"]["max_pairs_per_posting"] = t.max_pairs_per_posting;
  doc["embedding"]["validation_pairs"] = t.validation_pairs;
  doc["embedding"]["seed"] = t.seed;
  doc["embedding"]["workers"] = t.workers;

  doc["drift"]["weight_mode"] = encode_enum(c.weight_mode, kWeightModes);
  doc["drift"]["skill_scope"] = encode_enum(c.scope.kind, kScopeKinds);
  doc["drift"]["scope_fraction"] = c.scope.fraction;
  doc["drift"]["share_basis"] = encode_enum(c.share_basis, kShareBases);
  doc["drift"]["reweight_direction"] =
      encode_enum(c.reweight_direction, kReweightDirections);

  doc["graph"]["conditional_convention"] = encode_enum(c.graph_convention, kConventions);
  doc["graph"]["louvain_seed"] = c.louvain_seed;

  doc["atoms"]["atom_count"] = c.ksvd.atom_count;
  doc["atoms"]["sparsity"] = c.ksvd.sparsity;
  doc["atoms"]["iterations"] = c.ksvd.iterations;
  doc["atoms"]["seed"] = c.ksvd.seed;
  doc["atoms"]["top_skills"] = c.ksvd.top_skills;
  doc["atoms"]["grid"] = c.atom_grid;
  doc["atoms"]["layout_rows"] = c.layout_rows;
  doc["atoms"]["layout_cols"] = c.layout_cols;

  doc["strata"]["market_top_share"] = c.size_thresholds.market_top_share;
  doc["strata"]["employer_min_posts"] = c.size_thresholds.employer_min_posts;
  doc["strata"]["dominance_threshold"] = c.dominance.threshold;
  doc["strata"]["dominance_round_decimals"] = c.dominance.round_decimals;
  doc["strata"]["education_min_coverage"] = c.education.min_coverage;
  doc["strata"]["education_volume_weighted"] = c.education.volume_weighted;
  doc["strata"]["heatmap_bands"] = c.heatmap_bands;

  doc["synth"]["preset"] = c.synth_preset;
  doc["synth"]["seed"] = c.synth_seed;
  return doc;
}

PipelineConfig decode_config(const json& doc) {
  PipelineConfig c;
  const auto& input = member(doc, "input");
  c.postings_path = get_string(member(input, "postings"), "input.postings");
  c.demographics_path = get_string(member(input, "demographics"), "input.demographics");
  c.job_zones_path = get_string(member(input, "job_zones"), "input.job_zones");
  c.mobility_path = get_string(member(input, "mobility"), "input.mobility");
  c.atom_labels_path = get_string(member(input, "atom_labels"), "input.atom_labels");
  c.output_dir = get_string(member(doc, "output_dir"), "output_dir");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");

  const auto& years = member(doc, "years");
  c.year_t0 = get_int(member(years, "t0"), "years.t0");
  c.year_t1 = get_int(member(years, "t1"), "years.t1");
  if (c.year_t0 >= c.year_t1) throw ConfigError("years.t0 must be earlier than years.t1");

  const auto& corpus_section = member(doc, "corpus");
  c.core_quantile = get_double(member(corpus_section, "core_quantile"), "corpus.core_quantile");
  if (!(c.core_quantile > 0.0 && c.core_quantile <= 1.0)) {
    throw ConfigError("corpus.core_quantile must be in (0, 1]");
  }
  c.min_ads_per_year =
      get_size(member(corpus_section, "min_ads_per_year"), "corpus.min_ads_per_year");

  const auto& e = member(doc, "embedding");
  c.training.dimension = get_int(member(e, "dimension"), "embedding.dimension");
  c.training.epochs = get_int(member(e, "epochs"), "embedding.epochs");
  c.training.negatives = get_int(member(e, "negatives"), "embedding.negatives");
  c.training.lr_start = get_double(member(e, "learning_rate_start"),
                                   "embedding.learning_rate_start");
  c.training.lr_end = get_double(member(e, "learning_rate_end"), "embedding.learning_rate_end");
  c.training.noise_exponent = get_double(member(e, "noise_exponent"),
                                         "embedding.noise_exponent");
  c.training.subsample_threshold =
      get_double(member(e, "subsample_threshold"), "embedding.subsample_threshold");
  c.training.max_pairs_per_posting =
      get_size(member(e, "max_pairs_per_posting"), "embedding.max_pairs_per_posting");
  c.training.validation_pairs =
      get_size(member(e, "validation_pairs"), "embedding.validation_pairs");
  c.training.seed = get_u64(member(e, "seed"), "embedding.seed");
  c.training.workers = get_int(member(e, "workers"), "embedding.workers");
  if (c.training.workers < 1) throw ConfigError("embedding.workers must be at least 1");

  const auto& d = member(doc, "drift");
  c.weight_mode =
      decode_enum(get_string(member(d, "weight_mode"), "drift.weight_mode"), kWeightModes,
                  "drift.weight_mode");
  c.scope.kind = decode_enum(get_string(member(d, "skill_scope"), "drift.skill_scope"),
                             kScopeKinds, "drift.skill_scope");
  c.scope.fraction = get_double(member(d, "scope_fraction"), "drift.scope_fraction");
  c.share_basis = decode_enum(get_string(member(d, "share_basis"), "drift.share_basis"),
                              kShareBases, "drift.share_basis");
  c.reweight_direction =
      decode_enum(get_string(member(d, "reweight_direction"), "drift.reweight_direction"),
                  kReweightDirections, "drift.reweight_direction");

  const auto& g = member(doc, "graph");
  c.graph_convention = decode_enum(
      get_string(member(g, "conditional_convention"), "graph.conditional_convention"),
      kConventions, "graph.conditional_convention");
  c.louvain_seed = get_u64(member(g, "louvain_seed"), "graph.louvain_seed");

  const auto& a = member(doc, "atoms");
  c.ksvd.atom_count = get_int(member(a, "atom_count"), "atoms.atom_count");
  c.ksvd.sparsity = get_int(member(a, "sparsity"), "atoms.sparsity");
  c.ksvd.iterations = get_int(member(a, "iterations"), "atoms.iterations");
  c.ksvd.seed = get_u64(member(a, "seed"), "atoms.seed");
  c.ksvd.top_skills = get_int(member(a, "top_skills"), "atoms.top_skills");
  c.atom_grid = get_int_array(member(a, "grid"), "atoms.grid");
  c.layout_rows = get_int(member(a, "layout_rows"), "atoms.layout_rows");
  c.layout_cols = get_int(member(a, "layout_cols"), "atoms.layout_cols");
  if (c.layout_rows < 1 || c.layout_cols < 1) {
    throw ConfigError("atoms.layout_rows and atoms.layout_cols must be at least 1");
  }

  const auto& s = member(doc, "strata");
  c.size_thresholds.market_top_share =
      get_double(member(s, "market_top_share"), "strata.market_top_share");
  c.size_thresholds.employer_min_posts =
      get_size(member(s, "employer_min_posts"), "strata.employer_min_posts");
  c.dominance.threshold = get_double(member(s, "dominance_threshold"),
                                     "strata.dominance_threshold");
  c.dominance.round_decimals =
      get_int(member(s, "dominance_round_decimals"), "strata.dominance_round_decimals");
  c.education.min_coverage =
      get_double(member(s, "education_min_coverage"), "strata.education_min_coverage");
  c.education.volume_weighted =
      get_bool(member(s, "education_volume_weighted"), "strata.education_volume_weighted");
  c.heatmap_bands = get_int(member(s, "heatmap_bands"), "strata.heatmap_bands");
  if (c.heatmap_bands < 1) throw ConfigError("strata.heatmap_bands must be at least 1");

  const auto& sy = member(doc, "synth");
  c.synth_preset = get_string(member(sy, "preset"), "synth.preset");
  c.synth_seed = get_u64(member(sy, "seed"), "synth.seed");
  c.synth_spec();  // validates the preset name
  return c;
}

// Merge the user's (possibly partial) document over the defaults, rejecting
// keys the schema does not define.
void merge_into(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) {
    throw ConfigError("config section " +
                      (prefix.empty() ? std::string("<root>") : prefix) +
                      " must be an object");
  }
  for (const auto& [key, value] : user.items()) {
    if (!base.contains(key)) {
      throw ConfigError("unknown config key: " + prefix + key);
    }
    if (base[key].is_object()) {
      merge_into(base[key], value, prefix + key + ".");
    } else {
      base[key] = value;
    }
  }
}

std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : dotted) {
    if (ch == '.') {
      parts.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  parts.push_back(current);
  return parts;
}

void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value, got: " + spec);
  }
  const std::string dotted = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);
  json* node = &doc;
  const auto parts = split_path(dotted);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) {
      throw ConfigError("unknown config key: " + dotted);
    }
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() || !node->contains(parts.back())) {
    throw ConfigError("unknown config key: " + dotted);
  }
  json& leaf = (*node)[parts.back()];
  if (leaf.is_object()) {
    throw ConfigError("override must target a leaf field, not a section: " + dotted);
  }
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;  // unquoted strings pass through
  leaf = std::move(value);
}

PipelineConfig decode_with_overrides(json doc, const std::vector<std::string>& overrides) {
  json merged = config_document(PipelineConfig{});
  merge_into(merged, doc, "");
  for (const auto& spec : overrides) apply_override(merged, spec);
  return decode_config(merged);
}

// ---------------------------------------------------------------------------
// Artifact plumbing

namespace artifact {
constexpr const char* postings = "postings.jsonl";
constexpr const char* record_errors = "errors.jsonl";
constexpr const char* vocab = "vocab.csv";
constexpr const char* snapshots = "snapshots.csv";
constexpr const char* embedding_header = "embedding.json";
constexpr const char* embedding_matrix = "embedding.f32";
constexpr const char* embedding_vocab = "vocab.txt";
constexpr const char* embedding_text = "embedding.txt";
constexpr const char* edges = "edges.csv";
constexpr const char* partition = "partition.csv";
constexpr const char* changes = "changes.csv";
constexpr const char* attributions = "attributions.csv";
constexpr const char* similarity_t0 = "similarity_t0.csv";
constexpr const char* similarity_t1 = "similarity_t1.csv";
constexpr const char* dictionary_header = "dictionary.json";
constexpr const char* dictionary_atoms = "atoms.f32";
constexpr const char* dictionary_codes = "codes.csv";
constexpr const char* dictionary_skills = "skills.txt";
constexpr const char* selection = "selection.csv";
constexpr const char* profiles = "profiles.csv";
constexpr const char* importance = "importance.csv";
constexpr const char* grid = "grid.csv";
constexpr const char* top_skills = "atom_top_skills.csv";
constexpr const char* labels = "labels.csv";
constexpr const char* stratified = "stratified_changes.csv";
constexpr const char* hhi = "hhi.csv";
constexpr const char* hhi_occupation = "hhi_occupation.csv";
constexpr const char* dominance = "dominance.csv";
constexpr const char* heatmap = "heatmap.csv";
constexpr const char* education = "education.csv";
constexpr const char* correlations = "correlations.csv";
constexpr const char* regressions = "regressions.csv";
constexpr const char* regressions_text = "regressions.txt";
constexpr const char* world = "world.json";
constexpr const char* demographics = "demographics.csv";
constexpr const char* job_zones = "job_zones.csv";
constexpr const char* mobility = "mobility.csv";
}  // namespace artifact

std::string stage_directory_name(Stage stage) {
  switch (stage) {
    case Stage::synth: return "synth";
    case Stage::ingest: return "corpus";
    case Stage::train: return "embedding";
    case Stage::graph: return "graph";
    case Stage::drift: return "drift";
    case Stage::atoms: return "atoms";
    case Stage::strata: return "strata";
  }
  throw ConfigError("unknown stage");
}

fs::path stage_dir(const PipelineConfig& config, Stage stage) {
  return fs::path(config.output_dir) / stage_directory_name(stage);
}

std::string require_artifact(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw MissingArtifactError("missing artifact: " + path.string() + " (run `" +
                               producer + "` first)");
  }
  return path.string();
}

std::string require_user_input(const std::string& path, const std::string& field) {
  if (path.empty()) {
    throw ConfigError("config field " + field + " is required for this stage");
  }
  if (!fs::exists(path)) {
    throw ConfigError("input file not found: " + path + " (config field " + field + ")");
  }
  return path;
}

void write_manifest(const fs::path& dir, Stage stage, const PipelineConfig& config,
                    const std::vector<std::string>& input_paths,
                    std::vector<std::string> outputs) {
  json m;
  m["stage"] = to_string(stage);
  m["config_hash"] = config_hash(config);
  json inputs = json::object();
  for (const auto& path : input_paths) inputs[path] = sha256_file_hex(path);
  m["inputs"] = std::move(inputs);
  std::sort(outputs.begin(), outputs.end());
  m["outputs"] = std::move(outputs);
  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << m.dump(2) << "\n";
}

// Snapshots for one occupation at both years.
struct SnapshotPair {
  corpus::OccupationYearSnapshot t0;
  corpus::OccupationYearSnapshot t1;
};

std::map<std::string, SnapshotPair> pair_snapshots(
    const std::vector<corpus::OccupationYearSnapshot>& snapshots, int t0, int t1) {
  std::map<std::string, SnapshotPair> pairs;
  for (const auto& s : snapshots) {
    if (s.year == t0) pairs[s.occupation].t0 = s;
    if (s.year == t1) pairs[s.occupation].t1 = s;
  }
  for (auto it = pairs.begin(); it != pairs.end();) {
    if (it->second.t0.n_ads == 0 || it->second.t1.n_ads == 0) {
      it = pairs.erase(it);
    } else {
      ++it;
    }
  }
  return pairs;
}

std::vector<corpus::OccupationYearSnapshot> year_slice(
    const std::vector<corpus::OccupationYearSnapshot>& snapshots, int year) {
  std::vector<corpus::OccupationYearSnapshot> out;
  for (const auto& s : snapshots) {
    if (s.year == year) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

StageResult run_synth(const PipelineConfig& config) {
  const auto dir = stage_dir(config, Stage::synth);
  fs::create_directories(dir);
  auto world = synthlab::build_world(config.synth_spec());
  synthlab::generate_corpus(world, (dir / artifact::postings).string());
  synthlab::write_side_inputs(world, dir.string());
  synthlab::write_manifest(world, (dir / artifact::world).string());
  const std::vector<std::string> outputs = {artifact::postings, artifact::demographics,
                                            artifact::job_zones, artifact::mobility,
                                            artifact::world};
  write_manifest(dir, Stage::synth, config, {}, outputs);
  return {Stage::synth, dir.string(), outputs};
}

StageResult run_ingest(const PipelineConfig& config) {
  const auto input = require_user_input(config.postings_path, "input.postings");
  const auto dir = stage_dir(config, Stage::ingest);
  fs::create_directories(dir);

  const auto parsed = corpus::parse_postings_file(input);
  const auto postings = corpus::deduplicate(parsed.postings);
  const auto active =
      corpus::filter_active_occupations(postings, config.min_ads_per_year, config.years());
  if (active.empty()) {
    throw DataError("no occupation reaches " + std::to_string(config.min_ads_per_year) +
                    " ads in both " + std::to_string(config.year_t0) + " and " +
                    std::to_string(config.year_t1));
  }
  const auto snapshots =
      corpus::build_snapshots(postings, active, config.years(), config.core_quantile);
  const auto vocab = corpus::SkillVocabulary::build(postings);

  corpus::write_postings_jsonl((dir / artifact::postings).string(), postings);
  corpus::write_errors_jsonl((dir / artifact::record_errors).string(), parsed.errors);
  corpus::write_vocab_counts_csv((dir / artifact::vocab).string(), vocab);
  corpus::write_snapshots_csv((dir / artifact::snapshots).string(), snapshots);

  const std::vector<std::string> outputs = {artifact::postings, artifact::record_errors,
                                            artifact::vocab, artifact::snapshots};
  write_manifest(dir, Stage::ingest, config, {input}, outputs);
  return {Stage::ingest, dir.string(), outputs};
}

StageResult run_train(const PipelineConfig& config) {
  const auto corpus_dir = stage_dir(config, Stage::ingest);
  const auto postings_path =
      require_artifact(corpus_dir / artifact::postings, "ingest");
  const auto vocab_path = require_artifact(corpus_dir / artifact::vocab, "ingest");
  const auto dir = stage_dir(config, Stage::train);
  fs::create_directories(dir);

  const auto postings = corpus::parse_postings_file(postings_path).postings;
  const auto vocab = corpus::read_vocab_counts_csv(vocab_path);
  const auto pairs = embed::build_training_pairs(postings, vocab, config.training);
  const auto matrix = embed::train_skipgram(pairs, vocab, config.training);
  embed::save_embedding(dir.string(), matrix, config.training.seed, config_hash(config));
  embed::export_embedding_text((dir / artifact::embedding_text).string(), matrix);

  const std::vector<std::string> outputs = {artifact::embedding_header,
                                            artifact::embedding_matrix,
                                            artifact::embedding_vocab,
                                            artifact::embedding_text};
  write_manifest(dir, Stage::train, config, {postings_path, vocab_path}, outputs);
  return {Stage::train, dir.string(), outputs};
}

StageResult run_graph(const PipelineConfig& config) {
  const auto corpus_dir = stage_dir(config, Stage::ingest);
  const auto postings_path =
      require_artifact(corpus_dir / artifact::postings, "ingest");
  const auto vocab_path = require_artifact(corpus_dir / artifact::vocab, "ingest");
  const auto dir = stage_dir(config, Stage::graph);
  fs::create_directories(dir);

  const auto postings = corpus::parse_postings_file(postings_path).postings;
  const auto vocab = corpus::read_vocab_counts_csv(vocab_path);
  const auto pmi = graph::pmi_matrix(postings, vocab, config.graph_convention);
  const auto g = graph::build_pmi_graph(pmi);
  const auto partition = graph::louvain_partition(g, config.louvain_seed);
  graph::write_edges_csv((dir / artifact::edges).string(), g, vocab.skills());
  graph::write_partition_csv((dir / artifact::partition).string(), partition,
                             vocab.skills());

  const std::vector<std::string> outputs = {artifact::edges, artifact::partition};
  write_manifest(dir, Stage::graph, config, {postings_path, vocab_path}, outputs);
  return {Stage::graph, dir.string(), outputs};
}

StageResult run_drift(const PipelineConfig& config) {
  const auto corpus_dir = stage_dir(config, Stage::ingest);
  const auto embedding_dir = stage_dir(config, Stage::train);
  const auto graph_dir = stage_dir(config, Stage::graph);
  const auto snapshots_path =
      require_artifact(corpus_dir / artifact::snapshots, "ingest");
  require_artifact(embedding_dir / artifact::embedding_header, "train");
  const auto partition_path =
      require_artifact(graph_dir / artifact::partition, "graph");
  const auto dir = stage_dir(config, Stage::drift);
  fs::create_directories(dir);

  const auto snapshots = corpus::read_snapshots_csv(snapshots_path);
  const auto embedding = embed::load_embedding(embedding_dir.string());
  const auto partition_by_name = graph::read_partition_csv(partition_path);
  const std::map<std::string, int> communities(partition_by_name.begin(),
                                               partition_by_name.end());

  std::vector<drift::ChangeReport> reports;
  std::vector<drift::AttributionRecord> attributions;
  for (const auto& [occupation, pair] : pair_snapshots(snapshots, config.year_t0,
                                                       config.year_t1)) {
    reports.push_back(drift::change_report(pair.t0, pair.t1, embedding, communities,
                                           config.weight_mode, config.scope,
                                           config.share_basis, config.reweight_direction));
    const auto records = drift::attribute_skill_contributions(pair.t0, pair.t1, embedding,
                                                              config.weight_mode);
    attributions.insert(attributions.end(), records.begin(), records.end());
  }
  drift::write_change_reports_csv((dir / artifact::changes).string(), reports);
  drift::write_attributions_csv((dir / artifact::attributions).string(), attributions);

  const auto sim_t0 = drift::occupation_similarity_matrix(
      year_slice(snapshots, config.year_t0), embedding, config.weight_mode, config.scope);
  drift::write_similarity_csv((dir / artifact::similarity_t0).string(), sim_t0);
  const auto sim_t1 = drift::occupation_similarity_matrix(
      year_slice(snapshots, config.year_t1), embedding, config.weight_mode, config.scope);
  drift::write_similarity_csv((dir / artifact::similarity_t1).string(), sim_t1);

  const std::vector<std::string> outputs = {artifact::changes, artifact::attributions,
                                            artifact::similarity_t0,
                                            artifact::similarity_t1};
  write_manifest(dir, Stage::drift, config,
                 {snapshots_path, (embedding_dir / artifact::embedding_matrix).string(),
                  partition_path},
                 outputs);
  return {Stage::drift, dir.string(), outputs};
}

StageResult run_atoms(const PipelineConfig& config) {
  const auto corpus_dir = stage_dir(config, Stage::ingest);
  const auto embedding_dir = stage_dir(config, Stage::train);
  const auto snapshots_path =
      require_artifact(corpus_dir / artifact::snapshots, "ingest");
  require_artifact(embedding_dir / artifact::embedding_header, "train");
  const auto dir = stage_dir(config, Stage::atoms);
  fs::create_directories(dir);

  const auto snapshots = corpus::read_snapshots_csv(snapshots_path);
  const auto embedding = embed::load_embedding(embedding_dir.string());

  const std::vector<int> grid =
      config.atom_grid.empty() ? std::vector<int>{config.ksvd.atom_count} : config.atom_grid;
  const auto selection = atoms::select_atom_count(embedding, grid, config.ksvd);
  atoms::KsvdConfig chosen = config.ksvd;
  chosen.atom_count = selection.best_atom_count;
  const auto dictionary = atoms::ksvd_learn(embedding, chosen);
  atoms::save_dictionary(dir.string(), dictionary, chosen.seed, config_hash(config));
  atoms::write_selection_csv((dir / artifact::selection).string(), selection);

  std::vector<atoms::OccupationAtomProfile> profiles_t0, profiles_t1;
  for (const auto& [occupation, pair] : pair_snapshots(snapshots, config.year_t0,
                                                       config.year_t1)) {
    profiles_t0.push_back(atoms::occupation_atom_weights(pair.t0, dictionary));
    profiles_t1.push_back(atoms::occupation_atom_weights(pair.t1, dictionary));
  }
  std::vector<atoms::OccupationAtomProfile> all_profiles = profiles_t0;
  all_profiles.insert(all_profiles.end(), profiles_t1.begin(), profiles_t1.end());
  atoms::write_profiles_csv((dir / artifact::profiles).string(), all_profiles);
  const auto importance = atoms::atom_importance_change(profiles_t0, profiles_t1);
  atoms::write_importance_csv((dir / artifact::importance).string(), importance);

  const auto coordinates = atoms::pca_coordinates(dictionary);
  const auto layout = atoms::grid_layout(coordinates, config.layout_rows, config.layout_cols);
  atoms::write_grid_csv((dir / artifact::grid).string(), layout);
  atoms::write_atom_top_skills_csv((dir / artifact::top_skills).string(), embedding,
                                   dictionary, config.ksvd.top_skills);

  std::vector<std::string> outputs = {
      artifact::dictionary_header, artifact::dictionary_atoms, artifact::dictionary_codes,
      artifact::dictionary_skills, artifact::selection,        artifact::profiles,
      artifact::importance,        artifact::grid,             artifact::top_skills};
  std::vector<std::string> inputs = {snapshots_path,
                                     (embedding_dir / artifact::embedding_matrix).string()};
  if (!config.atom_labels_path.empty()) {
    const auto labels_path =
        require_user_input(config.atom_labels_path, "input.atom_labels");
    const auto labels = atoms::read_atom_labels_csv(labels_path, dictionary.atom_count);
    CsvWriter w((dir / artifact::labels).string(), {"atom_id", "label"});
    for (const auto& [atom, label] : labels) w.row({CsvWriter::cell(atom), label});
    outputs.push_back(artifact::labels);
    inputs.push_back(labels_path);
  }
  write_manifest(dir, Stage::atoms, config, inputs, outputs);
  return {Stage::atoms, dir.string(), outputs};
}

// Occupation-level dataset assembled for the strata correlations/regressions.
struct OccupationRow {
  std::string occupation;
  double change = 0.0;
  std::optional<double> zone;
  std::optional<double> hhi;
};

// A model that cannot be estimated on this corpus (too few complete rows,
// collinear or constant columns) is recorded as a note, not a failure.
void fit_model(std::vector<strata::RegressionFit>& fits, std::vector<std::string>& names,
               std::vector<std::string>& notes, const std::string& name,
               const strata::Design& design, const std::vector<double>& response,
               const std::vector<std::string>* fixed_effect = nullptr) {
  try {
    fits.push_back(strata::ols_fit(design, response, fixed_effect));
    names.push_back(name);
  } catch (const SingularDesignError& e) {
    notes.push_back("model " + name + " skipped: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    notes.push_back("model " + name + " skipped: " + std::string(e.what()));
  } catch (const DomainError& e) {
    notes.push_back("model " + name + " skipped: " + std::string(e.what()));
  }
}

StageResult run_strata(const PipelineConfig& config) {
  const auto corpus_dir = stage_dir(config, Stage::ingest);
  const auto embedding_dir = stage_dir(config, Stage::train);
  const auto drift_dir = stage_dir(config, Stage::drift);
  const auto postings_path =
      require_artifact(corpus_dir / artifact::postings, "ingest");
  const auto snapshots_path =
      require_artifact(corpus_dir / artifact::snapshots, "ingest");
  require_artifact(embedding_dir / artifact::embedding_header, "train");
  const auto changes_path = require_artifact(drift_dir / artifact::changes, "drift");
  const auto dir = stage_dir(config, Stage::strata);
  fs::create_directories(dir);

  const auto postings = corpus::parse_postings_file(postings_path).postings;
  const auto snapshots = corpus::read_snapshots_csv(snapshots_path);
  const auto embedding = embed::load_embedding(embedding_dir.string());
  const auto changes = drift::read_change_reports_csv(changes_path);
  const auto years = config.years();
  std::set<std::string> active;
  for (const auto& s : snapshots) active.insert(s.occupation);

  std::vector<std::string> inputs = {postings_path, snapshots_path,
                                     (embedding_dir / artifact::embedding_matrix).string(),
                                     changes_path};
  std::vector<std::string> outputs;

  // Vector change recomputed inside each market/employer size stratum.
  const auto flags = strata::size_flags(postings, years, config.size_thresholds);
  const auto subsets = strata::stratify_by_size(postings, years, config.size_thresholds);
  std::vector<strata::StratifiedChange> stratified;
  for (const auto& subset : subsets) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& p : subset.postings) {
      if (!active.count(p.occupation)) continue;
      if (p.year == config.year_t0) counts[p.occupation].first++;
      if (p.year == config.year_t1) counts[p.occupation].second++;
    }
    for (const auto& [occupation, n] : counts) {
      if (n.first == 0 || n.second == 0) continue;
      const auto s0 = corpus::build_snapshot(subset.postings, occupation, config.year_t0,
                                             config.core_quantile);
      const auto s1 = corpus::build_snapshot(subset.postings, occupation, config.year_t1,
                                             config.core_quantile);
      const auto v0 = drift::occupation_vector(s0, embedding, config.weight_mode,
                                               config.scope);
      const auto v1 = drift::occupation_vector(s1, embedding, config.weight_mode,
                                               config.scope);
      strata::StratifiedChange row;
      row.occupation = occupation;
      row.market_class = subset.market_class;
      row.employer_class = subset.employer_class;
      row.vector_change = drift::vector_change(v0, v1);
      row.n_ads_t0 = s0.n_ads;
      row.n_ads_t1 = s1.n_ads;
      stratified.push_back(row);
    }
  }
  strata::write_stratified_changes_csv((dir / artifact::stratified).string(), stratified);
  outputs.push_back(artifact::stratified);

  // Employer concentration per occupation-market-year cell, then averaged per
  // occupation within large and small markets.
  const auto cells = strata::concentration_cells(postings, years);
  strata::write_concentration_csv((dir / artifact::hhi).string(), cells);
  outputs.push_back(artifact::hhi);
  const auto occupation_hhi =
      strata::occupation_concentration(cells, flags.large_markets);
  strata::write_occupation_concentration_csv((dir / artifact::hhi_occupation).string(),
                                             occupation_hhi);
  outputs.push_back(artifact::hhi_occupation);

  // Education cost of newly-added core skills.
  const auto education = strata::education_stats(postings, years);
  const auto shifts = strata::education_cost_shifts(year_slice(snapshots, config.year_t0),
                                                    year_slice(snapshots, config.year_t1),
                                                    education, config.education);
  strata::write_education_csv((dir / artifact::education).string(), shifts);
  outputs.push_back(artifact::education);

  std::map<std::string, double> change_by_occupation;
  for (const auto& report : changes) {
    change_by_occupation[report.occupation] = report.vector_change;
  }

  std::map<std::string, int> zones;
  if (!config.job_zones_path.empty()) {
    zones = strata::read_job_zones_csv(
        require_user_input(config.job_zones_path, "input.job_zones"));
    inputs.push_back(config.job_zones_path);
  }

  // Demographic dominance and the change-by-band heatmap.
  if (!config.demographics_path.empty()) {
    const auto demo_path =
        require_user_input(config.demographics_path, "input.demographics");
    const auto shares = strata::read_demographics_csv(demo_path);
    const auto dominance = strata::demographic_dominance(shares, config.dominance);
    strata::write_dominance_csv((dir / artifact::dominance).string(), dominance);
    outputs.push_back(artifact::dominance);
    inputs.push_back(demo_path);
    if (!zones.empty()) {
      std::map<std::string, double> level;
      for (const auto& [occupation, zone] : zones) level[occupation] = double(zone);
      const auto heatmap = strata::demographic_heatmap(dominance, change_by_occupation,
                                                       level, config.heatmap_bands);
      strata::write_heatmap_csv((dir / artifact::heatmap).string(), heatmap);
      outputs.push_back(artifact::heatmap);
    }
  }

  // Occupation-level dataset shared by the correlations and regressions.
  std::map<std::string, std::optional<double>> hhi_by_occupation;
  for (const auto& row : occupation_hhi) {
    hhi_by_occupation[row.occupation] = row.large_market_hhi;
  }
  std::vector<OccupationRow> rows;
  for (const auto& report : changes) {
    OccupationRow row;
    row.occupation = report.occupation;
    row.change = report.vector_change;
    const auto zone = zones.find(report.occupation);
    if (zone != zones.end()) row.zone = double(zone->second);
    const auto hhi = hhi_by_occupation.find(report.occupation);
    if (hhi != hhi_by_occupation.end() && hhi->second) row.hhi = *hhi->second;
    rows.push_back(row);
  }

  std::vector<strata::NamedCorrelation> correlations;
  const auto add_correlation = [&correlations](const std::string& label,
                                               strata::CorrelationMethod method,
                                               const std::vector<double>& x,
                                               const std::vector<double>& y) {
    if (x.size() < 3) return;
    try {
      correlations.push_back({label, method, strata::correlate(x, y, method)});
    } catch (const DomainError&) {
      // A constant column has no defined correlation; omit the row.
    }
  };
  {
    std::vector<double> change, zone;
    for (const auto& row : rows) {
      if (!row.zone) continue;
      change.push_back(row.change);
      zone.push_back(*row.zone);
    }
    add_correlation("vector_change_vs_job_zone", strata::CorrelationMethod::pearson,
                    change, zone);
    add_correlation("vector_change_vs_job_zone", strata::CorrelationMethod::spearman,
                    change, zone);
  }
  {
    std::vector<double> shift, change;
    for (const auto& s : shifts) {
      if (!s.shift) continue;
      const auto it = change_by_occupation.find(s.occupation);
      if (it == change_by_occupation.end()) continue;
      shift.push_back(*s.shift);
      change.push_back(it->second);
    }
    add_correlation("education_shift_vs_vector_change", strata::CorrelationMethod::pearson,
                    shift, change);
  }

  // Regression models over the occupation dataset, then the mobility
  // validation pair when transition counts are available.
  std::vector<strata::RegressionFit> fits;
  std::vector<std::string> model_names;
  std::vector<std::string> notes;
  {
    strata::Design design;
    design.names = {"job_zone"};
    design.columns = {{}};
    std::vector<double> response;
    for (const auto& row : rows) {
      if (!row.zone) continue;
      design.columns[0].push_back(*row.zone);
      response.push_back(row.change);
    }
    fit_model(fits, model_names, notes, "change_on_zone", design, response);
  }
  {
    strata::Design design;
    design.names = {"large_market_hhi", "large_market_hhi_sq"};
    design.columns = {{}, {}};
    std::vector<double> response;
    for (const auto& row : rows) {
      if (!row.hhi) continue;
      design.columns[0].push_back(*row.hhi);
      design.columns[1].push_back(*row.hhi * *row.hhi);
      response.push_back(row.change);
    }
    fit_model(fits, model_names, notes, "change_on_concentration", design, response);
  }
  {
    strata::Design design;
    design.names = {"job_zone", "large_market_hhi", "large_market_hhi_sq"};
    design.columns = {{}, {}, {}};
    std::vector<double> response;
    std::vector<std::string> groups;  // SOC major group fixed effects
    for (const auto& row : rows) {
      if (!row.zone || !row.hhi) continue;
      design.columns[0].push_back(*row.zone);
      design.columns[1].push_back(*row.hhi);
      design.columns[2].push_back(*row.hhi * *row.hhi);
      response.push_back(row.change);
      groups.push_back(row.occupation.substr(0, 2));
    }
    fit_model(fits, model_names, notes, "change_full_fe", design, response, &groups);
  }
  const std::size_t change_models = fits.size();

  if (!config.mobility_path.empty()) {
    const auto mobility_path =
        require_user_input(config.mobility_path, "input.mobility");
    const auto pairs = strata::read_mobility_csv(mobility_path);
    inputs.push_back(mobility_path);
    std::map<std::string, double> popularity;
    for (const auto& report : changes) {
      popularity[report.occupation] = double(report.n_ads_t0 + report.n_ads_t1);
    }
    const auto similarity = drift::occupation_similarity_matrix(
        year_slice(snapshots, config.year_t0), embedding, config.weight_mode, config.scope);
    const auto validation = strata::mobility_validation(similarity, pairs, popularity);
    correlations.push_back({"skill_similarity_vs_log_transitions",
                            strata::CorrelationMethod::pearson,
                            validation.similarity_correlation});
    fits.push_back(validation.baseline);
    model_names.push_back("mobility_baseline");
    fits.push_back(validation.with_similarity);
    model_names.push_back("mobility_with_similarity");
  }

  strata::write_correlations_csv((dir / artifact::correlations).string(), correlations);
  outputs.push_back(artifact::correlations);
  strata::write_regressions_csv((dir / artifact::regressions).string(), fits, model_names);
  outputs.push_back(artifact::regressions);

  std::ostringstream tables;
  if (change_models > 0) {
    tables << strata::format_regression_table(
        {fits.begin(), fits.begin() + std::ptrdiff_t(change_models)},
        {model_names.begin(), model_names.begin() + std::ptrdiff_t(change_models)});
  }
  if (fits.size() > change_models) {
    if (change_models > 0) tables << "\n";
    tables << strata::format_regression_table(
        {fits.begin() + std::ptrdiff_t(change_models), fits.end()},
        {model_names.begin() + std::ptrdiff_t(change_models), model_names.end()});
  }
  for (const auto& note : notes) tables << note << "\n";
  {
    const auto path = dir / artifact::regressions_text;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << tables.str();
  }
  outputs.push_back(artifact::regressions_text);

  write_manifest(dir, Stage::strata, config, inputs, outputs);
  return {Stage::strata, dir.string(), outputs};
}

}  // namespace

synthlab::SynthSpec PipelineConfig::synth_spec() const {
  synthlab::SynthSpec spec;
  if (synth_preset == "desk") {
    spec = synthlab::SynthSpec::desk();
  } else if (synth_preset == "paired_small") {
    spec = synthlab::SynthSpec::paired_small();
  } else {
    throw ConfigError("synth.preset: unknown value \"" + synth_preset +
                      "\" (expected one of: desk, paired_small)");
  }
  spec.seed = synth_seed;
  return spec;
}

const std::vector<Stage>& chain_stages() {
  static const std::vector<Stage> stages = {Stage::ingest, Stage::train, Stage::graph,
                                            Stage::drift, Stage::atoms, Stage::strata};
  return stages;
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::synth: return "synth";
    case Stage::ingest: return "ingest";
    case Stage::train: return "train";
    case Stage::graph: return "graph";
    case Stage::drift: return "drift";
    case Stage::atoms: return "atoms";
    case Stage::strata: return "strata";
  }
  return "unknown";
}

Stage parse_stage(const std::string& name) {
  for (Stage stage : {Stage::synth, Stage::ingest, Stage::train, Stage::graph, Stage::drift,
                      Stage::atoms, Stage::strata}) {
    if (name == to_string(stage)) return stage;
  }
  throw ConfigError("unknown stage: " + name +
                    " (expected synth, ingest, train, graph, drift, atoms, or strata)");
}

PipelineConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  return decode_with_overrides(std::move(doc), overrides);
}

PipelineConfig config_from_json_text(const std::string& text,
                                     const std::vector<std::string>& overrides) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ConfigError("config text is not valid JSON");
  return decode_with_overrides(std::move(doc), overrides);
}

std::string config_to_json(const PipelineConfig& config) {
  return config_document(config).dump();
}

std::string config_hash(const PipelineConfig& config) {
  return sha256_hex(config_to_json(config));
}

std::string default_config_json() {
  return config_document(PipelineConfig{}).dump(2) + "\n";
}

StageResult run_stage(const PipelineConfig& config, Stage stage) {
  switch (stage) {
    case Stage::synth: return run_synth(config);
    case Stage::ingest: return run_ingest(config);
    case Stage::train: return run_train(config);
    case Stage::graph: return run_graph(config);
    case Stage::drift: return run_drift(config);
    case Stage::atoms: return run_atoms(config);
    case Stage::strata: return run_strata(config);
  }
  throw ConfigError("unknown stage");
}

std::vector<StageResult> run_all(const PipelineConfig& config) {
  std::vector<StageResult> results;
  for (Stage stage : chain_stages()) results.push_back(run_stage(config, stage));
  return results;
}

}  // namespace skillscape::pipeline
