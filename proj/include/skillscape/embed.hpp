#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skillscape/corpus.hpp"

namespace skillscape::embed {

struct TrainingConfig {
  int dimension = 200;
  int epochs = 5;
  int negatives = 5;              // noise samples per positive pair
  double lr_start = 0.025;
  double lr_end = 0.0001;         // linear decay endpoint
  double noise_exponent = 0.75;   // unigram^exponent noise distribution
  double subsample_threshold = 1e-4;  // <= 0 disables frequent-skill dropout
  std::size_t max_pairs_per_posting = 200;
  std::uint64_t seed = 1;
  int workers = 1;                // >1 trains lock-free on shared weights
  std::size_t validation_pairs = 10000;
};

// Dense skill vectors in vocabulary order. `input` rows answer all queries;
// `output` holds the context vectors and is only populated during training.
struct EmbeddingMatrix {
  int dimension = 0;
  std::vector<std::string> skills;
  std::vector<float> input;   // skills.size() * dimension, row-major
  std::vector<float> output;  // empty once persisted/loaded

  std::size_t size() const { return skills.size(); }
  std::optional<int> id(const std::string& skill) const;
  const float* row(int id) const {
    return input.data() + std::size_t(id) * std::size_t(dimension);
  }
  float* row(int id) {
    return input.data() + std::size_t(id) * std::size_t(dimension);
  }
  // True when every component is finite.
  bool finite() const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, int> index_;
};

using SkillPair = std::pair<int, int>;  // (target, context) vocabulary ids

// Whole-posting bag context: every ordered pair of distinct surviving skills,
// uniformly downsampled to max_pairs_per_posting when a posting exceeds it.
// Frequent-skill subsampling drops occurrences before pairing.
std::vector<SkillPair> build_training_pairs(const std::vector<corpus::JobPosting>& postings,
                                            const corpus::SkillVocabulary& vocab,
                                            const TrainingConfig& config);

struct TrainingDiagnostics {
  // Mean negative-sampling loss on a fixed validation set; entry 0 is the
  // pre-training value, then one entry per completed epoch.
  std::vector<double> validation_loss;
  std::size_t pair_count = 0;
  std::size_t updates = 0;
};

// Skip-gram with negative sampling over the pair stream. Deterministic for
// workers == 1; with more workers updates race benignly on the shared rows.
EmbeddingMatrix train_skipgram(const std::vector<SkillPair>& pairs,
                               const corpus::SkillVocabulary& vocab,
                               const TrainingConfig& config,
                               TrainingDiagnostics* diagnostics = nullptr);

// Throws DomainError when either vector has zero norm.
double cosine_similarity(const float* u, const float* v, int dimension);
double cosine_similarity(const EmbeddingMatrix& m, const std::string& a,
                         const std::string& b);

// Top-n neighbours by cosine against the query's input vector, query itself
// excluded, ties broken by skill string. Throws NotFoundError for unknown
// skills, ConfigError for n < 1.
std::vector<std::pair<std::string, double>> nearest_skills(const EmbeddingMatrix& m,
                                                           const std::string& skill,
                                                           std::size_t n);

// Artifact layout inside `dir`: embedding.json header, embedding.f32 with
// little-endian float32 rows in vocabulary order, vocab.txt one skill per
// line. The output matrix is not persisted.
void save_embedding(const std::string& dir, const EmbeddingMatrix& m,
                    std::uint64_t seed, const std::string& config_hash);
EmbeddingMatrix load_embedding(const std::string& dir);

// "skill v1 .. vd" per line, for interoperability with other tooling.
void export_embedding_text(const std::string& path, const EmbeddingMatrix& m);

}  // namespace skillscape::embed
