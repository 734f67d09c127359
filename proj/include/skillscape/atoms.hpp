#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skillscape/corpus.hpp"
#include "skillscape/embed.hpp"

namespace skillscape::atoms {

// Sparse combination of dictionary atoms representing one skill vector.
struct SparseCode {
  std::vector<std::pair<int, double>> entries;  // (atom, coefficient), atom asc
  bool zero_input = false;  // the encoded vector was all zeros

  double coefficient(int atom) const;
};

struct AtomDictionary {
  int dimension = 0;
  int atom_count = 0;
  int sparsity = 0;                  // max non-zeros per code
  std::vector<double> atoms;         // atom_count * dimension, unit rows
  std::vector<std::string> skills;   // encoding order
  std::vector<SparseCode> codes;     // aligned with skills
  double r_squared = 0.0;
  double topic_diversity = 0.0;

  const double* atom(int j) const {
    return atoms.data() + std::size_t(j) * std::size_t(dimension);
  }
  std::optional<int> skill_id(const std::string& skill) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, int> index_;
};

struct KsvdConfig {
  int atom_count = 210;
  int sparsity = 5;
  int iterations = 30;
  std::uint64_t seed = 1;
  int top_skills = 25;  // neighbourhood size for topic diversity
};

// Orthogonal matching pursuit: greedily pick the atom most correlated with
// the residual (ties to the lowest index), refit all selected coefficients by
// least squares, stop after max_entries picks or when the residual is
// orthogonal to every atom. A zero vector encodes to an empty, flagged code.
SparseCode sparse_encode(const float* vector, int dimension,
                         const AtomDictionary& dictionary, int max_entries);

struct KsvdDiagnostics {
  // Squared Frobenius reconstruction error around each iteration's
  // dictionary-update sweep (supports fixed, so after <= before holds).
  std::vector<double> error_before_update;
  std::vector<double> error_after_update;
  std::vector<double> error_after_encode;
  std::size_t reseeded_atoms = 0;
};

// Alternating sparse coding / per-atom rank-one dictionary updates over the
// embedding rows. Unused atoms are re-seeded from the worst-reconstructed
// skills; after the final sweep each atom is flipped so the mean coefficient
// across its users is positive. Deterministic in config.seed.
AtomDictionary ksvd_learn(const embed::EmbeddingMatrix& embedding,
                          const KsvdConfig& config,
                          KsvdDiagnostics* diagnostics = nullptr);

// Fraction of total variance about the mean skill vector captured by the
// sparse reconstruction.
double reconstruction_r_squared(const embed::EmbeddingMatrix& embedding,
                                const AtomDictionary& dictionary);

// Distinct skills in the union of every atom's top-n cosine neighbourhoods,
// divided by n * atom_count.
double topic_diversity(const embed::EmbeddingMatrix& embedding,
                       const AtomDictionary& dictionary, int top_n = 25);

struct SelectionEntry {
  int atom_count = 0;
  double r_squared = 0.0;
  double diversity = 0.0;
  double score = 0.0;   // mean of the min-max normalized columns
  bool selected = false;
  bool skipped = false;
  std::string warning;
};

struct SelectionResult {
  int best_atom_count = 0;
  std::vector<SelectionEntry> table;
};

// Learns one dictionary per grid entry and scores the balance of fit and
// diversity; ties prefer the smaller atom count. Entries larger than the
// vocabulary are skipped with a warning; an empty or fully skipped grid is a
// ConfigError.
SelectionResult select_atom_count(const embed::EmbeddingMatrix& embedding,
                                  const std::vector<int>& grid,
                                  const KsvdConfig& base_config);

struct OccupationAtomProfile {
  std::string occupation;
  int year = 0;
  std::vector<double> weights;  // size atom_count, non-negative, sums to 1
};

// Sums the core skills' codes atom-wise, then normalizes by the sum of
// absolute atom totals so the profile is a distribution. Throws
// MissingSkillError for un-encoded core skills, DegenerateProfileError when
// every atom total is zero.
OccupationAtomProfile occupation_atom_weights(const corpus::OccupationYearSnapshot& snapshot,
                                              const AtomDictionary& dictionary);

struct AtomImportanceSeries {
  int year_t0 = 0;
  int year_t1 = 0;
  std::vector<double> importance_t0;  // size atom_count; sums to #occupations
  std::vector<double> importance_t1;
  std::vector<double> change;         // t1 - t0
  std::vector<std::string> mismatched_occupations;  // present in only one year
};

// Per-atom importance (sum of profile weights over occupations) at both
// times. Occupation-set mismatches are reported, not fatal; empty inputs are
// a ConfigError.
AtomImportanceSeries atom_importance_change(const std::vector<OccupationAtomProfile>& at_t0,
                                            const std::vector<OccupationAtomProfile>& at_t1);

// Top-n skills by cosine between skill vector and atom vector, ties by name.
// Throws ConfigError for an invalid atom index or n < 1.
std::vector<std::pair<std::string, double>> atom_top_skills(
    const embed::EmbeddingMatrix& embedding, const AtomDictionary& dictionary,
    int atom, int n = 25);

// Coordinates of each atom on the top-2 principal directions of the centered
// atom matrix. Component signs are fixed so the largest-magnitude loading of
// each direction is positive.
std::vector<std::pair<double, double>> pca_coordinates(const AtomDictionary& dictionary);

struct GridAssignment {
  int rows = 0;
  int cols = 0;
  std::vector<int> cell_of_atom;  // atom -> row-major cell index
  std::vector<int> atom_of_cell;  // cell -> atom or -1
};

// Row-major sweep over a rows x cols lattice spanning the coordinate bounding
// box; each cell claims the nearest unassigned atom (ties to the lowest atom
// index) until all atoms are placed. Throws ConfigError when atoms outnumber
// cells or any coordinate is not finite.
GridAssignment grid_layout(const std::vector<std::pair<double, double>>& coordinates,
                           int rows = 14, int cols = 15);

// Artifact layout inside `dir`: dictionary.json header, atoms.f32 row-major
// float32 atom matrix, codes.csv (skill_id, atom_id, coefficient) and
// skills.txt (one skill per line, id order).
void save_dictionary(const std::string& dir, const AtomDictionary& dictionary,
                     std::uint64_t seed, const std::string& config_hash);
AtomDictionary load_dictionary(const std::string& dir);

// Optional two-column CSV (atom_id, label) with human judgements about atoms.
// Throws DataError for malformed rows or out-of-range atom ids.
std::map<int, std::string> read_atom_labels_csv(const std::string& path, int atom_count);

void write_selection_csv(const std::string& path, const SelectionResult& result);
void write_profiles_csv(const std::string& path,
                        const std::vector<OccupationAtomProfile>& profiles);
void write_importance_csv(const std::string& path, const AtomImportanceSeries& series);
void write_grid_csv(const std::string& path, const GridAssignment& grid);
void write_atom_top_skills_csv(const std::string& path,
                               const embed::EmbeddingMatrix& embedding,
                               const AtomDictionary& dictionary, int top_n = 25);

}  // namespace skillscape::atoms
