#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillscape/corpus.hpp"
#include "skillscape/embed.hpp"

namespace skillscape::drift {

enum class WeightMode { uniform, frequency };
enum class ShareBasis { ad_share, occurrence_share };
// Multiplier applied to the raw share change: ratio of (skill occurrences per
// posting) between the two years, in the stated direction.
enum class ReweightDirection { t0_over_t1, t1_over_t0 };

// Which of a snapshot's skills contribute to its occupation vector.
struct SkillScope {
  enum class Kind { core, top_fraction, all };
  Kind kind = Kind::core;
  double fraction = 1.0;  // only read for top_fraction

  static SkillScope core() { return {Kind::core, 1.0}; }
  static SkillScope top_fraction(double f) { return {Kind::top_fraction, f}; }
  static SkillScope all() { return {Kind::all, 1.0}; }
};

// Skills selected by the scope, ordered by (share desc, name asc). `core`
// returns the snapshot's precomputed core set; `top_fraction` re-ranks with
// the same quantile rule; `all` returns every skill the snapshot lists.
// Throws ConfigError when a top_fraction is outside (0, 1].
std::vector<std::string> scoped_skills(const corpus::OccupationYearSnapshot& snapshot,
                                       const SkillScope& scope);

struct OccupationVector {
  std::string occupation;
  int year = 0;
  WeightMode mode = WeightMode::uniform;
  std::vector<double> values;
  std::vector<std::string> skills;  // contributing skills, share-ranked

  double norm() const;
};

// Uniform mode averages the scoped skills' vectors; frequency mode weights
// each by its occurrence share within the scoped set (weights sum to one).
// Throws MissingSkillError listing any scoped skills absent from the
// embedding, DomainError when the weighted combination has zero norm.
OccupationVector occupation_vector(const corpus::OccupationYearSnapshot& snapshot,
                                   const embed::EmbeddingMatrix& embedding,
                                   WeightMode mode = WeightMode::uniform,
                                   const SkillScope& scope = SkillScope::core());

// One minus the cosine similarity of the two vectors; range [0, 2], zero iff
// the vectors are positively parallel. Throws ConfigError when the inputs
// describe different occupations, DomainError on zero-norm vectors.
double vector_change(const OccupationVector& from, const OccupationVector& to);

struct DnChange {
  double raw = 0.0;
  // Absent when the reweighting ratio is undefined (no skill occurrences in
  // the denominator year).
  std::optional<double> reweighted;
};

// Total absolute share change over the union of all skills either snapshot
// lists. Throws NotFoundError when either snapshot has no postings,
// ConfigError when the snapshots describe different occupations.
DnChange dn_change(const corpus::OccupationYearSnapshot& t0,
                   const corpus::OccupationYearSnapshot& t1,
                   ShareBasis basis = ShareBasis::ad_share,
                   ReweightDirection direction = ReweightDirection::t0_over_t1);

// Total absolute change of community occurrence shares: communities partition
// the skills, each year's occurrence counts are pooled per community and
// normalized by the year's total occurrences. Throws PartitionIncompleteError
// listing skills the partition does not cover, NotFoundError / ConfigError as
// dn_change.
double cluster_change(const corpus::OccupationYearSnapshot& t0,
                      const corpus::OccupationYearSnapshot& t1,
                      const std::map<std::string, int>& skill_community);

struct AttributionRecord {
  enum class Direction { added, removed };
  std::string occupation;
  std::string skill;
  Direction direction = Direction::added;
  double contribution = 0.0;
  // True when the counterfactual would empty a core set; contribution is then
  // meaningless and `note` explains the skip.
  bool skipped = false;
  std::string note;
};

// Contribution of each core-set entrant (added at t1) and leaver (removed
// since t0): |real vector change - change with that skill deleted from its
// year's core set|. The other skills keep their ranks; frequency weights are
// renormalized over the survivors. Sorted by contribution descending, then
// skill ascending; skipped records last.
std::vector<AttributionRecord> attribute_skill_contributions(
    const corpus::OccupationYearSnapshot& t0, const corpus::OccupationYearSnapshot& t1,
    const embed::EmbeddingMatrix& embedding, WeightMode mode = WeightMode::uniform);

struct ChangeReport {
  std::string occupation;
  int year_t0 = 0;
  int year_t1 = 0;
  double vector_change = 0.0;
  double dn_change = 0.0;
  std::optional<double> dn_reweighted;
  double cluster_change = 0.0;
  std::size_t n_ads_t0 = 0;
  std::size_t n_ads_t1 = 0;
};

// All three metrics for one occupation across a year pair. The vector metric
// follows `mode`/`scope`; the share metric follows `basis`/`direction`; the
// cluster metric always uses occurrence shares.
ChangeReport change_report(const corpus::OccupationYearSnapshot& t0,
                           const corpus::OccupationYearSnapshot& t1,
                           const embed::EmbeddingMatrix& embedding,
                           const std::map<std::string, int>& skill_community,
                           WeightMode mode = WeightMode::uniform,
                           const SkillScope& scope = SkillScope::core(),
                           ShareBasis basis = ShareBasis::ad_share,
                           ReweightDirection direction = ReweightDirection::t0_over_t1);

struct SimilarityMatrix {
  int year = 0;
  std::vector<std::string> occupations;  // sorted ascending
  std::vector<double> values;            // row-major, size n*n

  double at(std::size_t i, std::size_t j) const {
    return values[i * occupations.size() + j];
  }
};

// Pairwise cosine similarities between occupation vectors of one year.
// Diagonal is exactly 1. Throws ConfigError on mixed years or duplicate
// occupations, DataError when empty.
SimilarityMatrix occupation_similarity_matrix(
    const std::vector<corpus::OccupationYearSnapshot>& snapshots,
    const embed::EmbeddingMatrix& embedding, WeightMode mode = WeightMode::uniform,
    const SkillScope& scope = SkillScope::core());

void write_change_reports_csv(const std::string& path,
                              const std::vector<ChangeReport>& reports);
std::vector<ChangeReport> read_change_reports_csv(const std::string& path);

void write_attributions_csv(const std::string& path,
                            const std::vector<AttributionRecord>& records);

// Long form: one row per unordered pair (diagonal included).
void write_similarity_csv(const std::string& path, const SimilarityMatrix& matrix);

}  // namespace skillscape::drift
