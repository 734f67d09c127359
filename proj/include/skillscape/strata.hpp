#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skillscape/corpus.hpp"
#include "skillscape/drift.hpp"

namespace skillscape::strata {

// ---------------------------------------------------------------------------
// Local labor markets

// A 0.1-degree latitude/longitude cell. Coordinates are rounded half away
// from zero to tenths, stored as integer deci-degrees.
struct MarketKey {
  int lat_tenths = 0;
  int lon_tenths = 0;

  static MarketKey of(double lat, double lon);
  double lat() const { return lat_tenths / 10.0; }
  double lon() const { return lon_tenths / 10.0; }
  // "418/-876" — integer deci-degrees, stable for use as a map key.
  std::string label() const;

  auto operator<=>(const MarketKey&) const = default;
};

// Posting count per market cell (postings of all years pooled).
std::map<MarketKey, std::size_t> bin_locations(
    const std::vector<corpus::JobPosting>& postings);

// Posting count per market cell and year.
std::map<MarketKey, std::map<int, std::size_t>> bin_locations_by_year(
    const std::vector<corpus::JobPosting>& postings);

// ---------------------------------------------------------------------------
// Size stratification

enum class SizeClass { small = 0, large = 1 };

const char* to_string(SizeClass c);  // "small" / "large"

struct SizeThresholds {
  // A market is large when its annual post count reaches the top decile of
  // markets (with >= 1 post) in every listed year.
  double market_top_share = 0.10;
  // An employer is large when it posts strictly more than this many ads in
  // every listed year. Unknown (empty) employers are always small.
  std::size_t employer_min_posts = 10;
};

struct SizeFlags {
  std::set<MarketKey> large_markets;
  std::set<std::string> large_employers;
};

// Throws ConfigError when years is empty.
SizeFlags size_flags(const std::vector<corpus::JobPosting>& postings,
                     const std::vector<int>& years, const SizeThresholds& thresholds = {});

struct StratifiedSample {
  SizeClass market_class = SizeClass::small;
  SizeClass employer_class = SizeClass::small;
  std::vector<corpus::JobPosting> postings;

  // "large-market small-employer"
  std::string label() const;
};

// Partitions the corpus into the four market-size x employer-size subsets,
// ordered (large,large), (large,small), (small,large), (small,small).
std::array<StratifiedSample, 4> stratify_by_size(
    const std::vector<corpus::JobPosting>& postings, const std::vector<int>& years,
    const SizeThresholds& thresholds = {});

// One row of the concatenated change dataset: an occupation's vector change
// measured within one of the four subsets.
struct StratifiedChange {
  std::string occupation;
  SizeClass market_class = SizeClass::small;
  SizeClass employer_class = SizeClass::small;
  double vector_change = 0.0;
  std::size_t n_ads_t0 = 0;
  std::size_t n_ads_t1 = 0;
};

void write_stratified_changes_csv(const std::string& path,
                                  const std::vector<StratifiedChange>& rows);
std::vector<StratifiedChange> read_stratified_changes_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Employer concentration

// Herfindahl-Hirschman index of employer posting shares inside one
// occupation-market-year cell. Throws NotFoundError when the cell is empty.
double employer_concentration(const std::vector<corpus::JobPosting>& postings,
                              const std::string& occupation, const MarketKey& market,
                              int year);

struct ConcentrationCell {
  std::string occupation;
  MarketKey market;
  int year = 0;
  std::size_t n_ads = 0;
  std::size_t n_employers = 0;  // distinct names; unknown employers pool as one
  double hhi = 0.0;
};

// Every populated occupation-market-year cell, ordered by
// (occupation, market, year).
std::vector<ConcentrationCell> concentration_cells(
    const std::vector<corpus::JobPosting>& postings, const std::vector<int>& years);

// Mean cell HHI per occupation and market-size class: cells of the same
// occupation-market pair are first averaged across years, then across
// markets of the class.
struct OccupationConcentration {
  std::string occupation;
  std::optional<double> large_market_hhi;
  std::optional<double> small_market_hhi;
};

std::vector<OccupationConcentration> occupation_concentration(
    const std::vector<ConcentrationCell>& cells, const std::set<MarketKey>& large_markets);

void write_concentration_csv(const std::string& path,
                             const std::vector<ConcentrationCell>& cells);
void write_occupation_concentration_csv(const std::string& path,
                                        const std::vector<OccupationConcentration>& rows);

// ---------------------------------------------------------------------------
// Demographics

struct DemographicShare {
  std::string occupation;
  std::string group;
  double occupation_share = 0.0;   // share of the occupation's workers in the group
  double labor_force_share = 0.0;  // share of the whole labor force in the group
};

struct DominanceConfig {
  double threshold = 1.5;  // dominant when the (rounded) ratio reaches this
  int round_decimals = 1;  // ratios are rounded before the comparison
};

struct DominanceRecord {
  std::string occupation;
  std::string group;
  double ratio = 0.0;  // rounded occupation share over labor-force share
  bool dominant = false;
  bool skipped = false;  // zero labor-force share
  std::string note;
};

// Throws DataError when a share falls outside [0, 1]. Groups with a zero
// labor-force share are skipped with a note instead of dividing by zero.
std::vector<DominanceRecord> demographic_dominance(
    const std::vector<DemographicShare>& shares, const DominanceConfig& config = {});

// occupation -> dominant groups, skipped rows excluded.
std::map<std::string, std::set<std::string>> dominant_groups(
    const std::vector<DominanceRecord>& records);

// Missing file -> MissingArtifactError; malformed rows -> DataError.
std::vector<DemographicShare> read_demographics_csv(const std::string& path);
void write_dominance_csv(const std::string& path,
                         const std::vector<DominanceRecord>& records);

// Mean change per (dominant group, skill band). Occupations are split into
// `bands` equal-size bands by ascending skill level (band 1 = lowest).
struct HeatmapCell {
  std::string group;
  int band = 0;
  double mean_change = 0.0;
  std::size_t occupations = 0;
};

std::vector<HeatmapCell> demographic_heatmap(
    const std::vector<DominanceRecord>& records,
    const std::map<std::string, double>& change_by_occupation,
    const std::map<std::string, double>& skill_level_by_occupation, int bands = 5);

void write_heatmap_csv(const std::string& path, const std::vector<HeatmapCell>& cells);

// ---------------------------------------------------------------------------
// Education cost

struct EducationStats {
  std::string occupation;
  int year = 0;
  std::size_t n_ads = 0;
  std::size_t n_with_education = 0;
  double mean_years = 0.0;  // over ads reporting education; 0 when none do
};

// Per occupation-year education means, ordered by (occupation, year).
std::vector<EducationStats> education_stats(
    const std::vector<corpus::JobPosting>& postings, const std::vector<int>& years);

struct EducationConfig {
  // Cells where fewer than this fraction of ads report education are treated
  // as having no usable education signal.
  double min_coverage = 0.10;
  // Weight occupations by how many of their ads list the skill, instead of
  // counting every demanding occupation once.
  bool volume_weighted = false;
};

struct EducationShift {
  std::string occupation;
  std::optional<double> shift;  // absent when undefined, never "0 by default"
  std::size_t added_core_skills = 0;
  std::size_t skills_with_data = 0;
  std::string note;
};

// For each occupation present in both snapshot years: the mean, over core
// skills newly added at t1, of the skill's required education at t1 (the
// average education of occupations demanding the skill at t1), minus the
// focal occupation's mean education at t0.
std::vector<EducationShift> education_cost_shifts(
    const std::vector<corpus::OccupationYearSnapshot>& snapshots_t0,
    const std::vector<corpus::OccupationYearSnapshot>& snapshots_t1,
    const std::vector<EducationStats>& stats, const EducationConfig& config = {});

void write_education_csv(const std::string& path,
                         const std::vector<EducationShift>& rows);

// ---------------------------------------------------------------------------
// Correlation

enum class CorrelationMethod { pearson, spearman };

struct Correlation {
  double coefficient = 0.0;
  double p_value = 1.0;  // two-sided, Student-t approximation
  std::size_t n = 0;
};

// Throws ConfigError when the series differ in length or hold fewer than
// three points, DataError on non-finite values, DomainError when either
// series has zero variance.
Correlation correlate(const std::vector<double>& x, const std::vector<double>& y,
                      CorrelationMethod method);

struct NamedCorrelation {
  std::string label;
  CorrelationMethod method = CorrelationMethod::pearson;
  Correlation result;
};

void write_correlations_csv(const std::string& path,
                            const std::vector<NamedCorrelation>& rows);

// ---------------------------------------------------------------------------
// Regression

// Named regressor columns; the intercept is implicit (and absorbed by the
// within transformation when fixed effects are used).
struct Design {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
};

struct RegressionFit {
  std::vector<std::string> names;  // "(intercept)" first when present
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_values;
  std::vector<double> p_values;
  double r_squared = 0.0;
  double adjusted_r_squared = 0.0;
  double sigma = 0.0;  // residual standard error
  std::size_t n = 0;
  std::size_t parameters = 0;  // intercept/absorbed groups included
  bool fixed_effects = false;
  std::size_t groups = 0;
};

// Classical OLS. With `fixed_effect` (one group label per observation) the
// intercept and group effects are absorbed by within-group demeaning;
// R-squared is still measured about the grand mean of the response, so it
// includes what the group effects explain. Throws ConfigError on shape
// errors or too few observations, DataError on non-finite input, and
// SingularDesignError naming the offending columns when the design is rank
// deficient after any demeaning.
RegressionFit ols_fit(const Design& design, const std::vector<double>& response,
                      const std::vector<std::string>* fixed_effect = nullptr);

// Aligned text table, models side by side: coefficient rows with standard
// errors in parentheses, then N / R² / adjusted R² / FE flags.
std::string format_regression_table(const std::vector<RegressionFit>& fits,
                                    const std::vector<std::string>& model_names);

void write_regressions_csv(const std::string& path,
                           const std::vector<RegressionFit>& fits,
                           const std::vector<std::string>& model_names);

// ---------------------------------------------------------------------------
// Worker mobility validation

struct MobilityPair {
  std::string occ_a;
  std::string occ_b;
  double transitions = 0.0;
};

// Missing file -> MissingArtifactError; malformed rows -> DataError.
std::vector<MobilityPair> read_mobility_csv(const std::string& path);

struct MobilityValidation {
  Correlation similarity_correlation;  // cosine similarity vs log transitions
  RegressionFit baseline;              // log transitions ~ log popularity product
  RegressionFit with_similarity;       // ... + skill similarity
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // unknown occupation or non-positive inputs
};

// `popularity` is a positive per-occupation volume measure (posting counts).
// Throws ConfigError when fewer than three usable pairs remain.
MobilityValidation mobility_validation(const drift::SimilarityMatrix& similarity,
                                       const std::vector<MobilityPair>& pairs,
                                       const std::map<std::string, double>& popularity);

// Missing file -> MissingArtifactError; malformed rows -> DataError.
// occupation -> O*NET-style zone (1..5).
std::map<std::string, int> read_job_zones_csv(const std::string& path);

}  // namespace skillscape::strata
