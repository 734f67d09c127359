#include "skillscape/strata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"

namespace skillscape::strata {

namespace {

double parse_double(const std::string& field, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError("not a number in " + context + ": '" + field + "'");
  }
}

long parse_long(const std::string& field, const std::string& context) {
  try {
    std::size_t used = 0;
    const long v = std::stol(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw DataError("not an integer in " + context + ": '" + field + "'");
  }
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("missing input file: " + path);
  }
}

// Two-sided p-value of a t statistic on `dof` degrees of freedom.
double two_sided_p(double t, std::size_t dof) {
  if (!std::isfinite(t)) return 0.0;
  const boost::math::students_t dist{double(dof)};
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double shared = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

// ---------------------------------------------------------------------------
// Markets

MarketKey MarketKey::of(double lat, double lon) {
  MarketKey key;
  key.lat_tenths = int(std::llround(lat * 10.0));
  key.lon_tenths = int(std::llround(lon * 10.0));
  return key;
}

std::string MarketKey::label() const {
  return std::to_string(lat_tenths) + "/" + std::to_string(lon_tenths);
}

std::map<MarketKey, std::size_t> bin_locations(
    const std::vector<corpus::JobPosting>& postings) {
  std::map<MarketKey, std::size_t> bins;
  for (const auto& p : postings) bins[MarketKey::of(p.lat, p.lon)]++;
  return bins;
}

std::map<MarketKey, std::map<int, std::size_t>> bin_locations_by_year(
    const std::vector<corpus::JobPosting>& postings) {
  std::map<MarketKey, std::map<int, std::size_t>> bins;
  for (const auto& p : postings) bins[MarketKey::of(p.lat, p.lon)][p.year]++;
  return bins;
}

// ---------------------------------------------------------------------------
// Size stratification

const char* to_string(SizeClass c) { return c == SizeClass::large ? "large" : "small"; }

SizeFlags size_flags(const std::vector<corpus::JobPosting>& postings,
                     const std::vector<int>& years, const SizeThresholds& thresholds) {
  if (years.empty()) throw ConfigError("size stratification needs at least one year");

  SizeFlags flags;

  // Markets: top decile of annual counts, in every listed year.
  const auto bins = bin_locations_by_year(postings);
  bool first_year = true;
  for (int year : years) {
    std::vector<std::size_t> counts;
    for (const auto& [market, by_year] : bins) {
      const auto it = by_year.find(year);
      if (it != by_year.end() && it->second > 0) counts.push_back(it->second);
    }
    std::set<MarketKey> year_large;
    if (!counts.empty()) {
      std::sort(counts.begin(), counts.end(), std::greater<>());
      // Top `market_top_share` of markets; the epsilon keeps exact multiples
      // (10% of 10 markets -> the single largest) from picking up one extra.
      auto take = std::size_t(
          std::ceil(thresholds.market_top_share * double(counts.size()) - 1e-9));
      take = std::clamp<std::size_t>(take, 1, counts.size());
      const std::size_t cutoff = counts[take - 1];
      for (const auto& [market, by_year] : bins) {
        const auto it = by_year.find(year);
        if (it != by_year.end() && it->second >= cutoff) year_large.insert(market);
      }
    }
    if (first_year) {
      flags.large_markets = std::move(year_large);
      first_year = false;
    } else {
      std::set<MarketKey> kept;
      std::set_intersection(flags.large_markets.begin(), flags.large_markets.end(),
                            year_large.begin(), year_large.end(),
                            std::inserter(kept, kept.begin()));
      flags.large_markets = std::move(kept);
    }
  }

  // Employers: strictly more than the cutoff in every listed year; unknown
  // (empty) employer names never qualify.
  std::map<std::string, std::map<int, std::size_t>> employer_bins;
  for (const auto& p : postings) {
    if (!p.employer.empty()) employer_bins[p.employer][p.year]++;
  }
  for (const auto& [employer, by_year] : employer_bins) {
    bool large = true;
    for (int year : years) {
      const auto it = by_year.find(year);
      if (it == by_year.end() || it->second <= thresholds.employer_min_posts) {
        large = false;
        break;
      }
    }
    if (large) flags.large_employers.insert(employer);
  }
  return flags;
}

std::string StratifiedSample::label() const {
  return std::string(to_string(market_class)) + "-market " + to_string(employer_class) +
         "-employer";
}

std::array<StratifiedSample, 4> stratify_by_size(
    const std::vector<corpus::JobPosting>& postings, const std::vector<int>& years,
    const SizeThresholds& thresholds) {
  const auto flags = size_flags(postings, years, thresholds);
  std::array<StratifiedSample, 4> subsets;
  subsets[0].market_class = SizeClass::large;
  subsets[0].employer_class = SizeClass::large;
  subsets[1].market_class = SizeClass::large;
  subsets[1].employer_class = SizeClass::small;
  subsets[2].market_class = SizeClass::small;
  subsets[2].employer_class = SizeClass::large;
  subsets[3].market_class = SizeClass::small;
  subsets[3].employer_class = SizeClass::small;
  for (const auto& p : postings) {
    const bool market_large = flags.large_markets.count(MarketKey::of(p.lat, p.lon)) > 0;
    const bool employer_large =
        !p.employer.empty() && flags.large_employers.count(p.employer) > 0;
    const std::size_t idx = (market_large ? 0 : 2) + (employer_large ? 0 : 1);
    subsets[idx].postings.push_back(p);
  }
  return subsets;
}

void write_stratified_changes_csv(const std::string& path,
                                  const std::vector<StratifiedChange>& rows) {
  CsvWriter w(path, {"occupation", "market_class", "employer_class", "vector_change",
                     "n_ads_t0", "n_ads_t1"});
  for (const auto& r : rows) {
    w.row({r.occupation, to_string(r.market_class), to_string(r.employer_class),
           CsvWriter::cell(r.vector_change), CsvWriter::cell(r.n_ads_t0),
           CsvWriter::cell(r.n_ads_t1)});
  }
}

std::vector<StratifiedChange> read_stratified_changes_csv(const std::string& path) {
  require_file(path);
  CsvReader in(path);
  const auto occ = in.col("occupation"), market = in.col("market_class"),
             employer = in.col("employer_class"), change = in.col("vector_change"),
             n0 = in.col("n_ads_t0"), n1 = in.col("n_ads_t1");
  std::vector<StratifiedChange> rows;
  while (auto fields = in.next()) {
    StratifiedChange r;
    r.occupation = (*fields)[occ];
    r.market_class = (*fields)[market] == "large" ? SizeClass::large : SizeClass::small;
    r.employer_class = (*fields)[employer] == "large" ? SizeClass::large : SizeClass::small;
    r.vector_change = parse_double((*fields)[change], path);
    r.n_ads_t0 = std::size_t(parse_long((*fields)[n0], path));
    r.n_ads_t1 = std::size_t(parse_long((*fields)[n1], path));
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Employer concentration

namespace {

double hhi_of_counts(const std::map<std::string, std::size_t>& counts) {
  double total = 0.0, sum_sq = 0.0;
  for (const auto& [_, c] : counts) {
    total += double(c);
    sum_sq += double(c) * double(c);
  }
  return sum_sq / (total * total);
}

}  // namespace

double employer_concentration(const std::vector<corpus::JobPosting>& postings,
                              const std::string& occupation, const MarketKey& market,
                              int year) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : postings) {
    if (p.year != year || p.occupation != occupation) continue;
    if (MarketKey::of(p.lat, p.lon) != market) continue;
    counts[p.employer]++;  // unknown employers pool under ""
  }
  if (counts.empty()) {
    throw NotFoundError("no postings for " + occupation + " in market " + market.label() +
                        " in " + std::to_string(year));
  }
  return hhi_of_counts(counts);
}

std::vector<ConcentrationCell> concentration_cells(
    const std::vector<corpus::JobPosting>& postings, const std::vector<int>& years) {
  const std::set<int> wanted(years.begin(), years.end());
  std::map<std::tuple<std::string, MarketKey, int>, std::map<std::string, std::size_t>>
      cells;
  for (const auto& p : postings) {
    if (!wanted.count(p.year)) continue;
    cells[{p.occupation, MarketKey::of(p.lat, p.lon), p.year}][p.employer]++;
  }
  std::vector<ConcentrationCell> out;
  out.reserve(cells.size());
  for (const auto& [key, counts] : cells) {
    ConcentrationCell cell;
    cell.occupation = std::get<0>(key);
    cell.market = std::get<1>(key);
    cell.year = std::get<2>(key);
    for (const auto& [_, c] : counts) cell.n_ads += c;
    cell.n_employers = counts.size();
    cell.hhi = hhi_of_counts(counts);
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<OccupationConcentration> occupation_concentration(
    const std::vector<ConcentrationCell>& cells, const std::set<MarketKey>& large_markets) {
  // occupation -> market -> mean HHI across years.
  std::map<std::string, std::map<MarketKey, std::pair<double, std::size_t>>> pooled;
  for (const auto& cell : cells) {
    auto& [sum, n] = pooled[cell.occupation][cell.market];
    sum += cell.hhi;
    n += 1;
  }
  std::vector<OccupationConcentration> out;
  for (const auto& [occupation, markets] : pooled) {
    OccupationConcentration row;
    row.occupation = occupation;
    double large_sum = 0.0, small_sum = 0.0;
    std::size_t large_n = 0, small_n = 0;
    for (const auto& [market, acc] : markets) {
      const double mean = acc.first / double(acc.second);
      if (large_markets.count(market)) {
        large_sum += mean;
        ++large_n;
      } else {
        small_sum += mean;
        ++small_n;
      }
    }
    if (large_n > 0) row.large_market_hhi = large_sum / double(large_n);
    if (small_n > 0) row.small_market_hhi = small_sum / double(small_n);
    out.push_back(std::move(row));
  }
  return out;
}

void write_concentration_csv(const std::string& path,
                             const std::vector<ConcentrationCell>& cells) {
  CsvWriter w(path, {"occupation", "lat", "lon", "year", "n_ads", "n_employers", "hhi"});
  for (const auto& cell : cells) {
    w.row({cell.occupation, CsvWriter::cell(cell.market.lat()),
           CsvWriter::cell(cell.market.lon()), CsvWriter::cell(cell.year),
           CsvWriter::cell(cell.n_ads), CsvWriter::cell(cell.n_employers),
           CsvWriter::cell(cell.hhi)});
  }
}

void write_occupation_concentration_csv(const std::string& path,
                                        const std::vector<OccupationConcentration>& rows) {
  CsvWriter w(path, {"occupation", "large_market_hhi", "large_market_hhi_sq",
                     "small_market_hhi", "small_market_hhi_sq"});
  const auto cell = [](const std::optional<double>& v, bool squared) {
    if (!v) return std::string{};
    return format_double(squared ? *v * *v : *v);
  };
  for (const auto& r : rows) {
    w.row({r.occupation, cell(r.large_market_hhi, false), cell(r.large_market_hhi, true),
           cell(r.small_market_hhi, false), cell(r.small_market_hhi, true)});
  }
}

// ---------------------------------------------------------------------------
// Demographics

std::vector<DominanceRecord> demographic_dominance(
    const std::vector<DemographicShare>& shares, const DominanceConfig& config) {
  if (config.round_decimals < 0 || config.round_decimals > 9) {
    throw ConfigError("dominance rounding must use 0..9 decimals");
  }
  const double scale = std::pow(10.0, config.round_decimals);
  std::vector<DominanceRecord> records;
  records.reserve(shares.size());
  for (const auto& s : shares) {
    if (!(s.occupation_share >= 0.0 && s.occupation_share <= 1.0) ||
        !(s.labor_force_share >= 0.0 && s.labor_force_share <= 1.0)) {
      throw DataError("share outside [0,1] for " + s.occupation + "/" + s.group);
    }
    DominanceRecord r;
    r.occupation = s.occupation;
    r.group = s.group;
    if (s.labor_force_share == 0.0) {
      r.skipped = true;
      r.note = "skipped: zero labor-force share";
    } else {
      r.ratio = std::round(s.occupation_share / s.labor_force_share * scale) / scale;
      r.dominant = r.ratio >= config.threshold;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::map<std::string, std::set<std::string>> dominant_groups(
    const std::vector<DominanceRecord>& records) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& r : records) {
    if (!r.skipped && r.dominant) out[r.occupation].insert(r.group);
  }
  return out;
}

std::vector<DemographicShare> read_demographics_csv(const std::string& path) {
  require_file(path);
  CsvReader in(path);
  const auto occ = in.col("occupation"), group = in.col("group"),
             os = in.col("occupation_share"), ls = in.col("labor_force_share");
  std::vector<DemographicShare> rows;
  while (auto fields = in.next()) {
    DemographicShare s;
    s.occupation = (*fields)[occ];
    s.group = (*fields)[group];
    s.occupation_share = parse_double((*fields)[os], path);
    s.labor_force_share = parse_double((*fields)[ls], path);
    rows.push_back(std::move(s));
  }
  return rows;
}

void write_dominance_csv(const std::string& path,
                         const std::vector<DominanceRecord>& records) {
  CsvWriter w(path, {"occupation", "group", "ratio", "dominant", "skipped", "note"});
  for (const auto& r : records) {
    w.row({r.occupation, r.group, r.skipped ? std::string{} : format_double(r.ratio),
           CsvWriter::cell(r.dominant), CsvWriter::cell(r.skipped), r.note});
  }
}

std::vector<HeatmapCell> demographic_heatmap(
    const std::vector<DominanceRecord>& records,
    const std::map<std::string, double>& change_by_occupation,
    const std::map<std::string, double>& skill_level_by_occupation, int bands) {
  if (bands < 1) throw ConfigError("heatmap needs at least one band");

  // Occupations with both a change score and a skill level, banded by
  // ascending skill level.
  std::vector<std::pair<double, std::string>> leveled;
  for (const auto& [occupation, level] : skill_level_by_occupation) {
    if (change_by_occupation.count(occupation)) leveled.emplace_back(level, occupation);
  }
  std::sort(leveled.begin(), leveled.end());
  std::map<std::string, int> band_of;
  const std::size_t n = leveled.size();
  for (std::size_t i = 0; i < n; ++i) {
    band_of[leveled[i].second] = int(i * std::size_t(bands) / n) + 1;
  }

  std::map<std::pair<std::string, int>, std::pair<double, std::size_t>> cells;
  for (const auto& r : records) {
    if (r.skipped || !r.dominant) continue;
    const auto band = band_of.find(r.occupation);
    if (band == band_of.end()) continue;
    auto& [sum, count] = cells[{r.group, band->second}];
    sum += change_by_occupation.at(r.occupation);
    count += 1;
  }
  std::vector<HeatmapCell> out;
  for (const auto& [key, acc] : cells) {
    HeatmapCell cell;
    cell.group = key.first;
    cell.band = key.second;
    cell.mean_change = acc.first / double(acc.second);
    cell.occupations = acc.second;
    out.push_back(std::move(cell));
  }
  return out;
}

void write_heatmap_csv(const std::string& path, const std::vector<HeatmapCell>& cells) {
  CsvWriter w(path, {"group", "skill_band", "mean_change", "occupations"});
  for (const auto& c : cells) {
    w.row({c.group, CsvWriter::cell(c.band), CsvWriter::cell(c.mean_change),
           CsvWriter::cell(c.occupations)});
  }
}

// ---------------------------------------------------------------------------
// Education cost

std::vector<EducationStats> education_stats(
    const std::vector<corpus::JobPosting>& postings, const std::vector<int>& years) {
  const std::set<int> wanted(years.begin(), years.end());
  std::map<std::pair<std::string, int>, EducationStats> cells;
  for (const auto& p : postings) {
    if (!wanted.count(p.year)) continue;
    auto& cell = cells[{p.occupation, p.year}];
    cell.occupation = p.occupation;
    cell.year = p.year;
    cell.n_ads += 1;
    if (p.education_years) {
      cell.n_with_education += 1;
      cell.mean_years += double(*p.education_years);  // running sum, divided below
    }
  }
  std::vector<EducationStats> out;
  out.reserve(cells.size());
  for (auto& [_, cell] : cells) {
    if (cell.n_with_education > 0) cell.mean_years /= double(cell.n_with_education);
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<EducationShift> education_cost_shifts(
    const std::vector<corpus::OccupationYearSnapshot>& snapshots_t0,
    const std::vector<corpus::OccupationYearSnapshot>& snapshots_t1,
    const std::vector<EducationStats>& stats, const EducationConfig& config) {
  if (!(config.min_coverage >= 0.0 && config.min_coverage <= 1.0)) {
    throw ConfigError("education coverage threshold must lie in [0,1]");
  }

  // Occupation-year cells with enough education coverage to trust the mean.
  std::map<std::pair<std::string, int>, double> covered_mean;
  for (const auto& s : stats) {
    if (s.n_ads == 0 || s.n_with_education == 0) continue;
    if (double(s.n_with_education) / double(s.n_ads) < config.min_coverage) continue;
    covered_mean[{s.occupation, s.year}] = s.mean_years;
  }

  std::map<std::string, const corpus::OccupationYearSnapshot*> at_t0;
  for (const auto& s : snapshots_t0) at_t0[s.occupation] = &s;

  std::vector<EducationShift> out;
  for (const auto& snap_t1 : snapshots_t1) {
    const auto it = at_t0.find(snap_t1.occupation);
    if (it == at_t0.end()) continue;
    const auto& snap_t0 = *it->second;

    EducationShift row;
    row.occupation = snap_t1.occupation;

    const std::set<std::string> core_t0(snap_t0.core_skills.begin(),
                                        snap_t0.core_skills.end());
    std::vector<std::string> added;
    for (const auto& skill : snap_t1.core_skills) {
      if (!core_t0.count(skill)) added.push_back(skill);
    }
    row.added_core_skills = added.size();
    if (added.empty()) {
      row.note = "no newly-added core skills";
      out.push_back(std::move(row));
      continue;
    }

    const auto focal = covered_mean.find({snap_t0.occupation, snap_t0.year});
    if (focal == covered_mean.end()) {
      row.note = "education coverage below threshold at t0";
      out.push_back(std::move(row));
      continue;
    }

    // Mean required education of each added skill at t1: averaged over the
    // occupations demanding the skill then (with enough coverage).
    double shift_sum = 0.0;
    for (const auto& skill : added) {
      double ed_sum = 0.0, weight_sum = 0.0;
      for (const auto& other : snapshots_t1) {
        const auto count = other.skill_counts.find(skill);
        if (count == other.skill_counts.end() || count->second == 0) continue;
        const auto mean = covered_mean.find({other.occupation, other.year});
        if (mean == covered_mean.end()) continue;
        const double weight = config.volume_weighted ? double(count->second) : 1.0;
        ed_sum += weight * mean->second;
        weight_sum += weight;
      }
      if (weight_sum > 0.0) {
        shift_sum += ed_sum / weight_sum - focal->second;
        row.skills_with_data += 1;
      }
    }
    if (row.skills_with_data == 0) {
      row.note = "no education data for any added core skill";
    } else {
      row.shift = shift_sum / double(row.skills_with_data);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_education_csv(const std::string& path,
                         const std::vector<EducationShift>& rows) {
  CsvWriter w(path, {"occupation", "education_shift_years", "added_core_skills",
                     "skills_with_data", "note"});
  for (const auto& r : rows) {
    w.row({r.occupation, r.shift ? format_double(*r.shift) : std::string{},
           CsvWriter::cell(r.added_core_skills), CsvWriter::cell(r.skills_with_data),
           r.note});
  }
}

// ---------------------------------------------------------------------------
// Correlation

Correlation correlate(const std::vector<double>& x, const std::vector<double>& y,
                      CorrelationMethod method) {
  if (x.size() != y.size()) throw ConfigError("correlation series differ in length");
  if (x.size() < 3) throw ConfigError("correlation needs at least three points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DataError("non-finite value in correlation input");
    }
  }

  const std::vector<double>& a = method == CorrelationMethod::spearman ? average_ranks(x) : x;
  const std::vector<double>& b = method == CorrelationMethod::spearman ? average_ranks(y) : y;

  const double n = double(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - mean_a) * (b[i] - mean_b);
    saa += (a[i] - mean_a) * (a[i] - mean_a);
    sbb += (b[i] - mean_b) * (b[i] - mean_b);
  }
  if (saa == 0.0 || sbb == 0.0) throw DomainError("zero variance in correlation input");

  Correlation result;
  result.n = a.size();
  result.coefficient = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  const std::size_t dof = a.size() - 2;
  const double denom = 1.0 - result.coefficient * result.coefficient;
  const double t = denom <= 0.0 ? std::numeric_limits<double>::infinity()
                                : result.coefficient * std::sqrt(double(dof) / denom);
  result.p_value = two_sided_p(t, dof);
  return result;
}

void write_correlations_csv(const std::string& path,
                            const std::vector<NamedCorrelation>& rows) {
  CsvWriter w(path, {"label", "method", "coefficient", "p_value", "n"});
  for (const auto& r : rows) {
    w.row({r.label, r.method == CorrelationMethod::pearson ? "pearson" : "spearman",
           CsvWriter::cell(r.result.coefficient), CsvWriter::cell(r.result.p_value),
           CsvWriter::cell(r.result.n)});
  }
}

// ---------------------------------------------------------------------------
// Regression

namespace {

struct PreparedDesign {
  Eigen::MatrixXd x;               // possibly demeaned, intercept first if present
  Eigen::VectorXd y;               // possibly demeaned
  std::vector<std::string> names;  // one per column of x
  std::size_t groups = 0;
};

void validate_design(const Design& design, const std::vector<double>& response) {
  if (design.names.size() != design.columns.size()) {
    throw ConfigError("design has " + std::to_string(design.names.size()) + " names for " +
                      std::to_string(design.columns.size()) + " columns");
  }
  if (design.columns.empty()) throw ConfigError("design has no regressors");
  for (std::size_t j = 0; j < design.columns.size(); ++j) {
    if (design.columns[j].size() != response.size()) {
      throw ConfigError("column '" + design.names[j] + "' has " +
                        std::to_string(design.columns[j].size()) + " rows for " +
                        std::to_string(response.size()) + " observations");
    }
    for (double v : design.columns[j]) {
      if (!std::isfinite(v)) throw DataError("non-finite value in column '" + design.names[j] + "'");
    }
  }
  for (double v : response) {
    if (!std::isfinite(v)) throw DataError("non-finite value in response");
  }
}

}  // namespace

RegressionFit ols_fit(const Design& design, const std::vector<double>& response,
                      const std::vector<std::string>* fixed_effect) {
  validate_design(design, response);
  const auto n = response.size();
  const auto k = design.columns.size();
  if (fixed_effect && fixed_effect->size() != n) {
    throw ConfigError("fixed-effect labels do not match the observations");
  }

  PreparedDesign prep;
  prep.y = Eigen::Map<const Eigen::VectorXd>(response.data(), Eigen::Index(n));

  if (fixed_effect) {
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) (*members.try_emplace((*fixed_effect)[i]).first).second.push_back(i);
    prep.groups = members.size();
    prep.x.resize(Eigen::Index(n), Eigen::Index(k));
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        prep.x(Eigen::Index(i), Eigen::Index(j)) = design.columns[j][i];
      }
    }
    prep.names = design.names;
    for (const auto& [_, rows] : members) {
      const double share = 1.0 / double(rows.size());
      double y_mean = 0.0;
      for (auto i : rows) y_mean += prep.y(Eigen::Index(i));
      y_mean *= share;
      for (auto i : rows) prep.y(Eigen::Index(i)) -= y_mean;
      for (std::size_t j = 0; j < k; ++j) {
        double x_mean = 0.0;
        for (auto i : rows) x_mean += prep.x(Eigen::Index(i), Eigen::Index(j));
        x_mean *= share;
        for (auto i : rows) prep.x(Eigen::Index(i), Eigen::Index(j)) -= x_mean;
      }
    }
  } else {
    prep.x.resize(Eigen::Index(n), Eigen::Index(k + 1));
    prep.x.col(0).setOnes();
    prep.names.push_back("(intercept)");
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        prep.x(Eigen::Index(i), Eigen::Index(j + 1)) = design.columns[j][i];
      }
      prep.names.push_back(design.names[j]);
    }
  }

  const auto p = std::size_t(prep.x.cols());
  const std::size_t parameters = fixed_effect ? k + prep.groups : p;
  if (n <= parameters) {
    throw ConfigError("need more than " + std::to_string(parameters) +
                      " observations, got " + std::to_string(n));
  }
  const std::size_t dof = n - parameters;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prep.x);
  if (std::size_t(qr.rank()) < p) {
    std::vector<std::string> collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < perm.size(); ++i) {
      collinear.push_back(prep.names[std::size_t(perm(i))]);
    }
    std::sort(collinear.begin(), collinear.end());
    std::string joined;
    for (const auto& name : collinear) {
      if (!joined.empty()) joined += ", ";
      joined += name;
    }
    throw SingularDesignError("design is rank deficient; collinear columns: " + joined,
                              std::move(collinear));
  }

  const Eigen::VectorXd beta = qr.solve(prep.y);
  const Eigen::VectorXd residuals = prep.y - prep.x * beta;
  const double ssr = residuals.squaredNorm();

  // Total variation about the grand mean of the original response; with
  // fixed effects the group means count as explained.
  const Eigen::Map<const Eigen::VectorXd> raw_y(response.data(), Eigen::Index(n));
  const double sst = (raw_y.array() - raw_y.mean()).matrix().squaredNorm();
  if (sst == 0.0) throw DomainError("response has zero variance");

  RegressionFit fit;
  fit.names = prep.names;
  fit.n = n;
  fit.parameters = parameters;
  fit.fixed_effects = fixed_effect != nullptr;
  fit.groups = prep.groups;
  fit.r_squared = 1.0 - ssr / sst;
  fit.adjusted_r_squared = 1.0 - (1.0 - fit.r_squared) * double(n - 1) / double(dof);
  const double sigma2 = ssr / double(dof);
  fit.sigma = std::sqrt(sigma2);

  const Eigen::MatrixXd xtx_inv =
      (prep.x.transpose() * prep.x).ldlt().solve(Eigen::MatrixXd::Identity(
          Eigen::Index(p), Eigen::Index(p)));
  fit.coefficients.resize(p);
  fit.std_errors.resize(p);
  fit.t_values.resize(p);
  fit.p_values.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    fit.coefficients[j] = beta(Eigen::Index(j));
    fit.std_errors[j] = std::sqrt(sigma2 * xtx_inv(Eigen::Index(j), Eigen::Index(j)));
    if (fit.std_errors[j] > 0.0) {
      fit.t_values[j] = fit.coefficients[j] / fit.std_errors[j];
    } else {
      fit.t_values[j] = fit.coefficients[j] == 0.0
                            ? 0.0
                            : std::numeric_limits<double>::infinity();
    }
    fit.p_values[j] = fit.t_values[j] == 0.0 ? 1.0 : two_sided_p(fit.t_values[j], dof);
  }
  return fit;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

}  // namespace

std::string format_regression_table(const std::vector<RegressionFit>& fits,
                                    const std::vector<std::string>& model_names) {
  if (fits.size() != model_names.size()) {
    throw ConfigError("one model name per fit required");
  }
  // Union of term names, first-appearance order.
  std::vector<std::string> terms;
  for (const auto& fit : fits) {
    for (const auto& name : fit.names) {
      if (std::find(terms.begin(), terms.end(), name) == terms.end()) {
        terms.push_back(name);
      }
    }
  }

  const std::size_t models = fits.size();
  std::vector<std::vector<std::string>> grid;  // rows of (label, cell per model)
  const auto row_of = [&](const std::string& label) {
    std::vector<std::string> row(models + 1);
    row[0] = label;
    return row;
  };

  for (const auto& term : terms) {
    auto coef_row = row_of(term);
    auto se_row = row_of("");
    for (std::size_t m = 0; m < models; ++m) {
      const auto& fit = fits[m];
      const auto it = std::find(fit.names.begin(), fit.names.end(), term);
      if (it == fit.names.end()) continue;
      const auto j = std::size_t(it - fit.names.begin());
      coef_row[m + 1] = fixed(fit.coefficients[j], 4) + stars(fit.p_values[j]);
      se_row[m + 1] = "(" + fixed(fit.std_errors[j], 4) + ")";
    }
    grid.push_back(std::move(coef_row));
    grid.push_back(std::move(se_row));
  }

  auto n_row = row_of("N");
  auto r2_row = row_of("R2");
  auto adj_row = row_of("Adj. R2");
  auto fe_row = row_of("Fixed effects");
  for (std::size_t m = 0; m < models; ++m) {
    n_row[m + 1] = std::to_string(fits[m].n);
    r2_row[m + 1] = fixed(fits[m].r_squared, 4);
    adj_row[m + 1] = fixed(fits[m].adjusted_r_squared, 4);
    fe_row[m + 1] = fits[m].fixed_effects ? "yes" : "no";
  }
  grid.push_back(std::move(n_row));
  grid.push_back(std::move(r2_row));
  grid.push_back(std::move(adj_row));
  grid.push_back(std::move(fe_row));

  std::vector<std::size_t> widths(models + 1, 0);
  widths[0] = 0;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c <= models; ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  for (std::size_t m = 0; m < models; ++m) {
    widths[m + 1] = std::max(widths[m + 1], model_names[m].size());
  }

  std::ostringstream out;
  const auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w - s.size(), ' ') + s;
  };
  const auto pad_right = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };

  out << pad_right("", widths[0]);
  for (std::size_t m = 0; m < models; ++m) out << "  " << pad_left(model_names[m], widths[m + 1]);
  out << "\n";
  std::size_t total = widths[0];
  for (std::size_t m = 0; m < models; ++m) total += 2 + widths[m + 1];
  out << std::string(total, '-') << "\n";
  const std::size_t stat_rows = 4;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    if (r == grid.size() - stat_rows) out << std::string(total, '-') << "\n";
    out << pad_right(grid[r][0], widths[0]);
    for (std::size_t m = 0; m < models; ++m) out << "  " << pad_left(grid[r][m + 1], widths[m + 1]);
    out << "\n";
  }
  out << std::string(total, '-') << "\n";
  out << "Standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1\n";
  return out.str();
}

void write_regressions_csv(const std::string& path,
                           const std::vector<RegressionFit>& fits,
                           const std::vector<std::string>& model_names) {
  if (fits.size() != model_names.size()) {
    throw ConfigError("one model name per fit required");
  }
  CsvWriter w(path, {"model", "term", "coefficient", "std_error", "t_value", "p_value",
                     "n", "r_squared", "adjusted_r_squared", "fixed_effects", "groups"});
  for (std::size_t m = 0; m < fits.size(); ++m) {
    const auto& fit = fits[m];
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
      w.row({model_names[m], fit.names[j], CsvWriter::cell(fit.coefficients[j]),
             CsvWriter::cell(fit.std_errors[j]), CsvWriter::cell(fit.t_values[j]),
             CsvWriter::cell(fit.p_values[j]), CsvWriter::cell(fit.n),
             CsvWriter::cell(fit.r_squared), CsvWriter::cell(fit.adjusted_r_squared),
             CsvWriter::cell(fit.fixed_effects), CsvWriter::cell(fit.groups)});
    }
  }
}

// ---------------------------------------------------------------------------
// Mobility

std::vector<MobilityPair> read_mobility_csv(const std::string& path) {
  require_file(path);
  CsvReader in(path);
  const auto a = in.col("occ_i"), b = in.col("occ_j"), t = in.col("transitions");
  std::vector<MobilityPair> rows;
  while (auto fields = in.next()) {
    MobilityPair pair;
    pair.occ_a = (*fields)[a];
    pair.occ_b = (*fields)[b];
    pair.transitions = parse_double((*fields)[t], path);
    if (pair.transitions < 0.0) {
      throw DataError("negative transition count in " + path);
    }
    rows.push_back(std::move(pair));
  }
  return rows;
}

MobilityValidation mobility_validation(const drift::SimilarityMatrix& similarity,
                                       const std::vector<MobilityPair>& pairs,
                                       const std::map<std::string, double>& popularity) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < similarity.occupations.size(); ++i) {
    index[similarity.occupations[i]] = i;
  }

  MobilityValidation v;
  std::vector<double> sim, log_moves, log_pop;
  for (const auto& pair : pairs) {
    const auto ia = index.find(pair.occ_a);
    const auto ib = index.find(pair.occ_b);
    const auto pa = popularity.find(pair.occ_a);
    const auto pb = popularity.find(pair.occ_b);
    if (ia == index.end() || ib == index.end() || pair.transitions <= 0.0 ||
        pa == popularity.end() || pb == popularity.end() || pa->second <= 0.0 ||
        pb->second <= 0.0) {
      v.pairs_skipped += 1;
      continue;
    }
    sim.push_back(similarity.at(ia->second, ib->second));
    log_moves.push_back(std::log(pair.transitions));
    log_pop.push_back(std::log(pa->second) + std::log(pb->second));
  }
  v.pairs_used = sim.size();
  if (v.pairs_used < 4) {
    throw ConfigError("mobility validation needs at least four usable pairs, got " +
                      std::to_string(v.pairs_used));
  }

  v.similarity_correlation = correlate(sim, log_moves, CorrelationMethod::pearson);
  Design baseline;
  baseline.names = {"log_popularity"};
  baseline.columns = {log_pop};
  v.baseline = ols_fit(baseline, log_moves);
  Design full;
  full.names = {"log_popularity", "skill_similarity"};
  full.columns = {log_pop, sim};
  v.with_similarity = ols_fit(full, log_moves);
  return v;
}

std::map<std::string, int> read_job_zones_csv(const std::string& path) {
  require_file(path);
  CsvReader in(path);
  const auto occ = in.col("occupation"), zone = in.col("zone");
  std::map<std::string, int> zones;
  while (auto fields = in.next()) {
    const long z = parse_long((*fields)[zone], path);
    if (z < 1 || z > 5) {
      throw DataError("job zone outside 1..5 in " + path + ": " + (*fields)[zone]);
    }
    zones[(*fields)[occ]] = int(z);
  }
  return zones;
}

}  // namespace skillscape::strata
