#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillscape/lines.hpp"

namespace skillscape::corpus {

struct JobPosting {
  std::string post_id;
  int year = 0;
  std::string occupation;  // 6-digit SOC-style code, "dd-dddd"
  std::string employer;    // empty when unknown
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::string> skills;  // canonicalized, de-duplicated, ordered
  std::optional<int> education_years;  // one of {12, 14, 16, 18, 21}
  std::optional<double> salary;        // annualized, > 0
  std::optional<int> job_zone;         // 1..5

  bool operator==(const JobPosting&) const = default;
};

struct RecordError {
  std::size_t line = 0;  // 1-based input line number
  std::string reason;
};

struct ParseResult {
  std::vector<JobPosting> postings;
  std::vector<RecordError> errors;
};

// Maps logical field names onto the names used by a particular input file.
struct PostingSchema {
  std::string post_id = "post_id";
  std::string year = "year";
  std::string occupation = "occupation";
  std::string employer = "employer";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string skills = "skills";
  std::string education_years = "education_years";
  std::string salary = "salary";
  std::string job_zone = "job_zone";
};

// Lowercase, trim, collapse internal whitespace runs to a single space.
// Idempotent. ASCII-only case folding; multi-byte sequences pass through.
std::string canonicalize_skill(std::string_view raw);

// Streaming line-delimited JSON parse. Malformed lines become RecordErrors
// and never abort the stream; if more than half of the non-empty lines are
// malformed the input is considered corrupt and a DataError is thrown.
ParseResult parse_postings(LineSource& lines, const PostingSchema& schema = {});
ParseResult parse_postings(std::istream& in, const PostingSchema& schema = {});
// Accepts plain or gzip-compressed files.
ParseResult parse_postings_file(const std::string& path, const PostingSchema& schema = {});

std::string posting_to_json_line(const JobPosting& p);
void write_postings_jsonl(const std::string& path, const std::vector<JobPosting>& postings);
void write_errors_jsonl(const std::string& path, const std::vector<RecordError>& errors);

// Removes exact repeats of (year, occupation, employer, lat, lon, skill set,
// education_years, salary); post_id is ignored, the first occurrence is kept
// and input order is preserved.
std::vector<JobPosting> deduplicate(const std::vector<JobPosting>& postings);

// Occupations with at least min_ads postings in every listed year.
std::set<std::string> filter_active_occupations(const std::vector<JobPosting>& postings,
                                                std::size_t min_ads,
                                                const std::vector<int>& years);

// Number of core skills for a snapshot: max(1, ceil(q * distinct)).
std::size_t core_count(double quantile, std::size_t distinct_skills);

struct OccupationYearSnapshot {
  std::string occupation;
  int year = 0;
  std::size_t n_ads = 0;
  // skill -> number of ads listing it (deterministic iteration order)
  std::map<std::string, std::size_t> skill_counts;
  // top-share skills, ordered by (share desc, skill asc)
  std::vector<std::string> core_skills;

  double share(const std::string& skill) const;
  // Total skill occurrences across ads.
  std::size_t total_occurrences() const;
  std::map<std::string, double> shares() const;
  bool is_core(const std::string& skill) const;
};

// Throws NotFoundError when the occupation has no postings in that year;
// ConfigError when core_quantile is outside (0, 1].
OccupationYearSnapshot build_snapshot(const std::vector<JobPosting>& postings,
                                      const std::string& occupation, int year,
                                      double core_quantile = 0.05);

std::vector<OccupationYearSnapshot> build_snapshots(const std::vector<JobPosting>& postings,
                                                    const std::set<std::string>& occupations,
                                                    const std::vector<int>& years,
                                                    double core_quantile = 0.05);

class SkillVocabulary {
 public:
  SkillVocabulary() = default;
  // skills ordered by (corpus count desc, name asc); ids are dense from 0.
  static SkillVocabulary build(const std::vector<JobPosting>& postings);
  static SkillVocabulary from_entries(std::vector<std::pair<std::string, std::size_t>> entries);

  std::size_t size() const { return skills_.size(); }
  std::optional<int> id(const std::string& skill) const;
  const std::string& skill(int id) const { return skills_.at(std::size_t(id)); }
  std::size_t count(int id) const { return counts_.at(std::size_t(id)); }
  std::size_t total_count() const { return total_; }
  const std::vector<std::string>& skills() const { return skills_; }

 private:
  std::vector<std::string> skills_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, int> index_;
  std::size_t total_ = 0;
};

void write_vocab_counts_csv(const std::string& path, const SkillVocabulary& vocab);
SkillVocabulary read_vocab_counts_csv(const std::string& path);

void write_snapshots_csv(const std::string& path,
                         const std::vector<OccupationYearSnapshot>& snapshots);
std::vector<OccupationYearSnapshot> read_snapshots_csv(const std::string& path);

}  // namespace skillscape::corpus
