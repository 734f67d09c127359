#include "skillscape/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"

namespace skillscape::corpus {

using nlohmann::json;

std::string canonicalize_skill(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool in_space = true;  // leading whitespace is dropped
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

bool valid_occupation_code(const std::string& s) {
  if (s.size() != 7 || s[2] != '-') return false;
  for (std::size_t i : {0u, 1u, 3u, 4u, 5u, 6u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

bool is_integer(const json& v) {
  return v.is_number_integer() || v.is_number_unsigned();
}

// Parses one record; returns the failure reason or nullopt on success.
std::optional<std::string> parse_record(const json& j, const PostingSchema& s,
                                        JobPosting& out) {
  if (!j.is_object()) return "record is not a json object";

  auto get = [&](const std::string& name) -> const json* {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
  };

  const json* v = get(s.post_id);
  if (!v || !v->is_string()) return "missing or invalid " + s.post_id;
  out.post_id = v->get<std::string>();
  if (out.post_id.empty()) return "empty " + s.post_id;

  v = get(s.year);
  if (!v || !is_integer(*v)) return "missing or invalid " + s.year;
  out.year = v->get<int>();

  v = get(s.occupation);
  if (!v || !v->is_string()) return "missing or invalid " + s.occupation;
  out.occupation = v->get<std::string>();
  if (!valid_occupation_code(out.occupation)) {
    return "occupation not in dd-dddd form";
  }

  v = get(s.employer);
  if (v) {
    if (!v->is_string()) return "invalid " + s.employer;
    out.employer = v->get<std::string>();
  } else {
    out.employer.clear();
  }

  v = get(s.lat);
  if (!v || !v->is_number()) return "missing or invalid " + s.lat;
  out.lat = v->get<double>();
  if (!(out.lat >= -90.0 && out.lat <= 90.0)) return "lat out of range";

  v = get(s.lon);
  if (!v || !v->is_number()) return "missing or invalid " + s.lon;
  out.lon = v->get<double>();
  if (!(out.lon >= -180.0 && out.lon <= 180.0)) return "lon out of range";

  v = get(s.skills);
  if (!v || !v->is_array()) return "missing or invalid " + s.skills;
  out.skills.clear();
  for (const auto& e : *v) {
    if (!e.is_string()) return "non-string skill entry";
    std::string norm = canonicalize_skill(e.get<std::string>());
    if (norm.empty()) continue;
    if (std::find(out.skills.begin(), out.skills.end(), norm) == out.skills.end()) {
      out.skills.push_back(std::move(norm));
    }
  }
  if (out.skills.empty()) return "no usable skills";

  out.education_years.reset();
  v = get(s.education_years);
  if (v) {
    if (!is_integer(*v)) return "invalid " + s.education_years;
    const int e = v->get<int>();
    if (e != 12 && e != 14 && e != 16 && e != 18 && e != 21) {
      return "education_years not in {12,14,16,18,21}";
    }
    out.education_years = e;
  }

  out.salary.reset();
  v = get(s.salary);
  if (v) {
    if (!v->is_number()) return "invalid " + s.salary;
    const double sal = v->get<double>();
    if (!(sal > 0.0) || !std::isfinite(sal)) return "salary must be > 0";
    out.salary = sal;
  }

  out.job_zone.reset();
  v = get(s.job_zone);
  if (v) {
    if (!is_integer(*v)) return "invalid " + s.job_zone;
    const int z = v->get<int>();
    if (z < 1 || z > 5) return "job_zone not in 1..5";
    out.job_zone = z;
  }

  return std::nullopt;
}

}  // namespace

ParseResult parse_postings(LineSource& lines, const PostingSchema& schema) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t nonempty = 0;
  while (lines.next(line)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++nonempty;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      result.errors.push_back({line_no, "invalid json"});
      continue;
    }
    JobPosting p;
    if (auto reason = parse_record(j, schema, p)) {
      result.errors.push_back({line_no, std::move(*reason)});
    } else {
      result.postings.push_back(std::move(p));
    }
  }
  if (nonempty > 0 && result.errors.size() * 2 > nonempty) {
    throw DataError("corrupt input: " + std::to_string(result.errors.size()) +
                    " of " + std::to_string(nonempty) + " lines malformed");
  }
  return result;
}

ParseResult parse_postings(std::istream& in, const PostingSchema& schema) {
  IstreamLineSource src(in);
  return parse_postings(src, schema);
}

ParseResult parse_postings_file(const std::string& path, const PostingSchema& schema) {
  FileLineSource src(path);
  return parse_postings(src, schema);
}

std::string posting_to_json_line(const JobPosting& p) {
  json j;
  j["post_id"] = p.post_id;
  j["year"] = p.year;
  j["occupation"] = p.occupation;
  if (!p.employer.empty()) j["employer"] = p.employer;
  j["lat"] = p.lat;
  j["lon"] = p.lon;
  j["skills"] = p.skills;
  if (p.education_years) j["education_years"] = *p.education_years;
  if (p.salary) j["salary"] = *p.salary;
  if (p.job_zone) j["job_zone"] = *p.job_zone;
  return j.dump();
}

void write_postings_jsonl(const std::string& path, const std::vector<JobPosting>& postings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& p : postings) out << posting_to_json_line(p) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_errors_jsonl(const std::string& path, const std::vector<RecordError>& errors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& e : errors) {
    json j;
    j["line"] = e.line;
    j["reason"] = e.reason;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::string dedup_key(const JobPosting& p) {
  char num[40];
  std::string key;
  key.reserve(96 + p.skills.size() * 16);
  key += std::to_string(p.year);
  key.push_back('\x1f');
  key += p.occupation;
  key.push_back('\x1f');
  key += p.employer;
  key.push_back('\x1f');
  std::snprintf(num, sizeof(num), "%a", p.lat);
  key += num;
  key.push_back('\x1f');
  std::snprintf(num, sizeof(num), "%a", p.lon);
  key += num;
  key.push_back('\x1f');
  if (p.education_years) key += std::to_string(*p.education_years);
  key.push_back('\x1f');
  if (p.salary) {
    std::snprintf(num, sizeof(num), "%a", *p.salary);
    key += num;
  }
  key.push_back('\x1f');
  std::vector<std::string> sorted = p.skills;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& s : sorted) {
    key += s;
    key.push_back('\x1e');
  }
  return key;
}

}  // namespace

std::vector<JobPosting> deduplicate(const std::vector<JobPosting>& postings) {
  std::vector<JobPosting> out;
  out.reserve(postings.size());
  std::unordered_map<std::string, bool> seen;
  seen.reserve(postings.size() * 2);
  for (const auto& p : postings) {
    auto [it, inserted] = seen.emplace(dedup_key(p), true);
    if (inserted) out.push_back(p);
  }
  return out;
}

std::set<std::string> filter_active_occupations(const std::vector<JobPosting>& postings,
                                                std::size_t min_ads,
                                                const std::vector<int>& years) {
  if (years.empty()) throw ConfigError("filter_active_occupations: years must be non-empty");
  std::map<std::string, std::map<int, std::size_t>> counts;
  for (const auto& p : postings) counts[p.occupation][p.year]++;
  std::set<std::string> active;
  for (const auto& [occ, by_year] : counts) {
    bool ok = true;
    for (int y : years) {
      auto it = by_year.find(y);
      const std::size_t n = it == by_year.end() ? 0 : it->second;
      if (n < min_ads) {
        ok = false;
        break;
      }
    }
    if (ok) active.insert(occ);
  }
  return active;
}

std::size_t core_count(double quantile, std::size_t distinct_skills) {
  if (!(quantile > 0.0) || quantile > 1.0) {
    throw ConfigError("core quantile must be in (0, 1]");
  }
  // the epsilon keeps ceil() from overshooting on exact products like 0.05*240
  const double scaled = quantile * double(distinct_skills);
  const auto k = static_cast<std::size_t>(std::ceil(scaled - 1e-9));
  return std::max<std::size_t>(1, k);
}

double OccupationYearSnapshot::share(const std::string& s) const {
  auto it = skill_counts.find(s);
  if (it == skill_counts.end() || n_ads == 0) return 0.0;
  return double(it->second) / double(n_ads);
}

std::size_t OccupationYearSnapshot::total_occurrences() const {
  std::size_t total = 0;
  for (const auto& [_, c] : skill_counts) total += c;
  return total;
}

std::map<std::string, double> OccupationYearSnapshot::shares() const {
  std::map<std::string, double> out;
  for (const auto& [s, c] : skill_counts) out[s] = double(c) / double(n_ads);
  return out;
}

bool OccupationYearSnapshot::is_core(const std::string& s) const {
  return std::find(core_skills.begin(), core_skills.end(), s) != core_skills.end();
}

namespace {

std::vector<std::string> rank_core_skills(
    const std::map<std::string, std::size_t>& counts, std::size_t k) {
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> core;
  core.reserve(std::min(k, ranked.size()));
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    core.push_back(ranked[i].first);
  }
  return core;
}

}  // namespace

OccupationYearSnapshot build_snapshot(const std::vector<JobPosting>& postings,
                                      const std::string& occupation, int year,
                                      double core_quantile) {
  if (!(core_quantile > 0.0) || core_quantile > 1.0) {
    throw ConfigError("core quantile must be in (0, 1]");
  }
  OccupationYearSnapshot snap;
  snap.occupation = occupation;
  snap.year = year;
  for (const auto& p : postings) {
    if (p.occupation != occupation || p.year != year) continue;
    snap.n_ads++;
    for (const auto& s : p.skills) snap.skill_counts[s]++;
  }
  if (snap.n_ads == 0) {
    throw NotFoundError("no postings for " + occupation + " in " + std::to_string(year));
  }
  snap.core_skills =
      rank_core_skills(snap.skill_counts, core_count(core_quantile, snap.skill_counts.size()));
  return snap;
}

std::vector<OccupationYearSnapshot> build_snapshots(const std::vector<JobPosting>& postings,
                                                    const std::set<std::string>& occupations,
                                                    const std::vector<int>& years,
                                                    double core_quantile) {
  // single pass over postings, then per-cell ranking
  std::map<std::pair<std::string, int>, OccupationYearSnapshot> cells;
  for (const auto& p : postings) {
    if (!occupations.contains(p.occupation)) continue;
    if (std::find(years.begin(), years.end(), p.year) == years.end()) continue;
    auto& snap = cells[{p.occupation, p.year}];
    if (snap.n_ads == 0) {
      snap.occupation = p.occupation;
      snap.year = p.year;
    }
    snap.n_ads++;
    for (const auto& s : p.skills) snap.skill_counts[s]++;
  }
  std::vector<OccupationYearSnapshot> out;
  out.reserve(cells.size());
  for (auto& [_, snap] : cells) {
    snap.core_skills = rank_core_skills(
        snap.skill_counts, core_count(core_quantile, snap.skill_counts.size()));
    out.push_back(std::move(snap));
  }
  return out;
}

SkillVocabulary SkillVocabulary::build(const std::vector<JobPosting>& postings) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : postings) {
    for (const auto& s : p.skills) counts[s]++;
  }
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return from_entries(std::move(entries));
}

SkillVocabulary SkillVocabulary::from_entries(
    std::vector<std::pair<std::string, std::size_t>> entries) {
  SkillVocabulary v;
  v.skills_.reserve(entries.size());
  v.counts_.reserve(entries.size());
  for (auto& [skill, count] : entries) {
    v.index_.emplace(skill, int(v.skills_.size()));
    v.skills_.push_back(std::move(skill));
    v.counts_.push_back(count);
    v.total_ += count;
  }
  return v;
}

std::optional<int> SkillVocabulary::id(const std::string& skill) const {
  auto it = index_.find(skill);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void write_vocab_counts_csv(const std::string& path, const SkillVocabulary& vocab) {
  CsvWriter w(path, {"skill_id", "skill", "count"});
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    w.row({CsvWriter::cell(i), vocab.skill(int(i)), CsvWriter::cell(vocab.count(int(i)))});
  }
}

SkillVocabulary read_vocab_counts_csv(const std::string& path) {
  CsvReader r(path);
  const std::size_t c_skill = r.col("skill");
  const std::size_t c_count = r.col("count");
  std::vector<std::pair<std::string, std::size_t>> entries;
  while (auto row = r.next()) {
    entries.emplace_back((*row)[c_skill], std::stoull((*row)[c_count]));
  }
  return SkillVocabulary::from_entries(std::move(entries));
}

void write_snapshots_csv(const std::string& path,
                         const std::vector<OccupationYearSnapshot>& snapshots) {
  std::vector<const OccupationYearSnapshot*> order;
  order.reserve(snapshots.size());
  for (const auto& s : snapshots) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->occupation != b->occupation) return a->occupation < b->occupation;
    return a->year < b->year;
  });
  CsvWriter w(path, {"occupation", "year", "n_ads", "skill", "count", "share", "is_core"});
  for (const auto* snap : order) {
    std::vector<std::pair<std::string, std::size_t>> ranked(snap->skill_counts.begin(),
                                                            snap->skill_counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [skill, count] : ranked) {
      w.row({snap->occupation, CsvWriter::cell(snap->year), CsvWriter::cell(snap->n_ads),
             skill, CsvWriter::cell(count),
             CsvWriter::cell(double(count) / double(snap->n_ads)),
             CsvWriter::cell(snap->is_core(skill))});
    }
  }
}

std::vector<OccupationYearSnapshot> read_snapshots_csv(const std::string& path) {
  CsvReader r(path);
  const std::size_t c_occ = r.col("occupation");
  const std::size_t c_year = r.col("year");
  const std::size_t c_ads = r.col("n_ads");
  const std::size_t c_skill = r.col("skill");
  const std::size_t c_count = r.col("count");
  const std::size_t c_core = r.col("is_core");

  std::map<std::pair<std::string, int>, OccupationYearSnapshot> cells;
  std::map<std::pair<std::string, int>, std::vector<std::pair<double, std::string>>> cores;
  while (auto row = r.next()) {
    const std::string& occ = (*row)[c_occ];
    const int year = std::stoi((*row)[c_year]);
    auto& snap = cells[{occ, year}];
    if (snap.n_ads == 0) {
      snap.occupation = occ;
      snap.year = year;
      snap.n_ads = std::stoull((*row)[c_ads]);
    }
    const auto count = std::stoull((*row)[c_count]);
    snap.skill_counts[(*row)[c_skill]] = count;
    if ((*row)[c_core] == "1") {
      cores[{occ, year}].push_back(
          {double(count) / double(snap.n_ads), (*row)[c_skill]});
    }
  }
  std::vector<OccupationYearSnapshot> out;
  out.reserve(cells.size());
  for (auto& [key, snap] : cells) {
    auto& core = cores[key];
    std::sort(core.begin(), core.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (auto& [_, skill] : core) snap.core_skills.push_back(std::move(skill));
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace skillscape::corpus
