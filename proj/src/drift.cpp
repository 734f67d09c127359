#include "skillscape/drift.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"

namespace skillscape::drift {

namespace {

std::vector<std::string> ranked_skills(const corpus::OccupationYearSnapshot& snapshot) {
  std::vector<std::pair<std::string, std::size_t>> ranked(snapshot.skill_counts.begin(),
                                                          snapshot.skill_counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (auto& [skill, _] : ranked) out.push_back(std::move(skill));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out << ", ";
    out << items[i];
  }
  return out.str();
}

// Weighted combination of the listed skills' vectors; weights sum to one.
OccupationVector combine(const corpus::OccupationYearSnapshot& snapshot,
                         const std::vector<std::string>& skills,
                         const embed::EmbeddingMatrix& embedding, WeightMode mode) {
  if (skills.empty()) {
    throw DataError("occupation " + snapshot.occupation + " year " +
                    std::to_string(snapshot.year) + " has no skills in scope");
  }
  std::vector<std::string> missing;
  for (const auto& s : skills) {
    if (!embedding.id(s)) missing.push_back(s);
  }
  if (!missing.empty()) {
    throw MissingSkillError("occupation " + snapshot.occupation +
                                " uses skills absent from the embedding: " + join(missing),
                            missing);
  }

  double total_weight = 0.0;
  std::vector<double> weights(skills.size(), 0.0);
  if (mode == WeightMode::uniform) {
    std::fill(weights.begin(), weights.end(), 1.0 / double(skills.size()));
  } else {
    for (std::size_t i = 0; i < skills.size(); ++i) {
      const auto it = snapshot.skill_counts.find(skills[i]);
      weights[i] = it == snapshot.skill_counts.end() ? 0.0 : double(it->second);
      total_weight += weights[i];
    }
    if (total_weight <= 0.0) {
      throw DegenerateProfileError("occupation " + snapshot.occupation +
                                   " has zero total skill occurrences in scope");
    }
    for (auto& w : weights) w /= total_weight;
  }

  OccupationVector v;
  v.occupation = snapshot.occupation;
  v.year = snapshot.year;
  v.mode = mode;
  v.skills = skills;
  v.values.assign(std::size_t(embedding.dimension), 0.0);
  for (std::size_t i = 0; i < skills.size(); ++i) {
    const float* row = embedding.row(*embedding.id(skills[i]));
    for (int d = 0; d < embedding.dimension; ++d) {
      v.values[std::size_t(d)] += weights[i] * double(row[d]);
    }
  }
  if (v.norm() == 0.0) {
    throw DomainError("occupation " + snapshot.occupation + " year " +
                      std::to_string(snapshot.year) + " maps to a zero vector");
  }
  return v;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw ConfigError("occupation vectors have different dimensions");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine of a zero-norm vector");
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

void check_pair(const corpus::OccupationYearSnapshot& t0,
                const corpus::OccupationYearSnapshot& t1) {
  if (t0.occupation != t1.occupation) {
    throw ConfigError("snapshot pair mixes occupations " + t0.occupation + " and " +
                      t1.occupation);
  }
  if (t0.n_ads == 0 || t1.n_ads == 0) {
    throw NotFoundError("occupation " + t0.occupation + " has no postings in year " +
                        std::to_string(t0.n_ads == 0 ? t0.year : t1.year));
  }
}

std::map<std::string, double> basis_shares(const corpus::OccupationYearSnapshot& snap,
                                           ShareBasis basis) {
  std::map<std::string, double> out;
  const double denom = basis == ShareBasis::ad_share ? double(snap.n_ads)
                                                     : double(snap.total_occurrences());
  if (denom <= 0.0) return out;
  for (const auto& [s, c] : snap.skill_counts) out[s] = double(c) / denom;
  return out;
}

}  // namespace

std::vector<std::string> scoped_skills(const corpus::OccupationYearSnapshot& snapshot,
                                       const SkillScope& scope) {
  switch (scope.kind) {
    case SkillScope::Kind::core:
      return snapshot.core_skills;
    case SkillScope::Kind::all:
      return ranked_skills(snapshot);
    case SkillScope::Kind::top_fraction: {
      auto ranked = ranked_skills(snapshot);
      const std::size_t keep = corpus::core_count(scope.fraction, ranked.size());
      ranked.resize(std::min(keep, ranked.size()));
      return ranked;
    }
  }
  throw ConfigError("unknown skill scope");
}

double OccupationVector::norm() const {
  double total = 0.0;
  for (double x : values) total += x * x;
  return std::sqrt(total);
}

OccupationVector occupation_vector(const corpus::OccupationYearSnapshot& snapshot,
                                   const embed::EmbeddingMatrix& embedding,
                                   WeightMode mode, const SkillScope& scope) {
  return combine(snapshot, scoped_skills(snapshot, scope), embedding, mode);
}

double vector_change(const OccupationVector& from, const OccupationVector& to) {
  if (from.occupation != to.occupation) {
    throw ConfigError("vector change across different occupations: " + from.occupation +
                      " vs " + to.occupation);
  }
  return 1.0 - cosine(from.values, to.values);
}

DnChange dn_change(const corpus::OccupationYearSnapshot& t0,
                   const corpus::OccupationYearSnapshot& t1, ShareBasis basis,
                   ReweightDirection direction) {
  check_pair(t0, t1);
  const auto s0 = basis_shares(t0, basis);
  const auto s1 = basis_shares(t1, basis);
  std::set<std::string> all;
  for (const auto& [k, _] : s0) all.insert(k);
  for (const auto& [k, _] : s1) all.insert(k);

  DnChange result;
  for (const auto& skill : all) {
    const auto a = s0.find(skill);
    const auto b = s1.find(skill);
    result.raw += std::abs((b == s1.end() ? 0.0 : b->second) -
                           (a == s0.end() ? 0.0 : a->second));
  }

  const double rate0 = double(t0.total_occurrences()) / double(t0.n_ads);
  const double rate1 = double(t1.total_occurrences()) / double(t1.n_ads);
  const double num = direction == ReweightDirection::t0_over_t1 ? rate0 : rate1;
  const double den = direction == ReweightDirection::t0_over_t1 ? rate1 : rate0;
  if (den > 0.0) result.reweighted = result.raw * (num / den);
  return result;
}

double cluster_change(const corpus::OccupationYearSnapshot& t0,
                      const corpus::OccupationYearSnapshot& t1,
                      const std::map<std::string, int>& skill_community) {
  check_pair(t0, t1);
  std::vector<std::string> uncovered;
  auto community_shares = [&](const corpus::OccupationYearSnapshot& snap) {
    std::map<int, double> shares;
    const double total = double(snap.total_occurrences());
    for (const auto& [skill, count] : snap.skill_counts) {
      const auto it = skill_community.find(skill);
      if (it == skill_community.end()) {
        uncovered.push_back(skill);
        continue;
      }
      shares[it->second] += double(count) / total;
    }
    return shares;
  };
  const auto c0 = community_shares(t0);
  const auto c1 = community_shares(t1);
  if (!uncovered.empty()) {
    std::sort(uncovered.begin(), uncovered.end());
    uncovered.erase(std::unique(uncovered.begin(), uncovered.end()), uncovered.end());
    throw PartitionIncompleteError("skills without a community assignment: " +
                                   join(uncovered));
  }
  std::set<int> communities;
  for (const auto& [c, _] : c0) communities.insert(c);
  for (const auto& [c, _] : c1) communities.insert(c);
  double total = 0.0;
  for (int c : communities) {
    const auto a = c0.find(c);
    const auto b = c1.find(c);
    total += std::abs((b == c1.end() ? 0.0 : b->second) - (a == c0.end() ? 0.0 : a->second));
  }
  return total;
}

std::vector<AttributionRecord> attribute_skill_contributions(
    const corpus::OccupationYearSnapshot& t0, const corpus::OccupationYearSnapshot& t1,
    const embed::EmbeddingMatrix& embedding, WeightMode mode) {
  check_pair(t0, t1);
  const auto v0 = combine(t0, t0.core_skills, embedding, mode);
  const auto v1 = combine(t1, t1.core_skills, embedding, mode);
  const double real = vector_change(v0, v1);

  const std::set<std::string> core0(t0.core_skills.begin(), t0.core_skills.end());
  const std::set<std::string> core1(t1.core_skills.begin(), t1.core_skills.end());

  std::vector<AttributionRecord> records;
  auto attribute = [&](const std::string& skill, AttributionRecord::Direction dir) {
    AttributionRecord rec;
    rec.occupation = t0.occupation;
    rec.skill = skill;
    rec.direction = dir;
    const bool deleting_from_t1 = dir == AttributionRecord::Direction::added;
    const auto& snap = deleting_from_t1 ? t1 : t0;
    std::vector<std::string> reduced;
    for (const auto& s : snap.core_skills) {
      if (s != skill) reduced.push_back(s);
    }
    if (reduced.empty()) {
      rec.skipped = true;
      rec.note = "skipped: deleting " + skill + " would empty the year " +
                 std::to_string(snap.year) + " core set";
      records.push_back(std::move(rec));
      return;
    }
    const auto counterfactual = combine(snap, reduced, embedding, mode);
    const double altered = deleting_from_t1 ? vector_change(v0, counterfactual)
                                            : vector_change(counterfactual, v1);
    rec.contribution = std::abs(real - altered);
    records.push_back(std::move(rec));
  };

  for (const auto& s : t1.core_skills) {
    if (!core0.count(s)) attribute(s, AttributionRecord::Direction::added);
  }
  for (const auto& s : t0.core_skills) {
    if (!core1.count(s)) attribute(s, AttributionRecord::Direction::removed);
  }

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.skipped != b.skipped) return !a.skipped;
    if (a.contribution != b.contribution) return a.contribution > b.contribution;
    return a.skill < b.skill;
  });
  return records;
}

ChangeReport change_report(const corpus::OccupationYearSnapshot& t0,
                           const corpus::OccupationYearSnapshot& t1,
                           const embed::EmbeddingMatrix& embedding,
                           const std::map<std::string, int>& skill_community,
                           WeightMode mode, const SkillScope& scope, ShareBasis basis,
                           ReweightDirection direction) {
  check_pair(t0, t1);
  ChangeReport report;
  report.occupation = t0.occupation;
  report.year_t0 = t0.year;
  report.year_t1 = t1.year;
  report.vector_change = vector_change(occupation_vector(t0, embedding, mode, scope),
                                       occupation_vector(t1, embedding, mode, scope));
  const auto dn = dn_change(t0, t1, basis, direction);
  report.dn_change = dn.raw;
  report.dn_reweighted = dn.reweighted;
  report.cluster_change = cluster_change(t0, t1, skill_community);
  report.n_ads_t0 = t0.n_ads;
  report.n_ads_t1 = t1.n_ads;
  return report;
}

SimilarityMatrix occupation_similarity_matrix(
    const std::vector<corpus::OccupationYearSnapshot>& snapshots,
    const embed::EmbeddingMatrix& embedding, WeightMode mode, const SkillScope& scope) {
  if (snapshots.empty()) throw DataError("similarity matrix over zero occupations");
  SimilarityMatrix matrix;
  matrix.year = snapshots.front().year;

  std::vector<const corpus::OccupationYearSnapshot*> ordered;
  ordered.reserve(snapshots.size());
  for (const auto& s : snapshots) {
    if (s.year != matrix.year) {
      throw ConfigError("similarity matrix mixes years " + std::to_string(matrix.year) +
                        " and " + std::to_string(s.year));
    }
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->occupation < b->occupation; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->occupation == ordered[i - 1]->occupation) {
      throw ConfigError("duplicate occupation in similarity input: " +
                        ordered[i]->occupation);
    }
  }

  const std::size_t n = ordered.size();
  std::vector<OccupationVector> vectors;
  vectors.reserve(n);
  for (const auto* snap : ordered) {
    matrix.occupations.push_back(snap->occupation);
    vectors.push_back(combine(*snap, scoped_skills(*snap, scope), embedding, mode));
  }

  matrix.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    matrix.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sim = cosine(vectors[i].values, vectors[j].values);
      matrix.values[i * n + j] = sim;
      matrix.values[j * n + i] = sim;
    }
  }
  return matrix;
}

void write_change_reports_csv(const std::string& path,
                              const std::vector<ChangeReport>& reports) {
  CsvWriter out(path, {"occupation", "year_t0", "year_t1", "vector_change", "dn_change",
                       "dn_reweighted", "cluster_change", "n_ads_t0", "n_ads_t1"});
  for (const auto& r : reports) {
    out.row({r.occupation, CsvWriter::cell(r.year_t0), CsvWriter::cell(r.year_t1),
             CsvWriter::cell(r.vector_change), CsvWriter::cell(r.dn_change),
             r.dn_reweighted ? CsvWriter::cell(*r.dn_reweighted) : "",
             CsvWriter::cell(r.cluster_change), CsvWriter::cell(r.n_ads_t0),
             CsvWriter::cell(r.n_ads_t1)});
  }
}

std::vector<ChangeReport> read_change_reports_csv(const std::string& path) {
  CsvReader in(path);
  const auto occ = in.col("occupation");
  const auto y0 = in.col("year_t0");
  const auto y1 = in.col("year_t1");
  const auto vc = in.col("vector_change");
  const auto dn = in.col("dn_change");
  const auto rw = in.col("dn_reweighted");
  const auto cc = in.col("cluster_change");
  const auto a0 = in.col("n_ads_t0");
  const auto a1 = in.col("n_ads_t1");
  std::vector<ChangeReport> reports;
  while (auto row = in.next()) {
    ChangeReport r;
    r.occupation = (*row)[occ];
    r.year_t0 = std::stoi((*row)[y0]);
    r.year_t1 = std::stoi((*row)[y1]);
    r.vector_change = std::stod((*row)[vc]);
    r.dn_change = std::stod((*row)[dn]);
    if (!(*row)[rw].empty()) r.dn_reweighted = std::stod((*row)[rw]);
    r.cluster_change = std::stod((*row)[cc]);
    r.n_ads_t0 = std::size_t(std::stoull((*row)[a0]));
    r.n_ads_t1 = std::size_t(std::stoull((*row)[a1]));
    reports.push_back(std::move(r));
  }
  return reports;
}

void write_attributions_csv(const std::string& path,
                            const std::vector<AttributionRecord>& records) {
  CsvWriter out(path, {"occupation", "skill", "direction", "contribution", "skipped",
                       "note"});
  for (const auto& r : records) {
    out.row({r.occupation, r.skill,
             r.direction == AttributionRecord::Direction::added ? "added" : "removed",
             CsvWriter::cell(r.contribution), CsvWriter::cell(r.skipped), r.note});
  }
}

void write_similarity_csv(const std::string& path, const SimilarityMatrix& matrix) {
  CsvWriter out(path, {"occ_i", "occ_j", "similarity"});
  const std::size_t n = matrix.occupations.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      out.row({matrix.occupations[i], matrix.occupations[j],
               CsvWriter::cell(matrix.at(i, j))});
    }
  }
}

}  // namespace skillscape::drift
