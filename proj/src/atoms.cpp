#include "skillscape/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <Eigen/Dense>

#include "binio.hpp"
#include "json.hpp"
#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"
#include "skillscape/rng.hpp"

namespace skillscape::atoms {

using json = nlohmann::ordered_json;

namespace {

Eigen::MatrixXd skill_matrix(const embed::EmbeddingMatrix& embedding) {
  const int d = embedding.dimension;
  Eigen::MatrixXd x(d, Eigen::Index(embedding.size()));
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    const float* row = embedding.row(int(i));
    for (int a = 0; a < d; ++a) x(a, Eigen::Index(i)) = double(row[a]);
  }
  return x;
}

Eigen::Map<const Eigen::MatrixXd> atom_matrix(const AtomDictionary& dict) {
  // Atoms are stored row-major per atom, so the column-major map of the
  // transposed shape (d x k) lands each atom in one column.
  return {dict.atoms.data(), dict.dimension, dict.atom_count};
}

// OMP on an Eigen vector against the dictionary columns.
SparseCode encode_vector(const Eigen::VectorXd& x, const Eigen::MatrixXd& dict,
                         int max_entries) {
  SparseCode code;
  if (x.norm() == 0.0) {
    code.zero_input = true;
    return code;
  }
  const int k = int(dict.cols());
  std::vector<char> used(std::size_t(k), 0);
  std::vector<int> support;
  Eigen::VectorXd residual = x;
  Eigen::VectorXd coeffs;
  for (int step = 0; step < max_entries; ++step) {
    int best = -1;
    double best_corr = 0.0;
    for (int j = 0; j < k; ++j) {
      if (used[std::size_t(j)]) continue;
      const double corr = std::abs(dict.col(j).dot(residual));
      if (corr > best_corr) {
        best_corr = corr;
        best = j;
      }
    }
    if (best < 0 || best_corr <= 1e-12 * x.norm()) break;
    used[std::size_t(best)] = 1;
    support.push_back(best);

    Eigen::MatrixXd sub(dict.rows(), Eigen::Index(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) sub.col(Eigen::Index(i)) = dict.col(support[i]);
    coeffs = sub.colPivHouseholderQr().solve(x);
    residual = x - sub * coeffs;
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    code.entries.emplace_back(support[i], coeffs(Eigen::Index(i)));
  }
  std::sort(code.entries.begin(), code.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return code;
}

double reconstruction_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dict,
                            const std::vector<SparseCode>& codes) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < x.cols(); ++s) {
    Eigen::VectorXd rec = Eigen::VectorXd::Zero(x.rows());
    for (const auto& [atom, coeff] : codes[std::size_t(s)].entries) {
      rec += coeff * dict.col(atom);
    }
    total += (x.col(s) - rec).squaredNorm();
  }
  return total;
}

// Residual norms per skill under the current dictionary and codes.
std::vector<double> per_skill_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dict,
                                    const std::vector<SparseCode>& codes) {
  std::vector<double> err(std::size_t(x.cols()), 0.0);
  for (Eigen::Index s = 0; s < x.cols(); ++s) {
    Eigen::VectorXd rec = Eigen::VectorXd::Zero(x.rows());
    for (const auto& [atom, coeff] : codes[std::size_t(s)].entries) {
      rec += coeff * dict.col(atom);
    }
    err[std::size_t(s)] = (x.col(s) - rec).squaredNorm();
  }
  return err;
}

double r_squared_of(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dict,
                    const std::vector<SparseCode>& codes) {
  const Eigen::VectorXd mean = x.rowwise().mean();
  double denom = 0.0;
  for (Eigen::Index s = 0; s < x.cols(); ++s) denom += (x.col(s) - mean).squaredNorm();
  if (denom == 0.0) return 1.0;
  return 1.0 - reconstruction_error(x, dict, codes) / denom;
}

double diversity_of(const embed::EmbeddingMatrix& embedding, const Eigen::MatrixXd& dict,
                    int top_n) {
  const Eigen::MatrixXd x = skill_matrix(embedding);
  std::set<Eigen::Index> seen;
  const auto n = std::min<std::size_t>(std::size_t(top_n), embedding.size());
  for (Eigen::Index j = 0; j < dict.cols(); ++j) {
    std::vector<std::pair<double, Eigen::Index>> scored;
    const double atom_norm = dict.col(j).norm();
    for (Eigen::Index s = 0; s < x.cols(); ++s) {
      const double skill_norm = x.col(s).norm();
      const double cos = (atom_norm == 0.0 || skill_norm == 0.0)
                             ? -2.0
                             : dict.col(j).dot(x.col(s)) / (atom_norm * skill_norm);
      scored.emplace_back(cos, s);
    }
    std::partial_sort(scored.begin(), scored.begin() + Eigen::Index(n), scored.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t i = 0; i < n; ++i) seen.insert(scored[i].second);
  }
  return double(seen.size()) / (double(top_n) * double(dict.cols()));
}

}  // namespace

double SparseCode::coefficient(int atom) const {
  for (const auto& [a, c] : entries) {
    if (a == atom) return c;
  }
  return 0.0;
}

std::optional<int> AtomDictionary::skill_id(const std::string& skill) const {
  const auto it = index_.find(skill);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void AtomDictionary::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < skills.size(); ++i) index_[skills[i]] = int(i);
}

SparseCode sparse_encode(const float* vector, int dimension,
                         const AtomDictionary& dictionary, int max_entries) {
  if (dimension != dictionary.dimension) {
    throw ConfigError("vector dimension does not match the dictionary");
  }
  if (max_entries < 1 || max_entries > dictionary.atom_count) {
    throw ConfigError("sparse code size must be in [1, atom_count]");
  }
  Eigen::VectorXd x(dimension);
  for (int a = 0; a < dimension; ++a) x(a) = double(vector[a]);
  return encode_vector(x, atom_matrix(dictionary), max_entries);
}

AtomDictionary ksvd_learn(const embed::EmbeddingMatrix& embedding, const KsvdConfig& config,
                          KsvdDiagnostics* diagnostics) {
  const int k = config.atom_count;
  const int t = config.sparsity;
  if (k < 2) throw ConfigError("dictionary needs at least two atoms");
  if (std::size_t(k) > embedding.size()) {
    throw ConfigError("atom count " + std::to_string(k) + " exceeds the vocabulary of " +
                      std::to_string(embedding.size()) + " skills");
  }
  if (t < 1 || t > k) throw ConfigError("sparsity must be in [1, atom_count]");
  if (config.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!embedding.finite()) throw DataError("embedding contains non-finite values");

  const Eigen::MatrixXd x = skill_matrix(embedding);
  const int d = embedding.dimension;

  // Seed atoms from distinct non-zero skill vectors in shuffled order.
  std::vector<int> order(embedding.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  Rng rng(config.seed);
  rng.shuffle(order);
  Eigen::MatrixXd dict(d, k);
  int filled = 0;
  for (int idx : order) {
    if (filled == k) break;
    const double norm = x.col(idx).norm();
    if (norm == 0.0) continue;
    dict.col(filled++) = x.col(idx) / norm;
  }
  if (filled < k) {
    throw DataError("fewer than " + std::to_string(k) + " non-zero skill vectors");
  }

  std::vector<SparseCode> codes(embedding.size());
  auto encode_all = [&]() {
    for (Eigen::Index s = 0; s < x.cols(); ++s) {
      codes[std::size_t(s)] = encode_vector(x.col(s), dict, t);
    }
  };
  encode_all();

  for (int iter = 0; iter < config.iterations; ++iter) {
    const double before = reconstruction_error(x, dict, codes);
    if (diagnostics) diagnostics->error_before_update.push_back(before);

    std::vector<char> reseed_used(embedding.size(), 0);
    for (int j = 0; j < k; ++j) {
      std::vector<Eigen::Index> users;
      for (Eigen::Index s = 0; s < x.cols(); ++s) {
        if (codes[std::size_t(s)].coefficient(j) != 0.0) users.push_back(s);
      }
      if (users.empty()) {
        // Re-seed from the skill the current dictionary reconstructs worst.
        const auto err = per_skill_error(x, dict, codes);
        Eigen::Index worst = -1;
        double worst_err = -1.0;
        for (Eigen::Index s = 0; s < x.cols(); ++s) {
          if (reseed_used[std::size_t(s)] || x.col(s).norm() == 0.0) continue;
          if (err[std::size_t(s)] > worst_err) {
            worst_err = err[std::size_t(s)];
            worst = s;
          }
        }
        if (worst >= 0) {
          reseed_used[std::size_t(worst)] = 1;
          dict.col(j) = x.col(worst) / x.col(worst).norm();
          if (diagnostics) ++diagnostics->reseeded_atoms;
        }
        continue;
      }

      // Residual restricted to this atom's users, with the atom's own
      // contribution added back.
      Eigen::MatrixXd e(d, Eigen::Index(users.size()));
      Eigen::VectorXd g(Eigen::Index(users.size()));
      for (std::size_t u = 0; u < users.size(); ++u) {
        const auto s = users[u];
        Eigen::VectorXd rec = Eigen::VectorXd::Zero(d);
        for (const auto& [atom, coeff] : codes[std::size_t(s)].entries) {
          if (atom != j) rec += coeff * dict.col(atom);
        }
        e.col(Eigen::Index(u)) = x.col(s) - rec;
        g(Eigen::Index(u)) = codes[std::size_t(s)].coefficient(j);
      }

      // Two half-steps of alternating least squares toward the best rank-one
      // approximation; each half-step is optimal given the other factor, so
      // the restricted error cannot increase.
      Eigen::VectorXd a = e * g;
      if (a.norm() == 0.0) continue;
      a /= a.norm();
      g = e.transpose() * a;
      dict.col(j) = a;
      for (std::size_t u = 0; u < users.size(); ++u) {
        for (auto& [atom, coeff] : codes[std::size_t(users[u])].entries) {
          if (atom == j) coeff = g(Eigen::Index(u));
        }
      }
    }

    if (diagnostics) {
      diagnostics->error_after_update.push_back(reconstruction_error(x, dict, codes));
    }
    encode_all();
    if (diagnostics) {
      diagnostics->error_after_encode.push_back(reconstruction_error(x, dict, codes));
    }
  }

  // Direction convention: flip each atom so the mean coefficient across its
  // users is positive (reconstruction is unchanged).
  for (int j = 0; j < k; ++j) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& code : codes) {
      const double c = code.coefficient(j);
      if (c != 0.0) {
        total += c;
        ++n;
      }
    }
    if (n > 0 && total < 0.0) {
      dict.col(j) = -dict.col(j);
      for (auto& code : codes) {
        for (auto& [atom, coeff] : code.entries) {
          if (atom == j) coeff = -coeff;
        }
      }
    }
  }

  AtomDictionary result;
  result.dimension = d;
  result.atom_count = k;
  result.sparsity = t;
  result.skills = embedding.skills;
  result.codes = std::move(codes);
  result.atoms.resize(std::size_t(k) * std::size_t(d));
  for (int j = 0; j < k; ++j) {
    for (int a = 0; a < d; ++a) {
      result.atoms[std::size_t(j) * std::size_t(d) + std::size_t(a)] = dict(a, j);
    }
  }
  result.rebuild_index();
  result.r_squared = r_squared_of(x, dict, result.codes);
  result.topic_diversity = diversity_of(embedding, dict, config.top_skills);
  return result;
}

double reconstruction_r_squared(const embed::EmbeddingMatrix& embedding,
                                const AtomDictionary& dictionary) {
  if (embedding.size() != dictionary.codes.size()) {
    throw ConfigError("dictionary codes do not cover the embedding");
  }
  const Eigen::MatrixXd x = skill_matrix(embedding);
  return r_squared_of(x, atom_matrix(dictionary), dictionary.codes);
}

double topic_diversity(const embed::EmbeddingMatrix& embedding,
                       const AtomDictionary& dictionary, int top_n) {
  if (top_n < 1) throw ConfigError("topic diversity needs top_n >= 1");
  return diversity_of(embedding, atom_matrix(dictionary), top_n);
}

SelectionResult select_atom_count(const embed::EmbeddingMatrix& embedding,
                                  const std::vector<int>& grid,
                                  const KsvdConfig& base_config) {
  if (grid.empty()) throw ConfigError("atom count grid is empty");
  SelectionResult result;
  for (int k : grid) {
    SelectionEntry entry;
    entry.atom_count = k;
    if (std::size_t(k) > embedding.size()) {
      entry.skipped = true;
      entry.warning = "atom count exceeds vocabulary of " +
                      std::to_string(embedding.size()) + " skills";
    } else {
      KsvdConfig config = base_config;
      config.atom_count = k;
      config.sparsity = std::min(base_config.sparsity, k);
      const auto dict = ksvd_learn(embedding, config);
      entry.r_squared = dict.r_squared;
      entry.diversity = dict.topic_diversity;
    }
    result.table.push_back(std::move(entry));
  }

  std::vector<SelectionEntry*> valid;
  for (auto& entry : result.table) {
    if (!entry.skipped) valid.push_back(&entry);
  }
  if (valid.empty()) throw ConfigError("every atom count in the grid was skipped");

  const auto normalized = [&](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  };
  double r_lo = std::numeric_limits<double>::infinity(), r_hi = -r_lo;
  double d_lo = r_lo, d_hi = -r_lo;
  for (const auto* e : valid) {
    r_lo = std::min(r_lo, e->r_squared);
    r_hi = std::max(r_hi, e->r_squared);
    d_lo = std::min(d_lo, e->diversity);
    d_hi = std::max(d_hi, e->diversity);
  }
  SelectionEntry* best = nullptr;
  for (auto* e : valid) {
    e->score = 0.5 * (normalized(e->r_squared, r_lo, r_hi) +
                      normalized(e->diversity, d_lo, d_hi));
    const bool better = !best || e->score > best->score ||
                        (e->score == best->score && e->atom_count < best->atom_count);
    if (better) best = e;
  }
  best->selected = true;
  result.best_atom_count = best->atom_count;
  return result;
}

OccupationAtomProfile occupation_atom_weights(const corpus::OccupationYearSnapshot& snapshot,
                                              const AtomDictionary& dictionary) {
  std::vector<std::string> missing;
  for (const auto& skill : snapshot.core_skills) {
    if (!dictionary.skill_id(skill)) missing.push_back(skill);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : ", ") + s;
    throw MissingSkillError("occupation " + snapshot.occupation +
                                " has core skills without sparse codes: " + list,
                            missing);
  }

  std::vector<double> totals(std::size_t(dictionary.atom_count), 0.0);
  for (const auto& skill : snapshot.core_skills) {
    const auto& code = dictionary.codes[std::size_t(*dictionary.skill_id(skill))];
    for (const auto& [atom, coeff] : code.entries) totals[std::size_t(atom)] += coeff;
  }
  double denom = 0.0;
  for (double w : totals) denom += std::abs(w);
  if (denom == 0.0) {
    throw DegenerateProfileError("occupation " + snapshot.occupation + " in year " +
                                 std::to_string(snapshot.year) +
                                 " maps to an all-zero atom profile");
  }

  OccupationAtomProfile profile;
  profile.occupation = snapshot.occupation;
  profile.year = snapshot.year;
  profile.weights.resize(totals.size());
  for (std::size_t j = 0; j < totals.size(); ++j) {
    profile.weights[j] = std::abs(totals[j]) / denom;
  }
  return profile;
}

AtomImportanceSeries atom_importance_change(const std::vector<OccupationAtomProfile>& at_t0,
                                            const std::vector<OccupationAtomProfile>& at_t1) {
  if (at_t0.empty() || at_t1.empty()) {
    throw ConfigError("atom importance needs profiles for both years");
  }
  const std::size_t k = at_t0.front().weights.size();
  for (const auto& p : at_t0) {
    if (p.weights.size() != k) throw ConfigError("profiles disagree on atom count");
  }
  for (const auto& p : at_t1) {
    if (p.weights.size() != k) throw ConfigError("profiles disagree on atom count");
  }

  AtomImportanceSeries series;
  series.year_t0 = at_t0.front().year;
  series.year_t1 = at_t1.front().year;
  series.importance_t0.assign(k, 0.0);
  series.importance_t1.assign(k, 0.0);
  series.change.assign(k, 0.0);
  std::set<std::string> occ0, occ1;
  for (const auto& p : at_t0) {
    occ0.insert(p.occupation);
    for (std::size_t j = 0; j < k; ++j) series.importance_t0[j] += p.weights[j];
  }
  for (const auto& p : at_t1) {
    occ1.insert(p.occupation);
    for (std::size_t j = 0; j < k; ++j) series.importance_t1[j] += p.weights[j];
  }
  for (std::size_t j = 0; j < k; ++j) {
    series.change[j] = series.importance_t1[j] - series.importance_t0[j];
  }
  std::set_symmetric_difference(occ0.begin(), occ0.end(), occ1.begin(), occ1.end(),
                                std::back_inserter(series.mismatched_occupations));
  return series;
}

std::vector<std::pair<std::string, double>> atom_top_skills(
    const embed::EmbeddingMatrix& embedding, const AtomDictionary& dictionary, int atom,
    int n) {
  if (atom < 0 || atom >= dictionary.atom_count) {
    throw ConfigError("atom index out of range: " + std::to_string(atom));
  }
  if (n < 1) throw ConfigError("top skill count must be >= 1");
  const auto dict = atom_matrix(dictionary);
  const double atom_norm = dict.col(atom).norm();
  std::vector<std::pair<std::string, double>> scored;
  for (std::size_t s = 0; s < embedding.size(); ++s) {
    const float* row = embedding.row(int(s));
    double dot = 0.0, norm = 0.0;
    for (int a = 0; a < embedding.dimension; ++a) {
      dot += double(row[a]) * dict(a, atom);
      norm += double(row[a]) * double(row[a]);
    }
    if (norm == 0.0 || atom_norm == 0.0) continue;
    scored.emplace_back(embedding.skills[s],
                        std::clamp(dot / std::sqrt(norm * atom_norm * atom_norm), -1.0, 1.0));
  }
  const auto top = std::min<std::size_t>(std::size_t(n), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(top), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  scored.resize(top);
  return scored;
}

std::vector<std::pair<double, double>> pca_coordinates(const AtomDictionary& dictionary) {
  const auto dict = atom_matrix(dictionary);  // d x k
  Eigen::MatrixXd centered = dict.transpose();  // k x d, rows are atoms
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd v = svd.matrixV();
  const int components = std::min<int>(2, int(v.cols()));
  std::vector<std::pair<double, double>> coords(std::size_t(dictionary.atom_count),
                                                {0.0, 0.0});
  for (int c = 0; c < components; ++c) {
    Eigen::VectorXd direction = v.col(c);
    // Deterministic sign: the largest-magnitude loading points positive.
    Eigen::Index max_row = 0;
    direction.cwiseAbs().maxCoeff(&max_row);
    if (direction(max_row) < 0.0) direction = -direction;
    const Eigen::VectorXd projected = centered * direction;
    for (int j = 0; j < dictionary.atom_count; ++j) {
      if (c == 0) {
        coords[std::size_t(j)].first = projected(j);
      } else {
        coords[std::size_t(j)].second = projected(j);
      }
    }
  }
  return coords;
}

GridAssignment grid_layout(const std::vector<std::pair<double, double>>& coordinates,
                           int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs at least one row and column");
  const std::size_t cells = std::size_t(rows) * std::size_t(cols);
  if (coordinates.size() > cells) {
    throw ConfigError(std::to_string(coordinates.size()) + " atoms exceed " +
                      std::to_string(cells) + " grid cells");
  }
  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  bool first = true;
  for (const auto& [x, y] : coordinates) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw ConfigError("grid layout requires finite coordinates");
    }
    if (first) {
      min_x = max_x = x;
      min_y = max_y = y;
      first = false;
    } else {
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }

  GridAssignment grid;
  grid.rows = rows;
  grid.cols = cols;
  grid.cell_of_atom.assign(coordinates.size(), -1);
  grid.atom_of_cell.assign(cells, -1);

  const auto lattice = [&](int index, int count, double lo, double hi) {
    if (count == 1) return 0.5 * (lo + hi);
    return lo + double(index) * (hi - lo) / double(count - 1);
  };
  std::size_t assigned = 0;
  for (int r = 0; r < rows && assigned < coordinates.size(); ++r) {
    for (int c = 0; c < cols && assigned < coordinates.size(); ++c) {
      const double cx = lattice(c, cols, min_x, max_x);
      const double cy = lattice(r, rows, min_y, max_y);
      int best = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < coordinates.size(); ++a) {
        if (grid.cell_of_atom[a] >= 0) continue;
        const double dx = coordinates[a].first - cx;
        const double dy = coordinates[a].second - cy;
        const double dist = dx * dx + dy * dy;
        if (dist < best_dist) {
          best_dist = dist;
          best = int(a);
        }
      }
      grid.cell_of_atom[std::size_t(best)] = r * cols + c;
      grid.atom_of_cell[std::size_t(r * cols + c)] = best;
      ++assigned;
    }
  }
  return grid;
}

void save_dictionary(const std::string& dir, const AtomDictionary& dictionary,
                     std::uint64_t seed, const std::string& config_hash) {
  std::filesystem::create_directories(dir);

  json header;
  header["dimension"] = dictionary.dimension;
  header["atom_count"] = dictionary.atom_count;
  header["sparsity"] = dictionary.sparsity;
  header["skill_count"] = dictionary.skills.size();
  header["r_squared"] = dictionary.r_squared;
  header["topic_diversity"] = dictionary.topic_diversity;
  header["profile_normalization"] = "absolute-sum";
  header["seed"] = seed;
  header["config_hash"] = config_hash;
  header["dtype"] = "float32";
  header["byte_order"] = "little-endian";
  header["atoms_file"] = "atoms.f32";
  header["codes_file"] = "codes.csv";
  header["skills_file"] = "skills.txt";
  json zeros = json::array();
  for (std::size_t s = 0; s < dictionary.codes.size(); ++s) {
    if (dictionary.codes[s].zero_input) zeros.push_back(s);
  }
  header["zero_input_skills"] = zeros;
  {
    std::ofstream out(dir + "/dictionary.json", std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + dir + "/dictionary.json");
    out << header.dump(1) << '\n';
  }

  std::vector<float> atoms32(dictionary.atoms.size());
  for (std::size_t i = 0; i < atoms32.size(); ++i) atoms32[i] = float(dictionary.atoms[i]);
  binio::write_f32_file(dir + "/atoms.f32", atoms32);

  {
    CsvWriter out(dir + "/codes.csv", {"skill_id", "atom_id", "coefficient"});
    for (std::size_t s = 0; s < dictionary.codes.size(); ++s) {
      for (const auto& [atom, coeff] : dictionary.codes[s].entries) {
        out.row({CsvWriter::cell(s), CsvWriter::cell(atom), CsvWriter::cell(coeff)});
      }
    }
  }
  {
    std::ofstream out(dir + "/skills.txt", std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + dir + "/skills.txt");
    for (const auto& s : dictionary.skills) out << s << '\n';
  }
}

AtomDictionary load_dictionary(const std::string& dir) {
  std::ifstream hin(dir + "/dictionary.json", std::ios::binary);
  if (!hin) throw MissingArtifactError("dictionary header not found in " + dir);
  json header = json::parse(hin, nullptr, false);
  if (header.is_discarded()) throw DataError("invalid dictionary header in " + dir);

  AtomDictionary dict;
  dict.dimension = header.at("dimension").get<int>();
  dict.atom_count = header.at("atom_count").get<int>();
  dict.sparsity = header.at("sparsity").get<int>();
  dict.r_squared = header.at("r_squared").get<double>();
  dict.topic_diversity = header.at("topic_diversity").get<double>();
  const auto skill_count = header.at("skill_count").get<std::size_t>();
  if (dict.dimension < 1 || dict.atom_count < 1) {
    throw DataError("invalid dictionary shape in header");
  }

  const auto skills_path = dir + "/" + header.value("skills_file", "skills.txt");
  std::ifstream sin(skills_path, std::ios::binary);
  if (!sin) throw MissingArtifactError("dictionary skill list not found: " + skills_path);
  std::string line;
  while (std::getline(sin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    dict.skills.push_back(line);
  }
  if (dict.skills.size() != skill_count) {
    throw DataError("skill count mismatch in " + dir);
  }

  const auto atoms32 =
      binio::read_f32_file(dir + "/" + header.value("atoms_file", "atoms.f32"),
                           std::size_t(dict.atom_count) * std::size_t(dict.dimension));
  dict.atoms.assign(atoms32.begin(), atoms32.end());

  dict.codes.assign(skill_count, {});
  const auto codes_path = dir + "/" + header.value("codes_file", "codes.csv");
  if (!std::filesystem::exists(codes_path)) {
    throw MissingArtifactError("sparse codes not found: " + codes_path);
  }
  CsvReader codes(codes_path);
  const auto s_col = codes.col("skill_id");
  const auto a_col = codes.col("atom_id");
  const auto c_col = codes.col("coefficient");
  while (auto row = codes.next()) {
    const auto skill = std::stoull((*row)[s_col]);
    const int atom = std::stoi((*row)[a_col]);
    if (skill >= skill_count || atom < 0 || atom >= dict.atom_count) {
      throw DataError("sparse code row out of range in " + codes_path);
    }
    dict.codes[skill].entries.emplace_back(atom, std::stod((*row)[c_col]));
  }
  for (const auto z : header.value("zero_input_skills", std::vector<std::size_t>{})) {
    if (z >= skill_count) throw DataError("zero-input skill id out of range");
    dict.codes[z].zero_input = true;
  }
  dict.rebuild_index();
  return dict;
}

std::map<int, std::string> read_atom_labels_csv(const std::string& path, int atom_count) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("atom label file not found: " + path);
  }
  CsvReader in(path);
  const auto id_col = in.col("atom_id");
  const auto label_col = in.col("label");
  std::map<int, std::string> labels;
  while (auto row = in.next()) {
    int atom = 0;
    try {
      atom = std::stoi((*row)[id_col]);
    } catch (const std::exception&) {
      throw DataError("malformed atom id in " + path + ": " + (*row)[id_col]);
    }
    if (atom < 0 || atom >= atom_count) {
      throw DataError("atom label for unknown atom " + std::to_string(atom));
    }
    labels[atom] = (*row)[label_col];
  }
  return labels;
}

void write_selection_csv(const std::string& path, const SelectionResult& result) {
  CsvWriter out(path, {"atom_count", "r_squared", "topic_diversity", "score", "selected",
                       "warning"});
  for (const auto& e : result.table) {
    out.row({CsvWriter::cell(e.atom_count),
             e.skipped ? "" : CsvWriter::cell(e.r_squared),
             e.skipped ? "" : CsvWriter::cell(e.diversity),
             e.skipped ? "" : CsvWriter::cell(e.score), CsvWriter::cell(e.selected),
             e.warning});
  }
}

void write_profiles_csv(const std::string& path,
                        const std::vector<OccupationAtomProfile>& profiles) {
  CsvWriter out(path, {"occupation", "year", "atom", "weight"});
  for (const auto& p : profiles) {
    for (std::size_t j = 0; j < p.weights.size(); ++j) {
      if (p.weights[j] == 0.0) continue;
      out.row({p.occupation, CsvWriter::cell(p.year), CsvWriter::cell(j),
               CsvWriter::cell(p.weights[j])});
    }
  }
}

void write_importance_csv(const std::string& path, const AtomImportanceSeries& series) {
  CsvWriter out(path, {"atom", "importance_t0", "importance_t1", "change"});
  for (std::size_t j = 0; j < series.change.size(); ++j) {
    out.row({CsvWriter::cell(j), CsvWriter::cell(series.importance_t0[j]),
             CsvWriter::cell(series.importance_t1[j]), CsvWriter::cell(series.change[j])});
  }
}

void write_grid_csv(const std::string& path, const GridAssignment& grid) {
  CsvWriter out(path, {"row", "col", "atom"});
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int atom = grid.atom_of_cell[std::size_t(r * grid.cols + c)];
      out.row({CsvWriter::cell(r), CsvWriter::cell(c),
               atom < 0 ? "" : CsvWriter::cell(atom)});
    }
  }
}

void write_atom_top_skills_csv(const std::string& path,
                               const embed::EmbeddingMatrix& embedding,
                               const AtomDictionary& dictionary, int top_n) {
  CsvWriter out(path, {"atom", "rank", "skill", "cosine"});
  for (int j = 0; j < dictionary.atom_count; ++j) {
    const auto ranked = atom_top_skills(embedding, dictionary, j, top_n);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      out.row({CsvWriter::cell(j), CsvWriter::cell(r + 1), ranked[r].first,
               CsvWriter::cell(ranked[r].second)});
    }
  }
}

}  // namespace skillscape::atoms
