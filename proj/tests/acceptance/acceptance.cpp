// Acceptance gate: ten self-contained criteria, each printing exactly one
// PASS/FAIL line with its measured values and the tolerances pinned below.
//
//   acceptance        runs every criterion
//   acceptance <n>    runs criterion n only
//
// The process exits 0 only when every executed criterion passes.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skillscape/atoms.hpp"
#include "skillscape/corpus.hpp"
#include "skillscape/drift.hpp"
#include "skillscape/embed.hpp"
#include "skillscape/graph.hpp"
#include "skillscape/rng.hpp"
#include "skillscape/strata.hpp"
#include "skillscape/synthlab.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

namespace {

using namespace skillscape;
using testsupport::TempDir;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool condition, const std::string& note) {
    pass = pass && condition;
    notes.push_back((condition ? "" : "VIOLATED: ") + note);
  }

  void note(const std::string& text) { notes.push_back(text); }
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

double cosine_between(const double* u, const double* v, int dimension) {
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (int i = 0; i < dimension; ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

// ---------------------------------------------------------------------------
// 1. The share metric cannot separate the planted parallel/orthogonal pair,
//    the embedding metric must: equal dn within 1e-9, vector-change margin
//    >= 0.05, in under 2 minutes.
Outcome metric_reversal() {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;

  auto spec = synthlab::SynthSpec::paired_small();
  auto world = synthlab::build_world(spec);
  TempDir tmp;
  const auto postings_path = tmp.file("postings.jsonl");
  synthlab::generate_corpus(world, postings_path);
  auto parsed = corpus::parse_postings_file(postings_path);
  const auto posts = corpus::deduplicate(parsed.postings);

  const auto& parallel = world.pair.parallel_occ;
  const auto& orthogonal = world.pair.orthogonal_occ;
  const auto p0 = corpus::build_snapshot(posts, parallel, spec.t0);
  const auto p1 = corpus::build_snapshot(posts, parallel, spec.t1);
  const auto f0 = corpus::build_snapshot(posts, orthogonal, spec.t0);
  const auto f1 = corpus::build_snapshot(posts, orthogonal, spec.t1);

  const auto dn_p = drift::dn_change(p0, p1);
  const auto dn_f = drift::dn_change(f0, f1);
  const double dn_gap = std::abs(dn_p.raw - dn_f.raw);
  out.check(dn_gap <= 1e-9,
            "|dn(P) - dn(F)| = " + fmt(dn_gap) + " <= 1e-9");

  // The embedding under test is trained from the corpus, not read off the
  // planted geometry. Frequent-skill subsampling is disabled: with only 80
  // skills every skill sits far above the default threshold and training
  // would otherwise see almost no pairs.
  const auto vocab = corpus::SkillVocabulary::build(posts);
  embed::TrainingConfig cfg;
  cfg.dimension = 32;
  cfg.epochs = 15;
  cfg.negatives = 5;
  cfg.seed = 11;
  cfg.workers = 1;
  cfg.validation_pairs = 1000;
  cfg.subsample_threshold = 0.0;
  const auto pairs = embed::build_training_pairs(posts, vocab, cfg);
  const auto embedding = embed::train_skipgram(pairs, vocab, cfg);

  const auto scope = drift::SkillScope::all();
  const auto mode = drift::WeightMode::uniform;
  const double change_p = drift::vector_change(
      drift::occupation_vector(p0, embedding, mode, scope),
      drift::occupation_vector(p1, embedding, mode, scope));
  const double change_f = drift::vector_change(
      drift::occupation_vector(f0, embedding, mode, scope),
      drift::occupation_vector(f1, embedding, mode, scope));
  out.check(change_f > change_p + 0.05,
            "vector_change(F) = " + fmt(change_f) + " > vector_change(P) = " +
                fmt(change_p) + " + 0.05");

  const double elapsed = seconds_since(start);
  out.check(elapsed < 120.0, fmt(elapsed) + "s < 120s");
  return out;
}

// ---------------------------------------------------------------------------
// 2. Share-change oracle equivalence: dn_change on tiny corpora (<= 10
//    posts) matches a brute-force recount from raw postings to 1e-12, on
//    both share bases, over 1,000 random corpora.
Outcome share_change_oracle() {
  Outcome out;
  Rng rng(2024);
  const std::string occ = "11-1111";
  const int t0 = 2010, t1 = 2018;
  const std::vector<std::string> alphabet = {"s0", "s1", "s2",
                                             "s3", "s4", "s5"};
  const int trials = 1000;
  int violations = 0;
  double worst = 0.0;

  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n_posts = 2 + rng.index(9);  // 2..10, both years hit
    std::vector<corpus::JobPosting> posts;
    for (std::size_t i = 0; i < n_posts; ++i) {
      corpus::JobPosting p;
      p.post_id = "p" + std::to_string(trial) + "-" + std::to_string(i);
      p.occupation = occ;
      p.year = i == 0 ? t0 : (i == 1 ? t1 : (rng.index(2) == 0 ? t0 : t1));
      auto pool = alphabet;
      rng.shuffle(pool);
      const std::size_t k = 1 + rng.index(5);
      p.skills.assign(pool.begin(), pool.begin() + long(k));
      std::sort(p.skills.begin(), p.skills.end());
      posts.push_back(std::move(p));
    }
    const auto s0 = corpus::build_snapshot(posts, occ, t0);
    const auto s1 = corpus::build_snapshot(posts, occ, t1);

    const double ad =
        drift::dn_change(s0, s1, drift::ShareBasis::ad_share).raw;
    const double ad_oracle = oracles::dn_recount(posts, occ, t0, t1, true);
    const double occ_basis =
        drift::dn_change(s0, s1, drift::ShareBasis::occurrence_share).raw;
    const double occ_oracle = oracles::dn_recount(posts, occ, t0, t1, false);

    worst = std::max({worst, std::abs(ad - ad_oracle),
                      std::abs(occ_basis - occ_oracle)});
    if (std::abs(ad - ad_oracle) > 1e-12 ||
        std::abs(occ_basis - occ_oracle) > 1e-12) {
      ++violations;
    }
  }
  out.check(violations == 0, std::to_string(trials) +
                                 " corpora, 0 deviations > 1e-12 (worst " +
                                 fmt(worst) + "), got " +
                                 std::to_string(violations));
  return out;
}

// ---------------------------------------------------------------------------
// 3. Community-share change never exceeds the occurrence-share skill change
//    (triangle inequality), 1,000 randomized snapshot pairs, zero
//    violations beyond 1e-12.
Outcome cluster_bound() {
  Outcome out;
  Rng rng(77);
  const int trials = 1000;
  int violations = 0;
  double worst_excess = -1.0;

  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t universe = 3 + rng.index(10);
    std::vector<std::string> names;
    std::map<std::string, int> community;
    for (std::size_t i = 0; i < universe; ++i) {
      names.push_back("c" + std::to_string(i));
      community[names.back()] = int(rng.index(3));
    }
    auto snapshot = [&](int year) {
      corpus::OccupationYearSnapshot s;
      s.occupation = "11-1111";
      s.year = year;
      std::size_t max_count = 0;
      for (const auto& name : names) {
        const std::size_t count = rng.index(6);  // 0..5 ads list the skill
        if (count > 0) {
          s.skill_counts[name] = count;
          max_count = std::max(max_count, count);
        }
      }
      if (s.skill_counts.empty()) {
        s.skill_counts[names[0]] = 1;
        max_count = 1;
      }
      s.n_ads = max_count + rng.index(4);
      return s;
    };
    const auto s0 = snapshot(2010);
    const auto s1 = snapshot(2018);

    const double skills_level =
        drift::dn_change(s0, s1, drift::ShareBasis::occurrence_share).raw;
    const double community_level = drift::cluster_change(s0, s1, community);
    const double excess = community_level - skills_level;
    worst_excess = std::max(worst_excess, excess);
    if (excess > 1e-12) ++violations;
  }
  out.check(violations == 0,
            std::to_string(trials) +
                " snapshot pairs, cluster_change <= dn_change + 1e-12 "
                "(worst excess " +
                fmt(worst_excess) + "), violations " +
                std::to_string(violations));
  return out;
}

// ---------------------------------------------------------------------------
// 4. Trained embeddings recover the planted geometry at desk scale: mean
//    within-cluster cosine beats cross-cluster by >= 0.2 and the measured
//    vector change ranks occupations like the planted oracle (Spearman >=
//    0.8), single worker, under 5 minutes.
Outcome embedding_recovery() {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;

  auto spec = synthlab::SynthSpec::desk();
  auto world = synthlab::build_world(spec);
  TempDir tmp;
  const auto postings_path = tmp.file("postings.jsonl");
  synthlab::generate_corpus(world, postings_path);
  auto parsed = corpus::parse_postings_file(postings_path);
  const auto posts = corpus::deduplicate(parsed.postings);
  const std::vector<int> years = {spec.t0, spec.t1};
  const auto active = corpus::filter_active_occupations(posts, 100, years);

  const auto vocab = corpus::SkillVocabulary::build(posts);
  embed::TrainingConfig cfg;
  cfg.dimension = 32;
  cfg.epochs = 5;
  cfg.negatives = 5;
  cfg.seed = 41;
  cfg.workers = 1;
  const auto pairs = embed::build_training_pairs(posts, vocab, cfg);
  const auto embedding = embed::train_skipgram(pairs, vocab, cfg);

  // (a) planted cluster geometry in cosine space.
  std::map<std::string, int> cluster_of;
  for (std::size_t id = 0; id < world.skill_names.size(); ++id) {
    cluster_of[world.skill_names[id]] = world.skill_cluster[id];
  }
  double within = 0.0, cross = 0.0;
  std::size_t n_within = 0, n_cross = 0;
  const std::size_t n = embedding.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto ci = cluster_of.find(embedding.skills[i]);
    if (ci == cluster_of.end()) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto cj = cluster_of.find(embedding.skills[j]);
      if (cj == cluster_of.end()) continue;
      const double cos = embed::cosine_similarity(
          embedding, embedding.skills[i], embedding.skills[j]);
      if (ci->second == cj->second) {
        within += cos;
        ++n_within;
      } else {
        cross += cos;
        ++n_cross;
      }
    }
  }
  within /= double(n_within);
  cross /= double(n_cross);
  out.check(within - cross >= 0.2,
            "within-cluster cosine " + fmt(within) + " - cross " + fmt(cross) +
                " = " + fmt(within - cross) + " >= 0.2");

  // (b) measured change ranks like the planted oracle.
  std::vector<double> oracle_values, measured_values;
  const auto scope = drift::SkillScope::all();
  const auto mode = drift::WeightMode::frequency;
  for (const auto& occ : active) {
    const auto s0 = corpus::build_snapshot(posts, occ, spec.t0);
    const auto s1 = corpus::build_snapshot(posts, occ, spec.t1);
    const double measured = drift::vector_change(
        drift::occupation_vector(s0, embedding, mode, scope),
        drift::occupation_vector(s1, embedding, mode, scope));
    oracle_values.push_back(synthlab::oracle_change(world, occ));
    measured_values.push_back(measured);
  }
  out.check(oracle_values.size() == 40,
            "40 active occupations, got " +
                std::to_string(oracle_values.size()));
  const double rho = oracles::spearman_direct(oracle_values, measured_values);
  out.check(rho >= 0.8, "Spearman(oracle, measured) = " + fmt(rho) + " >= 0.8");

  const double elapsed = seconds_since(start);
  out.check(elapsed < 300.0, fmt(elapsed) + "s < 300s (one worker)");
  return out;
}

// ---------------------------------------------------------------------------
// 5. Dictionary learning recovers a planted 20-atom, 3-sparse basis: >= 80%
//    of atoms matched at |cos| > 0.9, the selection rule picks 20 from
//    {10, 20, 40}, and the reconstruction error never increases across a
//    dictionary-update sweep.
Outcome dictionary_recovery() {
  Outcome out;
  Rng rng(5150);
  const int dimension = 32;
  const int true_atom_count = 20;
  const int sparsity = 3;
  const int n_vectors = 400;

  std::vector<std::vector<double>> truth(
      true_atom_count, std::vector<double>(dimension, 0.0));
  for (auto& atom : truth) {
    double norm = 0.0;
    for (auto& v : atom) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : atom) v /= norm;
  }

  embed::EmbeddingMatrix synthetic;
  synthetic.dimension = dimension;
  for (int s = 0; s < n_vectors; ++s) {
    char name[16];
    std::snprintf(name, sizeof(name), "sk%03d", s);
    synthetic.skills.push_back(name);
    std::vector<double> row(dimension, 0.0);
    std::set<std::size_t> chosen;
    while (chosen.size() < std::size_t(sparsity)) {
      chosen.insert(rng.index(true_atom_count));
    }
    for (const auto a : chosen) {
      const double coefficient = 0.4 + 1.1 * rng.uniform01();
      for (int d = 0; d < dimension; ++d) {
        row[std::size_t(d)] += coefficient * truth[a][std::size_t(d)];
      }
    }
    for (int d = 0; d < dimension; ++d) {
      synthetic.input.push_back(
          float(row[std::size_t(d)] + 0.01 * rng.normal()));
    }
  }
  synthetic.output = synthetic.input;
  synthetic.rebuild_index();

  atoms::KsvdConfig cfg;
  cfg.atom_count = true_atom_count;
  cfg.sparsity = sparsity;
  cfg.iterations = 30;
  cfg.seed = 9;
  cfg.top_skills = 10;

  atoms::KsvdDiagnostics diagnostics;
  const auto dictionary = atoms::ksvd_learn(synthetic, cfg, &diagnostics);

  int matched = 0;
  for (const auto& atom : truth) {
    double best = 0.0;
    for (int j = 0; j < dictionary.atom_count; ++j) {
      best = std::max(best, std::abs(cosine_between(atom.data(),
                                                    dictionary.atom(j),
                                                    dimension)));
    }
    if (best > 0.9) ++matched;
  }
  out.check(matched >= 16, "atoms matched at |cos| > 0.9: " +
                               std::to_string(matched) + "/20 >= 16");

  bool monotone = !diagnostics.error_before_update.empty();
  double worst_increase = 0.0;
  for (std::size_t i = 0; i < diagnostics.error_before_update.size(); ++i) {
    const double increase = diagnostics.error_after_update[i] -
                            diagnostics.error_before_update[i];
    worst_increase = std::max(worst_increase, increase);
    if (increase > 1e-9) monotone = false;
  }
  out.check(monotone,
            "reconstruction error non-increasing across every update sweep "
            "(worst increase " +
                fmt(worst_increase) + " <= 1e-9)");

  const auto selection =
      atoms::select_atom_count(synthetic, {10, 20, 40}, cfg);
  out.check(selection.best_atom_count == 20,
            "selection over {10,20,40} picked " +
                std::to_string(selection.best_atom_count) + ", expected 20");
  return out;
}

// ---------------------------------------------------------------------------
// 6. Atom bookkeeping identities on a real learned dictionary: importance
//    sums to the number of occupations (1e-9), importance changes sum to
//    zero on matched occupation sets (1e-9), and 210 atoms land bijectively
//    on the 14 x 15 grid.
Outcome atom_accounting() {
  Outcome out;

  auto spec = synthlab::SynthSpec::paired_small();
  auto world = synthlab::build_world(spec);
  TempDir tmp;
  const auto postings_path = tmp.file("postings.jsonl");
  synthlab::generate_corpus(world, postings_path);
  auto parsed = corpus::parse_postings_file(postings_path);
  const auto posts = corpus::deduplicate(parsed.postings);
  const std::vector<int> years = {spec.t0, spec.t1};
  const auto active = corpus::filter_active_occupations(posts, 50, years);

  const auto vocab = corpus::SkillVocabulary::build(posts);
  embed::TrainingConfig cfg;
  cfg.dimension = 16;
  cfg.epochs = 3;
  cfg.negatives = 4;
  cfg.seed = 2;
  cfg.workers = 1;
  cfg.validation_pairs = 500;
  cfg.max_pairs_per_posting = 80;
  const auto embedding =
      embed::train_skipgram(embed::build_training_pairs(posts, vocab, cfg),
                            vocab, cfg);

  atoms::KsvdConfig kcfg;
  kcfg.atom_count = 12;
  kcfg.sparsity = 3;
  kcfg.iterations = 8;
  kcfg.seed = 3;
  kcfg.top_skills = 10;
  const auto dictionary = atoms::ksvd_learn(embedding, kcfg);

  std::vector<atoms::OccupationAtomProfile> at_t0, at_t1;
  for (const auto& occ : active) {
    at_t0.push_back(atoms::occupation_atom_weights(
        corpus::build_snapshot(posts, occ, spec.t0), dictionary));
    at_t1.push_back(atoms::occupation_atom_weights(
        corpus::build_snapshot(posts, occ, spec.t1), dictionary));
  }
  const auto series = atoms::atom_importance_change(at_t0, at_t1);

  const double n_occupations = double(active.size());
  double sum_t0 = 0.0, sum_t1 = 0.0, sum_change = 0.0;
  for (const double v : series.importance_t0) sum_t0 += v;
  for (const double v : series.importance_t1) sum_t1 += v;
  for (const double v : series.change) sum_change += v;
  out.check(std::abs(sum_t0 - n_occupations) <= 1e-9,
            "sum importance(t0) = " + fmt(sum_t0) + " == " +
                fmt(n_occupations) + " +- 1e-9");
  out.check(std::abs(sum_t1 - n_occupations) <= 1e-9,
            "sum importance(t1) = " + fmt(sum_t1) + " == " +
                fmt(n_occupations) + " +- 1e-9");
  out.check(series.mismatched_occupations.empty() &&
                std::abs(sum_change) <= 1e-9,
            "sum importance change = " + fmt(sum_change) +
                " == 0 +- 1e-9 on matched sets");

  // 210 atoms on the 14 x 15 lattice.
  Rng rng(6);
  atoms::AtomDictionary big;
  big.dimension = 32;
  big.atom_count = 210;
  big.sparsity = 3;
  big.atoms.resize(std::size_t(210) * 32);
  for (int j = 0; j < 210; ++j) {
    double norm = 0.0;
    for (int d = 0; d < 32; ++d) {
      const double v = rng.normal();
      big.atoms[std::size_t(j) * 32 + std::size_t(d)] = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (int d = 0; d < 32; ++d) {
      big.atoms[std::size_t(j) * 32 + std::size_t(d)] /= norm;
    }
  }
  const auto coordinates = atoms::pca_coordinates(big);
  const auto grid = atoms::grid_layout(coordinates, 14, 15);
  bool bijective = grid.rows == 14 && grid.cols == 15 &&
                   grid.cell_of_atom.size() == 210 &&
                   grid.atom_of_cell.size() == 210;
  std::set<int> cells_used, atoms_used;
  for (const int cell : grid.cell_of_atom) {
    bijective = bijective && cell >= 0 && cell < 210;
    cells_used.insert(cell);
  }
  for (const int atom : grid.atom_of_cell) {
    bijective = bijective && atom >= 0 && atom < 210;
    atoms_used.insert(atom);
  }
  bijective =
      bijective && cells_used.size() == 210 && atoms_used.size() == 210;
  for (int j = 0; bijective && j < 210; ++j) {
    bijective = grid.atom_of_cell[std::size_t(grid.cell_of_atom[std::size_t(
                    j)])] == j;
  }
  out.check(bijective, "grid_layout is a bijection of 210 atoms onto 14x15");
  return out;
}

// ---------------------------------------------------------------------------
// 7. Community detection: a planted 6-block graph is recovered with NMI >=
//    0.9, modularity never decreases across passes, and the 6-node
//    two-clique toy values match brute force to 1e-12.
Outcome community_recovery() {
  Outcome out;

  // Toy 1: two disjoint triangles; hand value 1/2.
  graph::Graph disjoint;
  disjoint.nodes = 6;
  disjoint.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0},
                    {3, 4, 1.0}, {3, 5, 1.0}, {4, 5, 1.0}};
  const std::vector<int> split = {0, 0, 0, 1, 1, 1};
  auto tuples = [](const graph::Graph& g) {
    std::vector<std::tuple<int, int, double>> t;
    for (const auto& e : g.edges) t.emplace_back(e.a, e.b, e.weight);
    return t;
  };
  const double q_disjoint = graph::modularity(disjoint, split);
  out.check(std::abs(q_disjoint - 0.5) <= 1e-12 &&
                std::abs(q_disjoint - oracles::modularity_direct(
                                          6, tuples(disjoint), split)) <=
                    1e-12,
            "disjoint triangles Q = " + fmt(q_disjoint) +
                " == 1/2 and matches brute force within 1e-12");

  // Toy 2: the same cliques joined by one bridge edge; hand value 5/14.
  graph::Graph bridged = disjoint;
  bridged.edges.push_back({2, 3, 1.0});
  const double q_bridged = graph::modularity(bridged, split);
  out.check(std::abs(q_bridged - 5.0 / 14.0) <= 1e-12 &&
                std::abs(q_bridged - oracles::modularity_direct(
                                         6, tuples(bridged), split)) <= 1e-12,
            "bridged cliques Q = " + fmt(q_bridged) +
                " == 5/14 and matches brute force within 1e-12");

  // Planted partition: 6 blocks of 12 nodes, p_in = 0.3, p_out = 0.01.
  Rng rng(607);
  graph::Graph planted;
  planted.nodes = 72;
  std::vector<int> truth(72);
  for (int i = 0; i < 72; ++i) truth[std::size_t(i)] = i / 12;
  for (int i = 0; i < 72; ++i) {
    for (int j = i + 1; j < 72; ++j) {
      const double p =
          truth[std::size_t(i)] == truth[std::size_t(j)] ? 0.3 : 0.01;
      if (rng.uniform01() < p) planted.edges.push_back({i, j, 1.0});
    }
  }
  const auto partition = graph::louvain_partition(planted, 99);
  const double nmi = oracles::nmi(partition.community, truth);
  out.check(nmi >= 0.9, "planted 6-block NMI = " + fmt(nmi) + " >= 0.9");

  bool monotone = !partition.pass_modularity.empty();
  for (std::size_t i = 1; i < partition.pass_modularity.size(); ++i) {
    if (partition.pass_modularity[i] <
        partition.pass_modularity[i - 1] - 1e-12) {
      monotone = false;
    }
  }
  out.check(monotone, "modularity non-decreasing across " +
                          std::to_string(partition.pass_modularity.size()) +
                          " passes");
  return out;
}

// ---------------------------------------------------------------------------
// 8. Statistics agree with independent oracles: HHI hand values exactly,
//    OLS with and without fixed effects to 1e-8 on 20 random designs each,
//    correlation coefficients to 1e-10.
Outcome statistics_oracles() {
  Outcome out;

  // HHI hand values, exact equality.
  auto posting = [](const std::string& employer, int i) {
    corpus::JobPosting p;
    p.post_id = "h" + std::to_string(i);
    p.occupation = "11-1111";
    p.year = 2010;
    p.employer = employer;
    p.lat = 40.0;
    p.lon = -80.0;
    p.skills = {"alpha"};
    return p;
  };
  const auto market = strata::MarketKey::of(40.0, -80.0);
  std::vector<corpus::JobPosting> cell;
  int id = 0;
  for (int i = 0; i < 4; ++i) cell.push_back(posting("a", id++));
  const double hhi_single =
      strata::employer_concentration(cell, "11-1111", market, 2010);
  cell.clear();
  for (int i = 0; i < 2; ++i) cell.push_back(posting("a", id++));
  for (int i = 0; i < 2; ++i) cell.push_back(posting("b", id++));
  const double hhi_half =
      strata::employer_concentration(cell, "11-1111", market, 2010);
  cell.clear();
  for (int i = 0; i < 5; ++i) cell.push_back(posting("a", id++));
  for (int i = 0; i < 3; ++i) cell.push_back(posting("b", id++));
  for (int i = 0; i < 2; ++i) cell.push_back(posting("c", id++));
  const double hhi_382 =
      strata::employer_concentration(cell, "11-1111", market, 2010);
  out.check(hhi_single == 1.0 && hhi_half == 0.5 && hhi_382 == 0.38,
            "HHI {1} -> " + fmt(hhi_single) + ", {.5,.5} -> " + fmt(hhi_half) +
                ", {.5,.3,.2} -> " + fmt(hhi_382) + " (exact)");

  // Plain OLS vs normal equations on 20 random designs.
  Rng rng(88);
  double worst_plain = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 12 + rng.index(29);
    const std::size_t k = 1 + rng.index(3);
    strata::Design design;
    std::vector<std::vector<double>> oracle_columns(
        1, std::vector<double>(n, 1.0));
    for (std::size_t c = 0; c < k; ++c) {
      design.names.push_back("x" + std::to_string(c));
      std::vector<double> column(n);
      for (auto& v : column) v = rng.normal();
      oracle_columns.push_back(column);
      design.columns.push_back(std::move(column));
    }
    std::vector<double> response(n);
    for (std::size_t r = 0; r < n; ++r) {
      response[r] = 0.5 + rng.normal();
      for (std::size_t c = 0; c < k; ++c) {
        response[r] += (double(c) - 1.0) * design.columns[c][r];
      }
    }
    const auto fit = strata::ols_fit(design, response);
    const auto oracle =
        oracles::ols_normal_equations(oracle_columns, response, n - k - 1);
    for (std::size_t c = 0; c < k + 1; ++c) {
      worst_plain = std::max(
          {worst_plain, std::abs(fit.coefficients[c] - oracle.beta[c]),
           std::abs(fit.std_errors[c] - oracle.std_error[c])});
    }
    worst_plain =
        std::max(worst_plain, std::abs(fit.r_squared - oracle.r_squared));
  }
  out.check(worst_plain <= 1e-8,
            "OLS vs normal equations, 20 designs, worst |delta| = " +
                fmt(worst_plain) + " <= 1e-8");

  // Fixed effects vs explicit dummy variables on 20 random designs.
  Rng fe_rng(1234);
  double worst_fe = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 18 + rng.index(30);
    const std::size_t k = 1 + fe_rng.index(2);
    const std::size_t group_count = 3 + fe_rng.index(3);
    std::vector<std::string> groups(n);
    for (std::size_t r = 0; r < n; ++r) {
      groups[r] = "g" + std::to_string(r % group_count);
    }
    strata::Design design;
    for (std::size_t c = 0; c < k; ++c) {
      design.names.push_back("x" + std::to_string(c));
      std::vector<double> column(n);
      for (auto& v : column) v = fe_rng.normal();
      design.columns.push_back(std::move(column));
    }
    std::vector<double> response(n);
    for (std::size_t r = 0; r < n; ++r) {
      response[r] = double(r % group_count) + fe_rng.normal();
      for (std::size_t c = 0; c < k; ++c) {
        response[r] += 0.75 * design.columns[c][r];
      }
    }
    const auto fit = strata::ols_fit(design, response, &groups);

    std::vector<std::vector<double>> oracle_columns;
    for (std::size_t g = 0; g < group_count; ++g) {
      std::vector<double> dummy(n, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        if (r % group_count == g) dummy[r] = 1.0;
      }
      oracle_columns.push_back(std::move(dummy));
    }
    for (std::size_t c = 0; c < k; ++c) {
      oracle_columns.push_back(design.columns[c]);
    }
    const auto oracle = oracles::ols_normal_equations(oracle_columns, response,
                                                      n - k - group_count);
    for (std::size_t c = 0; c < k; ++c) {
      worst_fe = std::max(
          {worst_fe,
           std::abs(fit.coefficients[c] - oracle.beta[group_count + c]),
           std::abs(fit.std_errors[c] - oracle.std_error[group_count + c])});
    }
    worst_fe = std::max(worst_fe, std::abs(fit.r_squared - oracle.r_squared));
  }
  out.check(worst_fe <= 1e-8,
            "fixed-effects OLS vs dummy-variable oracle, 20 designs, "
            "worst |delta| = " +
                fmt(worst_fe) + " <= 1e-8");

  // Correlations vs direct formulas.
  Rng corr_rng(99);
  double worst_corr = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 5 + corr_rng.index(46);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = corr_rng.normal();
      y[i] = 0.4 * x[i] + corr_rng.normal();
      if (corr_rng.uniform01() < 0.3) {
        x[i] = std::round(x[i] * 10.0) / 10.0;  // inject rank ties
        y[i] = std::round(y[i] * 10.0) / 10.0;
      }
    }
    const double pearson =
        strata::correlate(x, y, strata::CorrelationMethod::pearson)
            .coefficient;
    const double spearman =
        strata::correlate(x, y, strata::CorrelationMethod::spearman)
            .coefficient;
    worst_corr = std::max(
        {worst_corr, std::abs(pearson - oracles::pearson_direct(x, y)),
         std::abs(spearman - oracles::spearman_direct(x, y))});
  }
  out.check(worst_corr <= 1e-10,
            "Pearson/Spearman vs direct formulas, 25 draws, worst |delta| = " +
                fmt(worst_corr) + " <= 1e-10");
  return out;
}

// ---------------------------------------------------------------------------
// 9. The demographic dominance rule reproduces the worked ratios: 80/50 ->
//    1.6 dominant; 75/50 and 25/17 -> both dominant at threshold 1.5.
Outcome dominance_rule() {
  Outcome out;
  const std::vector<strata::DemographicShare> shares = {
      {"11-1111", "group-a", 0.80, 0.50},
      {"22-2222", "group-a", 0.75, 0.50},
      {"33-3333", "group-b", 0.25, 0.17},
      {"44-4444", "group-a", 0.70, 0.50},
  };
  const auto records = strata::demographic_dominance(shares);
  out.check(records.size() == 4, "4 records");
  out.check(records[0].ratio == 1.6 && records[0].dominant,
            "80/50 -> ratio " + fmt(records[0].ratio) + ", dominant");
  out.check(records[1].ratio == 1.5 && records[1].dominant,
            "75/50 -> ratio " + fmt(records[1].ratio) + ", dominant");
  out.check(records[2].ratio == 1.5 && records[2].dominant,
            "25/17 -> ratio " + fmt(records[2].ratio) +
                ", dominant (1.47 rounds to 1.5)");
  out.check(records[3].ratio == 1.4 && !records[3].dominant,
            "70/50 -> ratio " + fmt(records[3].ratio) + ", not dominant");
  return out;
}

// ---------------------------------------------------------------------------
// 10. Running the real CLI on the desk corpus with a fixed seed and one
//     worker twice yields byte-identical artifacts, in under 10 minutes per
//     full run.
Outcome cli_determinism() {
  Outcome out;
  TempDir tmp;
  const std::string out_dir = tmp.file("out");

  nlohmann::json config = {
      {"output_dir", out_dir},
      {"synth", {{"preset", "desk"}, {"seed", 9001}}},
      {"input",
       {{"postings", out_dir + "/synth/postings.jsonl"},
        {"demographics", out_dir + "/synth/demographics.csv"},
        {"job_zones", out_dir + "/synth/job_zones.csv"},
        {"mobility", out_dir + "/synth/mobility.csv"}}},
      {"embedding", {{"dimension", 32}, {"seed", 17}}},
  };
  const std::string config_path = tmp.file("desk.json");
  testsupport::spit(config_path, config.dump(2) + "\n");

  auto run = [&](const std::string& subcommand) {
    const std::string command = "SKILLSCAPE_LOG=quiet " +
                                std::string(SKILLSCAPE_CLI_PATH) + " -c " +
                                config_path + " --workers 1 " + subcommand +
                                " > /dev/null 2>&1";
    const int raw = std::system(command.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  auto snapshot_tree = [&]() {
    std::map<std::string, std::string> files;
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(out_dir)) {
      if (!entry.is_regular_file()) continue;
      files[std::filesystem::relative(entry.path(), out_dir).string()] =
          testsupport::slurp(entry.path().string());
    }
    return files;
  };

  out.check(run("synth") == 0, "synth exits 0");

  const auto first_start = std::chrono::steady_clock::now();
  out.check(run("all") == 0, "first `all` exits 0");
  const double first_elapsed = seconds_since(first_start);
  out.check(first_elapsed < 600.0, fmt(first_elapsed) + "s < 600s");
  const auto first = snapshot_tree();

  const auto second_start = std::chrono::steady_clock::now();
  out.check(run("all") == 0, "second `all` exits 0");
  const double second_elapsed = seconds_since(second_start);
  out.check(second_elapsed < 600.0, fmt(second_elapsed) + "s < 600s");
  const auto second = snapshot_tree();

  bool identical = first.size() == second.size();
  std::string first_difference;
  for (const auto& [path, bytes] : first) {
    const auto found = second.find(path);
    if (found == second.end() || found->second != bytes) {
      identical = false;
      if (first_difference.empty()) first_difference = path;
    }
  }
  out.check(identical,
            std::to_string(first.size()) +
                " artifacts byte-identical across both runs" +
                (first_difference.empty() ? ""
                                          : " (first difference: " +
                                                first_difference + ")"));
  return out;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "metric_reversal", metric_reversal},
    {2, "share_change_oracle", share_change_oracle},
    {3, "cluster_bound", cluster_bound},
    {4, "embedding_recovery", embedding_recovery},
    {5, "dictionary_recovery", dictionary_recovery},
    {6, "atom_accounting", atom_accounting},
    {7, "community_recovery", community_recovery},
    {8, "statistics_oracles", statistics_oracles},
    {9, "dominance_rule", dominance_rule},
    {10, "cli_determinism", cli_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 10) {
      std::cerr << "usage: acceptance [1..10]\n";
      return 64;
    }
  }

  int failures = 0;
  for (const auto& criterion : kCriteria) {
    if (only != 0 && criterion.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.notes = {std::string("unexpected exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    std::string joined;
    for (const auto& note : outcome.notes) {
      joined += (joined.empty() ? "" : "; ") + note;
    }
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion "
              << criterion.id << " (" << criterion.name << "): " << joined
              << " [" << fmt(elapsed) << "s]" << std::endl;
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
