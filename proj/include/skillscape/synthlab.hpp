#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace skillscape::synthlab {

// How an occupation's planted skill distribution moves between the two years.
struct DriftPlan {
  enum class Kind { none, reweight, within_swap, cross_swap };
  Kind kind = Kind::none;
  int swaps = 0;            // pool positions replaced at t1
  int target_cluster = -1;  // destination cluster for cross_swap
  double reweight = 0.0;    // mass shift for reweight
};

struct PlantedOccupation {
  std::string code;  // "dd-dddd"
  int home_cluster = 0;
  bool sparse = false;  // deliberately below the activity threshold in t0
  DriftPlan drift;
  int posts_t0 = 0;
  int posts_t1 = 0;
  // sampling weights over skill ids, normalized to 1 (empty for fixed-set)
  std::vector<std::pair<int, double>> weights_t0;
  std::vector<std::pair<int, double>> weights_t1;
  // fixed-set occupations list exactly these skills in every ad
  std::vector<int> fixed_t0;
  std::vector<int> fixed_t1;
};

// The drift-metric reversal pair: "parallel" swaps core skills within its
// cluster, "orthogonal" swaps the same number into a different cluster, with
// identical ad and skill counts on both sides.
struct PairedConstruction {
  std::string parallel_occ;
  std::string orthogonal_occ;
  int set_size = 0;
  int swaps = 0;
};

struct SynthSpec {
  std::uint64_t seed = 9001;
  int t0 = 2010;
  int t1 = 2018;
  int latent_dim = 32;
  int clusters = 6;
  int skills = 500;
  int occupations = 40;  // active, including the paired construction
  int sparse_occupations = 5;
  int posts_per_occupation_year = 600;
  int skills_per_post_min = 6;
  int skills_per_post_max = 12;
  int pool_size = 30;       // home-cluster skills per occupation
  int background_pool = 20; // off-cluster skills per occupation
  double off_cluster_mass = 0.08;
  double within_cluster_noise = 0.35;  // latent scatter around cluster centers
  int pair_posts_per_year = 150;
  int pair_set_size = 10;
  int pair_swaps = 4;
  double duplicate_fraction = 0.07;
  int bad_lines = 0;
  int towns = 25;
  int employers_per_occupation = 12;
  double employer_missing_fraction = 0.03;
  double education_coverage = 0.85;
  double salary_coverage = 0.65;
  double job_zone_coverage = 0.90;

  // Desk-scale configuration exercised by the acceptance suite.
  static SynthSpec desk();
  // Two clusters, eight occupations; quick enough for unit tests.
  static SynthSpec paired_small();
};

struct Bookkeeping {
  std::size_t unique_posts = 0;
  std::size_t duplicate_posts = 0;
  std::size_t bad_lines = 0;
  std::size_t total_lines = 0;
  std::map<std::string, std::map<int, std::size_t>> occ_year_posts;
  std::map<std::string, std::map<int, std::size_t>> employer_year_posts;
  // market key is the 0.1-degree cell, encoded "lat_decideg/lon_decideg"
  std::map<std::string, std::map<int, std::size_t>> market_year_posts;
};

struct PlantedWorld {
  SynthSpec spec;
  std::vector<std::string> skill_names;  // id -> canonical name
  std::vector<int> skill_cluster;        // id -> cluster
  std::vector<double> latent;            // id * latent_dim, unit rows
  std::vector<PlantedOccupation> occupations;
  PairedConstruction pair;
  std::vector<std::pair<double, double>> town_centers;
  Bookkeeping books;  // filled by generate_corpus

  const double* latent_of(int skill_id) const {
    return latent.data() + std::size_t(skill_id) * std::size_t(spec.latent_dim);
  }
  const PlantedOccupation* find(const std::string& code) const;
};

// Lays out clusters, skills, occupations and drift plans. Deterministic in
// the seed; generation does not mutate the plan.
PlantedWorld build_world(const SynthSpec& spec);

// Writes the posting JSONL stream (and bookkeeping into world.books).
// Byte-identical output for identical specs.
void generate_corpus(PlantedWorld& world, const std::string& postings_path);

// Side inputs for the stratified analyses, derived from the same world:
// demographics.csv, job_zones.csv, mobility.csv next to the postings file.
void write_side_inputs(const PlantedWorld& world, const std::string& dir);

void write_manifest(const PlantedWorld& world, const std::string& path);
PlantedWorld load_manifest(const std::string& path);

// 1 - cosine between the latent mean skill positions of the occupation's
// planted t0 and t1 core distributions. Throws NotFoundError for unknown
// codes, DomainError when a mean has zero norm.
double oracle_change(const PlantedWorld& world, const std::string& occupation);

// Cosine of the latent means of two occupations' t0 distributions.
double oracle_similarity(const PlantedWorld& world, const std::string& a,
                         const std::string& b);

}  // namespace skillscape::synthlab
