#include "skillscape/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "skillscape/corpus.hpp"
#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"
#include "skillscape/rng.hpp"

namespace skillscape::synthlab {

using corpus::JobPosting;
using nlohmann::json;

SynthSpec SynthSpec::desk() {
  SynthSpec s;
  s.bad_lines = 25;
  return s;
}

SynthSpec SynthSpec::paired_small() {
  SynthSpec s;
  s.seed = 4242;
  s.latent_dim = 16;
  s.clusters = 2;
  s.skills = 80;
  s.occupations = 8;
  s.sparse_occupations = 0;
  s.posts_per_occupation_year = 300;
  s.skills_per_post_min = 6;
  s.skills_per_post_max = 10;
  s.pool_size = 25;
  s.background_pool = 10;
  s.towns = 6;
  s.duplicate_fraction = 0.05;
  return s;
}

const PlantedOccupation* PlantedWorld::find(const std::string& code) const {
  for (const auto& o : occupations) {
    if (o.code == code) return &o;
  }
  return nullptr;
}

namespace {

constexpr int kEduLevels[5] = {12, 14, 16, 18, 21};

int edu_index(int years) {
  for (int i = 0; i < 5; ++i) {
    if (kEduLevels[i] == years) return i;
  }
  return 0;
}

int cluster_education(int cluster, int clusters) {
  return kEduLevels[(cluster * 5) / std::max(clusters, 1)];
}

int cluster_zone(int cluster, int clusters) {
  return std::clamp(1 + (cluster * 5) / std::max(clusters, 1), 1, 5);
}

double cluster_salary_base(int cluster) { return 30000.0 * (1.0 + 0.45 * cluster); }

std::string make_code(int i, int home_cluster) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d-%04d", 11 + (home_cluster % 6) * 8,
                1000 + (i * 13) % 9000);
  return buf;
}

std::string skill_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "skill %04d", id);
  return buf;
}

std::vector<double> weighted_latent_mean(const PlantedWorld& w,
                                         const PlantedOccupation& occ,
                                         bool first_year) {
  const int d = w.spec.latent_dim;
  std::vector<double> mean(std::size_t(d), 0.0);
  const auto& fixed = first_year ? occ.fixed_t0 : occ.fixed_t1;
  const auto& weights = first_year ? occ.weights_t0 : occ.weights_t1;
  if (!fixed.empty()) {
    for (int id : fixed) {
      const double* x = w.latent_of(id);
      for (int k = 0; k < d; ++k) mean[std::size_t(k)] += x[k];
    }
    for (auto& v : mean) v /= double(fixed.size());
  } else {
    for (const auto& [id, wt] : weights) {
      const double* x = w.latent_of(id);
      for (int k = 0; k < d; ++k) mean[std::size_t(k)] += wt * x[k];
    }
  }
  return mean;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("zero-norm latent mean");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// n distinct elements of ids, uniformly, order randomized.
std::vector<int> sample_distinct(const std::vector<int>& ids, std::size_t n, Rng& rng) {
  if (n > ids.size()) throw ConfigError("synth: not enough candidate skills");
  std::vector<int> pool = ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  }
  pool.resize(n);
  return pool;
}

std::vector<int> ids_not_in(const std::vector<int>& candidates,
                            const std::set<int>& exclude) {
  std::vector<int> out;
  out.reserve(candidates.size());
  for (int id : candidates) {
    if (!exclude.contains(id)) out.push_back(id);
  }
  return out;
}

std::string market_key_string(double lat, double lon) {
  const long la = std::lround(lat * 10.0);
  const long lo = std::lround(lon * 10.0);
  return std::to_string(la) + "/" + std::to_string(lo);
}

}  // namespace

PlantedWorld build_world(const SynthSpec& spec) {
  if (spec.clusters < 2) throw ConfigError("synth: need at least 2 clusters");
  if (spec.latent_dim < spec.clusters) {
    throw ConfigError("synth: latent_dim must be >= clusters");
  }
  if (spec.occupations < 2) throw ConfigError("synth: need at least 2 occupations");
  if (spec.skills_per_post_min < 1 ||
      spec.skills_per_post_max < spec.skills_per_post_min) {
    throw ConfigError("synth: invalid skills_per_post range");
  }
  const int per_cluster = spec.skills / spec.clusters;
  if (per_cluster < spec.pool_size + 13) {
    throw ConfigError("synth: clusters too small for pools and swaps");
  }
  if (spec.pool_size <= spec.skills_per_post_max) {
    throw ConfigError("synth: pool_size must exceed skills_per_post_max");
  }
  if (per_cluster < 2 * spec.pair_set_size + spec.pair_swaps) {
    throw ConfigError("synth: clusters too small for the paired construction");
  }

  PlantedWorld w;
  w.spec = spec;
  Rng rng(spec.seed);

  // Orthonormal cluster centers via Gram-Schmidt on Gaussian draws.
  const int d = spec.latent_dim;
  std::vector<std::vector<double>> centers(std::size_t(spec.clusters),
                                           std::vector<double>(std::size_t(d)));
  {
    Rng r = rng.fork(0xC1);
    for (auto& c : centers) {
      for (auto& v : c) v = r.normal();
    }
    for (int i = 0; i < spec.clusters; ++i) {
      auto& ci = centers[std::size_t(i)];
      for (int j = 0; j < i; ++j) {
        const auto& cj = centers[std::size_t(j)];
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += ci[std::size_t(k)] * cj[std::size_t(k)];
        for (int k = 0; k < d; ++k) ci[std::size_t(k)] -= dot * cj[std::size_t(k)];
      }
      double norm = 0.0;
      for (double v : ci) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-9) throw DomainError("degenerate cluster center");
      for (auto& v : ci) v /= norm;
    }
  }

  // Skills: balanced cluster assignment, unit latent positions near centers.
  w.skill_names.resize(std::size_t(spec.skills));
  w.skill_cluster.resize(std::size_t(spec.skills));
  w.latent.assign(std::size_t(spec.skills) * std::size_t(d), 0.0);
  std::vector<std::vector<int>> cluster_skills(std::size_t(spec.clusters));
  {
    Rng r = rng.fork(0x5C);
    for (int id = 0; id < spec.skills; ++id) {
      const int c = id % spec.clusters;
      w.skill_names[std::size_t(id)] = skill_name(id);
      w.skill_cluster[std::size_t(id)] = c;
      cluster_skills[std::size_t(c)].push_back(id);
      double* x = w.latent.data() + std::size_t(id) * std::size_t(d);
      double norm = 0.0;
      for (int k = 0; k < d; ++k) {
        x[k] = centers[std::size_t(c)][std::size_t(k)] +
               spec.within_cluster_noise * r.normal();
        norm += x[k] * x[k];
      }
      norm = std::sqrt(norm);
      for (int k = 0; k < d; ++k) x[k] /= norm;
    }
  }

  // Paired construction: both occupations live in cluster 0; the orthogonal
  // one swaps into cluster 1. Identical ad counts, set sizes and swap counts.
  {
    Rng r = rng.fork(0xFA12);
    const std::size_t m = std::size_t(spec.pair_set_size);
    const std::size_t s = std::size_t(spec.pair_swaps);
    auto c0 = sample_distinct(cluster_skills[0], 2 * m + s, r);
    std::vector<int> p_t0(c0.begin(), c0.begin() + long(m));
    std::vector<int> f_t0(c0.begin() + long(m), c0.begin() + long(2 * m));
    std::vector<int> p_added(c0.begin() + long(2 * m), c0.end());
    auto f_added = sample_distinct(cluster_skills[1], s, r);

    auto swap_tail = [&](std::vector<int> base, const std::vector<int>& added) {
      // replace the last `s` members, keep the rest
      for (std::size_t i = 0; i < added.size(); ++i) {
        base[base.size() - added.size() + i] = added[i];
      }
      return base;
    };

    PlantedOccupation par;
    par.code = make_code(0, 0);
    par.home_cluster = 0;
    par.drift = {DriftPlan::Kind::within_swap, spec.pair_swaps, -1, 0.0};
    par.posts_t0 = par.posts_t1 = spec.pair_posts_per_year;
    par.fixed_t0 = p_t0;
    par.fixed_t1 = swap_tail(p_t0, p_added);

    PlantedOccupation orth;
    orth.code = make_code(1, 0);
    orth.home_cluster = 0;
    orth.drift = {DriftPlan::Kind::cross_swap, spec.pair_swaps, 1, 0.0};
    orth.posts_t0 = orth.posts_t1 = spec.pair_posts_per_year;
    orth.fixed_t0 = f_t0;
    orth.fixed_t1 = swap_tail(f_t0, f_added);

    w.occupations.push_back(std::move(par));
    w.occupations.push_back(std::move(orth));
    w.pair = {w.occupations[0].code, w.occupations[1].code, spec.pair_set_size,
              spec.pair_swaps};
  }

  // Sampled occupations: Zipf-weighted home pool plus a thin off-cluster tail.
  Rng occ_rng = rng.fork(0x0CC);
  const int total = spec.occupations + spec.sparse_occupations;
  for (int i = 2; i < total; ++i) {
    PlantedOccupation occ;
    occ.home_cluster = i % spec.clusters;
    occ.code = make_code(i, occ.home_cluster);
    occ.sparse = i >= spec.occupations;
    if (occ.sparse) {
      occ.posts_t0 = 40;
      occ.posts_t1 = spec.posts_per_occupation_year;
    } else {
      occ.posts_t0 = occ.posts_t1 = spec.posts_per_occupation_year;
    }

    auto pool = sample_distinct(cluster_skills[std::size_t(occ.home_cluster)],
                                std::size_t(spec.pool_size), occ_rng);
    std::vector<int> others;
    for (int c = 0; c < spec.clusters; ++c) {
      if (c == occ.home_cluster) continue;
      others.insert(others.end(), cluster_skills[std::size_t(c)].begin(),
                    cluster_skills[std::size_t(c)].end());
    }
    auto background =
        sample_distinct(others, std::size_t(spec.background_pool), occ_rng);

    const double home_mass = 1.0 - spec.off_cluster_mass;
    double zipf_total = 0.0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      zipf_total += 1.0 / std::pow(double(j + 1), 0.9);
    }
    occ.weights_t0.reserve(pool.size() + background.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
      occ.weights_t0.emplace_back(
          pool[j], home_mass * (1.0 / std::pow(double(j + 1), 0.9)) / zipf_total);
    }
    for (int id : background) {
      occ.weights_t0.emplace_back(id, spec.off_cluster_mass / double(background.size()));
    }

    // Drift plans cycle through a spread of intensities and directions.
    const int pattern = occ.sparse ? 1 : (i - 2) % 8;
    occ.weights_t1 = occ.weights_t0;
    std::set<int> in_use;
    for (const auto& [id, _] : occ.weights_t0) in_use.insert(id);
    auto fresh_from = [&](int cluster, std::size_t n) {
      auto candidates = ids_not_in(cluster_skills[std::size_t(cluster)], in_use);
      return sample_distinct(candidates, n, occ_rng);
    };
    auto swap_positions = [&](std::size_t n, const std::vector<int>& repl) {
      // replace n pool positions spread over the ranking
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t pos = (k * pool.size()) / n + 1;
        occ.weights_t1[std::min(pos, pool.size() - 1)].first = repl[k];
      }
    };
    switch (pattern) {
      case 0:
        occ.drift = {DriftPlan::Kind::none, 0, -1, 0.0};
        break;
      case 1:
      case 2: {
        const double delta = pattern == 1 ? 0.18 : 0.38;
        occ.drift = {DriftPlan::Kind::reweight, 0, -1, delta};
        double total_w = 0.0;
        for (std::size_t j = 0; j < occ.weights_t1.size(); ++j) {
          auto& [id, wt] = occ.weights_t1[j];
          wt *= (j < occ.weights_t1.size() / 2) ? (1.0 + delta) : (1.0 - delta);
          total_w += wt;
        }
        for (auto& [id, wt] : occ.weights_t1) wt /= total_w;
        break;
      }
      case 3:
      case 4: {
        const int n = pattern == 3 ? 3 : 8;
        occ.drift = {DriftPlan::Kind::within_swap, n, -1, 0.0};
        swap_positions(std::size_t(n), fresh_from(occ.home_cluster, std::size_t(n)));
        break;
      }
      case 5:
      case 6:
      case 7: {
        const int n = pattern == 5 ? 3 : (pattern == 6 ? 6 : 12);
        const int target =
            (occ.home_cluster + (pattern == 6 ? 2 : 1)) % spec.clusters;
        occ.drift = {DriftPlan::Kind::cross_swap, n, target, 0.0};
        swap_positions(std::size_t(n), fresh_from(target, std::size_t(n)));
        break;
      }
      default:
        break;
    }
    w.occupations.push_back(std::move(occ));
  }

  // Towns with Zipf sizes; centers are deterministic in the seed.
  {
    Rng r = rng.fork(0x70);
    for (int k = 0; k < spec.towns; ++k) {
      w.town_centers.emplace_back(33.0 + r.uniform01() * 12.0,
                                  -120.0 + r.uniform01() * 40.0);
    }
  }
  return w;
}

namespace {

struct EmitContext {
  const PlantedWorld* world;
  Rng rng;
  std::unordered_set<std::string> seen_keys;

  std::string dedup_key(const JobPosting& p) {
    char num[40];
    std::string key = std::to_string(p.year) + '\x1f' + p.occupation + '\x1f' +
                      p.employer + '\x1f';
    std::snprintf(num, sizeof(num), "%a|%a", p.lat, p.lon);
    key += num;
    key.push_back('\x1f');
    if (p.education_years) key += std::to_string(*p.education_years);
    key.push_back('\x1f');
    if (p.salary) {
      std::snprintf(num, sizeof(num), "%a", *p.salary);
      key += num;
    }
    std::vector<std::string> sorted = p.skills;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& s : sorted) {
      key.push_back('\x1e');
      key += s;
    }
    return key;
  }
};

}  // namespace

void generate_corpus(PlantedWorld& world, const std::string& postings_path) {
  const SynthSpec& spec = world.spec;
  EmitContext ctx{&world, Rng(spec.seed).fork(0xE317), {}};
  world.books = {};

  std::vector<JobPosting> unique;
  unique.reserve(1 << 16);

  for (const auto& occ : world.occupations) {
    // Per-occupation sampling machinery.
    AliasTable skills_t0, skills_t1;
    std::vector<int> support_t0, support_t1;
    if (occ.fixed_t0.empty()) {
      std::vector<double> w0, w1;
      for (const auto& [id, wt] : occ.weights_t0) {
        support_t0.push_back(id);
        w0.push_back(wt);
      }
      for (const auto& [id, wt] : occ.weights_t1) {
        support_t1.push_back(id);
        w1.push_back(wt);
      }
      skills_t0 = AliasTable(w0);
      skills_t1 = AliasTable(w1);
    }

    std::vector<double> employer_w;
    for (int k = 0; k < spec.employers_per_occupation; ++k) {
      employer_w.push_back(1.0 / std::pow(double(k + 1), 1.2));
    }
    AliasTable employers(employer_w);

    std::vector<double> town_w;
    for (int k = 0; k < spec.towns; ++k) {
      town_w.push_back((1.0 / std::pow(double(k + 1), 1.1)) *
                       (0.7 + 0.6 * ctx.rng.uniform01()));
    }
    AliasTable towns(town_w);

    const int base_edu = cluster_education(occ.home_cluster, spec.clusters);
    const int zone = cluster_zone(occ.home_cluster, spec.clusters);
    const double salary_mu = std::log(cluster_salary_base(occ.home_cluster));

    for (const bool first_year : {true, false}) {
      const int year = first_year ? spec.t0 : spec.t1;
      const int n_posts = first_year ? occ.posts_t0 : occ.posts_t1;
      const auto& fixed = first_year ? occ.fixed_t0 : occ.fixed_t1;
      const AliasTable& table = first_year ? skills_t0 : skills_t1;
      const auto& support = first_year ? support_t0 : support_t1;

      for (int n = 0; n < n_posts; ++n) {
        JobPosting p;
        p.year = year;
        p.occupation = occ.code;
        p.post_id = "p" + std::to_string(unique.size());

        std::vector<int> ids;
        if (!fixed.empty()) {
          ids = fixed;
        } else {
          const int m =
              spec.skills_per_post_min +
              int(ctx.rng.index(std::size_t(spec.skills_per_post_max -
                                            spec.skills_per_post_min + 1)));
          std::unordered_set<int> chosen;
          int guard = 0;
          while (int(chosen.size()) < m && guard < 4096) {
            chosen.insert(support[table.sample(ctx.rng)]);
            ++guard;
          }
          ids.assign(chosen.begin(), chosen.end());
          std::sort(ids.begin(), ids.end());
        }
        p.skills.reserve(ids.size());
        for (int id : ids) p.skills.push_back(world.skill_names[std::size_t(id)]);

        if (ctx.rng.uniform01() >= spec.employer_missing_fraction) {
          p.employer = "emp-" + occ.code + "-" +
                       std::to_string(employers.sample(ctx.rng));
        }

        if (ctx.rng.uniform01() < spec.education_coverage) {
          int idx = edu_index(base_edu);
          const double u = ctx.rng.uniform01();
          if (u < 0.10) idx = std::max(0, idx - 1);
          else if (u > 0.90) idx = std::min(4, idx + 1);
          p.education_years = kEduLevels[idx];
        }
        if (ctx.rng.uniform01() < spec.salary_coverage) {
          p.salary = std::round(std::exp(salary_mu + 0.25 * ctx.rng.normal()));
        }
        if (ctx.rng.uniform01() < spec.job_zone_coverage) p.job_zone = zone;

        // Location jitter; re-drawn on the (vanishingly rare) exact dedup-key
        // collision between two genuinely distinct posts.
        const auto& town = world.town_centers[towns.sample(ctx.rng)];
        for (int attempt = 0; attempt < 64; ++attempt) {
          p.lat = std::clamp(town.first + ctx.rng.uniform(-0.035, 0.035), -90.0, 90.0);
          p.lon = std::clamp(town.second + ctx.rng.uniform(-0.035, 0.035), -180.0, 180.0);
          if (ctx.seen_keys.insert(ctx.dedup_key(p)).second) break;
        }

        world.books.occ_year_posts[p.occupation][p.year]++;
        world.books.employer_year_posts[p.employer][p.year]++;
        world.books.market_year_posts[market_key_string(p.lat, p.lon)][p.year]++;
        unique.push_back(std::move(p));
      }
    }
  }

  world.books.unique_posts = unique.size();

  std::vector<std::string> lines;
  lines.reserve(unique.size() + unique.size() / 8 + std::size_t(spec.bad_lines));
  for (const auto& p : unique) lines.push_back(corpus::posting_to_json_line(p));

  // Exact duplicates (fresh post_id only), then planted malformed lines.
  const auto n_dup = std::size_t(
      std::llround(spec.duplicate_fraction * double(unique.size())));
  Rng dup_rng = Rng(spec.seed).fork(0xD0B);
  for (std::size_t k = 0; k < n_dup; ++k) {
    JobPosting copy = unique[dup_rng.index(unique.size())];
    copy.post_id = "d" + std::to_string(k);
    lines.push_back(corpus::posting_to_json_line(copy));
  }
  world.books.duplicate_posts = n_dup;

  static const char* kBadLines[] = {
      "{ this is not json",
      R"({"post_id":"bad1","year":2010,"occupation":"11-1011","lat":12.0,"lon":14.0})",
      R"({"post_id":"bad2","year":"twenty","occupation":"11-1011","lat":12.0,"lon":14.0,"skills":["a"]})",
      R"({"post_id":"bad3","year":2010,"occupation":"11-1011","lat":999.0,"lon":14.0,"skills":["a"]})",
      R"({"post_id":"bad4","year":2010,"occupation":"nope","lat":12.0,"lon":14.0,"skills":["a"]})",
  };
  for (int k = 0; k < spec.bad_lines; ++k) {
    lines.emplace_back(kBadLines[k % 5]);
  }
  world.books.bad_lines = std::size_t(spec.bad_lines);
  world.books.total_lines = lines.size();

  Rng shuffle_rng = Rng(spec.seed).fork(0x5F);
  shuffle_rng.shuffle(lines);

  std::ofstream out(postings_path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + postings_path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("write failed: " + postings_path);
}

namespace {

json occupation_to_json(const PlantedWorld& w, const PlantedOccupation& o) {
  json j;
  j["code"] = o.code;
  j["home_cluster"] = o.home_cluster;
  j["sparse"] = o.sparse;
  j["posts_t0"] = o.posts_t0;
  j["posts_t1"] = o.posts_t1;
  switch (o.drift.kind) {
    case DriftPlan::Kind::none: j["drift_kind"] = "none"; break;
    case DriftPlan::Kind::reweight: j["drift_kind"] = "reweight"; break;
    case DriftPlan::Kind::within_swap: j["drift_kind"] = "within_swap"; break;
    case DriftPlan::Kind::cross_swap: j["drift_kind"] = "cross_swap"; break;
  }
  j["drift_swaps"] = o.drift.swaps;
  j["drift_target_cluster"] = o.drift.target_cluster;
  j["drift_reweight"] = o.drift.reweight;
  auto weights_json = [](const std::vector<std::pair<int, double>>& ws) {
    json arr = json::array();
    for (const auto& [id, wt] : ws) arr.push_back(json::array({id, wt}));
    return arr;
  };
  j["weights_t0"] = weights_json(o.weights_t0);
  j["weights_t1"] = weights_json(o.weights_t1);
  j["fixed_t0"] = o.fixed_t0;
  j["fixed_t1"] = o.fixed_t1;
  j["oracle_change"] = oracle_change(w, o.code);
  return j;
}

json spec_to_json(const SynthSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["t0"] = s.t0;
  j["t1"] = s.t1;
  j["latent_dim"] = s.latent_dim;
  j["clusters"] = s.clusters;
  j["skills"] = s.skills;
  j["occupations"] = s.occupations;
  j["sparse_occupations"] = s.sparse_occupations;
  j["posts_per_occupation_year"] = s.posts_per_occupation_year;
  j["skills_per_post_min"] = s.skills_per_post_min;
  j["skills_per_post_max"] = s.skills_per_post_max;
  j["pool_size"] = s.pool_size;
  j["background_pool"] = s.background_pool;
  j["off_cluster_mass"] = s.off_cluster_mass;
  j["within_cluster_noise"] = s.within_cluster_noise;
  j["pair_posts_per_year"] = s.pair_posts_per_year;
  j["pair_set_size"] = s.pair_set_size;
  j["pair_swaps"] = s.pair_swaps;
  j["duplicate_fraction"] = s.duplicate_fraction;
  j["bad_lines"] = s.bad_lines;
  j["towns"] = s.towns;
  j["employers_per_occupation"] = s.employers_per_occupation;
  j["employer_missing_fraction"] = s.employer_missing_fraction;
  j["education_coverage"] = s.education_coverage;
  j["salary_coverage"] = s.salary_coverage;
  j["job_zone_coverage"] = s.job_zone_coverage;
  return j;
}

SynthSpec spec_from_json(const json& j) {
  SynthSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.t0 = j.at("t0").get<int>();
  s.t1 = j.at("t1").get<int>();
  s.latent_dim = j.at("latent_dim").get<int>();
  s.clusters = j.at("clusters").get<int>();
  s.skills = j.at("skills").get<int>();
  s.occupations = j.at("occupations").get<int>();
  s.sparse_occupations = j.at("sparse_occupations").get<int>();
  s.posts_per_occupation_year = j.at("posts_per_occupation_year").get<int>();
  s.skills_per_post_min = j.at("skills_per_post_min").get<int>();
  s.skills_per_post_max = j.at("skills_per_post_max").get<int>();
  s.pool_size = j.at("pool_size").get<int>();
  s.background_pool = j.at("background_pool").get<int>();
  s.off_cluster_mass = j.at("off_cluster_mass").get<double>();
  s.within_cluster_noise = j.at("within_cluster_noise").get<double>();
  s.pair_posts_per_year = j.at("pair_posts_per_year").get<int>();
  s.pair_set_size = j.at("pair_set_size").get<int>();
  s.pair_swaps = j.at("pair_swaps").get<int>();
  s.duplicate_fraction = j.at("duplicate_fraction").get<double>();
  s.bad_lines = j.at("bad_lines").get<int>();
  s.towns = j.at("towns").get<int>();
  s.employers_per_occupation = j.at("employers_per_occupation").get<int>();
  s.employer_missing_fraction = j.at("employer_missing_fraction").get<double>();
  s.education_coverage = j.at("education_coverage").get<double>();
  s.salary_coverage = j.at("salary_coverage").get<double>();
  s.job_zone_coverage = j.at("job_zone_coverage").get<double>();
  return s;
}

json books_to_json(const Bookkeeping& b) {
  json j;
  j["unique_posts"] = b.unique_posts;
  j["duplicate_posts"] = b.duplicate_posts;
  j["bad_lines"] = b.bad_lines;
  j["total_lines"] = b.total_lines;
  auto map_json = [](const std::map<std::string, std::map<int, std::size_t>>& m) {
    json out = json::object();
    for (const auto& [key, by_year] : m) {
      json inner = json::object();
      for (const auto& [year, n] : by_year) inner[std::to_string(year)] = n;
      out[key] = inner;
    }
    return out;
  };
  j["occ_year_posts"] = map_json(b.occ_year_posts);
  j["employer_year_posts"] = map_json(b.employer_year_posts);
  j["market_year_posts"] = map_json(b.market_year_posts);
  return j;
}

Bookkeeping books_from_json(const json& j) {
  Bookkeeping b;
  b.unique_posts = j.at("unique_posts").get<std::size_t>();
  b.duplicate_posts = j.at("duplicate_posts").get<std::size_t>();
  b.bad_lines = j.at("bad_lines").get<std::size_t>();
  b.total_lines = j.at("total_lines").get<std::size_t>();
  auto map_from = [](const json& obj) {
    std::map<std::string, std::map<int, std::size_t>> m;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      for (auto y = it.value().begin(); y != it.value().end(); ++y) {
        m[it.key()][std::stoi(y.key())] = y.value().get<std::size_t>();
      }
    }
    return m;
  };
  b.occ_year_posts = map_from(j.at("occ_year_posts"));
  b.employer_year_posts = map_from(j.at("employer_year_posts"));
  b.market_year_posts = map_from(j.at("market_year_posts"));
  return b;
}

}  // namespace

void write_manifest(const PlantedWorld& world, const std::string& path) {
  json j;
  j["spec"] = spec_to_json(world.spec);
  j["skill_names"] = world.skill_names;
  j["skill_cluster"] = world.skill_cluster;
  j["latent"] = world.latent;
  json occs = json::array();
  for (const auto& o : world.occupations) occs.push_back(occupation_to_json(world, o));
  j["occupations"] = occs;
  j["pair"] = {{"parallel", world.pair.parallel_occ},
               {"orthogonal", world.pair.orthogonal_occ},
               {"set_size", world.pair.set_size},
               {"swaps", world.pair.swaps}};
  json towns = json::array();
  for (const auto& [la, lo] : world.town_centers) towns.push_back(json::array({la, lo}));
  j["towns"] = towns;
  j["bookkeeping"] = books_to_json(world.books);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

PlantedWorld load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("manifest not found: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid manifest json: " + path);

  PlantedWorld w;
  w.spec = spec_from_json(j.at("spec"));
  w.skill_names = j.at("skill_names").get<std::vector<std::string>>();
  w.skill_cluster = j.at("skill_cluster").get<std::vector<int>>();
  w.latent = j.at("latent").get<std::vector<double>>();
  for (const auto& jo : j.at("occupations")) {
    PlantedOccupation o;
    o.code = jo.at("code").get<std::string>();
    o.home_cluster = jo.at("home_cluster").get<int>();
    o.sparse = jo.at("sparse").get<bool>();
    o.posts_t0 = jo.at("posts_t0").get<int>();
    o.posts_t1 = jo.at("posts_t1").get<int>();
    const std::string kind = jo.at("drift_kind").get<std::string>();
    o.drift.kind = kind == "none"          ? DriftPlan::Kind::none
                   : kind == "reweight"    ? DriftPlan::Kind::reweight
                   : kind == "within_swap" ? DriftPlan::Kind::within_swap
                                           : DriftPlan::Kind::cross_swap;
    o.drift.swaps = jo.at("drift_swaps").get<int>();
    o.drift.target_cluster = jo.at("drift_target_cluster").get<int>();
    o.drift.reweight = jo.at("drift_reweight").get<double>();
    for (const auto& pr : jo.at("weights_t0")) {
      o.weights_t0.emplace_back(pr.at(0).get<int>(), pr.at(1).get<double>());
    }
    for (const auto& pr : jo.at("weights_t1")) {
      o.weights_t1.emplace_back(pr.at(0).get<int>(), pr.at(1).get<double>());
    }
    o.fixed_t0 = jo.at("fixed_t0").get<std::vector<int>>();
    o.fixed_t1 = jo.at("fixed_t1").get<std::vector<int>>();
    w.occupations.push_back(std::move(o));
  }
  w.pair.parallel_occ = j.at("pair").at("parallel").get<std::string>();
  w.pair.orthogonal_occ = j.at("pair").at("orthogonal").get<std::string>();
  w.pair.set_size = j.at("pair").at("set_size").get<int>();
  w.pair.swaps = j.at("pair").at("swaps").get<int>();
  for (const auto& t : j.at("towns")) {
    w.town_centers.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
  }
  w.books = books_from_json(j.at("bookkeeping"));
  return w;
}

double oracle_change(const PlantedWorld& world, const std::string& occupation) {
  const PlantedOccupation* occ = world.find(occupation);
  if (!occ) throw NotFoundError("unknown occupation: " + occupation);
  const auto m0 = weighted_latent_mean(world, *occ, true);
  const auto m1 = weighted_latent_mean(world, *occ, false);
  return std::max(0.0, 1.0 - cosine(m0, m1));
}

double oracle_similarity(const PlantedWorld& world, const std::string& a,
                         const std::string& b) {
  const PlantedOccupation* oa = world.find(a);
  const PlantedOccupation* ob = world.find(b);
  if (!oa || !ob) throw NotFoundError("unknown occupation in oracle_similarity");
  return cosine(weighted_latent_mean(world, *oa, true),
                weighted_latent_mean(world, *ob, true));
}

void write_side_inputs(const PlantedWorld& world, const std::string& dir) {
  struct Group {
    const char* name;
    double labor_share;
  };
  static const Group kGroups[] = {{"female", 0.50}, {"male", 0.50},
                                  {"white", 0.60},  {"black", 0.12},
                                  {"hispanic", 0.17}, {"asian", 0.06}};

  {
    CsvWriter w(dir + "/demographics.csv",
                {"occupation", "group", "occupation_share", "labor_force_share"});
    int i = 0;
    for (const auto& occ : world.occupations) {
      if (occ.sparse) continue;
      const double female = (i % 3 == 0) ? 0.78 : (i % 3 == 1 ? 0.50 : 0.32);
      const double hispanic = (i % 3 == 0) ? 0.26 : (i % 3 == 1 ? 0.17 : 0.10);
      const double black = ((i / 3) % 3 == 0) ? 0.20 : ((i / 3) % 3 == 1 ? 0.12 : 0.08);
      const double asian = ((i / 2) % 3 == 0) ? 0.10 : ((i / 2) % 3 == 1 ? 0.06 : 0.03);
      const double white = std::max(0.2, 1.0 - black - hispanic - asian);
      const double shares[] = {female, 1.0 - female, white, black, hispanic, asian};
      for (std::size_t g = 0; g < 6; ++g) {
        w.row({occ.code, kGroups[g].name, CsvWriter::cell(shares[g]),
               CsvWriter::cell(kGroups[g].labor_share)});
      }
      ++i;
    }
  }

  {
    CsvWriter w(dir + "/job_zones.csv", {"occupation", "zone"});
    for (const auto& occ : world.occupations) {
      if (occ.sparse) continue;
      w.row({occ.code,
             CsvWriter::cell(cluster_zone(occ.home_cluster, world.spec.clusters))});
    }
  }

  {
    Rng r = Rng(world.spec.seed).fork(0x30B);
    CsvWriter w(dir + "/mobility.csv", {"occ_i", "occ_j", "transitions"});
    for (std::size_t a = 0; a < world.occupations.size(); ++a) {
      if (world.occupations[a].sparse) continue;
      for (std::size_t b = a + 1; b < world.occupations.size(); ++b) {
        if (world.occupations[b].sparse) continue;
        const double sim = oracle_similarity(world, world.occupations[a].code,
                                             world.occupations[b].code);
        const double lambda = 600.0 * std::exp(2.2 * (sim - 1.0));
        const auto count =
            std::llround(lambda * (0.8 + 0.4 * r.uniform01()));
        if (count < 3) continue;
        w.row({world.occupations[a].code, world.occupations[b].code,
               CsvWriter::cell(std::int64_t(count))});
      }
    }
  }
}

}  // namespace skillscape::synthlab
