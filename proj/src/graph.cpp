#include "skillscape/graph.hpp"

#include <algorithm>
#include <cmath>

#include "skillscape/csv.hpp"
#include "skillscape/error.hpp"
#include "skillscape/rng.hpp"

namespace skillscape::graph {

std::optional<double> PmiMatrix::joint_probability(int i, int j) const {
  if (i == j) return std::nullopt;
  if (i > j) std::swap(i, j);
  const auto it = joint.find(std::uint64_t(i) * nodes + std::uint64_t(j));
  if (it == joint.end()) return std::nullopt;
  return it->second;
}

std::optional<double> PmiMatrix::pmi(int i, int j) const {
  const auto p = joint_probability(i, j);
  if (!p) return std::nullopt;
  return std::log(*p / (marginal[std::size_t(i)] * marginal[std::size_t(j)]));
}

PmiMatrix pmi_matrix(const std::vector<corpus::JobPosting>& postings,
                     const corpus::SkillVocabulary& vocab,
                     ConditionalConvention convention) {
  if (postings.empty()) throw DataError("pmi over an empty corpus");

  PmiMatrix m;
  m.nodes = vocab.size();
  m.marginal.assign(m.nodes, 0.0);
  const double pv = 1.0 / double(postings.size());

  std::vector<int> ids;
  for (const auto& posting : postings) {
    ids.clear();
    for (const auto& s : posting.skills) {
      if (const auto id = vocab.id(s)) ids.push_back(*id);
    }
    if (ids.empty()) continue;
    std::sort(ids.begin(), ids.end());
    const double cond = convention == ConditionalConvention::uniform
                            ? 1.0 / double(ids.size())
                            : 1.0;
    for (std::size_t x = 0; x < ids.size(); ++x) {
      m.marginal[std::size_t(ids[x])] += cond * pv;
      for (std::size_t y = x + 1; y < ids.size(); ++y) {
        m.joint[std::uint64_t(ids[x]) * m.nodes + std::uint64_t(ids[y])] +=
            cond * cond * pv;
      }
    }
  }
  return m;
}

Graph build_pmi_graph(const PmiMatrix& m) {
  Graph g;
  g.nodes = m.nodes;
  g.edges.reserve(m.joint.size());
  for (const auto& [key, p] : m.joint) {
    const int i = int(key / m.nodes);
    const int j = int(key % m.nodes);
    const double w = std::log(p / (m.marginal[std::size_t(i)] * m.marginal[std::size_t(j)]));
    if (w > 0.0) g.edges.push_back({i, j, w});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
    return a.a != b.a ? a.a < b.a : a.b < b.b;
  });
  return g;
}

double modularity(const Graph& g, const std::vector<int>& community) {
  if (community.size() != g.nodes) {
    throw ConfigError("community assignment does not cover all nodes");
  }
  std::vector<double> degree(g.nodes, 0.0);
  double total = 0.0;  // m, each edge once
  for (const auto& e : g.edges) {
    total += e.weight;
    if (e.a == e.b) {
      degree[std::size_t(e.a)] += 2.0 * e.weight;
    } else {
      degree[std::size_t(e.a)] += e.weight;
      degree[std::size_t(e.b)] += e.weight;
    }
  }
  if (total <= 0.0) throw DomainError("modularity of a graph without edge weight");
  const double two_m = 2.0 * total;

  // Q = sum_c [ in_c/m? ] expressed with per-community accumulators:
  // intra edges contribute 2w to the A-term, degrees square in the null term.
  std::unordered_map<int, double> intra, deg_sum;
  for (const auto& e : g.edges) {
    if (community[std::size_t(e.a)] == community[std::size_t(e.b)]) {
      intra[community[std::size_t(e.a)]] += 2.0 * e.weight;
    }
  }
  for (std::size_t i = 0; i < g.nodes; ++i) {
    deg_sum[community[i]] += degree[i];
  }
  double q = 0.0;
  for (const auto& [c, k] : deg_sum) {
    const auto it = intra.find(c);
    const double in_c = it == intra.end() ? 0.0 : it->second;
    q += in_c / two_m - (k / two_m) * (k / two_m);
  }
  return q;
}

namespace {

struct Adjacency {
  std::vector<std::vector<std::pair<int, double>>> neighbors;  // excl. self
  std::vector<double> self_weight;  // self-loop weight, counted twice in k
  std::vector<double> degree;
  double total = 0.0;  // m
};

Adjacency build_adjacency(const Graph& g) {
  Adjacency adj;
  adj.neighbors.resize(g.nodes);
  adj.self_weight.assign(g.nodes, 0.0);
  adj.degree.assign(g.nodes, 0.0);
  for (const auto& e : g.edges) {
    adj.total += e.weight;
    if (e.a == e.b) {
      adj.self_weight[std::size_t(e.a)] += e.weight;
      adj.degree[std::size_t(e.a)] += 2.0 * e.weight;
    } else {
      adj.neighbors[std::size_t(e.a)].emplace_back(e.b, e.weight);
      adj.neighbors[std::size_t(e.b)].emplace_back(e.a, e.weight);
      adj.degree[std::size_t(e.a)] += e.weight;
      adj.degree[std::size_t(e.b)] += e.weight;
    }
  }
  return adj;
}

// One local-move phase; returns the community assignment (not renumbered).
std::vector<int> local_moves(const Adjacency& adj, Rng& rng) {
  const std::size_t n = adj.neighbors.size();
  const double two_m = 2.0 * adj.total;
  std::vector<int> comm(n);
  std::vector<double> comm_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    comm[i] = int(i);
    comm_degree[i] = adj.degree[i];
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::unordered_map<int, double> weight_to;  // candidate community -> k_i,in
  std::vector<std::pair<int, double>> candidates;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const std::size_t i : order) {
      const int old_comm = comm[i];
      weight_to.clear();
      weight_to[old_comm] += 0.0;  // staying is always a candidate
      for (const auto& [j, w] : adj.neighbors[i]) {
        weight_to[comm[std::size_t(j)]] += w;
      }

      comm_degree[std::size_t(old_comm)] -= adj.degree[i];

      // gain of joining c (up to a shared constant):
      // k_i,in(c) - deg_c * k_i / 2m. Candidates visited in community-id
      // order; a move needs a strict improvement over staying put.
      candidates.assign(weight_to.begin(), weight_to.end());
      std::sort(candidates.begin(), candidates.end());
      int best = old_comm;
      double best_gain = weight_to[old_comm] -
                         comm_degree[std::size_t(old_comm)] * adj.degree[i] / two_m;
      for (const auto& [c, k_in] : candidates) {
        if (c == old_comm) continue;
        const double gain =
            k_in - comm_degree[std::size_t(c)] * adj.degree[i] / two_m;
        if (gain > best_gain + 1e-12) {
          best = c;
          best_gain = gain;
        }
      }

      comm_degree[std::size_t(best)] += adj.degree[i];
      if (best != old_comm) {
        comm[i] = best;
        moved = true;
      }
    }
  }
  return comm;
}

std::vector<int> renumber_dense(const std::vector<int>& comm) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(comm.size());
  for (std::size_t i = 0; i < comm.size(); ++i) {
    const auto [it, inserted] = remap.emplace(comm[i], int(remap.size()));
    out[i] = it->second;
  }
  return out;
}

Graph aggregate(const Graph& g, const std::vector<int>& comm, int n_comms) {
  std::unordered_map<std::uint64_t, double> agg;
  for (const auto& e : g.edges) {
    int a = comm[std::size_t(e.a)];
    int b = comm[std::size_t(e.b)];
    if (a > b) std::swap(a, b);
    agg[std::uint64_t(a) * std::uint64_t(n_comms) + std::uint64_t(b)] += e.weight;
  }
  Graph out;
  out.nodes = std::size_t(n_comms);
  out.edges.reserve(agg.size());
  for (const auto& [key, w] : agg) {
    out.edges.push_back({int(key / std::uint64_t(n_comms)),
                         int(key % std::uint64_t(n_comms)), w});
  }
  std::sort(out.edges.begin(), out.edges.end(), [](const Edge& a, const Edge& b) {
    return a.a != b.a ? a.a < b.a : a.b < b.b;
  });
  return out;
}

}  // namespace

Partition louvain_partition(const Graph& g, std::uint64_t seed) {
  if (g.nodes == 0) throw DataError("louvain on an empty graph");

  Rng rng(seed);
  // assignment of the ORIGINAL nodes, refined pass by pass
  std::vector<int> assignment(g.nodes);
  for (std::size_t i = 0; i < g.nodes; ++i) assignment[i] = int(i);

  Partition result;
  Graph level = g;
  double last_q = modularity(g, assignment);

  while (true) {
    Adjacency adj = build_adjacency(level);
    std::vector<int> comm = renumber_dense(local_moves(adj, rng));
    for (auto& c : assignment) c = comm[std::size_t(c)];

    const double q = modularity(g, assignment);
    result.pass_modularity.push_back(q);
    const int n_comms = 1 + *std::max_element(comm.begin(), comm.end());
    if (q <= last_q + 1e-12 || std::size_t(n_comms) == level.nodes) {
      last_q = std::max(q, last_q);
      break;
    }
    last_q = q;
    level = aggregate(level, comm, n_comms);
  }

  result.community = renumber_dense(assignment);
  result.modularity = modularity(g, result.community);
  return result;
}

void write_edges_csv(const std::string& path, const Graph& g,
                     const std::vector<std::string>& names) {
  CsvWriter w(path, {"skill_i", "skill_j", "weight"});
  for (const auto& e : g.edges) {
    w.row({names.at(std::size_t(e.a)), names.at(std::size_t(e.b)),
           CsvWriter::cell(e.weight)});
  }
}

void write_partition_csv(const std::string& path, const Partition& p,
                         const std::vector<std::string>& names) {
  CsvWriter w(path, {"skill", "community"});
  for (std::size_t i = 0; i < p.community.size(); ++i) {
    w.row({names.at(i), CsvWriter::cell(p.community[i])});
  }
}

std::unordered_map<std::string, int> read_partition_csv(const std::string& path) {
  CsvReader r(path);
  const auto skill_col = r.col("skill");
  const auto comm_col = r.col("community");
  std::unordered_map<std::string, int> out;
  while (auto row = r.next()) {
    out[(*row)[skill_col]] = std::stoi((*row)[comm_col]);
  }
  return out;
}

}  // namespace skillscape::graph
