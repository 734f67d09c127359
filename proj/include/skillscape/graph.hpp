#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillscape/corpus.hpp"

namespace skillscape::graph {

// How much probability a posting assigns to each listed skill.
enum class ConditionalConvention {
  uniform,  // p(i|v) = 1/|skills(v)| when listed
  binary,   // p(i|v) = 1 when listed
};

// Sparse symmetric joint/marginal probabilities over skill co-presence.
struct PmiMatrix {
  std::size_t nodes = 0;
  std::vector<double> marginal;  // p_i per skill id
  // joint probabilities keyed i * nodes + j with i < j; absent means p_ij = 0
  std::unordered_map<std::uint64_t, double> joint;

  std::optional<double> joint_probability(int i, int j) const;
  // log(p_ij / (p_i p_j)); nullopt when the pair never co-occurs
  std::optional<double> pmi(int i, int j) const;
};

// Each posting contributes p(v) = 1/#posts split over its skill set.
// Throws DataError on an empty corpus.
PmiMatrix pmi_matrix(const std::vector<corpus::JobPosting>& postings,
                     const corpus::SkillVocabulary& vocab,
                     ConditionalConvention convention = ConditionalConvention::uniform);

struct Edge {
  int a = 0;  // a <= b; a == b only for aggregated self-loops
  int b = 0;
  double weight = 0.0;
};

struct Graph {
  std::size_t nodes = 0;
  std::vector<Edge> edges;
};

// Keeps strictly positive PMI entries as undirected weighted edges.
Graph build_pmi_graph(const PmiMatrix& m);

// Weighted Newman modularity; self-loops count twice on the diagonal.
// Throws ConfigError when the assignment does not cover all nodes,
// DomainError when the graph has no edge weight.
double modularity(const Graph& g, const std::vector<int>& community);

struct Partition {
  std::vector<int> community;  // node -> community id, dense from 0
  double modularity = 0.0;
  std::vector<double> pass_modularity;  // after each aggregation pass
};

// Standard two-phase Louvain; node visit order is a seed-derived permutation
// and results are deterministic per seed. Community ids are renumbered by
// first appearance over node ids.
Partition louvain_partition(const Graph& g, std::uint64_t seed);

void write_edges_csv(const std::string& path, const Graph& g,
                     const std::vector<std::string>& names);
void write_partition_csv(const std::string& path, const Partition& p,
                         const std::vector<std::string>& names);
std::unordered_map<std::string, int> read_partition_csv(const std::string& path);

}  // namespace skillscape::graph
