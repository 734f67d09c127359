#include "skillscape/embed.hpp"

#include "binio.hpp"
#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "skillscape/error.hpp"
#include "skillscape/rng.hpp"

namespace skillscape::embed {

using nlohmann::json;

std::optional<int> EmbeddingMatrix::id(const std::string& skill) const {
  const auto it = index_.find(skill);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingMatrix::finite() const {
  for (float v : input) {
    if (!std::isfinite(v)) return false;
  }
  for (float v : output) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void EmbeddingMatrix::rebuild_index() {
  index_.clear();
  index_.reserve(skills.size());
  for (std::size_t i = 0; i < skills.size(); ++i) {
    index_.emplace(skills[i], int(i));
  }
}

std::vector<SkillPair> build_training_pairs(const std::vector<corpus::JobPosting>& postings,
                                            const corpus::SkillVocabulary& vocab,
                                            const TrainingConfig& config) {
  if (config.max_pairs_per_posting == 0) {
    throw ConfigError("max_pairs_per_posting must be positive");
  }
  Rng rng = Rng(config.seed).fork(0x9A12);
  const double t = config.subsample_threshold;
  const auto total = double(vocab.total_count());

  std::vector<SkillPair> pairs;
  std::vector<int> kept;
  for (const auto& posting : postings) {
    kept.clear();
    for (const auto& skill : posting.skills) {
      const auto id = vocab.id(skill);
      if (!id) continue;
      if (t > 0.0) {
        const double f = double(vocab.count(*id)) / total;
        const double keep = std::sqrt(t / f) + t / f;
        if (keep < 1.0 && rng.uniform01() >= keep) continue;
      }
      kept.push_back(*id);
    }
    const std::size_t m = kept.size();
    if (m < 2) continue;
    const std::size_t all = m * (m - 1);
    if (all <= config.max_pairs_per_posting) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          if (i != j) pairs.emplace_back(kept[i], kept[j]);
        }
      }
    } else {
      // uniform sample without replacement over the ordered-pair indices
      std::vector<std::size_t> idx(all);
      for (std::size_t q = 0; q < all; ++q) idx[q] = q;
      for (std::size_t q = 0; q < config.max_pairs_per_posting; ++q) {
        std::swap(idx[q], idx[q + rng.index(all - q)]);
        const std::size_t i = idx[q] / (m - 1);
        const std::size_t r = idx[q] % (m - 1);
        const std::size_t j = r < i ? r : r + 1;
        pairs.emplace_back(kept[i], kept[j]);
      }
    }
  }
  return pairs;
}

namespace {

double log_sigmoid(double x) {
  // stable in both tails
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ValidationSet {
  std::vector<SkillPair> pairs;
  std::vector<int> negatives;  // pairs.size() * k rows
  int k = 0;
};

ValidationSet draw_validation_set(const std::vector<SkillPair>& pairs,
                                  const AliasTable& noise,
                                  const TrainingConfig& config, Rng rng) {
  ValidationSet v;
  v.k = config.negatives;
  const std::size_t n = std::min(config.validation_pairs, pairs.size());
  v.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    v.pairs.push_back(pairs[rng.index(pairs.size())]);
  }
  v.negatives.reserve(n * std::size_t(v.k));
  for (const auto& [target, context] : v.pairs) {
    for (int j = 0; j < v.k; ++j) {
      int neg = int(noise.sample(rng));
      for (int tries = 0; (neg == context || neg == target) && tries < 100;
           ++tries) {
        neg = int(noise.sample(rng));
      }
      v.negatives.push_back(neg);
    }
  }
  return v;
}

double validation_loss(const ValidationSet& v, const EmbeddingMatrix& m) {
  if (v.pairs.empty()) return 0.0;
  const int d = m.dimension;
  double loss = 0.0;
  for (std::size_t i = 0; i < v.pairs.size(); ++i) {
    const float* u = m.input.data() + std::size_t(v.pairs[i].first) * std::size_t(d);
    const float* vc = m.output.data() + std::size_t(v.pairs[i].second) * std::size_t(d);
    double dot = 0.0;
    for (int k = 0; k < d; ++k) dot += double(u[k]) * double(vc[k]);
    loss -= log_sigmoid(dot);
    for (int j = 0; j < v.k; ++j) {
      const int neg = v.negatives[i * std::size_t(v.k) + std::size_t(j)];
      if (neg == v.pairs[i].second || neg == v.pairs[i].first) continue;
      const float* vn = m.output.data() + std::size_t(neg) * std::size_t(d);
      double ndot = 0.0;
      for (int k = 0; k < d; ++k) ndot += double(u[k]) * double(vn[k]);
      loss -= log_sigmoid(-ndot);
    }
  }
  return loss / double(v.pairs.size());
}

// One SGD step on a positive pair plus sampled negatives.
void sgd_step(float* input, float* output, int d, const SkillPair& pair,
              const AliasTable& noise, int k_neg, double lr, Rng& rng,
              std::vector<double>& grad_u) {
  float* u = input + std::size_t(pair.first) * std::size_t(d);
  grad_u.assign(std::size_t(d), 0.0);
  for (int s = -1; s < k_neg; ++s) {
    int w;
    double label;
    if (s < 0) {
      w = pair.second;
      label = 1.0;
    } else {
      // a draw that hits either side of the pair carries no signal; with a
      // realistic vocabulary this almost never fires
      w = int(noise.sample(rng));
      if (w == pair.second || w == pair.first) continue;
      label = 0.0;
    }
    float* v = output + std::size_t(w) * std::size_t(d);
    double dot = 0.0;
    for (int i = 0; i < d; ++i) dot += double(u[i]) * double(v[i]);
    const double g = (label - sigmoid(dot)) * lr;
    for (int i = 0; i < d; ++i) {
      grad_u[std::size_t(i)] += g * double(v[i]);
      v[i] = float(double(v[i]) + g * double(u[i]));
    }
  }
  for (int i = 0; i < d; ++i) {
    u[i] = float(double(u[i]) + grad_u[std::size_t(i)]);
  }
}

}  // namespace

EmbeddingMatrix train_skipgram(const std::vector<SkillPair>& pairs,
                               const corpus::SkillVocabulary& vocab,
                               const TrainingConfig& config,
                               TrainingDiagnostics* diagnostics) {
  if (config.dimension < 2) throw ConfigError("embedding dimension must be >= 2");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.negatives < 1) throw ConfigError("negatives must be >= 1");
  if (config.lr_start <= 0.0 || config.lr_end <= 0.0) {
    throw ConfigError("learning rates must be positive");
  }
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  if (vocab.size() < std::size_t(config.negatives) + 1) {
    throw ConfigError("vocabulary smaller than negatives + 1");
  }
  if (pairs.empty()) throw DataError("no training pairs");
  for (const auto& [t, c] : pairs) {
    if (t < 0 || c < 0 || std::size_t(t) >= vocab.size() ||
        std::size_t(c) >= vocab.size()) {
      throw DataError("training pair outside the vocabulary");
    }
  }

  const int d = config.dimension;
  const std::size_t n_skills = vocab.size();
  Rng rng(config.seed);

  EmbeddingMatrix m;
  m.dimension = d;
  m.skills = vocab.skills();
  m.input.resize(n_skills * std::size_t(d));
  m.output.assign(n_skills * std::size_t(d), 0.0f);
  {
    Rng init = rng.fork(0x17);
    for (auto& v : m.input) {
      v = float((init.uniform01() - 0.5) / double(d));
    }
  }
  m.rebuild_index();

  std::vector<double> noise_weights(n_skills);
  for (std::size_t i = 0; i < n_skills; ++i) {
    noise_weights[i] = std::pow(double(vocab.count(int(i))), config.noise_exponent);
  }
  const AliasTable noise(noise_weights);

  const ValidationSet vset =
      draw_validation_set(pairs, noise, config, rng.fork(0x7A1));

  TrainingDiagnostics local;
  TrainingDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag.pair_count = pairs.size();
  diag.updates = 0;
  diag.validation_loss.clear();
  diag.validation_loss.push_back(validation_loss(vset, m));

  const auto total_updates = double(pairs.size()) * double(std::max(config.epochs, 1));
  std::atomic<std::uint64_t> processed{0};
  const double lr_span = config.lr_end - config.lr_start;
  auto lr_at = [&](std::uint64_t done) {
    const double progress = std::min(1.0, double(done) / total_updates);
    return config.lr_start + lr_span * progress;
  };

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    if (config.workers == 1) {
      Rng worker = rng.fork(0x3000 + std::uint64_t(epoch));
      std::vector<double> grad_u;
      std::uint64_t done = processed.load(std::memory_order_relaxed);
      double lr = lr_at(done);
      for (std::size_t q = 0; q < order.size(); ++q) {
        if ((q & 63u) == 0u) lr = lr_at(done + q);
        sgd_step(m.input.data(), m.output.data(), d, pairs[order[q]], noise,
                 config.negatives, lr, worker, grad_u);
      }
      processed.store(done + order.size(), std::memory_order_relaxed);
    } else {
      // lock-free shared-weight workers; row updates may race
      const std::size_t chunk =
          (order.size() + std::size_t(config.workers) - 1) / std::size_t(config.workers);
      std::vector<std::thread> threads;
      for (int wk = 0; wk < config.workers; ++wk) {
        threads.emplace_back([&, wk] {
          const std::size_t lo = std::size_t(wk) * chunk;
          const std::size_t hi = std::min(order.size(), lo + chunk);
          if (lo >= hi) return;
          Rng worker = rng.fork(0x3000 + std::uint64_t(epoch) * 1000 +
                                std::uint64_t(wk) + 1);
          std::vector<double> grad_u;
          double lr = lr_at(processed.load(std::memory_order_relaxed));
          for (std::size_t q = lo; q < hi; ++q) {
            if ((q & 63u) == 0u) {
              lr = lr_at(processed.load(std::memory_order_relaxed));
            }
            sgd_step(m.input.data(), m.output.data(), d, pairs[order[q]], noise,
                     config.negatives, lr, worker, grad_u);
            processed.fetch_add(1, std::memory_order_relaxed);
          }
        });
      }
      for (auto& th : threads) th.join();
    }
    diag.updates = processed.load(std::memory_order_relaxed);
    diag.validation_loss.push_back(validation_loss(vset, m));
  }

  if (!m.finite()) throw DomainError("training produced non-finite components");
  return m;
}

double cosine_similarity(const float* u, const float* v, int dimension) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (int i = 0; i < dimension; ++i) {
    dot += double(u[i]) * double(v[i]);
    nu += double(u[i]) * double(u[i]);
    nv += double(v[i]) * double(v[i]);
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine of a zero vector");
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingMatrix& m, const std::string& a,
                         const std::string& b) {
  const auto ia = m.id(a);
  const auto ib = m.id(b);
  if (!ia) throw NotFoundError("skill not in vocabulary: " + a);
  if (!ib) throw NotFoundError("skill not in vocabulary: " + b);
  return cosine_similarity(m.row(*ia), m.row(*ib), m.dimension);
}

std::vector<std::pair<std::string, double>> nearest_skills(const EmbeddingMatrix& m,
                                                           const std::string& skill,
                                                           std::size_t n) {
  if (n < 1) throw ConfigError("nearest_skills needs n >= 1");
  const auto query = m.id(skill);
  if (!query) throw NotFoundError("skill not in vocabulary: " + skill);

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(m.size() - 1);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (int(i) == *query) continue;
    scored.emplace_back(m.skills[i],
                        cosine_similarity(m.row(*query), m.row(int(i)), m.dimension));
  }
  const std::size_t top = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + long(top), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  scored.resize(top);
  return scored;
}

namespace {

std::string format_float(float v) {
  char buf[48];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void save_embedding(const std::string& dir, const EmbeddingMatrix& m,
                    std::uint64_t seed, const std::string& config_hash) {
  std::filesystem::create_directories(dir);

  json header;
  header["dimension"] = m.dimension;
  header["vocabulary_size"] = m.size();
  header["seed"] = seed;
  header["config_hash"] = config_hash;
  header["dtype"] = "float32";
  header["byte_order"] = "little-endian";
  header["matrix_file"] = "embedding.f32";
  header["vocabulary_file"] = "vocab.txt";
  {
    std::ofstream out(dir + "/embedding.json", std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + dir + "/embedding.json");
    out << header.dump(1) << '\n';
  }
  binio::write_f32_file(dir + "/embedding.f32", m.input);
  {
    std::ofstream out(dir + "/vocab.txt", std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + dir + "/vocab.txt");
    for (const auto& s : m.skills) out << s << '\n';
  }
}

EmbeddingMatrix load_embedding(const std::string& dir) {
  std::ifstream hin(dir + "/embedding.json", std::ios::binary);
  if (!hin) throw MissingArtifactError("embedding header not found in " + dir);
  json header = json::parse(hin, nullptr, false);
  if (header.is_discarded()) throw DataError("invalid embedding header in " + dir);

  EmbeddingMatrix m;
  m.dimension = header.at("dimension").get<int>();
  const auto vocab_size = header.at("vocabulary_size").get<std::size_t>();
  if (m.dimension < 1) throw DataError("invalid embedding dimension in header");

  const auto vocab_path = dir + "/" + header.value("vocabulary_file", "vocab.txt");
  std::ifstream vin(vocab_path, std::ios::binary);
  if (!vin) throw MissingArtifactError("vocabulary file not found: " + vocab_path);
  std::string line;
  while (std::getline(vin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    m.skills.push_back(line);
  }
  if (m.skills.size() != vocab_size) {
    throw DataError("vocabulary size mismatch in " + dir);
  }

  const auto matrix_path = dir + "/" + header.value("matrix_file", "embedding.f32");
  m.input = binio::read_f32_file(matrix_path, vocab_size * std::size_t(m.dimension));
  m.rebuild_index();
  return m;
}

void export_embedding_text(const std::string& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.skills[i];
    const float* r = m.row(int(i));
    for (int k = 0; k < m.dimension; ++k) out << ' ' << format_float(r[k]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace skillscape::embed
