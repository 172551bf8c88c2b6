#include "kcac/similarity.hpp"

#include <cmath>

#include "kcac/error.hpp"
#include "kcac/text.hpp"

namespace kcac {

double cosine_similarity(const RewardVector& a, const RewardVector& b) {
  int dot = 0, na = 0, nb = 0;
  for (int i = 0; i < kComponentKindCount; ++i) {
    dot += a.flags[i] * b.flags[i];
    na += a.flags[i];
    nb += b.flags[i];
  }
  if (na == 0 || nb == 0) {
    throw ConfigError("cosine similarity of an empty presence vector");
  }
  // Single rounding keeps identical vectors at exactly 1 (na*nb is then a
  // perfect square, and IEEE sqrt of a perfect square is exact).
  return dot / std::sqrt(double(na) * double(nb));
}

double task_similarity(const CompoundReward& a, const CompoundReward& b) {
  return cosine_similarity(reward_to_vector(a), reward_to_vector(b));
}

SimilarityMatrix similarity_matrix(const std::vector<CompoundReward>& tasks) {
  if (tasks.empty()) throw ConfigError("similarity matrix needs at least one task");
  SimilarityMatrix m;
  std::vector<RewardVector> vecs;
  for (const CompoundReward& t : tasks) {
    m.names.push_back(t.name);
    vecs.push_back(reward_to_vector(t));
  }
  std::size_t n = tasks.size();
  m.values.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = cosine_similarity(vecs[i], vecs[j]);
      m.values[i][j] = s;
      m.values[j][i] = s;
    }
  }
  return m;
}

std::string similarity_csv(const SimilarityMatrix& m) {
  std::string out = "task";
  for (const std::string& n : m.names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out += m.names[i];
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      out += "," + format_double(m.values[i][j]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace kcac
