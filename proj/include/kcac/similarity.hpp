#pragma once

#include <string>
#include <vector>

#include "kcac/reward.hpp"

namespace kcac {

// Cosine similarity of two presence vectors. Zero vectors are rejected.
double cosine_similarity(const RewardVector& a, const RewardVector& b);

// Similarity between tasks as the cosine of their reward presence vectors.
double task_similarity(const CompoundReward& a, const CompoundReward& b);

struct SimilarityMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[i][j], symmetric, diag 1
};

SimilarityMatrix similarity_matrix(const std::vector<CompoundReward>& tasks);

// CSV rendering: header row "task,<names...>", one row per task.
std::string similarity_csv(const SimilarityMatrix& m);

}  // namespace kcac
