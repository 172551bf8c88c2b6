#include <doctest.h>

#include <cmath>
#include <string>

#include <kcac/error.hpp>
#include <kcac/similarity.hpp>

using namespace kcac;

namespace {

RewardVector vec(std::array<int, 8> flags) {
  RewardVector v;
  v.flags = flags;
  return v;
}

}  // namespace

TEST_CASE("cosine similarity on hand-computed binary vectors") {
  // Overlap 2 of 4 vs 4: 2 / (2 * 2) = 0.5.
  CHECK(cosine_similarity(vec({1, 1, 0, 0, 1, 1, 0, 0}),
                          vec({1, 0, 1, 0, 1, 0, 1, 0})) ==
        doctest::Approx(0.5).epsilon(1e-15));
  // Disjoint supports: 0.
  CHECK(cosine_similarity(vec({1, 1, 0, 0, 0, 0, 0, 0}),
                          vec({0, 0, 1, 1, 0, 0, 0, 0})) == 0.0);
  // Identical vectors: exactly 1.
  RewardVector s = vec({1, 0, 1, 1, 1, 0, 1, 1});
  CHECK(cosine_similarity(s, s) == 1.0);
  // Subset: 3 common of 3 vs 6 -> 3 / sqrt(18).
  CHECK(cosine_similarity(vec({1, 0, 1, 1, 0, 0, 0, 0}), s) ==
        doctest::Approx(3.0 / std::sqrt(18.0)).epsilon(1e-15));

  RewardVector zero;
  CHECK_THROWS_AS(cosine_similarity(zero, s), ConfigError);
  CHECK_THROWS_AS(cosine_similarity(s, zero), ConfigError);
}

TEST_CASE("task similarity of the built-in family matches pinned values") {
  CompoundReward grasp = grasp_reward({0.03, 0.6});
  CompoundReward pick = pick_reward();
  CompoundReward stack = refined_stack_reward();

  // 2 common kinds of 4 vs 6 -> 2/sqrt(24); 2 of 4 vs 4 -> 1/2; 4 of 4 vs 6.
  CHECK(task_similarity(grasp, stack) ==
        doctest::Approx(0.40825).epsilon(2.5e-4));
  CHECK(task_similarity(grasp, pick) == 0.5);
  CHECK(task_similarity(pick, stack) ==
        doctest::Approx(0.81650).epsilon(2.5e-4));

  // The exact closed forms, up to evaluation-order rounding.
  CHECK(task_similarity(grasp, stack) ==
        doctest::Approx(2.0 / std::sqrt(24.0)).epsilon(1e-14));
  CHECK(task_similarity(pick, stack) ==
        doctest::Approx(4.0 / std::sqrt(24.0)).epsilon(1e-14));

  CHECK(task_similarity(grasp, pick) == task_similarity(pick, grasp));
}

TEST_CASE("similarity matrix is symmetric with unit diagonal") {
  std::vector<CompoundReward> tasks = {grasp_reward({0.03, 0.6}), pick_reward(),
                                       refined_stack_reward(),
                                       baseline_stack_reward()};
  SimilarityMatrix m = similarity_matrix(tasks);
  REQUIRE(m.names.size() == 4);
  REQUIRE(m.values.size() == 4);
  CHECK(m.names[0] == "grasp");
  CHECK(m.names[1] == "pick");
  CHECK(m.names[2] == "stack");
  CHECK(m.names[3] == "baseline_stack");
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(m.values[i].size() == 4);
    CHECK(m.values[i][i] == 1.0);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(m.values[i][j] == m.values[j][i]);
      CHECK(m.values[i][j] >= 0.0);
      CHECK(m.values[i][j] <= 1.0);
    }
  }
  // Baseline and refined stack share a kind set, so they are identical here.
  CHECK(m.values[2][3] == 1.0);
}

TEST_CASE("similarity csv has a header and one row per task") {
  SimilarityMatrix m =
      similarity_matrix({grasp_reward({0.03, 0.6}), pick_reward()});
  std::string csv = similarity_csv(m);
  CHECK(csv.substr(0, csv.find('\n')) == "task,grasp,pick");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("grasp,1") != std::string::npos);
}
