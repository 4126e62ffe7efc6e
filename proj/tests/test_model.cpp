#include <doctest.h>

#include <cmath>

#include "argo/model.hpp"
#include "argo/synth.hpp"

using namespace argo;

namespace {

// Minimal hand-assembled model: one user, explicit embeddings.
ModelParams tiny_params(int d, int M, int items, int levels) {
  ModelParams p;
  p.num_users = 1;
  p.num_items = items;
  p.num_levels = levels;
  p.embed_dim = d;
  p.num_identities = M;
  p.P.assign(M, std::vector<double>(d, 0.0));
  p.Q.assign(static_cast<std::size_t>(items) * d, 0.0);
  p.h.assign(1, std::vector<double>(d, 0.0));
  p.T.assign(levels - 1, std::vector<double>(items, 1.0));
  return p;
}

}  // namespace

TEST_CASE("normalize: 3-4-5 triangle, zero vector, unit idempotence") {
  CHECK(normalize({3.0, 4.0}) == std::vector<double>{0.6, 0.8});
  CHECK(normalize({0.0, 0.0}) == std::vector<double>{0.0, 0.0});
  const std::vector<double> unit = {0.6, 0.8};
  const auto again = normalize(unit);
  CHECK(again[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(again[1] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("identity_score: basis and hand cases") {
  auto p = tiny_params(2, 1, 1, 2);
  SUBCASE("aligned basis vectors give 1") {
    p.h[0] = {1.0, 1.0};
    p.P[0] = {1.0, 0.0};
    p.Q = {1.0, 0.0};
    CHECK(identity_score(p, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("orthogonal embeddings give 0") {
    p.h[0] = {1.0, 1.0};
    p.P[0] = {1.0, 0.0};
    p.Q = {0.0, 1.0};
    CHECK(identity_score(p, 0, 0, 0) == 0.0);
  }
  SUBCASE("h=(1,-2), p=(1,0), q=(0.6,0.8) gives 0.6") {
    p.h[0] = {1.0, -2.0};
    p.P[0] = {1.0, 0.0};
    p.Q = {0.6, 0.8};
    CHECK(identity_score(p, 0, 0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  }
  SUBCASE("negative pre-activation clips to 0") {
    p.h[0] = {-1.0, 0.0};
    p.P[0] = {1.0, 0.0};
    p.Q = {1.0, 0.0};
    CHECK(identity_score(p, 0, 0, 0) == 0.0);
  }
}

TEST_CASE("first_level_score: max and lowest-index tie break") {
  auto p = tiny_params(2, 3, 1, 2);
  p.h[0] = {1.0, 0.0};
  p.Q = {1.0, 0.0};
  // identity scores 0.2, 0.5, 0.1 via unit user embeddings
  p.P[0] = {0.2, std::sqrt(1 - 0.04)};
  p.P[1] = {0.5, std::sqrt(1 - 0.25)};
  p.P[2] = {0.1, std::sqrt(1 - 0.01)};
  auto [score, who] = first_level_score(p, 0, 0);
  CHECK(score == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(who == 1);

  // all scores zero -> identity 0 by the tie rule
  p.h[0] = {0.0, 0.0};
  auto [zscore, zwho] = first_level_score(p, 0, 0);
  CHECK(zscore == 0.0);
  CHECK(zwho == 0);
}

TEST_CASE("chain_scores: hand-evaluated transition chain") {
  auto p = tiny_params(2, 1, 1, 3);
  p.h[0] = {1.0, 0.0};
  p.P[0] = {0.8, 0.6};
  p.Q = {1.0, 0.0};
  p.T[0][0] = 0.25;
  p.T[1][0] = 0.5;
  const auto row = chain_scores(p, 0);
  CHECK(row.levels[0][0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(row.levels[1][0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(row.levels[2][0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("chain_scores: all-ones transitions copy level one") {
  auto p = tiny_params(2, 1, 3, 2);
  p.h[0] = {1.0, 1.0};
  p.P[0] = {0.3, 0.7};
  for (int v = 0; v < 3; ++v) {
    p.Q[2 * v] = 0.1 * (v + 1);
    p.Q[2 * v + 1] = 0.2;
  }
  const auto row = chain_scores(p, 0);
  CHECK(row.levels[1] == row.levels[0]);
}

TEST_CASE("chain invariants on random parameter draws") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SynthConfig cfg;
    cfg.num_users = 6;
    cfg.num_items = 15;
    cfg.num_levels = 3;
    cfg.seed = seed;
    const auto ds = generate(cfg).dataset;
    HyperParams hp;
    hp.d = 5;
    hp.M = 3;
    hp.lambda = {0.2, 0.4, 0.4};
    Rng rng(seed);
    const auto params = init_params(hp, ds, rng);
    double h_norm = 0.0;
    for (double x : params.h[0]) h_norm += x * x;
    h_norm = std::sqrt(h_norm);

    for (int u = 0; u < ds.num_users; ++u) {
      const auto row = chain_scores(params, u);
      for (int v = 0; v < ds.num_items; ++v) {
        CHECK(row.levels[0][v] >= 0.0);
        CHECK(row.levels[0][v] <= h_norm + 1e-12);
        for (int k = 1; k < ds.num_levels; ++k) CHECK(row.levels[k][v] <= row.levels[k - 1][v]);
      }
    }
  }
}

TEST_CASE("score_all_items matches a per-item brute-force loop") {
  SynthConfig cfg;
  cfg.num_users = 5;
  cfg.num_items = 12;
  cfg.num_levels = 3;
  cfg.seed = 11;
  const auto ds = generate(cfg).dataset;
  HyperParams hp;
  hp.d = 4;
  hp.M = 2;
  hp.lambda = {0.2, 0.4, 0.4};
  Rng rng(2);
  const auto params = init_params(hp, ds, rng);

  for (int u = 0; u < ds.num_users; ++u) {
    const auto scores = score_all_items(params, u);
    for (int v = 0; v < ds.num_items; ++v) {
      auto [r1, who] = first_level_score(params, u, v);
      double expected = r1;
      for (int k = 0; k + 1 < ds.num_levels; ++k) expected *= params.T[k][v];
      CHECK(scores[v] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("scaling h preserves ranking and argmax") {
  SynthConfig cfg;
  cfg.num_users = 4;
  cfg.num_items = 10;
  cfg.num_levels = 2;
  cfg.seed = 3;
  const auto ds = generate(cfg).dataset;
  HyperParams hp;
  hp.d = 4;
  hp.M = 3;
  hp.lambda = {0.5, 0.5};
  Rng rng(4);
  auto params = init_params(hp, ds, rng);

  const auto before = chain_scores(params, 0);
  for (double& x : params.h[0]) x *= 3.0;
  const auto after = chain_scores(params, 0);
  CHECK(before.argmax == after.argmax);
  for (int v = 0; v < ds.num_items; ++v)
    CHECK(after.levels[0][v] == doctest::Approx(3.0 * before.levels[0][v]).epsilon(1e-12));
}

TEST_CASE("single identity equals the max-free forward") {
  auto p = tiny_params(3, 1, 2, 2);
  p.h[0] = {0.5, -1.0, 2.0};
  p.P[0] = {0.2, 0.4, -0.1};
  p.Q = {1.0, 0.0, 0.5, /* item 1 */ -0.3, 0.2, 0.9};
  for (int v = 0; v < 2; ++v) {
    auto [score, who] = first_level_score(p, 0, v);
    CHECK(who == 0);
    CHECK(score == identity_score(p, 0, v, 0));
  }
}

TEST_CASE("dropout: rho=0 mask is inert, active mask scales kept entries") {
  Rng rng(8);
  const auto inert = make_dropout_mask(4, 0.0, rng);
  CHECK(!inert.active);
  for (double s : inert.scale) CHECK(s == 1.0);

  const auto mask = make_dropout_mask(1000, 0.5, rng);
  CHECK(mask.active);
  int kept = 0;
  for (double s : mask.scale) {
    CHECK((s == 0.0 || s == 2.0));
    kept += s > 0.0;
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
}

TEST_CASE("max_normalized diagnostic keeps top score at 1") {
  const auto out = max_normalized({0.2, 0.8, 0.0});
  CHECK(out[1] == 1.0);
  CHECK(out[0] == doctest::Approx(0.25).epsilon(1e-15));
  const auto zeros = max_normalized({0.0, 0.0});
  CHECK(zeros == std::vector<double>{0.0, 0.0});
}
