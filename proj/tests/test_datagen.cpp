#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace mbal;
using namespace mbal::testing;

namespace {

// All E/N move strings with k-1 of each, by brute force over bit masks.
std::set<std::string> enumerate_paths(int k) {
  const int len = 2 * (k - 1);
  std::set<std::string> out;
  for (int mask = 0; mask < (1 << len); ++mask) {
    std::string s;
    for (int i = 0; i < len; ++i) s += (mask >> i & 1) ? 'E' : 'N';
    if (std::count(s.begin(), s.end(), 'E') == k - 1) out.insert(s);
  }
  return out;
}

}  // namespace

TEST_CASE("grid polytope matches path enumeration") {
  for (auto [k, paths] : {std::pair{2, 2}, std::pair{3, 6}, std::pair{4, 20}, std::pair{5, 70}}) {
    const Polytope grid = build_grid_polytope(k);
    CHECK(grid.dim() == 2 * k * (k - 1));
    CHECK(grid.num_vertices() == paths);
    std::set<std::string> decoded;
    for (int j = 0; j < grid.num_vertices(); ++j) {
      const Vec v = grid.vertex(j);
      CHECK(v.sum() == doctest::Approx(2.0 * (k - 1)));
      CHECK((v.array() * (1.0 - v.array())).abs().maxCoeff() == 0.0);
      const auto moves = decode_grid_path(k, v);
      REQUIRE(moves.has_value());
      decoded.insert(*moves);
    }
    CHECK(decoded == enumerate_paths(k));
  }
  CHECK_THROWS_AS(build_grid_polytope(1), InputError);
}

TEST_CASE("decode rejects non-paths") {
  Vec v = Vec::Zero(12);
  CHECK_FALSE(decode_grid_path(3, v).has_value());
  v[grid_east_edge(3, 0, 0)] = 1;
  v[grid_east_edge(3, 0, 1)] = 1;
  v[grid_north_edge(3, 0, 2)] = 1;
  v[grid_north_edge(3, 1, 2)] = 1;
  CHECK(decode_grid_path(3, v) == std::optional<std::string>("EENN"));
  v[grid_east_edge(3, 2, 0)] = 1;  // stray edge
  CHECK_FALSE(decode_grid_path(3, v).has_value());
}

TEST_CASE("pricing polytope matches brute-force enumeration") {
  const Polytope poly = build_pricing_polytope();
  CHECK(poly.dim() == 9);
  std::set<std::vector<int>> expected;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        if (a <= b && b <= c) expected.insert({a, b, c});
      }
    }
  }
  CHECK(expected.size() == 10);
  std::set<std::vector<int>> got;
  for (int j = 0; j < poly.num_vertices(); ++j) {
    const Vec v = poly.vertex(j);
    std::vector<int> prices;
    for (int item = 0; item < 3; ++item) {
      int chosen = -1;
      int count = 0;
      for (int price = 0; price < 3; ++price) {
        if (v[pricing_index(item, price)] == 1.0) {
          chosen = price;
          ++count;
        }
      }
      CHECK(count == 1);
      prices.push_back(chosen);
    }
    got.insert(prices);
  }
  CHECK(got == expected);
  CHECK(got.count({0, 0, 0}) == 1);
  CHECK(got.count({2, 2, 2}) == 1);
  CHECK(got.count({1, 0, 2}) == 0);
}

TEST_CASE("pricing revenue at the first center") {
  const Vec mu = pricing_centers().at(0);
  const Vec mean = pricing_mean(mu);
  // 60 * exp(-1.19155 - 0.0202733 * 60)
  CHECK(-mean[pricing_index(0, 0)] == doctest::Approx(5.399987).epsilon(1e-6));
  CHECK(pricing_centers().size() == 7);
  CHECK(PricingConstants::a[0] == -0.0202733);
  CHECK(PricingConstants::b[2] == -1.22819);
}

TEST_CASE("pricing centers have the expected optimal prices") {
  const Polytope poly = build_pricing_polytope();
  const std::vector<std::vector<int>> optimal = {{0, 0, 0}, {0, 1, 2}, {2, 2, 2}, {1, 1, 1},
                                                 {0, 0, 1}, {1, 2, 2}, {0, 0, 2}};
  const auto centers = pricing_centers();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Vec w = poly.solve_lo(pricing_mean(centers[k])).w_star;
    for (int item = 0; item < 3; ++item) CHECK(w[pricing_index(item, optimal[k][static_cast<std::size_t>(item)])] == 1.0);
    CHECK(poly.distance_to_degeneracy(pricing_mean(centers[k])) > 0.0);
  }
}

TEST_CASE("pricing labels are non-positive and noiseless labels equal the mean") {
  const Scenario scn = make_pricing_scenario(7);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) CHECK(scn.sample(rng).c.maxCoeff() <= 0.0);
  const Scenario exact = make_pricing_scenario(7, 0.0);
  const LabeledSample s = exact.sample(rng);
  CHECK(s.c == exact.conditional_mean(s.x));
  const Scenario shared = make_pricing_scenario(7, 0.1, true);
  const LabeledSample t = shared.sample(rng);
  const Vec ratio = t.c.cwiseQuotient(shared.conditional_mean(t.x));
  for (int item = 0; item < 3; ++item) {
    CHECK(ratio[pricing_index(item, 1)] == doctest::Approx(ratio[pricing_index(item, 0)]));
    CHECK(ratio[pricing_index(item, 2)] == doctest::Approx(ratio[pricing_index(item, 0)]));
  }
}

TEST_CASE("shortest-path scenario generation") {
  const Scenario scn = gen_shortest_path_scenario(42, {});
  const auto& sp = std::get<ShortestPathScenario>(scn.data());
  const Polytope& poly = scn.polytope();
  CHECK(scn.d() == 12);
  CHECK(scn.p() == 5);
  REQUIRE(sp.centers.size() == 6);
  CHECK(sp.center_paths == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK((sp.B.array() * (1.0 - sp.B.array())).abs().maxCoeff() == 0.0);
  for (std::size_t j = 0; j < sp.centers.size(); ++j) {
    const Vec mean = scn.conditional_mean(sp.centers[j]);
    CHECK(poly.argmin_index(mean) == sp.center_paths[j]);
    CHECK(poly.distance_to_degeneracy(mean) >= 0.1 * mean.norm());
  }
  CHECK(scn.conditional_mean(Vec::Zero(5)) == Vec::Constant(12, 2.0));

  const Scenario again = gen_shortest_path_scenario(42, {});
  CHECK(again.to_json().dump() == scn.to_json().dump());
  CHECK(gen_shortest_path_scenario(43, {}).to_json().dump() != scn.to_json().dump());
}

TEST_CASE("5x5 grid uses six centers on distinct paths") {
  ShortestPathOptions opts;
  opts.k = 5;
  opts.threshold_scale = 0.05;
  const Scenario scn = gen_shortest_path_scenario(1, opts);
  const auto& sp = std::get<ShortestPathScenario>(scn.data());
  CHECK(scn.d() == 40);
  CHECK(sp.centers.size() == 6);
  CHECK(std::set<int>(sp.center_paths.begin(), sp.center_paths.end()).size() == 6);
  for (std::size_t j = 0; j < sp.centers.size(); ++j) {
    const Vec mean = scn.conditional_mean(sp.centers[j]);
    CHECK(scn.polytope().argmin_index(mean) == sp.center_paths[j]);
    CHECK(scn.polytope().distance_to_degeneracy(mean) >= 0.05 * mean.norm());
  }
}

TEST_CASE("center search failure is reported") {
  ShortestPathOptions opts;
  opts.threshold_scale = 10.0;
  opts.max_candidates_per_path = 20;
  opts.max_matrix_draws = 2;
  CHECK_THROWS_AS(gen_shortest_path_scenario(1, opts), GenerationError);
  opts = {};
  opts.eps_bar = 1.5;
  CHECK_THROWS_AS(gen_shortest_path_scenario(1, opts), InputError);
}

TEST_CASE("noiseless shortest-path labels equal the conditional mean") {
  ShortestPathOptions opts;
  opts.eps_bar = 0.0;
  const Scenario scn = gen_shortest_path_scenario(42, opts);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const LabeledSample s = scn.sample(rng);
    CHECK(s.c == scn.conditional_mean(s.x));
  }
}

TEST_CASE("Monte Carlo label mean matches the conditional mean") {
  const Scenario scn = gen_shortest_path_scenario(42, {});
  Rng rng(7);
  const Vec x = scn.sample_x(rng);
  const Vec mean = scn.conditional_mean(x);
  const int n = 100000;
  Vec sum = Vec::Zero(scn.d());
  for (int i = 0; i < n; ++i) sum += scn.sample_label(x, rng);
  const double eps = std::get<ShortestPathScenario>(scn.data()).opts.eps_bar;
  for (int j = 0; j < scn.d(); ++j) {
    const double se = std::abs(mean[j]) * eps / std::sqrt(3.0) / std::sqrt(double(n));
    CHECK(std::abs(sum[j] / n - mean[j]) <= 3 * se + 1e-12);
  }
}

TEST_CASE("mixture components are drawn uniformly") {
  for (const Scenario& scn : {gen_shortest_path_scenario(42, {}), make_pricing_scenario(7)}) {
    Rng rng(8);
    const int n = 100000;
    const int k = scn.num_components();
    std::vector<int> counts(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(scn.sample_component(rng))];
    const double expect = double(n) / k;
    const double sd = std::sqrt(n * (1.0 / k) * (1 - 1.0 / k));
    for (int c : counts) CHECK(std::abs(c - expect) <= 3 * sd);
  }
}

TEST_CASE("ball-law scenario certifies a margin floor") {
  ShortestPathOptions opts;
  opts.law = FeatureLaw::UniformBall;
  opts.ball_radius = 0.1;
  const Scenario scn = gen_shortest_path_scenario(42, opts);
  const double floor = std::get<ShortestPathScenario>(scn.data()).margin_floor;
  REQUIRE(floor > 0.0);
  Rng rng(9);
  double smallest = kInfDistance;
  for (int i = 0; i < 20000; ++i) {
    smallest = std::min(smallest, scn.polytope().distance_to_degeneracy(scn.conditional_mean(scn.sample_x(rng))));
  }
  CHECK(smallest >= floor);
  CHECK(std::isnan(std::get<ShortestPathScenario>(gen_shortest_path_scenario(42, {}).data()).margin_floor));
}

TEST_CASE("induced-ball transform") {
  const Polytope tri = make_triangle();
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const Vec u = gaussian_vec(2, rng);
    CHECK(induced_margin_transform(tri, u, 1.0).isApprox(u));
    const double nu = tri.distance_to_degeneracy(u);
    const Vec y = induced_margin_transform(tri, u, 0.5);
    // nu(Y) = nu(U)^(1/kappa) by homogeneity
    CHECK(tri.distance_to_degeneracy(y) == doctest::Approx(std::pow(nu, 2.0)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(make_induced_ball_scenario(make_triangle(), 0.0, 1), InputError);
}

TEST_CASE("scenario json round trip") {
  ShortestPathOptions ball;
  ball.law = FeatureLaw::UniformBall;
  ball.ball_radius = 0.2;
  for (const Scenario& scn : {gen_shortest_path_scenario(42, {}), gen_shortest_path_scenario(5, ball),
                              make_pricing_scenario(7, 0.1, true), make_induced_ball_scenario(make_triangle(), 2.0, 3)}) {
    const Scenario back = Scenario::from_json(scn.to_json());
    CHECK(back.to_json().dump() == scn.to_json().dump());
    Rng a(4);
    Rng b(4);
    for (int i = 0; i < 10; ++i) {
      const LabeledSample s = scn.sample(a);
      const LabeledSample t = back.sample(b);
      CHECK(s.x == t.x);
      CHECK(s.c == t.c);
    }
  }
  CHECK_THROWS(Scenario::from_json({{"format", "something-else"}}));
}

TEST_CASE("sub-stream derivation") {
  CHECK(derive_seed(1, 0, "data") != derive_seed(1, 0, "coin"));
  CHECK(derive_seed(1, 0, "data") != derive_seed(1, 1, "data"));
  CHECK(derive_seed(1, 0, "data") != derive_seed(2, 0, "data"));
  CHECK(derive_seed(1, 0, "data") == derive_seed(1, 0, "data"));
  Rng a = make_rng(9, 3, "test");
  Rng b = make_rng(9, 3, "test");
  CHECK(a() == b());
}
