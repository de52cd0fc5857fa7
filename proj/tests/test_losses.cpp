#include "support.hpp"

#include "mbal/losses.hpp"

#include <doctest.h>

using namespace mbal;
using namespace mbal::testing;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Polytope segment() {
  Mat v(2, 2);
  v << 1, 0, 0, 1;
  return Polytope("segment", v);
}

}  // namespace

TEST_CASE("SPO loss oracles") {
  const Polytope seg = segment();
  CHECK(spo_loss(seg, vec2(2, 1), vec2(1, 2)) == doctest::Approx(1.0));
  CHECK(spo_loss(seg, vec2(1, 2), vec2(1, 2)) == 0.0);
  CHECK(spo_loss(seg, vec2(0.1, 5), vec2(1, 2)) == 0.0);
  CHECK_THROWS_AS(spo_loss(seg, Vec::Ones(3), vec2(1, 2)), InputError);
}

TEST_CASE("SPO+ loss oracles") {
  const Polytope seg = segment();
  CHECK(spo_plus_loss(seg, vec2(2, 1), vec2(1, 2)) == doctest::Approx(3.0));
  CHECK(spo_plus_loss(seg, vec2(1, 2), vec2(1, 2)) == doctest::Approx(0.0));
  Rng rng(3);
  for (const Polytope& poly : test_polytopes()) {
    const Vec c = gaussian_vec(poly.dim(), rng);
    CHECK(spo_plus_loss(poly, Vec::Zero(poly.dim()), c) == doctest::Approx(poly.lin_opt_gap(c)));
  }
}

TEST_CASE("SPO+ subgradient oracles") {
  const Polytope seg = segment();
  const Vec g = spo_plus_subgradient(seg, vec2(2, 1), vec2(1, 2));
  CHECK(g.isApprox(vec2(2, -2)));
  CHECK(spo_plus_subgradient(seg, vec2(1, 2), vec2(1, 2)).isZero());
}

TEST_CASE("regression losses") {
  const Vec c_hat = vec2(1, 2);
  const Vec c = vec2(0, 0);
  const LossEval sq = regression_loss(SurrogateKind::squared(), c_hat, c);
  CHECK(sq.value == doctest::Approx(5.0));
  CHECK(sq.grad.isApprox(vec2(2, 4)));
  const LossEval mae = regression_loss(SurrogateKind::mae(), c_hat, c);
  CHECK(mae.value == doctest::Approx(3.0));
  CHECK(mae.grad.isApprox(vec2(1, 1)));
  const LossEval hub = regression_loss(SurrogateKind::huber(1.0), c_hat, c);
  CHECK(hub.value == doctest::Approx(2.0));
  CHECK(hub.grad.isApprox(vec2(1, 1)));
  CHECK(regression_loss(SurrogateKind::huber(4.0), c_hat, c).value == doctest::Approx(2.5));
  CHECK_THROWS_AS(regression_loss(SurrogateKind::spo_plus(), c_hat, c), UsageError);
  CHECK_THROWS_AS(regression_loss(SurrogateKind::squared(), c_hat, Vec::Zero(3)), InputError);
  CHECK_THROWS_AS(SurrogateKind::huber(0.0), InputError);
}

TEST_CASE("surrogate names") {
  for (const auto& kind : {SurrogateKind::spo(), SurrogateKind::spo_plus(), SurrogateKind::squared(),
                           SurrogateKind::mae(), SurrogateKind::huber(2.5)}) {
    CHECK(surrogate_from_string(to_string(kind)) == kind);
  }
  CHECK(surrogate_from_string("huber").huber_delta == 1.0);
  CHECK_THROWS_AS(surrogate_from_string("hinge"), InputError);
  CHECK_THROWS_AS(surrogate_from_string("huber:-1"), InputError);
}

TEST_CASE("reweighted sum") {
  CHECK(reweighted_sum({1, 2}, {3}, 0.5, 4) == doctest::Approx(2.25));
  CHECK(reweighted_sum({1, 2}, {}, 0.0, 2) == doctest::Approx(1.5));
  CHECK(reweighted_sum({}, {}, 0.0, 1) == 0.0);
  CHECK_THROWS_AS(reweighted_sum({1}, {1}, 0.0, 2), UsageError);
}

TEST_CASE("SPO+ dominates SPO") {
  Rng rng(21);
  for (const Polytope& poly : test_polytopes()) {
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vec c_hat = gaussian_vec(poly.dim(), rng);
      const Vec c = gaussian_vec(poly.dim(), rng);
      const double spo = spo_loss(poly, c_hat, c);
      const double plus = spo_plus_loss(poly, c_hat, c);
      if (spo < -1e-9 || plus < spo - 1e-9) ++violations;
    }
    CHECK_MESSAGE(violations == 0, poly.name());
  }
}

TEST_CASE("SPO+ is convex and the subgradient supports it") {
  Rng rng(22);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const Polytope& poly : test_polytopes()) {
    int violations = 0;
    for (int i = 0; i < 3000; ++i) {
      const Vec c = gaussian_vec(poly.dim(), rng);
      const Vec a = gaussian_vec(poly.dim(), rng);
      const Vec b = gaussian_vec(poly.dim(), rng);
      const double lam = unit(rng);
      const double mid = spo_plus_loss(poly, lam * a + (1 - lam) * b, c);
      if (mid > lam * spo_plus_loss(poly, a, c) + (1 - lam) * spo_plus_loss(poly, b, c) + 1e-9) ++violations;
      const Vec g = spo_plus_subgradient(poly, a, c);
      if (spo_plus_loss(poly, b, c) < spo_plus_loss(poly, a, c) + g.dot(b - a) - 1e-9) ++violations;
    }
    CHECK_MESSAGE(violations == 0, poly.name());
  }
}

TEST_CASE("SPO+ subgradient matches finite differences at smooth points") {
  Rng rng(23);
  const double h = 1e-6;
  for (const Polytope& poly : test_polytopes()) {
    int checked = 0;
    while (checked < 300) {
      const Vec c = gaussian_vec(poly.dim(), rng);
      const Vec c_hat = gaussian_vec(poly.dim(), rng);
      // smooth when both oracle calls have a clear winner
      if (poly.distance_to_degeneracy(c) < 1e-3 || poly.distance_to_degeneracy(2 * c_hat - c) < 1e-3) continue;
      const Vec g = spo_plus_subgradient(poly, c_hat, c);
      Vec fd(poly.dim());
      for (int i = 0; i < poly.dim(); ++i) {
        Vec e = Vec::Zero(poly.dim());
        e[i] = h;
        fd[i] = (spo_plus_loss(poly, c_hat + e, c) - spo_plus_loss(poly, c_hat - e, c)) / (2 * h);
      }
      CHECK((fd - g).norm() <= 1e-4 * std::max(1.0, g.norm()));
      ++checked;
    }
  }
}

TEST_CASE("SPO loss is invariant to positive scaling of the prediction") {
  Rng rng(24);
  std::uniform_real_distribution<double> k(0.01, 100.0);
  for (const Polytope& poly : test_polytopes()) {
    for (int i = 0; i < 1000; ++i) {
      const Vec c_hat = gaussian_vec(poly.dim(), rng);
      const Vec c = gaussian_vec(poly.dim(), rng);
      CHECK(spo_loss(poly, k(rng) * c_hat, c) == doctest::Approx(spo_loss(poly, c_hat, c)));
    }
  }
}

TEST_CASE("surrogate_loss dispatch") {
  const Polytope seg = segment();
  const LossEval spo = surrogate_loss(SurrogateKind::spo(), seg, vec2(2, 1), vec2(1, 2));
  CHECK(spo.value == doctest::Approx(1.0));
  CHECK(spo.grad.isApprox(vec2(2, -2)));
  CHECK(surrogate_value(SurrogateKind::spo_plus(), seg, vec2(2, 1), vec2(1, 2)) == doctest::Approx(3.0));
  CHECK(surrogate_value(SurrogateKind::squared(), seg, vec2(2, 1), vec2(1, 2)) == doctest::Approx(2.0));
}
