#pragma once

#include "mbal/datagen.hpp"
#include "mbal/polytope.hpp"
#include "mbal/random.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace mbal::testing {

inline Vec gaussian_vec(int d, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

inline Vec unit_vec(int d, Rng& rng) {
  Vec v = gaussian_vec(d, rng);
  return v / v.norm();
}

// Objective values recomputed with a plain loop, independent of Polytope.
inline std::vector<double> brute_values(const Mat& vertices, const Vec& c) {
  std::vector<double> out;
  for (Eigen::Index j = 0; j < vertices.rows(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < vertices.cols(); ++i) s += vertices(j, i) * c[i];
    out.push_back(s);
  }
  return out;
}

inline int brute_argmin(const Mat& vertices, const Vec& c) {
  const auto v = brute_values(vertices, c);
  int best = 0;
  for (int j = 1; j < static_cast<int>(v.size()); ++j) {
    if (v[static_cast<std::size_t>(j)] < v[static_cast<std::size_t>(best)]) best = j;
  }
  return best;
}

// Sets of optimal vertices within tol of the minimum.
inline std::vector<int> optimal_set(const Mat& vertices, const Vec& c, double tol) {
  const auto v = brute_values(vertices, c);
  double m = v[0];
  for (double x : v) m = std::min(m, x);
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(v.size()); ++j) {
    if (v[static_cast<std::size_t>(j)] <= m + tol) out.push_back(j);
  }
  return out;
}

inline std::vector<Polytope> test_polytopes() {
  return {make_triangle(), build_grid_polytope(3), build_pricing_polytope()};
}

}  // namespace mbal::testing
