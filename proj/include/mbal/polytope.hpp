#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbal {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown on shape/dimension mismatches and malformed inputs.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an operation is called in a way its contract forbids
// (e.g. a classification kind passed to a regression routine).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class NormKind { L2 };

// Primal norm of v.
double norm(NormKind kind, const Vec& v);
// Dual norm of v. L2 is self-dual.
double dual_norm(NormKind kind, const Vec& v);

std::string to_string(NormKind kind);
NormKind norm_from_string(const std::string& s);

inline constexpr double kInfDistance = std::numeric_limits<double>::infinity();

struct LoSolution {
  Vec w_star;
  int index = 0;
};

/// Feasible region given by its extreme points. Rows of `vertices()` are the
/// K vertices in R^d. Immutable once built.
class Polytope {
 public:
  Polytope(std::string name, Mat vertices);

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(vertices_.cols()); }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  const Mat& vertices() const { return vertices_; }
  Vec vertex(int j) const { return vertices_.row(j).transpose(); }

  /// Objective value c·v for every vertex.
  Vec objective_values(const Vec& c) const;

  /// argmin_v c·v, ties broken by the lowest vertex index.
  LoSolution solve_lo(const Vec& c) const;
  int argmin_index(const Vec& c) const;

  /// Distance from c to the set of cost vectors with several optimal
  /// vertices:
  ///   min_{j : v_j != w*(c)} c·(v_j - w*(c)) / ||v_j - w*(c)||_*
  /// Returns +inf when K == 1. When `neighbors` is non-empty, entry i lists
  /// the vertex ids adjacent to vertex i and only those are scanned.
  double distance_to_degeneracy(const Vec& c, NormKind norm = NormKind::L2,
                                std::span<const std::vector<int>> neighbors = {}) const;

  /// Index j of the vertex realizing the minimum above, or -1 when K == 1.
  int degeneracy_witness(const Vec& c, NormKind norm = NormKind::L2) const;

  /// max_v c·v - min_v c·v.
  double lin_opt_gap(const Vec& c) const;

  /// Largest pairwise L2 distance between vertices.
  double diameter() const;

  nlohmann::json to_json() const;
  static Polytope from_json(const nlohmann::json& j);

 private:
  void check_dim(const Vec& c) const;

  std::string name_;
  Mat vertices_;
};

/// conv{(0,0), (1,0), (0,1)}.
Polytope make_triangle();

}  // namespace mbal
