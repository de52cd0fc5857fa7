#include "mbal/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mbal {

double norm(NormKind kind, const Vec& v) {
  switch (kind) {
    case NormKind::L2:
      return v.norm();
  }
  throw InputError("unknown norm kind");
}

double dual_norm(NormKind kind, const Vec& v) {
  switch (kind) {
    case NormKind::L2:
      return v.norm();
  }
  throw InputError("unknown norm kind");
}

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L2:
      return "l2";
  }
  return "?";
}

NormKind norm_from_string(const std::string& s) {
  if (s == "l2" || s == "L2") return NormKind::L2;
  throw InputError("unknown norm: " + s);
}

Polytope::Polytope(std::string name, Mat vertices)
    : name_(std::move(name)), vertices_(std::move(vertices)) {
  if (vertices_.rows() < 1) throw InputError("polytope needs at least one vertex");
  if (vertices_.cols() < 1) throw InputError("polytope dimension must be positive");
  if (!vertices_.allFinite()) throw InputError("polytope vertices must be finite");
  for (Eigen::Index i = 0; i < vertices_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < vertices_.rows(); ++j) {
      if (vertices_.row(i) == vertices_.row(j)) {
        throw InputError("duplicate vertex " + std::to_string(i) + " / " + std::to_string(j) +
                         " in polytope '" + name_ + "'");
      }
    }
  }
}

void Polytope::check_dim(const Vec& c) const {
  if (c.size() != vertices_.cols()) {
    throw InputError("cost vector has dimension " + std::to_string(c.size()) + ", polytope '" +
                     name_ + "' has " + std::to_string(vertices_.cols()));
  }
}

Vec Polytope::objective_values(const Vec& c) const {
  check_dim(c);
  return vertices_ * c;
}

int Polytope::argmin_index(const Vec& c) const {
  const Vec values = objective_values(c);
  int best = 0;
  // strict '<' keeps the lowest index on ties
  for (int j = 1; j < values.size(); ++j) {
    if (values[j] < values[best]) best = j;
  }
  return best;
}

LoSolution Polytope::solve_lo(const Vec& c) const {
  const int idx = argmin_index(c);
  return {vertex(idx), idx};
}

namespace {

struct Witness {
  double distance = kInfDistance;
  int index = -1;
};

Witness scan_degeneracy(const Mat& vertices, const Vec& values, int star, NormKind norm,
                        const std::vector<int>* candidates) {
  Witness out;
  const auto visit = [&](int j) {
    if (j == star) return;
    const Vec diff = (vertices.row(j) - vertices.row(star)).transpose();
    const double denom = dual_norm(norm, diff);
    if (denom == 0.0) return;
    const double ratio = (values[j] - values[star]) / denom;
    if (ratio < out.distance) {
      out.distance = ratio;
      out.index = j;
    }
  };
  if (candidates != nullptr) {
    for (int j : *candidates) visit(j);
  } else {
    for (int j = 0; j < vertices.rows(); ++j) visit(j);
  }
  // values[star] is the minimum, so every ratio is >= 0 up to rounding
  if (out.index >= 0) out.distance = std::max(out.distance, 0.0);
  return out;
}

}  // namespace

double Polytope::distance_to_degeneracy(const Vec& c, NormKind norm,
                                        std::span<const std::vector<int>> neighbors) const {
  const Vec values = objective_values(c);
  if (num_vertices() == 1) return kInfDistance;
  const int star = argmin_index(c);
  const std::vector<int>* candidates = nullptr;
  if (!neighbors.empty()) {
    if (static_cast<int>(neighbors.size()) != num_vertices()) {
      throw InputError("adjacency list must have one entry per vertex");
    }
    candidates = &neighbors[static_cast<std::size_t>(star)];
    for (int j : *candidates) {
      if (j < 0 || j >= num_vertices()) throw InputError("adjacency list refers to a missing vertex");
    }
  }
  return scan_degeneracy(vertices_, values, star, norm, candidates).distance;
}

int Polytope::degeneracy_witness(const Vec& c, NormKind norm) const {
  const Vec values = objective_values(c);
  if (num_vertices() == 1) return -1;
  return scan_degeneracy(vertices_, values, argmin_index(c), norm, nullptr).index;
}

double Polytope::lin_opt_gap(const Vec& c) const {
  const Vec values = objective_values(c);
  return values.maxCoeff() - values.minCoeff();
}

double Polytope::diameter() const {
  double best = 0.0;
  for (int i = 0; i < num_vertices(); ++i) {
    for (int j = i + 1; j < num_vertices(); ++j) {
      best = std::max(best, (vertices_.row(i) - vertices_.row(j)).norm());
    }
  }
  return best;
}

nlohmann::json Polytope::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < num_vertices(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(dim()));
    for (int k = 0; k < dim(); ++k) row[static_cast<std::size_t>(k)] = vertices_(i, k);
    rows.push_back(std::move(row));
  }
  return {{"name", name_}, {"d", dim()}, {"vertices", std::move(rows)}};
}

Polytope Polytope::from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  const auto& rows = j.at("vertices");
  if (!rows.is_array() || rows.empty()) throw InputError("polytope JSON needs a vertex array");
  Mat v(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = rows[i].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != d) {
      throw InputError("vertex " + std::to_string(i) + " has wrong dimension");
    }
    for (int k = 0; k < d; ++k) v(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)];
  }
  return Polytope(j.value("name", std::string{}), std::move(v));
}

Polytope make_triangle() {
  Mat v(3, 2);
  v << 0, 0, 1, 0, 0, 1;
  return Polytope("triangle", std::move(v));
}

}  // namespace mbal
