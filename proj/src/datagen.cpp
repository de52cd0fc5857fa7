#include "mbal/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mbal {

namespace {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const nlohmann::json& j) {
  const auto raw = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(raw.data(), static_cast<Eigen::Index>(raw.size()));
}

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

Mat json_mat(const nlohmann::json& j, int cols) {
  Mat m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = json_vec(j[r]);
    if (row.size() != cols) throw InputError("matrix row has wrong length in scenario JSON");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Vec standard_normal(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

// Uniform point in the ball of the given radius in R^n.
Vec uniform_ball(int n, double radius, Rng& rng) {
  Vec dir = standard_normal(n, rng);
  const double len = dir.norm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::pow(unit(rng), 1.0 / n);
  return len > 0.0 ? Vec(dir * (r / len)) : Vec::Zero(n);
}

Vec multiplicative_noise(const Vec& mean, double eps_bar, Rng& rng) {
  if (eps_bar == 0.0) return mean;
  std::uniform_real_distribution<double> eps(1.0 - eps_bar, 1.0 + eps_bar);
  Vec c(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) c[i] = mean[i] * eps(rng);
  return c;
}

void enumerate_paths(int k, int row, int col, Vec& current, std::vector<Vec>& out) {
  if (row == k - 1 && col == k - 1) {
    out.push_back(current);
    return;
  }
  if (col < k - 1) {
    const int e = grid_east_edge(k, row, col);
    current[e] = 1.0;
    enumerate_paths(k, row, col + 1, current, out);
    current[e] = 0.0;
  }
  if (row < k - 1) {
    const int e = grid_north_edge(k, row, col);
    current[e] = 1.0;
    enumerate_paths(k, row + 1, col, current, out);
    current[e] = 0.0;
  }
}

std::string law_name(FeatureLaw law) { return law == FeatureLaw::Gaussian ? "gaussian" : "uniform_ball"; }

FeatureLaw law_from_name(const std::string& s) {
  if (s == "gaussian") return FeatureLaw::Gaussian;
  if (s == "uniform_ball") return FeatureLaw::UniformBall;
  throw InputError("unknown feature law: " + s);
}

}  // namespace

// --- grid ------------------------------------------------------------------

int grid_edge_count(int k) { return 2 * k * (k - 1); }
int grid_east_edge(int k, int row, int col) { return row * (k - 1) + col; }
int grid_north_edge(int k, int row, int col) { return k * (k - 1) + col * (k - 1) + row; }

Polytope build_grid_polytope(int k) {
  if (k < 2) throw InputError("grid side must be >= 2");
  const int d = grid_edge_count(k);
  std::vector<Vec> paths;
  Vec current = Vec::Zero(d);
  enumerate_paths(k, 0, 0, current, paths);
  Mat v(static_cast<Eigen::Index>(paths.size()), d);
  for (std::size_t i = 0; i < paths.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = paths[i].transpose();
  return Polytope("grid" + std::to_string(k) + "x" + std::to_string(k), std::move(v));
}

std::optional<std::string> decode_grid_path(int k, const Vec& incidence) {
  if (incidence.size() != grid_edge_count(k)) return std::nullopt;
  for (Eigen::Index i = 0; i < incidence.size(); ++i) {
    if (incidence[i] != 0.0 && incidence[i] != 1.0) return std::nullopt;
  }
  if (incidence.sum() != 2.0 * (k - 1)) return std::nullopt;
  std::string moves;
  int row = 0;
  int col = 0;
  while (row != k - 1 || col != k - 1) {
    const bool east = col < k - 1 && incidence[grid_east_edge(k, row, col)] == 1.0;
    const bool north = row < k - 1 && incidence[grid_north_edge(k, row, col)] == 1.0;
    if (east == north) return std::nullopt;  // dead end or a fork
    if (east) {
      moves += 'E';
      ++col;
    } else {
      moves += 'N';
      ++row;
    }
  }
  return moves;
}

// --- pricing ---------------------------------------------------------------

Polytope build_pricing_polytope() {
  std::vector<Vec> rows;
  for (int p1 = 0; p1 < 3; ++p1) {
    for (int p2 = 0; p2 < 3; ++p2) {
      for (int p3 = 0; p3 < 3; ++p3) {
        if (!(p1 <= p2 && p2 <= p3)) continue;
        Vec w = Vec::Zero(9);
        w[pricing_index(0, p1)] = 1.0;
        w[pricing_index(1, p2)] = 1.0;
        w[pricing_index(2, p3)] = 1.0;
        rows.push_back(w);
      }
    }
  }
  Mat v(static_cast<Eigen::Index>(rows.size()), 9);
  for (std::size_t i = 0; i < rows.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return Polytope("pricing", std::move(v));
}

std::vector<Vec> pricing_centers() {
  using K = PricingConstants;
  // price tier per item for each center, as indices into a/b
  constexpr std::array<std::array<int, 3>, 7> tiers{{
      {0, 0, 0}, {0, 1, 2}, {2, 2, 2}, {1, 1, 1}, {0, 0, 1}, {1, 2, 2}, {0, 0, 2}}};
  std::vector<Vec> centers;
  for (const auto& t : tiers) {
    Vec mu(6);
    for (int j = 0; j < 3; ++j) {
      mu[j] = K::b[static_cast<std::size_t>(t[static_cast<std::size_t>(j)])];
      mu[3 + j] = K::a[static_cast<std::size_t>(t[static_cast<std::size_t>(j)])];
    }
    centers.push_back(mu);
  }
  return centers;
}

Vec pricing_mean(const Vec& x) {
  using K = PricingConstants;
  if (x.size() != K::p) throw InputError("pricing features must have dimension 6");
  Vec c(9);
  for (int j = 0; j < K::items; ++j) {
    for (int i = 0; i < 3; ++i) {
      const double price = K::prices[static_cast<std::size_t>(i)];
      c[pricing_index(j, i)] = -price * std::exp(x[j] + x[3 + j] * price);
    }
  }
  return c;
}

// --- induced ball ----------------------------------------------------------

Vec induced_margin_transform(const Polytope& poly, const Vec& u, double kappa) {
  if (!(kappa > 0.0)) throw InputError("kappa must be positive");
  const double nu = poly.distance_to_degeneracy(u);
  if (nu == 0.0) return Vec::Zero(u.size());
  return std::pow(nu, 1.0 / kappa - 1.0) * u;
}

// --- shortest path ---------------------------------------------------------

Vec shortest_path_mean(const ShortestPathScenario& scn, const Vec& x) {
  if (x.size() != scn.B.cols()) throw InputError("shortest-path features have wrong dimension");
  const Vec z = scn.B * x / std::sqrt(static_cast<double>(scn.opts.p));
  return z.unaryExpr([deg = scn.opts.deg](double v) { return 1.0 + std::pow(1.0 + v, deg); });
}

Scenario gen_shortest_path_scenario(std::uint64_t seed, const ShortestPathOptions& opts) {
  if (opts.k < 2) throw InputError("grid side must be >= 2");
  if (opts.p < 1) throw InputError("feature dimension must be >= 1");
  if (opts.eps_bar < 0.0 || opts.eps_bar >= 1.0) throw InputError("eps_bar must be in [0, 1)");
  if (opts.sigma_m2 < 0.0) throw InputError("sigma_m2 must be >= 0");
  if (opts.deg < 1) throw InputError("deg must be >= 1");
  if (opts.law == FeatureLaw::UniformBall && opts.ball_radius < 0.0) throw InputError("ball radius must be >= 0");

  Polytope poly = build_grid_polytope(opts.k);
  const int d = poly.dim();
  const int paths = poly.num_vertices();
  if (opts.num_centers < 1 || opts.num_centers > paths) {
    throw InputError("num_centers must be in [1, " + std::to_string(paths) + "]");
  }

  Rng rng = make_rng(seed, 0, "scenario");
  // With fewer centers than paths, the targets are the first distinct paths
  // reached with enough margin; most paths are never optimal for a given B.
  const bool every_path = opts.num_centers == paths;

  ShortestPathScenario scn;
  scn.opts = opts;
  scn.seed = seed;
  std::bernoulli_distribution coin(0.5);
  std::vector<std::string> failures;
  const auto accept = [&](const Vec& mu, int* path) {
    const Vec mean = shortest_path_mean(scn, mu);
    *path = poly.argmin_index(mean);
    return poly.distance_to_degeneracy(mean) >= opts.threshold_scale * mean.norm();
  };
  for (int draw = 1; draw <= opts.max_matrix_draws; ++draw) {
    scn.B.resize(d, opts.p);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < opts.p; ++c) scn.B(r, c) = coin(rng) ? 1.0 : 0.0;
    }
    scn.centers.clear();
    scn.center_paths.clear();
    std::string failure;
    if (every_path) {
      for (int target = 0; target < paths && failure.empty(); ++target) {
        bool found = false;
        for (int cand = 0; cand < opts.max_candidates_per_path && !found; ++cand) {
          const Vec mu = standard_normal(opts.p, rng);
          int path = -1;
          if (accept(mu, &path) && path == target) {
            scn.centers.push_back(mu);
            scn.center_paths.push_back(target);
            found = true;
          }
        }
        if (!found) failure = "no center for path " + std::to_string(target);
      }
    } else {
      std::vector<std::pair<int, Vec>> found;
      const long budget = static_cast<long>(opts.max_candidates_per_path) * opts.num_centers;
      for (long cand = 0; cand < budget && static_cast<int>(found.size()) < opts.num_centers; ++cand) {
        const Vec mu = standard_normal(opts.p, rng);
        int path = -1;
        if (!accept(mu, &path)) continue;
        const bool taken = std::any_of(found.begin(), found.end(), [path](const auto& f) { return f.first == path; });
        if (!taken) found.emplace_back(path, mu);
      }
      if (static_cast<int>(found.size()) < opts.num_centers) {
        failure = "only " + std::to_string(found.size()) + " distinct paths reachable";
      } else {
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [path, mu] : found) {
          scn.center_paths.push_back(path);
          scn.centers.push_back(std::move(mu));
        }
      }
    }
    if (failure.empty()) {
      scn.matrix_draws = draw;
      break;
    }
    failures.push_back("draw " + std::to_string(draw) + ": " + failure);
  }
  if (scn.matrix_draws == 0) {
    std::ostringstream msg;
    msg << "center search failed after " << opts.max_matrix_draws << " coefficient matrices ("
        << opts.max_candidates_per_path << " candidates per path, threshold scale " << opts.threshold_scale
        << ")";
    if (!failures.empty()) msg << "; last: " << failures.back();
    msg << "; a smaller threshold scale may help";
    throw GenerationError(msg.str());
  }

  scn.margin_floor = std::numeric_limits<double>::quiet_NaN();
  if (opts.law == FeatureLaw::UniformBall && opts.deg == 1) {
    // nu is 1-Lipschitz and E[c|x] moves by at most ||B||_2 r / sqrt(p)
    const double lipschitz = Eigen::JacobiSVD<Mat>(scn.B).singularValues()(0) / std::sqrt(double(opts.p));
    double floor = std::numeric_limits<double>::infinity();
    for (const Vec& mu : scn.centers) {
      floor = std::min(floor, poly.distance_to_degeneracy(shortest_path_mean(scn, mu)));
    }
    scn.margin_floor = floor - lipschitz * opts.ball_radius;
  }
  return Scenario(std::move(poly), std::move(scn), seed);
}

Scenario make_pricing_scenario(std::uint64_t seed, double eps_bar, bool shared_item_noise) {
  if (eps_bar < 0.0 || eps_bar >= 1.0) throw InputError("eps_bar must be in [0, 1)");
  PricingScenario scn;
  scn.seed = seed;
  scn.eps_bar = eps_bar;
  scn.shared_item_noise = shared_item_noise;
  scn.centers = pricing_centers();
  return Scenario(build_pricing_polytope(), std::move(scn), seed);
}

Scenario make_induced_ball_scenario(Polytope poly, double kappa, std::uint64_t seed) {
  if (!(kappa > 0.0)) throw InputError("kappa must be positive");
  return Scenario(std::move(poly), InducedBallScenario{kappa}, seed);
}

// --- Scenario --------------------------------------------------------------

Scenario::Scenario(Polytope poly, Data data, std::uint64_t seed)
    : poly_(std::move(poly)), data_(std::move(data)), seed_(seed) {}

int Scenario::p() const {
  return std::visit(
      [this](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ShortestPathScenario>) {
          return s.opts.p;
        } else if constexpr (std::is_same_v<T, PricingScenario>) {
          return PricingConstants::p;
        } else {
          return poly_.dim();
        }
      },
      data_);
}

std::string Scenario::kind() const {
  switch (data_.index()) {
    case 0:
      return "shortest-path";
    case 1:
      return "pricing";
    default:
      return "induced-ball";
  }
}

int Scenario::num_components() const {
  if (const auto* sp = std::get_if<ShortestPathScenario>(&data_)) return static_cast<int>(sp->centers.size());
  if (const auto* pr = std::get_if<PricingScenario>(&data_)) return static_cast<int>(pr->centers.size());
  return 1;
}

int Scenario::sample_component(Rng& rng) const {
  const int n = num_components();
  if (n == 1) return 0;
  std::uniform_int_distribution<int> pick(0, n - 1);
  return pick(rng);
}

Vec Scenario::sample_x(Rng& rng) const {
  if (const auto* sp = std::get_if<ShortestPathScenario>(&data_)) {
    const Vec& mu = sp->centers[static_cast<std::size_t>(sample_component(rng))];
    if (sp->opts.law == FeatureLaw::UniformBall) return mu + uniform_ball(sp->opts.p, sp->opts.ball_radius, rng);
    return mu + std::sqrt(sp->opts.sigma_m2) * standard_normal(sp->opts.p, rng);
  }
  if (const auto* pr = std::get_if<PricingScenario>(&data_)) {
    const Vec& mu = pr->centers[static_cast<std::size_t>(sample_component(rng))];
    return mu + pr->feature_sd * standard_normal(PricingConstants::p, rng);
  }
  return uniform_ball(poly_.dim(), 1.0, rng);
}

Vec Scenario::conditional_mean(const Vec& x) const {
  if (x.size() != p()) throw InputError("feature dimension does not match scenario");
  if (const auto* sp = std::get_if<ShortestPathScenario>(&data_)) return shortest_path_mean(*sp, x);
  if (std::holds_alternative<PricingScenario>(data_)) return pricing_mean(x);
  return induced_margin_transform(poly_, x, std::get<InducedBallScenario>(data_).kappa);
}

Vec Scenario::sample_label(const Vec& x, Rng& rng) const {
  const Vec mean = conditional_mean(x);
  if (const auto* sp = std::get_if<ShortestPathScenario>(&data_)) return multiplicative_noise(mean, sp->opts.eps_bar, rng);
  if (const auto* pr = std::get_if<PricingScenario>(&data_)) {
    if (!pr->shared_item_noise) return multiplicative_noise(mean, pr->eps_bar, rng);
    if (pr->eps_bar == 0.0) return mean;
    std::uniform_real_distribution<double> eps(1.0 - pr->eps_bar, 1.0 + pr->eps_bar);
    Vec c = mean;
    for (int j = 0; j < PricingConstants::items; ++j) {
      const double e = eps(rng);
      for (int i = 0; i < 3; ++i) c[pricing_index(j, i)] *= e;
    }
    return c;
  }
  return mean;
}

LabeledSample Scenario::sample(Rng& rng) const {
  Vec x = sample_x(rng);
  Vec c = sample_label(x, rng);
  return {std::move(x), std::move(c)};
}

std::vector<LabeledSample> sample_many(const Scenario& scn, int n, Rng& rng) {
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) out.push_back(scn.sample(rng));
  return out;
}

nlohmann::json Scenario::to_json() const {
  nlohmann::json j = {{"format", "mbal-clo-scenario/1"}, {"kind", kind()}, {"seed", seed_}, {"d", d()}, {"p", p()}};
  j["polytope"] = poly_.to_json();
  if (const auto* sp = std::get_if<ShortestPathScenario>(&data_)) {
    const auto& o = sp->opts;
    j["options"] = {{"k", o.k},
                    {"p", o.p},
                    {"eps_bar", o.eps_bar},
                    {"sigma_m2", o.sigma_m2},
                    {"deg", o.deg},
                    {"threshold_scale", o.threshold_scale},
                    {"num_centers", o.num_centers},
                    {"feature_law", law_name(o.law)},
                    {"ball_radius", o.ball_radius},
                    {"max_candidates_per_path", o.max_candidates_per_path},
                    {"max_matrix_draws", o.max_matrix_draws}};
    j["B"] = mat_json(sp->B);
    nlohmann::json centers = nlohmann::json::array();
    for (const Vec& mu : sp->centers) centers.push_back(vec_json(mu));
    j["centers"] = std::move(centers);
    j["center_paths"] = sp->center_paths;
    j["matrix_draws"] = sp->matrix_draws;
    j["margin_floor"] = std::isnan(sp->margin_floor) ? nlohmann::json(nullptr) : nlohmann::json(sp->margin_floor);
  } else if (const auto* pr = std::get_if<PricingScenario>(&data_)) {
    using K = PricingConstants;
    j["options"] = {{"feature_sd", pr->feature_sd}, {"eps_bar", pr->eps_bar}, {"shared_item_noise", pr->shared_item_noise}};
    j["constants"] = {{"prices", K::prices}, {"a", K::a}, {"b", K::b}};
    nlohmann::json centers = nlohmann::json::array();
    for (const Vec& mu : pr->centers) centers.push_back(vec_json(mu));
    j["centers"] = std::move(centers);
  } else {
    j["options"] = {{"kappa", std::get<InducedBallScenario>(data_).kappa}};
  }
  return j;
}

Scenario Scenario::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  Polytope poly = Polytope::from_json(j.at("polytope"));
  const auto& o = j.at("options");
  if (kind == "shortest-path") {
    ShortestPathScenario sp;
    sp.seed = seed;
    sp.opts.k = o.at("k").get<int>();
    sp.opts.p = o.at("p").get<int>();
    sp.opts.eps_bar = o.at("eps_bar").get<double>();
    sp.opts.sigma_m2 = o.at("sigma_m2").get<double>();
    sp.opts.deg = o.at("deg").get<int>();
    sp.opts.threshold_scale = o.at("threshold_scale").get<double>();
    sp.opts.num_centers = o.at("num_centers").get<int>();
    sp.opts.law = law_from_name(o.at("feature_law").get<std::string>());
    sp.opts.ball_radius = o.at("ball_radius").get<double>();
    sp.opts.max_candidates_per_path = o.value("max_candidates_per_path", 10000);
    sp.opts.max_matrix_draws = o.value("max_matrix_draws", 50);
    sp.B = json_mat(j.at("B"), sp.opts.p);
    if (sp.B.rows() != poly.dim()) throw InputError("B must have one row per edge");
    for (const auto& mu : j.at("centers")) sp.centers.push_back(json_vec(mu));
    sp.center_paths = j.at("center_paths").get<std::vector<int>>();
    sp.matrix_draws = j.value("matrix_draws", 0);
    const auto& floor = j.at("margin_floor");
    sp.margin_floor = floor.is_null() ? std::numeric_limits<double>::quiet_NaN() : floor.get<double>();
    for (const Vec& mu : sp.centers) {
      if (mu.size() != sp.opts.p) throw InputError("center has wrong dimension");
    }
    if (sp.centers.empty()) throw InputError("shortest-path scenario has no centers");
    return Scenario(std::move(poly), std::move(sp), seed);
  }
  if (kind == "pricing") {
    PricingScenario pr;
    pr.seed = seed;
    pr.feature_sd = o.at("feature_sd").get<double>();
    pr.eps_bar = o.at("eps_bar").get<double>();
    pr.shared_item_noise = o.at("shared_item_noise").get<bool>();
    for (const auto& mu : j.at("centers")) pr.centers.push_back(json_vec(mu));
    for (const Vec& mu : pr.centers) {
      if (mu.size() != PricingConstants::p) throw InputError("pricing center must have dimension 6");
    }
    if (pr.centers.empty()) throw InputError("pricing scenario has no centers");
    if (poly.dim() != 9) throw InputError("pricing polytope must have dimension 9");
    return Scenario(std::move(poly), std::move(pr), seed);
  }
  if (kind == "induced-ball") {
    return make_induced_ball_scenario(std::move(poly), o.at("kappa").get<double>(), seed);
  }
  throw InputError("unknown scenario kind: " + kind);
}

}  // namespace mbal
