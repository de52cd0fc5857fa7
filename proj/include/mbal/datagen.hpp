#pragma once

#include "mbal/losses.hpp"
#include "mbal/polytope.hpp"
#include "mbal/random.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mbal {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Shortest path on a k x k grid (edges go north or east).

/// Incidence vectors of all monotone corner-to-corner paths. Edge layout:
/// east edges first, row by row (index r*(k-1)+c), then north edges column
/// by column (index k(k-1) + c*(k-1) + r).
Polytope build_grid_polytope(int k);

int grid_edge_count(int k);
int grid_east_edge(int k, int row, int col);
int grid_north_edge(int k, int row, int col);

/// Walks the path encoded by `incidence` from the southwest corner. Returns
/// the move string ("E"/"N") or nullopt if it is not a single monotone path.
std::optional<std::string> decode_grid_path(int k, const Vec& incidence);

enum class FeatureLaw { Gaussian, UniformBall };

struct ShortestPathOptions {
  int k = 3;
  int p = 5;
  double eps_bar = 0.5;
  double sigma_m2 = 1.0 / 9.0;
  int deg = 1;
  // centers must satisfy nu(E[c|mu]) >= threshold_scale * ||E[c|mu]||_2
  double threshold_scale = 0.1;
  int num_centers = 6;
  FeatureLaw law = FeatureLaw::Gaussian;
  // radius of the per-center ball when law == UniformBall
  double ball_radius = 0.0;
  int max_candidates_per_path = 10000;
  int max_matrix_draws = 50;
};

struct ShortestPathScenario {
  ShortestPathOptions opts;
  std::uint64_t seed = 0;
  Mat B;  // d x p, entries in {0, 1}
  std::vector<Vec> centers;
  std::vector<int> center_paths;
  int matrix_draws = 0;
  // Certified lower bound on nu(E[c|x]) over the support (UniformBall,
  // deg == 1 only); NaN otherwise.
  double margin_floor = 0.0;
};

// ---------------------------------------------------------------------------
// Personalized pricing: 3 items x 3 prices, monotone price constraints.

struct PricingConstants {
  static constexpr std::array<double, 3> prices{60.0, 80.0, 90.0};
  static constexpr std::array<double, 3> a{-0.0202733, -0.0133531, -0.00540672};
  static constexpr std::array<double, 3> b{-1.19155, -1.45748, -1.22819};
  static constexpr int items = 3;
  static constexpr int p = 6;
};

/// Index of w_{price, item} in the 9-vector (item-major).
constexpr int pricing_index(int item, int price) { return 3 * item + price; }

/// One price per item and price(item 1) <= price(item 2) <= price(item 3).
Polytope build_pricing_polytope();

struct PricingScenario {
  std::uint64_t seed = 0;
  double feature_sd = 0.01;
  double eps_bar = 0.1;
  // single noise draw per item shared across its three prices
  bool shared_item_noise = false;
  std::vector<Vec> centers;
};

std::vector<Vec> pricing_centers();

// ---------------------------------------------------------------------------
// Features U uniform in the unit ball of R^d, E[c|x] = nu(U)^(1/kappa-1) U,
// noiseless labels.

struct InducedBallScenario {
  double kappa = 1.0;
};

Vec induced_margin_transform(const Polytope& poly, const Vec& u, double kappa);

// ---------------------------------------------------------------------------

/// A generative world: polytope, feature law, E[c|x], and label noise.
class Scenario {
 public:
  using Data = std::variant<ShortestPathScenario, PricingScenario, InducedBallScenario>;

  Scenario(Polytope poly, Data data, std::uint64_t seed);

  const Polytope& polytope() const { return poly_; }
  const Data& data() const { return data_; }
  std::uint64_t seed() const { return seed_; }
  int d() const { return poly_.dim(); }
  int p() const;
  std::string kind() const;

  Vec sample_x(Rng& rng) const;
  Vec conditional_mean(const Vec& x) const;
  Vec sample_label(const Vec& x, Rng& rng) const;
  LabeledSample sample(Rng& rng) const;

  /// Draws a mixture component the way sample_x does (0 when the feature
  /// law has a single component).
  int sample_component(Rng& rng) const;
  int num_components() const;

  nlohmann::json to_json() const;
  static Scenario from_json(const nlohmann::json& j);

 private:
  Polytope poly_;
  Data data_;
  std::uint64_t seed_;
};

Vec shortest_path_mean(const ShortestPathScenario& scn, const Vec& x);
Vec pricing_mean(const Vec& x);

Scenario gen_shortest_path_scenario(std::uint64_t seed, const ShortestPathOptions& opts);
Scenario make_pricing_scenario(std::uint64_t seed, double eps_bar = 0.1, bool shared_item_noise = false);
Scenario make_induced_ball_scenario(Polytope poly, double kappa, std::uint64_t seed);

std::vector<LabeledSample> sample_many(const Scenario& scn, int n, Rng& rng);

}  // namespace mbal
