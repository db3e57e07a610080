#pragma once

// Discretization grids on [mu, lambda] and the coefficients of the lower and
// upper semidefinite relaxations derived from them.

#include <optional>
#include <string>
#include <vector>

namespace relent::grid {

/// Points closer than this are merged when a grid is built.
inline constexpr double kMergeTol = 1e-12;
/// Smallest first point used when mu = 0.
inline constexpr double kMinFloor = 1e-6;

/// First grid point used in place of mu = 0 for target accuracy `eps`.
double mu_floor(double eps);

/// Ascending points mu <= t_1 < ... < t_r = lambda.
class Grid {
 public:
  /// Sorts, merges points within kMergeTol and validates the ordering
  /// invariants. The last point is snapped to lambda.
  Grid(std::vector<double> points, double mu, double lambda);

  /// The degenerate grid {lambda} for mu == lambda.
  static Grid degenerate(double value);

  const std::vector<double>& points() const { return points_; }
  double mu() const { return mu_; }
  double lambda() const { return lambda_; }
  int size() const { return static_cast<int>(points_.size()); }
  bool is_degenerate() const { return points_.size() == 1; }
  double first() const { return points_.front(); }
  /// Largest adjacent spacing.
  double max_spacing() const;

  /// Union of the two point sets (same mu and lambda required).
  Grid merged(const Grid& other) const;
  bool contains_all(const Grid& other) const;

 private:
  std::vector<double> points_;
  double mu_;
  double lambda_;
};

/// r equally spaced points ending at lambda. For mu = 0 the first point is
/// lifted to `floor` and the spacing covers [floor, lambda].
Grid uniform_grid(double mu, double lambda, int r, double floor = kMinFloor);

/// t_k = t_{k-1} + sqrt(factor * eps * t_{k-1}) from max(mu, floor) until
/// lambda is reached; lambda is appended as the last point.
Grid adaptive_grid(double mu, double lambda, double eps, double factor = 8.0,
                   std::optional<double> floor = std::nullopt);

struct LowerCoefficients {
  std::vector<double> alpha;  // log(t_k / t_{k+1})
  std::vector<double> beta;   // t_{k+1} - t_k
};

struct UpperCoefficients {
  std::vector<double> gamma;    // -w_k
  std::vector<double> delta;    // w_k t_k
  std::vector<double> weights;  // w_k >= 0
};

LowerCoefficients lower_coefficients(const Grid& grid);
UpperCoefficients upper_coefficients(const Grid& grid);

/// 2 delta^2 d / mu for the largest spacing delta; empty when mu = 0 (no
/// a-priori bound is available).
std::optional<double> worst_case_gap(const Grid& grid, int dim, double mu);

struct PointPrediction {
  long uniform;   // ceil((lambda - mu) sqrt(d / (mu eps)))
  long adaptive;  // ceil(sqrt(2 lambda / eps))
};

PointPrediction predicted_points(double mu, double lambda, double eps, int dim);

enum class Strategy { UniformHalve, AdaptiveTighten, UpperAnchor };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

struct RefineContext {
  double eps = 1e-2;     // current adaptive accuracy; quartered by the adaptive strategies
  double factor = 8.0;   // adaptive recursion constant
  std::optional<int> active_node;  // upper-anchor: index of the optimizer's active node
};

/// Produces the next grid. uniform-halve inserts midpoints (old points are kept),
/// adaptive-tighten re-seeds with eps/4, upper-anchor keeps the active node and
/// its neighbours and re-seeds adaptively with eps/4. `ctx.eps` is updated.
Grid refine(const Grid& grid, Strategy strategy, RefineContext& ctx);

}  // namespace relent::grid
