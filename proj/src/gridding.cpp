#include "relent/gridding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relent/error.hpp"

namespace relent::grid {

namespace {

// (1 + 1/x) log(1 + x) - 1, stable for small x.
double first_weight(double x) {
  if (x < 1e-3) return x / 2 - x * x / 6 + x * x * x / 12 - x * x * x * x / 20;
  return (1.0 + 1.0 / x) * std::log1p(x) - 1.0;
}

// 1 - log(1 + x) / x, stable for small x.
double last_weight(double x) {
  if (x < 1e-3) return x / 2 - x * x / 3 + x * x * x / 4 - x * x * x * x / 5;
  return 1.0 - std::log1p(x) / x;
}

}  // namespace

double mu_floor(double eps) { return std::max(kMinFloor, eps / 10.0); }

Grid::Grid(std::vector<double> points, double mu, double lambda)
    : mu_(mu), lambda_(lambda) {
  if (!(mu >= 0.0) || !(lambda >= mu) || !std::isfinite(lambda)) {
    throw ValidationError("Grid: need 0 <= mu <= lambda < inf");
  }
  if (points.empty()) throw ValidationError("Grid: no points");
  std::sort(points.begin(), points.end());
  for (double t : points) {
    if (!std::isfinite(t)) throw ValidationError("Grid: non-finite point");
    if (points_.empty() || t - points_.back() > kMergeTol) points_.push_back(t);
  }
  if (std::abs(points_.back() - lambda) > 1e-9 * std::max(1.0, lambda)) {
    throw ValidationError("Grid: last point " + std::to_string(points_.back()) +
                          " is not lambda = " + std::to_string(lambda));
  }
  points_.back() = lambda;
  if (points_.size() >= 2 && points_[points_.size() - 1] - points_[points_.size() - 2] <= kMergeTol) {
    points_.erase(points_.end() - 2);
  }
  if (points_.front() < mu - kMergeTol) {
    throw ValidationError("Grid: first point " + std::to_string(points_.front()) +
                          " lies below mu = " + std::to_string(mu));
  }
  if (lambda > mu && points_.size() < 2) {
    throw ValidationError("Grid: need at least two points when lambda > mu");
  }
}

Grid Grid::degenerate(double value) { return Grid({value}, value, value); }

double Grid::max_spacing() const {
  double d = 0.0;
  for (std::size_t k = 1; k < points_.size(); ++k) d = std::max(d, points_[k] - points_[k - 1]);
  return d;
}

Grid Grid::merged(const Grid& other) const {
  if (std::abs(other.mu_ - mu_) > kMergeTol || std::abs(other.lambda_ - lambda_) > kMergeTol) {
    throw ValidationError("Grid::merged: grids cover different ranges");
  }
  std::vector<double> pts = points_;
  pts.insert(pts.end(), other.points_.begin(), other.points_.end());
  return Grid(std::move(pts), mu_, lambda_);
}

bool Grid::contains_all(const Grid& other) const {
  for (double t : other.points_) {
    auto it = std::lower_bound(points_.begin(), points_.end(), t - kMergeTol);
    if (it == points_.end() || std::abs(*it - t) > kMergeTol) return false;
  }
  return true;
}

Grid uniform_grid(double mu, double lambda, int r, double floor) {
  if (r < 2) throw ValidationError("uniform_grid: need r >= 2");
  if (!(lambda > mu) || mu < 0.0) throw ValidationError("uniform_grid: need lambda > mu >= 0");
  const double start = mu > 0.0 ? mu : floor;
  if (!(start < lambda)) throw ValidationError("uniform_grid: floor is not below lambda");
  std::vector<double> pts(r);
  const double delta = (lambda - start) / (r - 1);
  for (int k = 0; k < r; ++k) pts[k] = start + k * delta;
  pts.back() = lambda;
  return Grid(std::move(pts), mu, lambda);
}

Grid adaptive_grid(double mu, double lambda, double eps, double factor, std::optional<double> floor) {
  if (!(eps > 0.0)) throw ValidationError("adaptive_grid: eps must be positive");
  if (!(factor > 0.0)) throw ValidationError("adaptive_grid: factor must be positive");
  if (mu < 0.0 || !(lambda >= mu)) throw ValidationError("adaptive_grid: need 0 <= mu <= lambda");
  if (lambda == mu) return Grid::degenerate(lambda);
  const double start = mu > 0.0 ? mu : floor.value_or(mu_floor(eps));
  if (!(start < lambda)) throw ValidationError("adaptive_grid: floor is not below lambda");
  std::vector<double> pts{start};
  for (double t = start;;) {
    t += std::sqrt(factor * eps * t);
    if (t >= lambda) break;
    pts.push_back(t);
  }
  pts.push_back(lambda);
  return Grid(std::move(pts), mu, lambda);
}

LowerCoefficients lower_coefficients(const Grid& grid) {
  LowerCoefficients c;
  const auto& t = grid.points();
  if (grid.is_degenerate()) return c;
  if (!(t.front() > 0.0)) throw ValidationError("lower_coefficients: t_1 must be positive");
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    c.alpha.push_back(std::log(t[k] / t[k + 1]));
    c.beta.push_back(t[k + 1] - t[k]);
  }
  return c;
}

UpperCoefficients upper_coefficients(const Grid& grid) {
  UpperCoefficients c;
  const auto& t = grid.points();
  if (grid.is_degenerate()) return c;
  if (!(t.front() > 0.0)) throw ValidationError("upper_coefficients: t_1 must be positive");
  const std::size_t r = t.size();
  std::vector<double> x(r - 1);  // relative spacing (t_{k+1} - t_k) / t_k
  for (std::size_t k = 0; k + 1 < r; ++k) x[k] = (t[k + 1] - t[k]) / t[k];
  c.weights.resize(r);
  c.weights[0] = first_weight(x[0]);
  c.weights[r - 1] = last_weight(x[r - 2]);
  for (std::size_t k = 1; k + 1 < r; ++k) c.weights[k] = first_weight(x[k]) + last_weight(x[k - 1]);
  for (std::size_t k = 0; k < r; ++k) {
    c.gamma.push_back(-c.weights[k]);
    c.delta.push_back(c.weights[k] * t[k]);
  }
  return c;
}

std::optional<double> worst_case_gap(const Grid& grid, int dim, double mu) {
  if (!(mu > 0.0)) return std::nullopt;
  const double delta = grid.max_spacing();
  return 2.0 * delta * delta * dim / mu;
}

PointPrediction predicted_points(double mu, double lambda, double eps, int dim) {
  if (!(mu > 0.0) || !(eps > 0.0)) throw ValidationError("predicted_points: need mu > 0, eps > 0");
  PointPrediction p;
  p.uniform = static_cast<long>(std::ceil((lambda - mu) * std::sqrt(dim / (mu * eps)) - 1e-9));
  p.adaptive = static_cast<long>(std::ceil(std::sqrt(2.0 * lambda / eps) - 1e-9));
  return p;
}

Strategy parse_strategy(const std::string& name) {
  if (name == "uniform-halve") return Strategy::UniformHalve;
  if (name == "adaptive-tighten" || name == "adaptive") return Strategy::AdaptiveTighten;
  if (name == "upper-anchor") return Strategy::UpperAnchor;
  throw ValidationError("unknown refinement strategy '" + name + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::UniformHalve: return "uniform-halve";
    case Strategy::AdaptiveTighten: return "adaptive-tighten";
    case Strategy::UpperAnchor: return "upper-anchor";
  }
  return "?";
}

Grid refine(const Grid& grid, Strategy strategy, RefineContext& ctx) {
  if (grid.is_degenerate()) return grid;
  switch (strategy) {
    case Strategy::UniformHalve: {
      std::vector<double> pts = grid.points();
      const auto& t = grid.points();
      for (std::size_t k = 0; k + 1 < t.size(); ++k) pts.push_back(0.5 * (t[k] + t[k + 1]));
      ctx.eps /= 4.0;
      return Grid(std::move(pts), grid.mu(), grid.lambda());
    }
    case Strategy::AdaptiveTighten: {
      ctx.eps /= 4.0;
      return adaptive_grid(grid.mu(), grid.lambda(), ctx.eps, ctx.factor);
    }
    case Strategy::UpperAnchor: {
      ctx.eps /= 4.0;
      Grid fresh = adaptive_grid(grid.mu(), grid.lambda(), ctx.eps, ctx.factor);
      if (!ctx.active_node) return fresh;
      const int k = *ctx.active_node;
      const auto& t = grid.points();
      std::vector<double> kept;
      for (int j = k - 1; j <= k + 1; ++j) {
        if (j >= 0 && j < grid.size() && t[j] >= fresh.first()) kept.push_back(t[j]);
      }
      std::vector<double> pts = fresh.points();
      pts.insert(pts.end(), kept.begin(), kept.end());
      return Grid(std::move(pts), grid.mu(), grid.lambda());
    }
  }
  throw ValidationError("refine: unknown strategy");
}

}  // namespace relent::grid
