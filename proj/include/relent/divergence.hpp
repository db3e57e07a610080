#pragma once

// Exact relative entropy, the integrand g(s) = tr+[s sigma - rho], sandwich
// constants and closed-form fixed-state bounds.

#include <optional>

#include "relent/gridding.hpp"
#include "relent/linalg.hpp"

namespace relent::divergence {

using linalg::DensityMatrix;

struct StatePair {
  StatePair(DensityMatrix rho_, DensityMatrix sigma_);

  DensityMatrix rho;
  DensityMatrix sigma;
};

struct SandwichConstants {
  double mu = 0.0;
  double lambda = 0.0;  // meaningful only when support_ok
  bool support_ok = false;
};

/// Relative entropy in nats, or the infinite-divergence signal when the
/// support condition fails.
class Divergence {
 public:
  static Divergence finite(double nats) { return Divergence(nats); }
  static Divergence infinite() { return Divergence(std::nullopt); }

  bool is_infinite() const { return !value_.has_value(); }
  /// Throws std::bad_optional_access for an infinite divergence.
  double nats() const { return value_.value(); }

 private:
  explicit Divergence(std::optional<double> v) : value_(v) {}
  std::optional<double> value_;
};

SandwichConstants sandwich_constants(const StatePair& pair);

Divergence relative_entropy_exact(const StatePair& pair);

/// tr+[sigma s - rho].
double g_value(const StatePair& pair, double s);

/// Adaptive quadrature of the integral representation
///   D = int_mu^lambda g(s)/s ds + log(lambda) + 1 - lambda
/// to absolute tolerance `quad_tol`. Throws NumericalError carrying the partial
/// estimate when the evaluation budget runs out, ValidationError on a support
/// violation.
double integral_check(const StatePair& pair, double quad_tol, long max_evaluations = 2'000'000);

struct FixedBoundOptions {
  /// Adds tr[P_ker(rho) sigma] (t_1 - mu) for the segment below the first point.
  bool kernel_correction = false;
};

/// Closed-form value of the lower relaxation at a fixed pair:
///   sum_k tr+[alpha_k rho + beta_k sigma] + log(lambda) + 1 - lambda.
double eta_lower_fixed(const StatePair& pair, const grid::Grid& grid,
                       FixedBoundOptions opts = {});

/// Closed-form value of the upper relaxation at a fixed pair:
///   sum_k w_k g(t_k) + log(lambda) + 1 - lambda (+ t_1 - mu when t_1 > mu).
double upper_fixed(const StatePair& pair, const grid::Grid& grid);

}  // namespace relent::divergence
