#include "relent/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace relent::divergence {

using linalg::CMatrix;
using linalg::HermitianMatrix;
using linalg::RVector;

StatePair::StatePair(DensityMatrix rho_, DensityMatrix sigma_)
    : rho(std::move(rho_)), sigma(std::move(sigma_)) {
  if (rho.dim() != sigma.dim()) throw ValidationError("StatePair: states differ in dimension");
}

namespace {

struct SupportData {
  SandwichConstants constants;
  RVector generalized;  // eigenvalues of sigma^{-1/2} rho sigma^{-1/2} on supp(sigma), ascending
};

SupportData support_data(const StatePair& pair) {
  const auto es = linalg::eigh(pair.sigma.hermitian());
  const double cutoff = linalg::kKernelCutoff * std::max(es.values.maxCoeff(), 0.0);
  std::vector<int> supp, ker;
  for (int i = 0; i < es.values.size(); ++i) (es.values[i] > cutoff ? supp : ker).push_back(i);

  const CMatrix& rho = pair.rho.matrix();
  double outside = 0.0;
  for (int j : ker) outside += (es.vectors.col(j).adjoint() * rho * es.vectors.col(j))(0, 0).real();

  SupportData out;
  out.constants.support_ok = outside <= linalg::kValidationTol;
  const int k = static_cast<int>(supp.size());
  CMatrix vs(rho.rows(), k);
  RVector inv_sqrt(k);
  for (int c = 0; c < k; ++c) {
    vs.col(c) = es.vectors.col(supp[c]);
    inv_sqrt[c] = 1.0 / std::sqrt(es.values[supp[c]]);
  }
  const CMatrix m = inv_sqrt.asDiagonal() * (vs.adjoint() * rho * vs) * inv_sqrt.asDiagonal();
  out.generalized = linalg::eigh(HermitianMatrix::symmetrized(m)).values;
  double mu = std::max(out.generalized[0], 0.0);
  if (mu < 1e-12) mu = 0.0;
  out.constants.mu = mu;
  out.constants.lambda = std::max(out.generalized[k - 1], mu);
  return out;
}

double trace_rho_log(const HermitianMatrix& rho) {
  const auto e = linalg::eigh(rho);
  const double cutoff = linalg::kKernelCutoff * std::max(e.values.maxCoeff(), 0.0);
  double acc = 0.0;
  for (int i = 0; i < e.values.size(); ++i)
    if (e.values[i] > cutoff) acc += e.values[i] * std::log(e.values[i]);
  return acc;
}

}  // namespace

SandwichConstants sandwich_constants(const StatePair& pair) { return support_data(pair).constants; }

Divergence relative_entropy_exact(const StatePair& pair) {
  const auto sc = sandwich_constants(pair);
  if (!sc.support_ok) return Divergence::infinite();
  const auto es = linalg::eigh(pair.sigma.hermitian());
  const double cutoff = linalg::kKernelCutoff * std::max(es.values.maxCoeff(), 0.0);
  const CMatrix rho_in_sigma_basis = es.vectors.adjoint() * pair.rho.matrix() * es.vectors;
  double cross = 0.0;
  for (int j = 0; j < es.values.size(); ++j)
    if (es.values[j] > cutoff) cross += std::log(es.values[j]) * rho_in_sigma_basis(j, j).real();
  const double d = trace_rho_log(pair.rho.hermitian()) - cross;
  return Divergence::finite(std::max(d, 0.0));
}

double g_value(const StatePair& pair, double s) {
  return linalg::trace_plus(pair.sigma.hermitian() * s - pair.rho.hermitian());
}

double integral_check(const StatePair& pair, double quad_tol, long max_evaluations) {
  if (!(quad_tol > 0.0)) throw ValidationError("integral_check: quad_tol must be positive");
  const auto sd = support_data(pair);
  if (!sd.constants.support_ok) throw ValidationError("integral_check: support condition violated");
  const double mu = sd.constants.mu;
  const double lambda = sd.constants.lambda;
  const double tail = std::log(lambda) + 1.0 - lambda;
  if (lambda - mu <= 1e-14) return tail;

  // Integrand g(s)/s with its finite limit tr[P_ker(rho) sigma] at s = 0.
  const double slope_at_zero =
      linalg::kernel_projector(pair.rho.hermitian()).inner(pair.sigma.hermitian());
  long evaluations = 0;
  auto f = [&](double s) {
    ++evaluations;
    return s > 0.0 ? g_value(pair, s) / s : slope_at_zero;
  };

  // Kinks of g sit at the generalized eigenvalues; split there.
  std::vector<double> cuts{mu};
  for (int i = 0; i < sd.generalized.size(); ++i) {
    const double x = sd.generalized[i];
    if (x > cuts.back() + 1e-12 && x < lambda - 1e-12) cuts.push_back(x);
  }
  cuts.push_back(lambda);

  const double length = lambda - mu;
  struct Segment {
    double a, b, fa, fm, fb;
  };
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    std::vector<Segment> stack;
    const double a0 = cuts[c], b0 = cuts[c + 1];
    stack.push_back({a0, b0, f(a0), f(0.5 * (a0 + b0)), f(b0)});
    while (!stack.empty()) {
      const Segment seg = stack.back();
      stack.pop_back();
      const double h = seg.b - seg.a;
      const double m = 0.5 * (seg.a + seg.b);
      const double fl = f(0.5 * (seg.a + m));
      const double fr = f(0.5 * (m + seg.b));
      // One- and two-panel trapezoid sums on each half; the O(h^2) error model
      // gives err(T2) ~ (T2 - T1) / 3.
      const double t1 = 0.5 * h * (seg.fa + seg.fb);
      const double t2 = 0.25 * h * (seg.fa + 2.0 * seg.fm + seg.fb);
      const double t4 = 0.125 * h * (seg.fa + 2.0 * fl + 2.0 * seg.fm + 2.0 * fr + seg.fb);
      const double extrap2 = t2 + (t2 - t1) / 3.0;
      const double extrap4 = t4 + (t4 - t2) / 3.0;
      const double err = std::abs(extrap4 - extrap2);
      const double local_tol = 0.5 * quad_tol * h / length;
      if (err <= local_tol || h < 1e-13 * std::max(1.0, length)) {
        total += extrap4 + (extrap4 - extrap2) / 15.0;
      } else {
        stack.push_back({seg.a, m, seg.fa, fl, seg.fm});
        stack.push_back({m, seg.b, seg.fm, fr, seg.fb});
      }
      if (evaluations > max_evaluations) {
        throw NumericalError("integral_check: evaluation budget exhausted", total + tail);
      }
    }
  }
  return total + tail;
}

double eta_lower_fixed(const StatePair& pair, const grid::Grid& grid, FixedBoundOptions opts) {
  const auto sc = sandwich_constants(pair);
  if (!sc.support_ok) throw ValidationError("eta_lower_fixed: support condition violated");
  if (grid.lambda() < sc.lambda * (1.0 - 1e-9) - 1e-12) {
    throw ValidationError("eta_lower_fixed: grid ends below the sandwich constant lambda");
  }
  const double lambda = grid.lambda();
  double value = std::log(lambda) + 1.0 - lambda;
  if (grid.is_degenerate()) return value;
  const auto coeff = grid::lower_coefficients(grid);
  const auto& rho = pair.rho.hermitian();
  const auto& sigma = pair.sigma.hermitian();
  for (std::size_t k = 0; k < coeff.alpha.size(); ++k) {
    value += linalg::trace_plus(rho * coeff.alpha[k] + sigma * coeff.beta[k]);
  }
  if (opts.kernel_correction && grid.first() > grid.mu()) {
    value += linalg::kernel_projector(rho).inner(sigma) * (grid.first() - grid.mu());
  }
  return value;
}

double upper_fixed(const StatePair& pair, const grid::Grid& grid) {
  const auto sc = sandwich_constants(pair);
  if (!sc.support_ok) throw ValidationError("upper_fixed: support condition violated");
  if (grid.lambda() < sc.lambda * (1.0 - 1e-9) - 1e-12) {
    throw ValidationError("upper_fixed: grid ends below the sandwich constant lambda");
  }
  const double lambda = grid.lambda();
  double value = std::log(lambda) + 1.0 - lambda;
  if (grid.is_degenerate()) {
    if (sc.lambda - sc.mu > 1e-9) throw ValidationError("upper_fixed: degenerate grid for a non-degenerate pair");
    return value;
  }
  if (!(grid.first() > 0.0)) throw ValidationError("upper_fixed: first grid point must be positive");
  const auto coeff = grid::upper_coefficients(grid);
  const auto& t = grid.points();
  for (std::size_t k = 0; k < t.size(); ++k) value += coeff.weights[k] * g_value(pair, t[k]);
  // g(s) <= s bounds the segment below the first point.
  value += std::max(0.0, grid.first() - sc.mu);
  return value;
}

}  // namespace relent::divergence
