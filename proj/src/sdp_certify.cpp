#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "relent/sdp.hpp"

namespace relent::sdp {

using linalg::RMatrix;
using linalg::RVector;

std::optional<double> certify_lower(const SdpSolution& solution) {
  if (!solution.dual || !solution.dual->form) return std::nullopt;
  const DualIterate& dual = *solution.dual;
  const StandardForm& f = *dual.form;
  if (dual.x.size() != f.cones.size()) return std::nullopt;
  if (static_cast<std::size_t>(dual.w.size()) != dual.kept_rows.size()) return std::nullopt;

  // Any X >= 0 and w give  c^T y >= e^T w + <F0, X> + r^T y  for feasible y,
  // with r = c - E^T w - A*(X). The last term is bounded blockwise.
  RVector r = f.c;
  double dual_obj = f.c0;
  double magnitude = std::abs(f.c0);
  const RMatrix eq(f.eq);
  for (std::size_t i = 0; i < dual.kept_rows.size(); ++i) {
    const int row = dual.kept_rows[i];
    const double wi = dual.w[static_cast<Eigen::Index>(i)];
    r -= wi * eq.row(row).transpose();
    dual_obj += wi * f.eq_rhs[row];
    magnitude += std::abs(wi * f.eq_rhs[row]);
  }
  for (std::size_t b = 0; b < f.cones.size(); ++b) {
    const auto& cone = f.cones[b];
    RMatrix x = 0.5 * (dual.x[b] + dual.x[b].transpose());
    const Eigen::SelfAdjointEigenSolver<RMatrix> es(x, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()[0];
    if (lmin < 0.0) x.diagonal().array() += -lmin * (1.0 + 1e-12);
    dual_obj += cone.f0.cwiseProduct(x).sum();
    magnitude += cone.f0.cwiseProduct(x).cwiseAbs().sum();
    for (std::size_t q = 0; q < cone.vars.size(); ++q) {
      double acc = 0.0;
      for (const auto& t : cone.coefficients[q]) acc += t.value() * x(t.row(), t.col());
      r[cone.vars[q]] -= acc;
    }
  }

  double slack = 0.0;
  for (const auto& g : f.groups) {
    const auto rb = HermitianBasis::matrix(r.data() + g.offset, g.dim);
    const double norm = linalg::operator_norm(rb);
    if (norm == 0.0) continue;
    if (!g.trace_norm_bound) return std::nullopt;
    slack += norm * *g.trace_norm_bound;
    magnitude += norm * *g.trace_norm_bound;
  }
  return dual_obj - slack - 1e-11 * (1.0 + magnitude);
}

}  // namespace relent::sdp
