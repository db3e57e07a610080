#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include "relent/sdp.hpp"
#include "sdp_schur.hpp"

namespace relent::sdp {

using linalg::RMatrix;
using linalg::RVector;

namespace {

constexpr double kStepFraction = 0.98;

double frob_inner(const RMatrix& a, const RMatrix& b) { return a.cwiseProduct(b).sum(); }

RMatrix sym(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

// Largest alpha in (0, inf] with Z + alpha dZ >= 0, given Z = L L^T.
double max_step(const RMatrix& l, const RMatrix& dz) {
  const auto tri = l.triangularView<Eigen::Lower>();
  RMatrix t = tri.solve(dz);
  t = tri.solve(t.transpose().eval());
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()[0];
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double min_eig(const RMatrix& a) {
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(sym(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

struct Scaling {
  RMatrix g, ginv, w, lx, ls;
  RVector d;
};

// The standard form plus the equality rows that survive rank reduction.
class Operators {
 public:
  Operators(const StandardForm& f, std::vector<int> kept) : f_(f), kept_(std::move(kept)) {
    e_ = RMatrix(static_cast<Eigen::Index>(kept_.size()), f.num_vars);
    const RMatrix dense_eq(f.eq);
    rhs_ = RVector(static_cast<Eigen::Index>(kept_.size()));
    for (std::size_t i = 0; i < kept_.size(); ++i) {
      e_.row(static_cast<Eigen::Index>(i)) = dense_eq.row(kept_[i]);
      rhs_[static_cast<Eigen::Index>(i)] = f.eq_rhs[kept_[i]];
    }
  }

  const StandardForm& form() const { return f_; }
  const RMatrix& eq() const { return e_; }
  const RVector& rhs() const { return rhs_; }
  int cones() const { return static_cast<int>(f_.cones.size()); }

  // sum_j y_j F_bj for cone b.
  RMatrix apply(int b, const RVector& y) const {
    const auto& cone = f_.cones[b];
    RMatrix out = RMatrix::Zero(cone.size, cone.size);
    for (std::size_t q = 0; q < cone.vars.size(); ++q) {
      const double v = y[cone.vars[q]];
      if (v == 0.0) continue;
      for (const auto& t : cone.coefficients[q]) out(t.row(), t.col()) += v * t.value();
    }
    return out;
  }

  // Accumulates <F_bj, Z> into out_j.
  void adjoint_add(int b, const RMatrix& z, RVector& out) const {
    const auto& cone = f_.cones[b];
    for (std::size_t q = 0; q < cone.vars.size(); ++q) {
      double acc = 0.0;
      for (const auto& t : cone.coefficients[q]) acc += t.value() * z(t.row(), t.col());
      out[cone.vars[q]] += acc;
    }
  }

  // Accumulates <F_i, W F_j W> for cone b, walking each stored block by columns.
  void schur_add(int b, const RMatrix& w, BlockSchur& out) const {
    const auto& cone = f_.cones[b];
    const int n = cone.size;
    const std::size_t p = cone.vars.size();
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t q = 0; q < p; ++q) {
      if (q == 0 || out.group_of(cone.vars[q]) != out.group_of(cone.vars[q - 1])) runs.emplace_back(q, q);
      runs.back().second = q + 1;
    }
    RMatrix d(n, n), fw(n, n);
    auto form = [&](std::size_t q) {
      const auto& f = cone.coefficients[q];
      if (static_cast<int>(f.size()) > n) {
        fw.setZero();
        for (const auto& t : f) fw.row(t.row()) += t.value() * w.row(t.col());
        d.noalias() = w * fw;
      } else {
        d.setZero();
        for (const auto& t : f) d.noalias() += t.value() * w.col(t.row()) * w.row(t.col());
      }
    };
    for (std::size_t ra = 0; ra < runs.size(); ++ra) {
      for (std::size_t rb = 0; rb <= ra; ++rb) {
        const int ga = out.group_of(cone.vars[runs[ra].first]);
        const int gb = out.group_of(cone.vars[runs[rb].first]);
        bool transposed = false;
        RMatrix& blk = out.block(ga, gb, transposed);
        const auto& row_run = transposed ? runs[rb] : runs[ra];
        const auto& col_run = transposed ? runs[ra] : runs[rb];
        for (std::size_t qc = col_run.first; qc < col_run.second; ++qc) {
          form(qc);
          const int j = cone.vars[qc];
          for (std::size_t qr = row_run.first; qr < row_run.second; ++qr) {
            if (ra == rb && qr < qc) continue;
            double v = 0.0;
            for (const auto& t : cone.coefficients[qr]) v += t.value() * d(t.row(), t.col());
            const int i = cone.vars[qr];
            if (i == j && qr != qc) v *= 2.0;
            int li = out.local_of(i), lj = out.local_of(j);
            if (ga == gb && li < lj) std::swap(li, lj);
            blk(li, lj) += v;
          }
        }
      }
    }
  }

 private:
  const StandardForm& f_;
  std::vector<int> kept_;
  RMatrix e_;
  RVector rhs_;
};

struct Iterate {
  RVector y, w;
  std::vector<RMatrix> s, x;
};

struct Measures {
  double pobj = 0.0, dobj = 0.0;
  double pinf = 0.0, dinf = 0.0, gap = 0.0;
  double merit(const Settings& st) const {
    return std::max({pinf / st.eps_feas, dinf / st.eps_feas, gap / st.eps_gap});
  }
};

// Rank-revealing reduction of the equality rows. Returns nullopt when the
// dropped rows are inconsistent with the kept ones.
std::optional<std::vector<int>> independent_rows(const StandardForm& f) {
  const int m = static_cast<int>(f.eq.rows());
  std::vector<int> kept;
  if (m == 0) return kept;
  const RMatrix et = RMatrix(f.eq).transpose();
  Eigen::ColPivHouseholderQR<RMatrix> qr(et);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  for (int k = 0; k < rank; ++k) kept.push_back(qr.colsPermutation().indices()[k]);
  std::sort(kept.begin(), kept.end());
  if (rank == m) return kept;
  // Minimum-norm solution of the kept rows, then check the dropped ones.
  RMatrix ek(rank, f.num_vars);
  RVector bk(rank);
  for (int i = 0; i < rank; ++i) {
    ek.row(i) = et.col(kept[i]).transpose();
    bk[i] = f.eq_rhs[kept[i]];
  }
  const RVector y0 = ek.transpose() * (ek * ek.transpose()).ldlt().solve(bk);
  const RVector resid = et.transpose() * y0 - f.eq_rhs;
  if (resid.cwiseAbs().maxCoeff() > 1e-8 * (1.0 + f.eq_rhs.cwiseAbs().maxCoeff())) return std::nullopt;
  return kept;
}

class Solver {
 public:
  Solver(const Operators& ops, const Settings& st) : ops_(ops), st_(st), f_(ops.form()) {
    const int n = f_.num_vars;
    norm_c_ = f_.c.norm();
    double b2 = ops_.rhs().squaredNorm();
    for (const auto& cone : f_.cones) b2 += cone.f0.squaredNorm();
    norm_b_ = std::sqrt(b2);

    it_.y = RVector::Zero(n);
    it_.w = RVector::Zero(ops_.rhs().size());
    for (const auto& cone : f_.cones) {
      const double nc = cone.size;
      double xi = std::max(10.0, std::sqrt(nc));
      double eta = std::max({10.0, std::sqrt(nc), cone.f0.norm()});
      for (std::size_t q = 0; q < cone.vars.size(); ++q) {
        double fn = 0.0;
        for (const auto& t : cone.coefficients[q]) fn += t.value() * t.value();
        fn = std::sqrt(fn);
        xi = std::max(xi, nc * (1.0 + std::abs(f_.c[cone.vars[q]])) / (1.0 + fn));
        eta = std::max(eta, fn);
      }
      it_.x.push_back(xi * RMatrix::Identity(cone.size, cone.size));
      it_.s.push_back(eta * RMatrix::Identity(cone.size, cone.size));
      total_size_ += cone.size;
    }
    std::vector<int> sizes, group_of(n);
    for (const auto& g : f_.groups) {
      for (int k = 0; k < g.dim * g.dim; ++k) group_of[g.offset + k] = static_cast<int>(sizes.size());
      sizes.push_back(g.dim * g.dim);
    }
    std::vector<std::vector<int>> cliques;
    for (const auto& cone : f_.cones) {
      std::vector<int> c;
      for (int v : cone.vars) c.push_back(group_of[v]);
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      cliques.push_back(std::move(c));
    }
    schur_.emplace(std::move(sizes), cliques);
  }

  SdpSolution run();

 private:
  Measures measure(const Iterate& it, std::vector<RMatrix>* rp, RVector* re, RVector* rd) const {
    Measures m;
    m.pobj = f_.c.dot(it.y) + f_.c0;
    double dobj = ops_.rhs().dot(it.w) + f_.c0;
    double p2 = 0.0, compl_gap = 0.0;
    RVector atx = RVector::Zero(f_.num_vars);
    for (int b = 0; b < ops_.cones(); ++b) {
      RMatrix r = ops_.apply(b, it.y) - f_.cones[b].f0 - it.s[b];
      p2 += r.squaredNorm();
      dobj += frob_inner(f_.cones[b].f0, it.x[b]);
      compl_gap += frob_inner(it.x[b], it.s[b]);
      ops_.adjoint_add(b, it.x[b], atx);
      if (rp) (*rp)[b] = std::move(r);
    }
    const RVector r_e = ops_.rhs() - ops_.eq() * it.y;
    p2 += r_e.squaredNorm();
    const RVector r_d = f_.c - ops_.eq().transpose() * it.w - atx;
    m.dobj = dobj;
    m.pinf = std::sqrt(p2) / (1.0 + norm_b_);
    m.dinf = r_d.norm() / (1.0 + norm_c_);
    m.gap = std::max(std::abs(m.pobj - m.dobj), compl_gap) / (1.0 + std::abs(m.pobj) + std::abs(m.dobj));
    if (re) *re = r_e;
    if (rd) *rd = r_d;
    return m;
  }

  bool scale(std::vector<Scaling>& sc) const {
    sc.resize(ops_.cones());
    for (int b = 0; b < ops_.cones(); ++b) {
      Eigen::LLT<RMatrix> lx(it_.x[b]), ls(it_.s[b]);
      if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
      Scaling& s = sc[b];
      s.lx = lx.matrixL();
      s.ls = ls.matrixL();
      Eigen::JacobiSVD<RMatrix> svd(s.lx.transpose() * s.ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
      s.d = svd.singularValues();
      if (s.d.minCoeff() <= 0.0) return false;
      const RVector isq = s.d.cwiseSqrt().cwiseInverse();
      s.g = s.lx * svd.matrixU() * isq.asDiagonal();
      s.ginv = s.d.cwiseSqrt().asDiagonal() * svd.matrixU().transpose() *
               s.lx.triangularView<Eigen::Lower>().solve(RMatrix::Identity(s.lx.rows(), s.lx.cols()));
      s.w = sym(s.g * s.g.transpose());
    }
    return true;
  }

  bool factor(const std::vector<Scaling>& sc) {
    schur_->clear();
    for (int b = 0; b < ops_.cones(); ++b) ops_.schur_add(b, sc[b].w, *schur_);
    double reg = 1e-14 * std::max(schur_->max_diag(), 1e-300);
    for (int attempt = 0; attempt < 6; ++attempt, reg *= 100.0) {
      if (!schur_->factor(reg)) continue;
      const int rows = static_cast<int>(ops_.rhs().size());
      if (rows == 0) return true;
      minv_et_ = ops_.eq().transpose();
      schur_->solve_in_place(minv_et_);
      RMatrix k = ops_.eq() * minv_et_;
      k.diagonal().array() += 1e-14 * std::max(k.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      k_ldlt_.compute(sym(k));
      if (k_ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  struct Direction {
    RVector dy, dw;
    std::vector<RMatrix> ds, dx;
  };

  Direction newton(const std::vector<Scaling>& sc, const std::vector<RMatrix>& rc, const std::vector<RMatrix>& rp,
                   const RVector& re, const RVector& rd) const {
    RVector h = -rd;
    for (int b = 0; b < ops_.cones(); ++b) {
      ops_.adjoint_add(b, rc[b] - sc[b].w * rp[b] * sc[b].w, h);
    }
    Direction d;
    const RVector u = schur_->solve(h);
    if (ops_.rhs().size() > 0) {
      d.dw = k_ldlt_.solve(re - ops_.eq() * u);
      d.dy = u + minv_et_ * d.dw;
    } else {
      d.dw = RVector::Zero(0);
      d.dy = u;
    }
    for (int b = 0; b < ops_.cones(); ++b) {
      RMatrix ds = sym(ops_.apply(b, d.dy) + rp[b]);
      d.dx.push_back(sym(rc[b] - sc[b].w * ds * sc[b].w));
      d.ds.push_back(std::move(ds));
    }
    return d;
  }

  std::pair<double, double> steps(const std::vector<Scaling>& sc, const Direction& d) const {
    double ap = std::numeric_limits<double>::infinity(), ad = ap;
    for (int b = 0; b < ops_.cones(); ++b) {
      ap = std::min(ap, max_step(sc[b].ls, d.ds[b]));
      ad = std::min(ad, max_step(sc[b].lx, d.dx[b]));
    }
    return {ap, ad};
  }

  bool detect_infeasible(const Measures& m, const RVector& rd) const {
    const double bobj = m.dobj - f_.c0;
    if (!(bobj > 0.0)) return false;
    const RVector ray = f_.c - rd;  // E^T w + A*(X)
    return ray.norm() / bobj <= st_.eps_feas && bobj > 1e6;
  }

  bool detect_unbounded(const Measures& m) const {
    const double t = -(m.pobj - f_.c0);
    if (!(t > 1e6)) return false;
    if ((ops_.eq() * it_.y).norm() / t > st_.eps_feas * (1.0 + ops_.rhs().norm())) return false;
    for (int b = 0; b < ops_.cones(); ++b) {
      if (min_eig(ops_.apply(b, it_.y)) / t < -st_.eps_feas) return false;
    }
    return true;
  }

  SdpSolution finish(SolveStatus status, const Iterate& it, const Measures& m, int iters) {
    SdpSolution sol;
    sol.status = status;
    sol.primal_value = m.pobj;
    sol.dual_value = m.dobj;
    sol.residuals = {m.pinf, m.dinf, m.gap};
    sol.iterations = iters;
    sol.blocks = f_.assignment(it.y);
    final_ = it;
    return sol;
  }

  const Operators& ops_;
  Settings st_;
  const StandardForm& f_;
  double norm_c_ = 0.0, norm_b_ = 0.0;
  int total_size_ = 0;
  Iterate it_;
  std::optional<BlockSchur> schur_;
  RMatrix minv_et_;
  Eigen::LDLT<RMatrix> k_ldlt_;

  Iterate best_;
  Measures best_m_;

 public:
  Iterate final_;
};

SdpSolution Solver::run() {
  const int nc = ops_.cones();
  std::vector<RMatrix> rp(nc);
  RVector re, rd;
  best_ = it_;
  best_m_ = measure(it_, nullptr, nullptr, nullptr);
  int stalls = 0;
  int iter = 0;
  for (;; ++iter) {
    const Measures m = measure(it_, &rp, &re, &rd);
    if (m.merit(st_) < best_m_.merit(st_)) {
      best_ = it_;
      best_m_ = m;
    }
    if (m.pinf <= st_.eps_feas && m.dinf <= st_.eps_feas && m.gap <= st_.eps_gap) {
      return finish(SolveStatus::Optimal, it_, m, iter);
    }
    if (detect_infeasible(m, rd)) return finish(SolveStatus::Infeasible, it_, m, iter);
    if (detect_unbounded(m)) return finish(SolveStatus::Unbounded, it_, m, iter);
    if (iter >= st_.max_iters || stalls >= 3) break;

    std::vector<Scaling> sc;
    if (!scale(sc) || !factor(sc)) break;

    double xs = 0.0;
    for (int b = 0; b < nc; ++b) xs += frob_inner(it_.x[b], it_.s[b]);
    const double mu = xs / std::max(total_size_, 1);

    // Predictor.
    std::vector<RMatrix> rc(nc);
    for (int b = 0; b < nc; ++b) rc[b] = -it_.x[b];
    const Direction pred = newton(sc, rc, rp, re, rd);
    auto [ap, ad] = steps(sc, pred);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xs_aff = 0.0;
    for (int b = 0; b < nc; ++b) {
      xs_aff += frob_inner(it_.x[b] + ad * pred.dx[b], it_.s[b] + ap * pred.ds[b]);
    }
    const double sigma = xs > 0.0 ? std::clamp(std::pow(std::max(xs_aff, 0.0) / xs, 3.0), 0.0, 1.0) : 0.0;

    // Corrector in the scaled space: L_D(dX~ + dS~) = sigma mu I - D^2 - sym(dX~_a dS~_a).
    for (int b = 0; b < nc; ++b) {
      const auto& s = sc[b];
      const RMatrix dxt = s.ginv * pred.dx[b] * s.ginv.transpose();
      const RMatrix dst = s.g.transpose() * pred.ds[b] * s.g;
      RMatrix z = -sym(dxt * dst);
      const auto n = s.d.size();
      for (Eigen::Index i = 0; i < n; ++i) z(i, i) += sigma * mu - s.d[i] * s.d[i];
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) z(i, j) *= 2.0 / (s.d[i] + s.d[j]);
      rc[b] = sym(s.g * z * s.g.transpose());
    }
    const Direction corr = newton(sc, rc, rp, re, rd);
    std::tie(ap, ad) = steps(sc, corr);
    ap = std::min(1.0, kStepFraction * ap);
    ad = std::min(1.0, kStepFraction * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad) || !corr.dy.allFinite()) break;
    stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;

    it_.y += ap * corr.dy;
    if (it_.w.size() > 0) it_.w += ad * corr.dw;
    for (int b = 0; b < nc; ++b) {
      it_.s[b] = sym(it_.s[b] + ap * corr.ds[b]);
      it_.x[b] = sym(it_.x[b] + ad * corr.dx[b]);
    }
  }
  const double merit = best_m_.merit(st_);
  const SolveStatus status = merit <= 1e3 ? SolveStatus::NearOptimal : SolveStatus::NumericalFailure;
  return finish(status, best_, best_m_, iter);
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const Settings& settings) {
  if (!(settings.eps_gap > 0.0) || !(settings.eps_feas > 0.0) || settings.max_iters < 1) {
    throw ValidationError("solve: tolerances must be positive and max_iters >= 1");
  }
  auto form = std::make_shared<StandardForm>(embed_hermitian(problem));
  const auto kept = independent_rows(*form);
  if (!kept) {
    SdpSolution sol;
    sol.status = SolveStatus::Infeasible;
    sol.primal_value = std::numeric_limits<double>::infinity();
    sol.dual_value = std::numeric_limits<double>::infinity();
    return sol;
  }
  const Operators ops(*form, *kept);
  Solver solver(ops, settings);
  SdpSolution sol = solver.run();
  if (sol.status != SolveStatus::Infeasible && sol.status != SolveStatus::Unbounded) {
    sol.dual = DualIterate{form, std::move(solver.final_.x), std::move(solver.final_.w), *kept};
    sol.certified_lower = certify_lower(sol);
  }
  return sol;
}

}  // namespace relent::sdp
