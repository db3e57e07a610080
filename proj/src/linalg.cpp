#include "relent/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relent::linalg {

namespace {

double hermiticity_defect(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw ValidationError(std::string(what) + ": expected a non-empty square matrix");
  }
}

}  // namespace

// --- HermitianMatrix ---------------------------------------------------------

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
  require_square(m, "HermitianMatrix");
  const double defect = hermiticity_defect(m);
  if (!(defect <= kHermitianTol)) {
    throw ValidationError("HermitianMatrix: entries deviate from conjugate symmetry by " +
                          std::to_string(defect));
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::symmetrized(const CMatrix& m) {
  require_square(m, "HermitianMatrix::symmetrized");
  return HermitianMatrix(CMatrix(0.5 * (m + m.adjoint())), Trusted{});
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  if (dim < 1) throw ValidationError("identity: dim must be >= 1");
  return HermitianMatrix(CMatrix::Identity(dim, dim), Trusted{});
}

HermitianMatrix HermitianMatrix::zero(int dim) {
  if (dim < 1) throw ValidationError("zero: dim must be >= 1");
  return HermitianMatrix(CMatrix::Zero(dim, dim), Trusted{});
}

HermitianMatrix HermitianMatrix::diagonal(const RVector& d) {
  if (d.size() < 1) throw ValidationError("diagonal: empty vector");
  return HermitianMatrix(CMatrix(d.cast<Complex>().asDiagonal()), Trusted{});
}

HermitianMatrix HermitianMatrix::projector(const CVector& ket) {
  return symmetrized(ket * ket.adjoint());
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  if (o.dim() != dim()) throw ValidationError("HermitianMatrix +: dimension mismatch");
  return HermitianMatrix(CMatrix(m_ + o.m_), Trusted{});
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  if (o.dim() != dim()) throw ValidationError("HermitianMatrix -: dimension mismatch");
  return HermitianMatrix(CMatrix(m_ - o.m_), Trusted{});
}

HermitianMatrix HermitianMatrix::operator-() const { return HermitianMatrix(CMatrix(-m_), Trusted{}); }

HermitianMatrix HermitianMatrix::operator*(double s) const {
  return HermitianMatrix(CMatrix(s * m_), Trusted{});
}

double HermitianMatrix::inner(const HermitianMatrix& o) const {
  if (o.dim() != dim()) throw ValidationError("inner: dimension mismatch");
  // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B
  return (m_.array() * o.m_.conjugate().array()).sum().real();
}

// --- spectral functions ------------------------------------------------------

EigenDecomposition eigh(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("eigh: decomposition failed", 0.0);
  return {es.eigenvalues(), es.eigenvectors()};
}

EigenDecomposition eigh(const CMatrix& a) { return eigh(HermitianMatrix(a)); }

double min_eigenvalue(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

double max_eigenvalue(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[es.eigenvalues().size() - 1];
}

double trace_plus(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0).sum();
}

double trace_norm(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double operator_norm(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

HermitianMatrix positive_part(const HermitianMatrix& a) {
  return spectral_map(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

HermitianMatrix matrix_log_on_support(const HermitianMatrix& a) {
  const auto ed = eigh(a);
  const double top = ed.values.maxCoeff();
  if (ed.values[0] < -kValidationTol) {
    throw ValidationError("matrix_log_on_support: negative eigenvalue " +
                          std::to_string(ed.values[0]));
  }
  const double cutoff = kKernelCutoff * std::max(top, 0.0);
  RVector v(ed.values.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = ed.values[i] > cutoff ? std::log(ed.values[i]) : 0.0;
  }
  return HermitianMatrix::symmetrized(ed.vectors * v.asDiagonal() * ed.vectors.adjoint());
}

HermitianMatrix kernel_projector(const HermitianMatrix& a) {
  const auto ed = eigh(a);
  const double cutoff = kKernelCutoff * std::max(ed.values.maxCoeff(), 0.0);
  RVector v(ed.values.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = ed.values[i] > cutoff ? 0.0 : 1.0;
  return HermitianMatrix::symmetrized(ed.vectors * v.asDiagonal() * ed.vectors.adjoint());
}

// --- bipartite operations ----------------------------------------------------

namespace {
void check_dims(const HermitianMatrix& m, Dims dims, const char* what) {
  if (dims.a < 1 || dims.b < 1 || m.dim() != dims.total()) {
    throw ValidationError(std::string(what) + ": dimension " + std::to_string(m.dim()) +
                          " does not factor as " + std::to_string(dims.a) + "x" +
                          std::to_string(dims.b));
  }
}
}  // namespace

HermitianMatrix partial_trace(const HermitianMatrix& m, Dims dims, Subsystem keep) {
  check_dims(m, dims, "partial_trace");
  const auto& x = m.matrix();
  const int da = dims.a, db = dims.b;
  if (keep == Subsystem::A) {
    CMatrix out = CMatrix::Zero(da, da);
    for (int i = 0; i < da; ++i)
      for (int j = 0; j < da; ++j)
        for (int k = 0; k < db; ++k) out(i, j) += x(i * db + k, j * db + k);
    return HermitianMatrix::symmetrized(out);
  }
  CMatrix out = CMatrix::Zero(db, db);
  for (int k = 0; k < db; ++k)
    for (int l = 0; l < db; ++l)
      for (int i = 0; i < da; ++i) out(k, l) += x(i * db + k, i * db + l);
  return HermitianMatrix::symmetrized(out);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

HermitianMatrix tensor(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix::symmetrized(kron(a.matrix(), b.matrix()));
}

HermitianMatrix partial_transpose(const HermitianMatrix& m, Dims dims, Subsystem which) {
  check_dims(m, dims, "partial_transpose");
  const auto& x = m.matrix();
  const int da = dims.a, db = dims.b;
  CMatrix out(m.dim(), m.dim());
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j)
      for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l) {
          out(i * db + k, j * db + l) =
              which == Subsystem::B ? x(i * db + l, j * db + k) : x(j * db + k, i * db + l);
        }
  return HermitianMatrix::symmetrized(out);
}

// --- DensityMatrix -----------------------------------------------------------

DensityMatrix::DensityMatrix(HermitianMatrix h) : h_(std::move(h)) {
  const double tr = h_.trace();
  if (std::abs(tr - 1.0) > kValidationTol) {
    throw ValidationError("DensityMatrix: trace " + std::to_string(tr) + " is not 1");
  }
  const double lo = min_eigenvalue(h_);
  if (lo < -kValidationTol) {
    throw ValidationError("DensityMatrix: negative eigenvalue " + std::to_string(lo));
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(HermitianMatrix::identity(dim) * (1.0 / dim));
}

DensityMatrix DensityMatrix::pure(const CVector& ket) {
  return DensityMatrix(HermitianMatrix::projector(ket / ket.norm()));
}

// --- KrausChannel ------------------------------------------------------------

KrausChannel::KrausChannel(std::vector<CMatrix> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw ValidationError("KrausChannel: no operators");
  in_ = static_cast<int>(ops_.front().cols());
  out_ = static_cast<int>(ops_.front().rows());
  CMatrix sum = CMatrix::Zero(in_, in_);
  for (const auto& k : ops_) {
    if (k.cols() != in_ || k.rows() != out_) {
      throw ValidationError("KrausChannel: inconsistent operator shapes");
    }
    sum += k.adjoint() * k;
  }
  const double defect = (sum - CMatrix::Identity(in_, in_)).cwiseAbs().maxCoeff();
  if (defect > kValidationTol) {
    throw ValidationError("KrausChannel: not trace preserving (defect " + std::to_string(defect) +
                          ")");
  }
}

KrausChannel KrausChannel::identity(int dim) { return KrausChannel({CMatrix::Identity(dim, dim)}); }

KrausChannel KrausChannel::amplitude_damping(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("amplitude_damping: p outside [0, 1]");
  CMatrix k1 = CMatrix::Zero(2, 2), k2 = CMatrix::Zero(2, 2);
  k1(0, 0) = 1.0;
  k1(1, 1) = std::sqrt(1.0 - p);
  k2(0, 1) = std::sqrt(p);
  return KrausChannel({k1, k2});
}

KrausChannel KrausChannel::pinching(int dim) {
  std::vector<CMatrix> ops;
  for (int i = 0; i < dim; ++i) {
    CMatrix p = CMatrix::Zero(dim, dim);
    p(i, i) = 1.0;
    ops.push_back(p);
  }
  return KrausChannel(std::move(ops));
}

KrausChannel KrausChannel::partial_trace(Dims dims, Subsystem keep) {
  std::vector<CMatrix> ops;
  const int traced = keep == Subsystem::A ? dims.b : dims.a;
  const int kept = keep == Subsystem::A ? dims.a : dims.b;
  for (int t = 0; t < traced; ++t) {
    CMatrix bra = CMatrix::Zero(1, traced);
    bra(0, t) = 1.0;
    const CMatrix id = CMatrix::Identity(kept, kept);
    ops.push_back(keep == Subsystem::A ? kron(id, bra) : kron(bra, id));
  }
  return KrausChannel(std::move(ops));
}

HermitianMatrix apply_channel(const KrausChannel& channel, const HermitianMatrix& x) {
  if (x.dim() != channel.input_dim()) throw ValidationError("apply_channel: dimension mismatch");
  CMatrix out = CMatrix::Zero(channel.output_dim(), channel.output_dim());
  for (const auto& k : channel.operators()) out += k * x.matrix() * k.adjoint();
  return HermitianMatrix::symmetrized(out);
}

DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& rho) {
  auto out = apply_channel(channel, rho.hermitian());
  // Renormalize round-off so the result passes the density-matrix check.
  return DensityMatrix(out * (1.0 / out.trace()));
}

// --- LinearMap ---------------------------------------------------------------

LinearMap::LinearMap(int input_dim, int output_dim, SparseSuperop superop)
    : in_(input_dim), out_(output_dim), s_(std::move(superop)) {
  if (s_.rows() != static_cast<Eigen::Index>(out_) * out_ ||
      s_.cols() != static_cast<Eigen::Index>(in_) * in_) {
    throw ValidationError("LinearMap: superoperator shape does not match dimensions");
  }
  s_.makeCompressed();
}

LinearMap LinearMap::identity(int dim, double scale) {
  SparseSuperop s(dim * dim, dim * dim);
  s.reserve(Eigen::VectorXi::Constant(dim * dim, 1));
  for (int i = 0; i < dim * dim; ++i) s.insert(i, i) = scale;
  return LinearMap(dim, dim, std::move(s));
}

LinearMap LinearMap::kraus(const std::vector<CMatrix>& ops, const std::vector<double>& coeffs) {
  if (ops.empty()) throw ValidationError("LinearMap::kraus: no operators");
  if (!coeffs.empty() && coeffs.size() != ops.size()) {
    throw ValidationError("LinearMap::kraus: coefficient count mismatch");
  }
  const int out = static_cast<int>(ops.front().rows());
  const int in = static_cast<int>(ops.front().cols());
  std::vector<Eigen::Triplet<Complex>> trip;
  for (std::size_t n = 0; n < ops.size(); ++n) {
    const auto& a = ops[n];
    if (a.rows() != out || a.cols() != in) throw ValidationError("LinearMap::kraus: shape mismatch");
    const double c = coeffs.empty() ? 1.0 : coeffs[n];
    std::vector<std::pair<int, int>> nz;
    for (int i = 0; i < out; ++i)
      for (int k = 0; k < in; ++k)
        if (a(i, k) != Complex(0.0)) nz.emplace_back(i, k);
    for (auto [i, k] : nz)
      for (auto [j, l] : nz) {
        trip.emplace_back(i * out + j, k * in + l, c * a(i, k) * std::conj(a(j, l)));
      }
  }
  SparseSuperop s(out * out, in * in);
  s.setFromTriplets(trip.begin(), trip.end());
  s.prune(Complex(0.0));
  return LinearMap(in, out, std::move(s));
}

LinearMap LinearMap::partial_trace(Dims dims, Subsystem keep) {
  return kraus(KrausChannel::partial_trace(dims, keep).operators());
}

LinearMap LinearMap::partial_transpose(Dims dims, Subsystem which) {
  const int d = dims.total(), da = dims.a, db = dims.b;
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j)
      for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l) {
          const int row = (i * db + k) * d + (j * db + l);
          const int col = which == Subsystem::B ? (i * db + l) * d + (j * db + k)
                                                : (j * db + k) * d + (i * db + l);
          trip.emplace_back(row, col, 1.0);
        }
  SparseSuperop s(d * d, d * d);
  s.setFromTriplets(trip.begin(), trip.end());
  return LinearMap(d, d, std::move(s));
}

LinearMap LinearMap::tensor_maximally_mixed_left(int dim_a, int dim_x) {
  std::vector<CMatrix> ops;
  const CMatrix id = CMatrix::Identity(dim_x, dim_x);
  for (int i = 0; i < dim_a; ++i) {
    CMatrix ket = CMatrix::Zero(dim_a, 1);
    ket(i, 0) = 1.0;
    ops.push_back(kron(ket, id));
  }
  return kraus(ops, std::vector<double>(ops.size(), 1.0 / dim_a));
}

HermitianMatrix LinearMap::apply(const HermitianMatrix& x) const {
  if (x.dim() != in_) throw ValidationError("LinearMap::apply: dimension mismatch");
  CVector v(in_ * in_);
  for (int i = 0; i < in_; ++i)
    for (int j = 0; j < in_; ++j) v[i * in_ + j] = x(i, j);
  const CVector w = s_ * v;
  CMatrix out(out_, out_);
  for (int i = 0; i < out_; ++i)
    for (int j = 0; j < out_; ++j) out(i, j) = w[i * out_ + j];
  return HermitianMatrix::symmetrized(out);
}

LinearMap LinearMap::compose(const LinearMap& inner) const {
  if (inner.out_ != in_) throw ValidationError("LinearMap::compose: dimension mismatch");
  SparseSuperop s = s_ * inner.s_;
  s.prune(Complex(0.0));
  return LinearMap(inner.in_, out_, std::move(s));
}

LinearMap LinearMap::scaled(double c) const {
  SparseSuperop s = s_ * Complex(c);
  return LinearMap(in_, out_, std::move(s));
}

LinearMap LinearMap::operator+(const LinearMap& o) const {
  if (o.in_ != in_ || o.out_ != out_) throw ValidationError("LinearMap +: dimension mismatch");
  SparseSuperop s = s_ + o.s_;
  s.prune(Complex(0.0));
  return LinearMap(in_, out_, std::move(s));
}

bool LinearMap::is_identity(double tol) const {
  if (in_ != out_) return false;
  const SparseSuperop diff = s_ - identity(in_).s_;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseSuperop::InnerIterator it(diff, k); it; ++it)
      if (std::abs(it.value()) > tol) return false;
  return true;
}

// --- random ------------------------------------------------------------------

namespace random {

CMatrix ginibre(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = n(rng);
      const double im = n(rng);
      g(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  return g;
}

HermitianMatrix hermitian(int dim, Rng& rng) {
  const CMatrix g = ginibre(dim, dim, rng);
  return HermitianMatrix::symmetrized(g + g.adjoint());
}

CMatrix unitary(int dim, Rng& rng) {
  const CMatrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(dim, dim);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

DensityMatrix density(int dim, Rng& rng, int rank) {
  if (rank <= 0 || rank > dim) rank = dim;
  const CMatrix g = ginibre(dim, rank, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(HermitianMatrix::symmetrized(rho));
}

DensityMatrix noisy_density(int dim, double noise, Rng& rng) {
  const auto base = density(dim, rng);
  CMatrix m = (1.0 - noise) * base.matrix() + (noise / dim) * CMatrix::Identity(dim, dim);
  return DensityMatrix(HermitianMatrix::symmetrized(m));
}

KrausChannel channel(int input_dim, int output_dim, int num_kraus, Rng& rng) {
  // Random isometry input -> output (x) environment, sliced into Kraus blocks.
  const int big = output_dim * num_kraus;
  if (big < input_dim) throw ValidationError("random::channel: too few Kraus operators");
  const CMatrix g = ginibre(big, input_dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  const CMatrix v = qr.householderQ() * CMatrix::Identity(big, input_dim);
  std::vector<CMatrix> ops;
  for (int k = 0; k < num_kraus; ++k) ops.push_back(v.block(k * output_dim, 0, output_dim, input_dim));
  return KrausChannel(std::move(ops));
}

}  // namespace random

}  // namespace relent::linalg
