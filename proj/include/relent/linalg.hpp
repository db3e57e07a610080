#pragma once

// Dense complex-Hermitian linear algebra used by every other module.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "relent/error.hpp"

namespace relent::linalg {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using SparseSuperop = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kValidationTol = 1e-10;
inline constexpr double kReconstructionTol = 1e-9;
inline constexpr double kOrthogonalityTol = 1e-8;
inline constexpr double kKernelCutoff = 1e-14;

/// Square complex matrix equal to its conjugate transpose.
///
/// Construction from a raw matrix checks Hermiticity entrywise within
/// `kHermitianTol` and then stores the exactly symmetrized average, so every
/// instance is Hermitian to the last bit.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(const CMatrix& m);

  /// Stores (m + m†)/2 without a tolerance check. For quantities that are
  /// Hermitian by construction but carry round-off.
  static HermitianMatrix symmetrized(const CMatrix& m);
  static HermitianMatrix identity(int dim);
  static HermitianMatrix zero(int dim);
  static HermitianMatrix diagonal(const RVector& d);
  static HermitianMatrix projector(const CVector& ket);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix operator-() const;
  HermitianMatrix operator*(double s) const;
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a) { return a * s; }

  /// Real inner product tr(A B).
  double inner(const HermitianMatrix& o) const;

 private:
  struct Trusted {};
  HermitianMatrix(CMatrix m, Trusted) : m_(std::move(m)) {}
  CMatrix m_;
};

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // columns are orthonormal eigenvectors
};

EigenDecomposition eigh(const HermitianMatrix& a);
/// Validating overload for raw matrices; throws ValidationError if not Hermitian.
EigenDecomposition eigh(const CMatrix& a);

double min_eigenvalue(const HermitianMatrix& a);
double max_eigenvalue(const HermitianMatrix& a);

/// Sum of the positive eigenvalues.
double trace_plus(const HermitianMatrix& a);
double trace_norm(const HermitianMatrix& a);
double operator_norm(const HermitianMatrix& a);
HermitianMatrix positive_part(const HermitianMatrix& a);

/// Spectral function applied to eigenvalues; convenience for exp/sqrt style maps.
template <class F>
HermitianMatrix spectral_map(const HermitianMatrix& a, F f) {
  const auto ed = eigh(a);
  RVector v = ed.values;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f(v[i]);
  return HermitianMatrix::symmetrized(ed.vectors * v.asDiagonal() * ed.vectors.adjoint());
}

/// Natural log on the support; eigenvalues at or below 1e-14 * max eigenvalue
/// are treated as kernel and mapped to 0. Throws for eigenvalues below -1e-10.
HermitianMatrix matrix_log_on_support(const HermitianMatrix& a);

/// Projector onto the eigenspace with eigenvalues at or below the kernel cutoff.
HermitianMatrix kernel_projector(const HermitianMatrix& a);

struct Dims {
  int a;
  int b;
  int total() const { return a * b; }
};

enum class Subsystem { A, B };

HermitianMatrix partial_trace(const HermitianMatrix& m, Dims dims, Subsystem keep);
HermitianMatrix tensor(const HermitianMatrix& a, const HermitianMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);
HermitianMatrix partial_transpose(const HermitianMatrix& m, Dims dims, Subsystem which);

/// Hermitian matrix that is positive semidefinite with unit trace.
class DensityMatrix {
 public:
  explicit DensityMatrix(HermitianMatrix h);
  explicit DensityMatrix(const CMatrix& m) : DensityMatrix(HermitianMatrix(m)) {}

  static DensityMatrix maximally_mixed(int dim);
  static DensityMatrix pure(const CVector& ket);

  int dim() const { return h_.dim(); }
  const HermitianMatrix& hermitian() const { return h_; }
  const CMatrix& matrix() const { return h_.matrix(); }
  operator const HermitianMatrix&() const { return h_; }

 private:
  HermitianMatrix h_;
};

/// Completely positive trace-preserving map given by Kraus operators of shape
/// output_dim x input_dim.
class KrausChannel {
 public:
  KrausChannel(std::vector<CMatrix> ops);

  static KrausChannel identity(int dim);
  static KrausChannel amplitude_damping(double p);
  /// Dephasing in the computational basis of the full space.
  static KrausChannel pinching(int dim);
  /// Partial trace as a channel: Kraus ops <i|_traced (x) I.
  static KrausChannel partial_trace(Dims dims, Subsystem keep);

  const std::vector<CMatrix>& operators() const { return ops_; }
  int input_dim() const { return in_; }
  int output_dim() const { return out_; }

 private:
  std::vector<CMatrix> ops_;
  int in_ = 0;
  int out_ = 0;
};

DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& rho);
HermitianMatrix apply_channel(const KrausChannel& channel, const HermitianMatrix& x);

/// Hermiticity-preserving linear map between operator spaces, stored as a
/// sparse superoperator acting on row-major vectorizations.
class LinearMap {
 public:
  LinearMap(int input_dim, int output_dim, SparseSuperop superop);

  static LinearMap identity(int dim, double scale = 1.0);
  /// X -> sum_k c_k A_k X A_k†
  static LinearMap kraus(const std::vector<CMatrix>& ops, const std::vector<double>& coeffs = {});
  static LinearMap from_channel(const KrausChannel& ch) { return kraus(ch.operators()); }
  static LinearMap partial_trace(Dims dims, Subsystem keep);
  static LinearMap partial_transpose(Dims dims, Subsystem which);
  /// X -> (I_a / a) (x) X, i.e. tensoring with the maximally mixed state on the left.
  static LinearMap tensor_maximally_mixed_left(int dim_a, int dim_x);

  int input_dim() const { return in_; }
  int output_dim() const { return out_; }
  const SparseSuperop& superop() const { return s_; }

  HermitianMatrix apply(const HermitianMatrix& x) const;
  /// Composition: (this ∘ inner)(X) = this(inner(X)).
  LinearMap compose(const LinearMap& inner) const;
  LinearMap scaled(double s) const;
  LinearMap operator+(const LinearMap& o) const;
  bool is_identity(double tol = 0.0) const;

 private:
  int in_;
  int out_;
  SparseSuperop s_;
};

/// Seeded generators shared by tests and the CLI.
namespace random {
using Rng = std::mt19937_64;
CMatrix ginibre(int rows, int cols, Rng& rng);
HermitianMatrix hermitian(int dim, Rng& rng);
CMatrix unitary(int dim, Rng& rng);
/// Hilbert-Schmidt-type random state; `rank` < dim gives rank-deficient states.
DensityMatrix density(int dim, Rng& rng, int rank = -1);
/// Random state mixed with white noise: (1-noise) rho + noise I/d.
DensityMatrix noisy_density(int dim, double noise, Rng& rng);
KrausChannel channel(int input_dim, int output_dim, int num_kraus, Rng& rng);
}  // namespace random

}  // namespace relent::linalg
