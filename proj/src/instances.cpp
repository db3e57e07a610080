#include "relent/instances.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace relent::instances {

using bounds::RelEntProblem;
using bounds::RelEntTerm;
using bounds::StateMap;
using linalg::Complex;
using linalg::CVector;
using linalg::HermitianMatrix;
using linalg::LinearMap;

DensityMatrix max_entangled(int d) {
  if (d < 2) throw ValidationError("max_entangled: d must be >= 2");
  CVector ket = CVector::Zero(d * d);
  for (int i = 0; i < d; ++i) ket[i * d + i] = 1.0 / std::sqrt(static_cast<double>(d));
  return DensityMatrix::pure(ket);
}

DensityMatrix isotropic(double alpha, int d) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("isotropic: alpha must lie in [0, 1]");
  const auto omega = max_entangled(d).hermitian();
  return DensityMatrix(omega * (1.0 - alpha) + HermitianMatrix::identity(d * d) * (alpha / (d * d)));
}

std::pair<CMatrix, CMatrix> mub_pair(int d) {
  if (d < 2) throw ValidationError("mub_pair: d must be >= 2");
  const CMatrix comp = CMatrix::Identity(d, d);
  CMatrix fourier(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      fourier(j, k) = std::polar(1.0 / std::sqrt(static_cast<double>(d)), 2.0 * std::numbers::pi * j * k / d);
    }
  return {comp, fourier};
}

void QkdSetup::validate() const {
  if (dim_a < 2 || dim_b < 2) throw ValidationError("QkdSetup: local dimensions must be >= 2");
  if (alice_bases.empty() || bob_bases.empty()) throw ValidationError("QkdSetup: need at least one basis per party");
  auto check_basis = [](const CMatrix& b, int d, const char* who) {
    if (b.rows() != d || b.cols() != d) throw ValidationError(std::string("QkdSetup: ") + who + " basis has wrong shape");
    if (!(b.adjoint() * b).isIdentity(linalg::kOrthogonalityTol)) {
      throw ValidationError(std::string("QkdSetup: ") + who + " basis is not orthonormal");
    }
  };
  for (const auto& b : alice_bases) check_basis(b, dim_a, "Alice");
  for (const auto& b : bob_bases) check_basis(b, dim_b, "Bob");
  if (tables.size() != alice_bases.size()) throw ValidationError("QkdSetup: one table row per Alice basis required");
  for (const auto& row : tables) {
    if (row.size() != bob_bases.size()) throw ValidationError("QkdSetup: one table per basis pair required");
    for (const auto& t : row) {
      if (t.rows() != dim_a || t.cols() != dim_b) throw ValidationError("QkdSetup: table has wrong shape");
      if (t.minCoeff() < -1e-9) throw ValidationError("QkdSetup: negative probability");
      if (std::abs(t.sum() - 1.0) > 1e-9) throw ValidationError("QkdSetup: table does not sum to 1");
    }
  }
  if (lambda < 0.0) throw ValidationError("QkdSetup: lambda must be nonnegative");
  if (!(eps > 0.0)) throw ValidationError("QkdSetup: eps must be positive");
}

namespace {

HermitianMatrix outcome_projector(const CMatrix& alice, int a, const CMatrix& bob, int b) {
  return linalg::tensor(HermitianMatrix::projector(alice.col(a)), HermitianMatrix::projector(bob.col(b)));
}

}  // namespace

std::vector<std::vector<RMatrix>> joint_tables(const DensityMatrix& rho, int dim_a, int dim_b,
                                               const std::vector<CMatrix>& alice, const std::vector<CMatrix>& bob) {
  if (rho.dim() != dim_a * dim_b) throw ValidationError("joint_tables: state dimension mismatch");
  std::vector<std::vector<RMatrix>> out;
  for (const auto& ab : alice) {
    std::vector<RMatrix> row;
    for (const auto& bb : bob) {
      RMatrix t(dim_a, dim_b);
      for (int a = 0; a < dim_a; ++a)
        for (int b = 0; b < dim_b; ++b) t(a, b) = outcome_projector(ab, a, bb, b).inner(rho.hermitian());
      row.push_back(t);
    }
    out.push_back(row);
  }
  return out;
}

QkdSetup isotropic_qkd_setup(double alpha, int d, double eps) {
  const auto [comp, fourier] = mub_pair(d);
  QkdSetup s;
  s.dim_a = s.dim_b = d;
  s.alice_bases = {comp, fourier};
  s.bob_bases = {comp, fourier};
  s.tables = joint_tables(isotropic(alpha, d), d, d, s.alice_bases, s.bob_bases);
  s.eps = eps;
  return s;
}

double qkd_lambda(const QkdSetup& setup) {
  return setup.lambda > 0.0 ? setup.lambda : std::sqrt(static_cast<double>(setup.dim_a * setup.dim_b));
}

RelEntProblem qkd_instance(const QkdSetup& setup) {
  setup.validate();
  const int d = setup.dim_a * setup.dim_b;
  RelEntProblem p;
  p.states = {{"rho", d}};
  std::vector<CMatrix> kraus;
  const CMatrix id_b = CMatrix::Identity(setup.dim_b, setup.dim_b);
  for (int a = 0; a < setup.dim_a; ++a) {
    const CVector v = setup.alice_bases[0].col(a);
    kraus.push_back(linalg::kron(v * v.adjoint(), id_b));
  }
  RelEntTerm t;
  t.rho = StateMap::free("rho");
  t.sigma = StateMap::affine("rho", LinearMap::kraus(kraus));
  t.mu = 0.0;
  t.lambda = qkd_lambda(setup);
  t.eps = setup.eps;
  t.grid = bounds::default_grid(t.mu, t.lambda, t.eps);
  p.terms.push_back(t);
  for (std::size_t i = 0; i < setup.alice_bases.size(); ++i)
    for (std::size_t j = 0; j < setup.bob_bases.size(); ++j) {
      if (setup.matching_only && i != j) continue;
      for (int a = 0; a < setup.dim_a; ++a)
        for (int b = 0; b < setup.dim_b; ++b) {
          p.scalar_constraints.push_back(expectation_constraint(
              "rho", outcome_projector(setup.alice_bases[i], a, setup.bob_bases[j], b), setup.tables[i][j](a, b),
              "p[" + std::to_string(i) + "," + std::to_string(j) + "](" + std::to_string(a) + "," +
                  std::to_string(b) + ")"));
        }
    }
  return p;
}

CMatrix stinespring_isometry(const linalg::KrausChannel& channel) {
  const auto& ops = channel.operators();
  const int n = static_cast<int>(ops.size());
  CMatrix u = CMatrix::Zero(channel.output_dim() * n, channel.input_dim());
  for (int k = 0; k < n; ++k) {
    CMatrix e = CMatrix::Zero(n, 1);
    e(k, 0) = 1.0;
    u += linalg::kron(ops[k], e);
  }
  return u;
}

CMatrix amplitude_damping_isometry(double p) {
  return stinespring_isometry(linalg::KrausChannel::amplitude_damping(p));
}

RelEntProblem channel_capacity_instance(const linalg::KrausChannel& channel, double eps) {
  const int d_in = channel.input_dim(), d_out = channel.output_dim();
  const int d_env = static_cast<int>(channel.operators().size());
  const LinearMap dilation = LinearMap::kraus({stinespring_isometry(channel)});
  const LinearMap env = LinearMap::partial_trace({d_out, d_env}, linalg::Subsystem::B).compose(dilation);
  const LinearMap product = LinearMap::tensor_maximally_mixed_left(d_out, d_env).compose(env);
  RelEntProblem prob;
  prob.states = {{"input", d_in}};

  RelEntTerm joint;
  joint.rho = StateMap::affine("input", dilation);
  joint.sigma = StateMap::affine("input", product);
  joint.mu = 0.0;
  joint.lambda = static_cast<double>(d_out) * d_out;
  joint.eps = eps;
  joint.grid = bounds::default_grid(0.0, joint.lambda, eps);
  prob.terms.push_back(joint);

  RelEntTerm marginal;
  marginal.rho = StateMap::affine("input", LinearMap::from_channel(channel));
  marginal.sigma = StateMap::fixed(DensityMatrix::maximally_mixed(d_out));
  marginal.mu = 0.0;
  marginal.lambda = d_out;
  marginal.eps = eps;
  marginal.grid = bounds::default_grid(0.0, marginal.lambda, eps);
  prob.terms.push_back(marginal);
  return prob;
}

RelEntProblem amplitude_damping_instance(double p, double eps) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("amplitude_damping_instance: p must lie in [0, 1]");
  return channel_capacity_instance(linalg::KrausChannel::amplitude_damping(p), eps);
}

double capacity_from_minimum(double minimum, int output_dim) { return 2.0 * std::log(output_dim) - minimum; }

RelEntProblem ree_instance(const DensityMatrix& rho, double lambda_cap, double eps, linalg::Dims dims) {
  if (rho.dim() != dims.total()) throw ValidationError("ree_instance: state dimension mismatch");
  if (!(lambda_cap > 0.0)) throw ValidationError("ree_instance: lambda_cap must be positive");
  RelEntProblem p;
  p.states = {{"sigma", dims.total()}};
  RelEntTerm t;
  t.rho = StateMap::fixed(rho);
  t.sigma = StateMap::free("sigma");
  t.mu = 0.0;
  t.lambda = lambda_cap;
  t.eps = eps;
  t.grid = bounds::default_grid(0.0, lambda_cap, eps);
  p.terms.push_back(t);
  sdp::AffineOperatorExpr ppt(dims.total());
  ppt.add("sigma", LinearMap::partial_transpose(dims, linalg::Subsystem::B));
  p.matrix_constraints.push_back({ppt, sdp::MatrixRelation::Psd, "sigma PPT"});
  return p;
}

RelEntProblem entropy_max_instance(int d, const std::vector<sdp::ScalarConstraint>& constraints, double eps) {
  if (d < 2) throw ValidationError("entropy_max_instance: d must be >= 2");
  RelEntProblem p;
  p.states = {{"rho", d}};
  RelEntTerm t;
  t.rho = StateMap::free("rho");
  t.sigma = StateMap::fixed(DensityMatrix::maximally_mixed(d));
  t.mu = 0.0;
  t.lambda = d;
  t.eps = eps;
  t.grid = bounds::default_grid(0.0, d, eps);
  p.terms.push_back(t);
  p.scalar_constraints = constraints;
  return p;
}

RelEntProblem cond_entropy_instance(linalg::Dims dims, const std::vector<sdp::ScalarConstraint>& constraints,
                                    double eps) {
  if (dims.a < 2 || dims.b < 1) throw ValidationError("cond_entropy_instance: invalid dimensions");
  RelEntProblem p;
  p.states = {{"rho", dims.total()}};
  const LinearMap marginal = LinearMap::partial_trace(dims, linalg::Subsystem::B);
  RelEntTerm t;
  t.rho = StateMap::free("rho");
  t.sigma = StateMap::affine("rho", LinearMap::tensor_maximally_mixed_left(dims.a, dims.b).compose(marginal));
  t.mu = 0.0;
  t.lambda = static_cast<double>(dims.a) * dims.a;
  t.eps = eps;
  t.grid = bounds::default_grid(0.0, t.lambda, eps);
  p.terms.push_back(t);
  p.scalar_constraints = constraints;
  return p;
}

RelEntProblem witness_instance(int d, int num_witnesses, linalg::random::Rng& rng, double eps) {
  if (d < 2) throw ValidationError("witness_instance: d must be >= 2");
  if (num_witnesses < 0) throw ValidationError("witness_instance: num_witnesses must be >= 0");
  const auto rho0 = linalg::random::density(d, rng);
  const auto sigma0 = linalg::random::density(d, rng);
  const double floor = linalg::eigh(sigma0.hermitian()).values.minCoeff();
  if (!(floor > 0.0)) throw ValidationError("witness_instance: sampled sigma is singular");
  RelEntProblem p;
  p.states = {{"rho", d}};
  RelEntTerm t;
  t.rho = StateMap::free("rho");
  t.sigma = StateMap::fixed(sigma0);
  t.mu = 0.0;
  t.lambda = 1.0 / floor;
  t.eps = eps;
  t.grid = bounds::default_grid(0.0, t.lambda, eps);
  p.terms.push_back(t);
  for (int i = 0; i < num_witnesses; ++i) {
    const auto w = linalg::random::hermitian(d, rng);
    p.scalar_constraints.push_back(
        expectation_constraint("rho", w, w.inner(rho0.hermitian()), "witness " + std::to_string(i)));
  }
  return p;
}

sdp::ScalarConstraint expectation_constraint(const std::string& block, const HermitianMatrix& m, double value,
                                             std::string label) {
  sdp::AffineFunctional f;
  f.add(block, m);
  f.constant = -value;
  return {f, sdp::ScalarRelation::Zero, std::move(label)};
}

}  // namespace relent::instances
