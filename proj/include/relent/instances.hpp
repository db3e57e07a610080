#pragma once

// Problem constructors for key-rate, channel-capacity, entanglement and entropy
// applications, plus the states and measurements they are built from.

#include <vector>

#include "relent/bounds.hpp"
#include "relent/linalg.hpp"

namespace relent::instances {

using linalg::CMatrix;
using linalg::DensityMatrix;
using linalg::RMatrix;

/// |Omega+> = sum_i |ii> / sqrt(d).
DensityMatrix max_entangled(int d);
/// (1 - alpha) Omega+ + alpha I / d^2.
DensityMatrix isotropic(double alpha, int d);

/// Computational basis and its Fourier transform, as columns.
std::pair<CMatrix, CMatrix> mub_pair(int d);

struct QkdSetup {
  int dim_a = 2;
  int dim_b = 2;
  std::vector<CMatrix> alice_bases;  // columns are measurement vectors; basis 0 is the key basis
  std::vector<CMatrix> bob_bases;
  /// tables[i][j](a, b) = Pr(outcome a in Alice basis i, outcome b in Bob basis j).
  std::vector<std::vector<RMatrix>> tables;
  double lambda = 0.0;  // 0 selects sqrt(dim_a dim_b)
  double eps = 1e-2;
  /// Constrain only the statistics of equal basis indices (i, i).
  bool matching_only = false;

  /// Throws ValidationError unless bases are orthonormal and tables are
  /// nonnegative and normalized within 1e-9.
  void validate() const;
};

/// Joint statistics of a state measured in product bases.
std::vector<std::vector<RMatrix>> joint_tables(const DensityMatrix& rho, int dim_a, int dim_b,
                                               const std::vector<CMatrix>& alice,
                                               const std::vector<CMatrix>& bob);

/// Both parties measure both bases of mub_pair(d) on the isotropic state.
QkdSetup isotropic_qkd_setup(double alpha, int d, double eps = 1e-2);

/// min D(rho_AB || Phi_key(rho_AB)) subject to the observed statistics, where
/// Phi_key dephases Alice in her key basis.
bounds::RelEntProblem qkd_instance(const QkdSetup& setup);
/// The sandwich constant actually used by qkd_instance.
double qkd_lambda(const QkdSetup& setup);

/// Stinespring isometry sum_k K_k (x) |k>, output ordered B (x) E.
CMatrix stinespring_isometry(const linalg::KrausChannel& channel);

/// min over inputs of D(rho_BE || I/d_B (x) rho_E) + D(rho_B || I/d_B); the
/// entanglement-assisted capacity is 2 log d_B - min.
bounds::RelEntProblem channel_capacity_instance(const linalg::KrausChannel& channel, double eps = 1e-2);

/// Stinespring isometry of amplitude damping into B (x) E: K1|psi>|0> + K2|psi>|1>.
CMatrix amplitude_damping_isometry(double p);

/// min over qubit inputs of D(rho_BE || I/2 (x) rho_E) + D(rho_B || I/2).
bounds::RelEntProblem amplitude_damping_instance(double p, double eps = 1e-2);
/// Entanglement-assisted capacity 2 log d_out - min, in nats.
double capacity_from_minimum(double minimum, int output_dim = 2);

/// min over PPT sigma of D(rho || sigma) for a fixed bipartite state.
bounds::RelEntProblem ree_instance(const DensityMatrix& rho, double lambda_cap = 50.0, double eps = 1e-2,
                                   linalg::Dims dims = {2, 2});

/// min D(rho || I/d) under the given constraints on block "rho"; H = log d - min.
bounds::RelEntProblem entropy_max_instance(int d, const std::vector<sdp::ScalarConstraint>& constraints,
                                           double eps = 1e-2);
/// min D(rho_AB || I/d_A (x) rho_B) under constraints on block "rho";
/// H(A|B) = log d_A - min.
bounds::RelEntProblem cond_entropy_instance(linalg::Dims dims,
                                            const std::vector<sdp::ScalarConstraint>& constraints,
                                            double eps = 1e-2);

/// min D(rho || sigma0) over states rho with tr(W_i rho) = tr(W_i rho0) for
/// random Hermitian W_i; rho0 and a full-rank sigma0 are drawn from `rng`.
/// lambda = 1 / lambda_min(sigma0), which dominates every state.
bounds::RelEntProblem witness_instance(int d, int num_witnesses, linalg::random::Rng& rng, double eps = 1e-2);

/// tr(M rho) = value as a scalar constraint on `block`.
sdp::ScalarConstraint expectation_constraint(const std::string& block, const linalg::HermitianMatrix& m,
                                             double value, std::string label = {});

}  // namespace relent::instances
