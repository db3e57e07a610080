#pragma once

// Block-structured semidefinite programs over complex Hermitian variables and a
// primal-dual interior-point solver with certified lower bounds.
//
// Model: variables are Hermitian blocks V_b. The objective and all constraints
// are affine in the blocks:
//   minimize   sum_b tr(C_b V_b) + c0
//   subject to sum_b Phi_b(V_b) + K  (PSD or == 0)     matrix constraints
//              sum_b tr(H_b V_b) + h  (>= 0 or == 0)    scalar constraints
// Blocks of kind Psd carry an implicit V_b >= 0.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "relent/linalg.hpp"

namespace relent::sdp {

using linalg::HermitianMatrix;
using linalg::LinearMap;

enum class BlockKind { Psd, Free };

struct SdpVariableBlock {
  std::string id;
  int dim = 1;
  BlockKind kind = BlockKind::Psd;
  /// Bound on the trace norm of the block valid at some optimal point. Needed
  /// by certify_lower to turn dual residuals into a rigorous slack.
  std::optional<double> trace_norm_bound;
};

using Assignment = std::map<std::string, HermitianMatrix>;

struct OperatorTerm {
  std::string block;
  LinearMap map;
};

/// sum_i map_i(V_{block_i}) + constant, a Hermitian matrix of size output_dim.
struct AffineOperatorExpr {
  explicit AffineOperatorExpr(int output_dim)
      : output_dim(output_dim), constant(HermitianMatrix::zero(output_dim)) {}

  AffineOperatorExpr& add(std::string block, LinearMap map);
  AffineOperatorExpr& add_constant(const HermitianMatrix& c);
  HermitianMatrix evaluate(const Assignment& values) const;

  int output_dim;
  std::vector<OperatorTerm> terms;
  HermitianMatrix constant;
};

struct FunctionalTerm {
  std::string block;
  HermitianMatrix weight;
};

/// sum_i tr(W_i V_{block_i}) + constant.
struct AffineFunctional {
  AffineFunctional& add(std::string block, HermitianMatrix weight);
  double evaluate(const Assignment& values) const;

  std::vector<FunctionalTerm> terms;
  double constant = 0.0;
};

enum class MatrixRelation { Psd, Zero };
enum class ScalarRelation { NonNegative, Zero };

struct MatrixConstraint {
  AffineOperatorExpr expr;
  MatrixRelation relation = MatrixRelation::Psd;
  std::string label;
};

struct ScalarConstraint {
  AffineFunctional functional;
  ScalarRelation relation = ScalarRelation::NonNegative;
  std::string label;
};

class SdpProblem {
 public:
  int add_block(SdpVariableBlock block);
  const std::vector<SdpVariableBlock>& blocks() const { return blocks_; }
  const SdpVariableBlock& block(const std::string& id) const;
  bool has_block(const std::string& id) const { return index_.count(id) > 0; }

  AffineFunctional objective;
  std::vector<MatrixConstraint> matrix_constraints;
  std::vector<ScalarConstraint> scalar_constraints;

  /// Throws ValidationError on dangling block references or dimension mismatches.
  void validate() const;
  double evaluate_objective(const Assignment& values) const;
  /// Largest violation over all constraints (negative eigenvalue, |equality|).
  double max_violation(const Assignment& values) const;

  nlohmann::json to_json() const;
  static SdpProblem from_json(const nlohmann::json& j);

 private:
  std::vector<SdpVariableBlock> blocks_;
  std::map<std::string, std::size_t> index_;
};

// --- real standard form -------------------------------------------------------

/// Orthonormal Hermitian basis: E_aa, (E_ab + E_ba)/sqrt2, i(E_ab - E_ba)/sqrt2.
/// Coordinates y satisfy V = sum_j y_j B_j and tr(B_i B_j) = delta_ij.
struct HermitianBasis {
  static int size(int dim) { return dim * dim; }
  static std::vector<double> coordinates(const HermitianMatrix& v);
  static HermitianMatrix matrix(const double* coords, int dim);
  /// Nonzero entries (row, col, value) of basis element j.
  static std::vector<std::tuple<int, int, linalg::Complex>> element(int j, int dim);
};

/// Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.
linalg::RMatrix embed(const linalg::CMatrix& h);
/// Inverse of embed for matrices in its image.
HermitianMatrix extract(const linalg::RMatrix& e);

using SparseReal = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Real standard form produced by embed_hermitian:
///   minimize c^T y + c0  s.t.  E y = e,  S_b(y) = sum_j y_j F_bj - F_b0 >= 0.
struct StandardForm {
  struct VarGroup {
    std::string block;
    int offset = 0;
    int dim = 0;
    std::optional<double> trace_norm_bound;
  };
  struct ConeBlock {
    std::string label;
    int size = 0;
    bool embedded = true;  // false for 1x1 real blocks
    linalg::RMatrix f0;
    std::vector<int> vars;              // variable indices touching the block
    std::vector<Triplets> coefficients;  // full symmetric storage, parallel to vars
  };

  int num_vars = 0;
  linalg::RVector c;
  double c0 = 0.0;
  SparseReal eq;  // rows x num_vars
  linalg::RVector eq_rhs;
  std::vector<std::string> eq_labels;
  std::vector<ConeBlock> cones;
  std::vector<VarGroup> groups;

  Assignment assignment(const linalg::RVector& y) const;
};

StandardForm embed_hermitian(const SdpProblem& problem);

// --- solver -------------------------------------------------------------------

enum class SolveStatus { Optimal, NearOptimal, Infeasible, Unbounded, NumericalFailure };
std::string to_string(SolveStatus s);

struct Settings {
  double eps_gap = 1e-8;
  double eps_feas = 1e-8;
  int max_iters = 100;
};

struct Residuals {
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double duality_gap = 0.0;
};

/// Dual iterate kept for certification.
struct DualIterate {
  std::shared_ptr<const StandardForm> form;
  std::vector<linalg::RMatrix> x;  // one per cone block
  linalg::RVector w;               // multipliers of the kept equality rows
  std::vector<int> kept_rows;      // rows of form->eq that w refers to
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  double primal_value = 0.0;
  double dual_value = 0.0;
  std::optional<double> certified_lower;
  Assignment blocks;
  Residuals residuals;
  int iterations = 0;
  std::optional<DualIterate> dual;
};

SdpSolution solve(const SdpProblem& problem, const Settings& settings = {});

/// Rigorous lower bound on the optimum from the dual iterate: dual objective
/// minus sum over blocks of ||R_b||_op * trace_norm_bound_b, where R_b is the
/// dual residual expressed as a Hermitian matrix. Empty when no dual iterate is
/// available or a block with a nonzero residual has no trace-norm bound.
std::optional<double> certify_lower(const SdpSolution& solution);

}  // namespace relent::sdp
