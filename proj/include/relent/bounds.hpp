#pragma once

// Lower and upper semidefinite relaxations of constrained relative-entropy
// minimization, certified gaps and the refinement loop.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "relent/gridding.hpp"
#include "relent/linalg.hpp"
#include "relent/sdp.hpp"

namespace relent::bounds {

using linalg::DensityMatrix;
using linalg::HermitianMatrix;
using linalg::LinearMap;

/// How one argument of a relative entropy depends on the problem's state blocks.
class StateMap {
 public:
  enum class Kind { Free, Fixed, Affine };

  static StateMap free(std::string block);
  static StateMap fixed(const DensityMatrix& state);
  /// X -> map(V_block).
  static StateMap affine(std::string block, LinearMap map);

  Kind kind() const { return kind_; }
  const std::string& block() const { return block_; }
  const HermitianMatrix& fixed_value() const { return *fixed_; }
  const LinearMap& map() const { return *map_; }
  int output_dim() const { return dim_; }

  HermitianMatrix evaluate(const sdp::Assignment& states) const;

 private:
  Kind kind_ = Kind::Free;
  std::string block_;
  std::optional<HermitianMatrix> fixed_;
  std::optional<LinearMap> map_;
  int dim_ = 0;
};

struct StateBlock {
  std::string id;
  int dim = 1;
};

/// zeta * D(rho_map || sigma_map) with sandwich constants (mu, lambda) and the
/// grid used to discretize [mu, lambda].
struct RelEntTerm {
  double weight = 1.0;
  StateMap rho;
  StateMap sigma;
  double mu = 0.0;
  double lambda = 1.0;
  grid::Grid grid = grid::Grid::degenerate(1.0);
  /// Accuracy parameter the grid was built for; refinement starts from here.
  double eps = 1e-1;
};

/// Builds the default adaptive grid for (mu, lambda) at accuracy eps.
grid::Grid default_grid(double mu, double lambda, double eps);

struct RelEntProblem {
  std::vector<StateBlock> states;
  std::vector<RelEntTerm> terms;
  /// Constraints on the state blocks; they reference state ids directly.
  std::vector<sdp::ScalarConstraint> scalar_constraints;
  std::vector<sdp::MatrixConstraint> matrix_constraints;

  /// Throws ValidationError on dimension mismatches, dangling references,
  /// negative weights, an empty term list or grids outside [mu, lambda].
  void validate() const;
  std::vector<grid::Grid> grids() const;
};

enum class Side { Lower, Upper };
std::string to_string(Side s);

struct BoundResult {
  Side side = Side::Lower;
  /// Certified lower bound (lower side) or primal value plus the dropped-segment
  /// surcharge (upper side). -inf / +inf when the solver gave nothing usable.
  double value = 0.0;
  double raw_primal = 0.0;
  sdp::SolveStatus status = sdp::SolveStatus::NumericalFailure;
  sdp::Assignment states;
  std::vector<grid::Grid> grids;
  sdp::Residuals residuals;
  int iterations = 0;
  std::string fingerprint;
};

/// Relaxation objective: sum_k tr mu_k + log(lambda) + 1 - lambda per term.
sdp::SdpProblem build_lower(const RelEntProblem& problem);
sdp::SdpProblem build_lower(const RelEntProblem& problem, const std::vector<grid::Grid>& grids);
/// Relaxation objective: sum_k tr nu_k + log(lambda) + 1 - lambda per term.
sdp::SdpProblem build_upper(const RelEntProblem& problem);
sdp::SdpProblem build_upper(const RelEntProblem& problem, const std::vector<grid::Grid>& grids);

/// Sum over terms of zeta * max(0, t_1 - mu).
double upper_surcharge(const RelEntProblem& problem, const std::vector<grid::Grid>& grids);

BoundResult solve_lower(const RelEntProblem& problem, const sdp::Settings& settings = {});
BoundResult solve_lower(const RelEntProblem& problem, const std::vector<grid::Grid>& grids,
                        const sdp::Settings& settings = {});
BoundResult solve_upper(const RelEntProblem& problem, const sdp::Settings& settings = {});
BoundResult solve_upper(const RelEntProblem& problem, const std::vector<grid::Grid>& grids,
                        const sdp::Settings& settings = {});

/// c_u - c_l. Throws ValidationError for results of different problems or sides.
double gap(const BoundResult& lower, const BoundResult& upper);

/// (rho, sigma) of term `index` at the given state assignment.
std::pair<HermitianMatrix, HermitianMatrix> term_pair(const RelEntProblem& problem, std::size_t index,
                                                      const sdp::Assignment& states);

/// True iff every term's optimizer pair keeps its sandwich constants strictly
/// inside the imposed ones: lambda_opt < lambda (1 - 1e-6), and
/// mu_opt > mu (1 + 1e-6) for terms with mu > 0.
bool validate_interior(const RelEntProblem& problem, const BoundResult& result);

struct RefinementIteration {
  int iteration = 0;
  std::vector<int> lower_sizes;
  std::vector<int> upper_sizes;
  double c_l = 0.0;
  double c_u = 0.0;
  double gap = 0.0;
  double wall_seconds = 0.0;
};

enum class RefinementStatus { GapMet, BudgetExhausted, Infeasible, SolverFailure };
std::string to_string(RefinementStatus s);

struct RefinementReport {
  std::vector<RefinementIteration> iterations;
  RefinementStatus status = RefinementStatus::BudgetExhausted;
  double best_lower = 0.0;  // max over iterations of c_l
  double best_upper = 0.0;  // min over iterations of c_u
  std::string strategy;
  BoundResult last_lower;
  BoundResult last_upper;

  double final_gap() const { return best_upper - best_lower; }
  /// Wall times are omitted so the record is reproducible byte for byte.
  nlohmann::json to_json() const;
  /// "iteration c_l c_u gap" rows after a '#' header.
  std::string plot_rows() const;
};

struct RefineOptions {
  double factor = 8.0;
  sdp::Settings settings;
};

RefinementReport refine_until(const RelEntProblem& problem, double target_eps, grid::Strategy strategy,
                              int budget, const RefineOptions& options = {});

}  // namespace relent::bounds
