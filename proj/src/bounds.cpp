#include "relent/bounds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "relent/divergence.hpp"

namespace relent::bounds {

using sdp::AffineOperatorExpr;
using sdp::BlockKind;
using sdp::MatrixRelation;
using sdp::SdpProblem;

// --- StateMap -------------------------------------------------------------

StateMap StateMap::free(std::string block) {
  StateMap m;
  m.kind_ = Kind::Free;
  m.block_ = std::move(block);
  return m;
}

StateMap StateMap::fixed(const DensityMatrix& state) {
  StateMap m;
  m.kind_ = Kind::Fixed;
  m.fixed_ = state.hermitian();
  m.dim_ = state.dim();
  return m;
}

StateMap StateMap::affine(std::string block, LinearMap map) {
  StateMap m;
  m.kind_ = Kind::Affine;
  m.block_ = std::move(block);
  m.dim_ = map.output_dim();
  m.map_ = std::move(map);
  return m;
}

HermitianMatrix StateMap::evaluate(const sdp::Assignment& states) const {
  if (kind_ == Kind::Fixed) return *fixed_;
  auto it = states.find(block_);
  if (it == states.end()) throw ValidationError("StateMap: no value for block '" + block_ + "'");
  return kind_ == Kind::Free ? it->second : map_->apply(it->second);
}

grid::Grid default_grid(double mu, double lambda, double eps) {
  if (lambda == mu) return grid::Grid::degenerate(lambda);
  return grid::adaptive_grid(mu, lambda, eps);
}

// --- problem --------------------------------------------------------------

namespace {

int state_dim(const RelEntProblem& p, const std::string& id) {
  for (const auto& s : p.states)
    if (s.id == id) return s.dim;
  throw ValidationError("unknown state block '" + id + "'");
}

int map_dim(const RelEntProblem& p, const StateMap& m) {
  switch (m.kind()) {
    case StateMap::Kind::Free: return state_dim(p, m.block());
    case StateMap::Kind::Fixed: return m.output_dim();
    case StateMap::Kind::Affine:
      if (m.map().input_dim() != state_dim(p, m.block())) {
        throw ValidationError("affine state map input dimension differs from block '" + m.block() + "'");
      }
      return m.output_dim();
  }
  return 0;
}

void check_grid(const RelEntTerm& t, const grid::Grid& g, std::size_t i) {
  const std::string where = "term " + std::to_string(i);
  if (std::abs(g.lambda() - t.lambda) > 1e-12 * std::max(1.0, t.lambda) || std::abs(g.mu() - t.mu) > 1e-12) {
    throw ValidationError(where + ": grid does not cover [mu, lambda]");
  }
  if (!g.is_degenerate() && !(g.first() > 0.0)) throw ValidationError(where + ": first grid point must be positive");
}

// Adds scale * m(state) to expr.
void add_state(AffineOperatorExpr& expr, const RelEntProblem& p, const StateMap& m, double scale) {
  if (scale == 0.0) return;
  switch (m.kind()) {
    case StateMap::Kind::Free: expr.add(m.block(), LinearMap::identity(state_dim(p, m.block()), scale)); break;
    case StateMap::Kind::Fixed: expr.add_constant(m.fixed_value() * scale); break;
    case StateMap::Kind::Affine: expr.add(m.block(), m.map().scaled(scale)); break;
  }
}

SdpProblem base_problem(const RelEntProblem& p) {
  SdpProblem s;
  for (const auto& st : p.states) {
    s.add_block({st.id, st.dim, BlockKind::Psd, 1.0});
    sdp::AffineFunctional tr;
    tr.add(st.id, HermitianMatrix::identity(st.dim));
    tr.constant = -1.0;
    s.scalar_constraints.push_back({tr, sdp::ScalarRelation::Zero, st.id + " trace"});
  }
  for (const auto& c : p.scalar_constraints) s.scalar_constraints.push_back(c);
  for (const auto& c : p.matrix_constraints) s.matrix_constraints.push_back(c);
  for (std::size_t i = 0; i < p.terms.size(); ++i) {
    const auto& t = p.terms[i];
    if (t.rho.kind() == StateMap::Kind::Fixed && t.sigma.kind() == StateMap::Kind::Fixed) continue;
    const int d = map_dim(p, t.rho);
    const std::string tag = "term " + std::to_string(i);
    AffineOperatorExpr upper(d);
    add_state(upper, p, t.sigma, t.lambda);
    add_state(upper, p, t.rho, -1.0);
    s.matrix_constraints.push_back({upper, MatrixRelation::Psd, tag + " lambda sigma - rho"});
    if (t.mu > 0.0) {
      AffineOperatorExpr lower(d);
      add_state(lower, p, t.rho, 1.0);
      add_state(lower, p, t.sigma, -t.mu);
      s.matrix_constraints.push_back({lower, MatrixRelation::Psd, tag + " rho - mu sigma"});
    }
  }
  return s;
}

double tail_constant(double lambda) { return std::log(lambda) + 1.0 - lambda; }

std::string fingerprint(const RelEntProblem& p) {
  std::string f;
  for (const auto& s : p.states) f += s.id + ":" + std::to_string(s.dim) + ";";
  char buf[96];
  for (const auto& t : p.terms) {
    std::snprintf(buf, sizeof buf, "[%.17g,%.17g,%.17g,%d,%d]", t.weight, t.mu, t.lambda,
                  static_cast<int>(t.rho.kind()), static_cast<int>(t.sigma.kind()));
    f += buf;
  }
  f += "#" + std::to_string(p.scalar_constraints.size()) + "/" + std::to_string(p.matrix_constraints.size());
  return f;
}

const std::vector<grid::Grid>& checked(const RelEntProblem& p, const std::vector<grid::Grid>& grids) {
  p.validate();
  if (grids.size() != p.terms.size()) throw ValidationError("one grid per term is required");
  for (std::size_t i = 0; i < grids.size(); ++i) check_grid(p.terms[i], grids[i], i);
  return grids;
}

}  // namespace

void RelEntProblem::validate() const {
  if (terms.empty()) throw ValidationError("RelEntProblem: at least one term is required");
  std::set<std::string> ids;
  for (const auto& s : states) {
    if (s.dim < 1) throw ValidationError("RelEntProblem: state '" + s.id + "' has dim < 1");
    if (!ids.insert(s.id).second) throw ValidationError("RelEntProblem: duplicate state id '" + s.id + "'");
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const std::string where = "term " + std::to_string(i);
    if (!(t.weight >= 0.0)) throw ValidationError(where + ": weight must be nonnegative");
    if (!(t.mu >= 0.0) || !(t.lambda >= t.mu) || !std::isfinite(t.lambda) || !(t.lambda > 0.0)) {
      throw ValidationError(where + ": need 0 <= mu <= lambda < inf, lambda > 0");
    }
    if (map_dim(*this, t.rho) != map_dim(*this, t.sigma)) {
      throw ValidationError(where + ": rho and sigma maps have different output dimensions");
    }
    check_grid(t, t.grid, i);
  }
  // Constraint references are checked when the SDP is assembled.
  SdpProblem probe = base_problem(*this);
  probe.validate();
}

std::vector<grid::Grid> RelEntProblem::grids() const {
  std::vector<grid::Grid> g;
  for (const auto& t : terms) g.push_back(t.grid);
  return g;
}

std::string to_string(Side s) { return s == Side::Lower ? "lower" : "upper"; }

SdpProblem build_lower(const RelEntProblem& problem) { return build_lower(problem, problem.grids()); }

SdpProblem build_lower(const RelEntProblem& problem, const std::vector<grid::Grid>& grids) {
  checked(problem, grids);
  SdpProblem s = base_problem(problem);
  for (std::size_t i = 0; i < problem.terms.size(); ++i) {
    const auto& t = problem.terms[i];
    const auto& g = grids[i];
    const int d = map_dim(problem, t.rho);
    s.objective.constant += t.weight * tail_constant(g.lambda());
    const auto c = grid::lower_coefficients(g);
    for (std::size_t k = 0; k < c.alpha.size(); ++k) {
      const std::string id = "t" + std::to_string(i) + ".mu" + std::to_string(k);
      s.add_block({id, d, BlockKind::Psd, std::abs(c.alpha[k]) + c.beta[k]});
      s.objective.add(id, HermitianMatrix::identity(d) * t.weight);
      AffineOperatorExpr e(d);
      e.add(id, LinearMap::identity(d));
      add_state(e, problem, t.rho, -c.alpha[k]);
      add_state(e, problem, t.sigma, -c.beta[k]);
      s.matrix_constraints.push_back({e, MatrixRelation::Psd, id + " >= alpha rho + beta sigma"});
    }
  }
  return s;
}

SdpProblem build_upper(const RelEntProblem& problem) { return build_upper(problem, problem.grids()); }

SdpProblem build_upper(const RelEntProblem& problem, const std::vector<grid::Grid>& grids) {
  checked(problem, grids);
  SdpProblem s = base_problem(problem);
  for (std::size_t i = 0; i < problem.terms.size(); ++i) {
    const auto& t = problem.terms[i];
    const auto& g = grids[i];
    const int d = map_dim(problem, t.rho);
    s.objective.constant += t.weight * tail_constant(g.lambda());
    const auto c = grid::upper_coefficients(g);
    for (std::size_t k = 0; k < c.gamma.size(); ++k) {
      const std::string id = "t" + std::to_string(i) + ".nu" + std::to_string(k);
      s.add_block({id, d, BlockKind::Psd, std::abs(c.gamma[k]) + c.delta[k]});
      s.objective.add(id, HermitianMatrix::identity(d) * t.weight);
      AffineOperatorExpr e(d);
      e.add(id, LinearMap::identity(d));
      add_state(e, problem, t.rho, -c.gamma[k]);
      add_state(e, problem, t.sigma, -c.delta[k]);
      s.matrix_constraints.push_back({e, MatrixRelation::Psd, id + " >= gamma rho + delta sigma"});
    }
  }
  return s;
}

double upper_surcharge(const RelEntProblem& problem, const std::vector<grid::Grid>& grids) {
  double acc = 0.0;
  for (std::size_t i = 0; i < problem.terms.size(); ++i) {
    if (grids[i].is_degenerate()) continue;
    acc += problem.terms[i].weight * std::max(0.0, grids[i].first() - problem.terms[i].mu);
  }
  return acc;
}

namespace {

BoundResult make_result(const RelEntProblem& problem, const std::vector<grid::Grid>& grids, Side side,
                        const sdp::SdpSolution& sol) {
  BoundResult r;
  r.side = side;
  r.status = sol.status;
  r.raw_primal = sol.primal_value;
  r.grids = grids;
  r.residuals = sol.residuals;
  r.iterations = sol.iterations;
  r.fingerprint = fingerprint(problem);
  for (const auto& s : problem.states) {
    auto it = sol.blocks.find(s.id);
    if (it != sol.blocks.end()) r.states.emplace(s.id, it->second);
  }
  const bool usable = sol.status == sdp::SolveStatus::Optimal || sol.status == sdp::SolveStatus::NearOptimal;
  if (side == Side::Lower) {
    r.value = sol.certified_lower.value_or(-std::numeric_limits<double>::infinity());
  } else {
    r.value = usable ? sol.primal_value + upper_surcharge(problem, grids) : std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace

BoundResult solve_lower(const RelEntProblem& problem, const sdp::Settings& settings) {
  return solve_lower(problem, problem.grids(), settings);
}

BoundResult solve_lower(const RelEntProblem& problem, const std::vector<grid::Grid>& grids,
                        const sdp::Settings& settings) {
  const auto s = build_lower(problem, grids);
  return make_result(problem, grids, Side::Lower, sdp::solve(s, settings));
}

BoundResult solve_upper(const RelEntProblem& problem, const sdp::Settings& settings) {
  return solve_upper(problem, problem.grids(), settings);
}

BoundResult solve_upper(const RelEntProblem& problem, const std::vector<grid::Grid>& grids,
                        const sdp::Settings& settings) {
  const auto s = build_upper(problem, grids);
  return make_result(problem, grids, Side::Upper, sdp::solve(s, settings));
}

double gap(const BoundResult& lower, const BoundResult& upper) {
  if (lower.side != Side::Lower || upper.side != Side::Upper) throw ValidationError("gap: expected (lower, upper)");
  if (lower.fingerprint != upper.fingerprint) throw ValidationError("gap: results belong to different problems");
  return upper.value - lower.value;
}

std::pair<HermitianMatrix, HermitianMatrix> term_pair(const RelEntProblem& problem, std::size_t index,
                                                      const sdp::Assignment& states) {
  if (index >= problem.terms.size()) throw ValidationError("term_pair: index out of range");
  const auto& t = problem.terms[index];
  return {t.rho.evaluate(states), t.sigma.evaluate(states)};
}

namespace {

// Nearest density matrix in the sense of clipping negative eigenvalues.
DensityMatrix clip_to_state(const HermitianMatrix& h) {
  const auto clipped = linalg::spectral_map(h, [](double x) { return std::max(x, 0.0); });
  const double tr = clipped.trace();
  if (!(tr > 0.0)) throw ValidationError("optimizer state has no positive part");
  return DensityMatrix(clipped * (1.0 / tr));
}

}  // namespace

bool validate_interior(const RelEntProblem& problem, const BoundResult& result) {
  for (std::size_t i = 0; i < problem.terms.size(); ++i) {
    const auto& t = problem.terms[i];
    auto [rho, sigma] = term_pair(problem, i, result.states);
    const divergence::StatePair pair(clip_to_state(rho), clip_to_state(sigma));
    const auto sc = divergence::sandwich_constants(pair);
    if (!sc.support_ok) return false;
    if (!(sc.lambda < t.lambda * (1.0 - 1e-6))) return false;
    if (t.mu > 0.0 && !(sc.mu > t.mu * (1.0 + 1e-6))) return false;
  }
  return true;
}

// --- refinement -----------------------------------------------------------

std::string to_string(RefinementStatus s) {
  switch (s) {
    case RefinementStatus::GapMet: return "gap-met";
    case RefinementStatus::BudgetExhausted: return "budget-exhausted";
    case RefinementStatus::Infeasible: return "infeasible";
    case RefinementStatus::SolverFailure: return "solver-failure";
  }
  return "?";
}

namespace {

// Interval whose chord bound exceeds the lower estimate the most at (rho, sigma).
int active_interval(const HermitianMatrix& rho, const HermitianMatrix& sigma, const grid::Grid& g) {
  if (g.is_degenerate()) return 0;
  const auto& t = g.points();
  const auto lc = grid::lower_coefficients(g);
  auto gv = [&](double s) { return linalg::trace_plus(sigma * s - rho); };
  int best = 0;
  double worst = -std::numeric_limits<double>::infinity();
  double g_left = gv(t[0]);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double g_right = gv(t[k + 1]);
    const auto uc = grid::upper_coefficients(grid::Grid({t[k], t[k + 1]}, t[k], t[k + 1]));
    const double chord = uc.weights[0] * g_left + uc.weights[1] * g_right;
    const double lower = linalg::trace_plus(rho * lc.alpha[k] + sigma * lc.beta[k]);
    if (chord - lower > worst) {
      worst = chord - lower;
      best = static_cast<int>(k);
    }
    g_left = g_right;
  }
  return best;
}

}  // namespace

RefinementReport refine_until(const RelEntProblem& problem, double target_eps, grid::Strategy strategy, int budget,
                              const RefineOptions& options) {
  if (!(target_eps > 0.0)) throw ValidationError("refine_until: target_eps must be positive");
  if (budget < 1) throw ValidationError("refine_until: budget must be at least 1");
  problem.validate();

  RefinementReport report;
  report.strategy = grid::to_string(strategy);
  report.best_lower = -std::numeric_limits<double>::infinity();
  report.best_upper = std::numeric_limits<double>::infinity();

  std::vector<grid::Grid> lower = problem.grids(), upper = problem.grids();
  std::vector<grid::RefineContext> ctx_l, ctx_u;
  for (const auto& t : problem.terms) {
    ctx_l.push_back({t.eps, options.factor, std::nullopt});
    ctx_u.push_back({t.eps, options.factor, std::nullopt});
  }

  for (int it = 0; it < budget; ++it) {
    const auto start = std::chrono::steady_clock::now();
    BoundResult lo = solve_lower(problem, lower, options.settings);
    BoundResult up = solve_upper(problem, upper, options.settings);
    RefinementIteration rec;
    rec.iteration = it;
    for (const auto& g : lower) rec.lower_sizes.push_back(g.size());
    for (const auto& g : upper) rec.upper_sizes.push_back(g.size());
    rec.c_l = lo.value;
    rec.c_u = up.value;
    rec.gap = up.value - lo.value;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.iterations.push_back(rec);
    report.best_lower = std::max(report.best_lower, lo.value);
    report.best_upper = std::min(report.best_upper, up.value);
    const bool infeasible = lo.status == sdp::SolveStatus::Infeasible || up.status == sdp::SolveStatus::Infeasible;
    report.last_lower = std::move(lo);
    report.last_upper = std::move(up);
    if (infeasible) {
      report.status = RefinementStatus::Infeasible;
      return report;
    }
    if (report.final_gap() <= target_eps) {
      report.status = RefinementStatus::GapMet;
      return report;
    }
    if (it + 1 == budget) break;

    for (std::size_t i = 0; i < problem.terms.size(); ++i) {
      lower[i] = lower[i].merged(grid::refine(lower[i], strategy, ctx_l[i]));
      if (strategy == grid::Strategy::UpperAnchor && !report.last_upper.states.empty()) {
        const auto [rho, sigma] = term_pair(problem, i, report.last_upper.states);
        ctx_u[i].active_node = active_interval(rho, sigma, upper[i]);
      }
      upper[i] = grid::refine(upper[i], strategy, ctx_u[i]);
    }
  }
  report.status = std::isfinite(report.best_lower) ? RefinementStatus::BudgetExhausted : RefinementStatus::SolverFailure;
  return report;
}

nlohmann::json RefinementReport::to_json() const {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& r : iterations) {
    its.push_back({{"iteration", r.iteration},
                   {"lower_grid_sizes", r.lower_sizes},
                   {"upper_grid_sizes", r.upper_sizes},
                   {"c_l", r.c_l},
                   {"c_u", r.c_u},
                   {"gap", r.gap}});
  }
  return {{"schema", "relent/refinement-report-v1"},
          {"strategy", strategy},
          {"status", to_string(status)},
          {"best_lower", best_lower},
          {"best_upper", best_upper},
          {"gap", final_gap()},
          {"iterations", its}};
}

std::string RefinementReport::plot_rows() const {
  std::string out = "# iteration c_l c_u gap\n";
  char buf[160];
  for (const auto& r : iterations) {
    std::snprintf(buf, sizeof buf, "%d %.12e %.12e %.12e\n", r.iteration, r.c_l, r.c_u, r.gap);
    out += buf;
  }
  return out;
}

}  // namespace relent::bounds
