#include <algorithm>
#include <cmath>
#include <string>

#include "relent/sdp.hpp"

namespace relent::sdp {

using linalg::CMatrix;
using linalg::Complex;
using nlohmann::json;

AffineOperatorExpr& AffineOperatorExpr::add(std::string block, LinearMap map) {
  if (map.output_dim() != output_dim) {
    throw ValidationError("AffineOperatorExpr: map output dimension " + std::to_string(map.output_dim()) +
                          " differs from " + std::to_string(output_dim));
  }
  terms.push_back({std::move(block), std::move(map)});
  return *this;
}

AffineOperatorExpr& AffineOperatorExpr::add_constant(const HermitianMatrix& c) {
  if (c.dim() != output_dim) throw ValidationError("AffineOperatorExpr: constant dimension mismatch");
  constant = constant + c;
  return *this;
}

HermitianMatrix AffineOperatorExpr::evaluate(const Assignment& values) const {
  HermitianMatrix acc = constant;
  for (const auto& t : terms) {
    auto it = values.find(t.block);
    if (it == values.end()) throw ValidationError("AffineOperatorExpr: no value for block '" + t.block + "'");
    acc = acc + t.map.apply(it->second);
  }
  return acc;
}

AffineFunctional& AffineFunctional::add(std::string block, HermitianMatrix weight) {
  terms.push_back({std::move(block), std::move(weight)});
  return *this;
}

double AffineFunctional::evaluate(const Assignment& values) const {
  double acc = constant;
  for (const auto& t : terms) {
    auto it = values.find(t.block);
    if (it == values.end()) throw ValidationError("AffineFunctional: no value for block '" + t.block + "'");
    acc += t.weight.inner(it->second);
  }
  return acc;
}

int SdpProblem::add_block(SdpVariableBlock block) {
  if (block.dim < 1) throw ValidationError("SdpProblem: block '" + block.id + "' has dim < 1");
  if (block.id.empty()) throw ValidationError("SdpProblem: empty block id");
  if (index_.count(block.id)) throw ValidationError("SdpProblem: duplicate block id '" + block.id + "'");
  if (block.trace_norm_bound && !(*block.trace_norm_bound >= 0.0)) {
    throw ValidationError("SdpProblem: negative trace-norm bound for '" + block.id + "'");
  }
  index_[block.id] = blocks_.size();
  blocks_.push_back(std::move(block));
  return static_cast<int>(blocks_.size()) - 1;
}

const SdpVariableBlock& SdpProblem::block(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("SdpProblem: unknown block '" + id + "'");
  return blocks_[it->second];
}

void SdpProblem::validate() const {
  auto check_functional = [&](const AffineFunctional& f, const std::string& where) {
    for (const auto& t : f.terms) {
      if (!has_block(t.block)) throw ValidationError(where + ": unknown block '" + t.block + "'");
      if (block(t.block).dim != t.weight.dim()) {
        throw ValidationError(where + ": weight dimension mismatch for block '" + t.block + "'");
      }
    }
  };
  check_functional(objective, "objective");
  for (const auto& c : matrix_constraints) {
    if (c.expr.constant.dim() != c.expr.output_dim) {
      throw ValidationError("constraint '" + c.label + "': constant dimension mismatch");
    }
    for (const auto& t : c.expr.terms) {
      if (!has_block(t.block)) throw ValidationError("constraint '" + c.label + "': unknown block '" + t.block + "'");
      if (block(t.block).dim != t.map.input_dim()) {
        throw ValidationError("constraint '" + c.label + "': map input dimension mismatch for '" + t.block + "'");
      }
      if (t.map.output_dim() != c.expr.output_dim) {
        throw ValidationError("constraint '" + c.label + "': map output dimension mismatch");
      }
    }
  }
  for (const auto& c : scalar_constraints) check_functional(c.functional, "constraint '" + c.label + "'");
}

double SdpProblem::evaluate_objective(const Assignment& values) const { return objective.evaluate(values); }

double SdpProblem::max_violation(const Assignment& values) const {
  double worst = 0.0;
  for (const auto& b : blocks_) {
    if (b.kind != BlockKind::Psd) continue;
    auto it = values.find(b.id);
    if (it == values.end()) throw ValidationError("max_violation: no value for block '" + b.id + "'");
    worst = std::max(worst, -linalg::min_eigenvalue(it->second));
  }
  for (const auto& c : matrix_constraints) {
    const HermitianMatrix v = c.expr.evaluate(values);
    if (c.relation == MatrixRelation::Psd) {
      worst = std::max(worst, -linalg::min_eigenvalue(v));
    } else {
      worst = std::max(worst, v.matrix().cwiseAbs().maxCoeff());
    }
  }
  for (const auto& c : scalar_constraints) {
    const double v = c.functional.evaluate(values);
    worst = std::max(worst, c.relation == ScalarRelation::NonNegative ? -v : std::abs(v));
  }
  return worst;
}

// --- JSON -----------------------------------------------------------------

namespace {

constexpr const char* kSchema = "relent/sdp-problem-v1";

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(field, "ragged matrix");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& e = row[k];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ConfigError(field, "entries must be [re, im] pairs");
      }
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

HermitianMatrix hermitian_from_json(const json& j, const std::string& field) {
  try {
    return HermitianMatrix(matrix_from_json(j, field));
  } catch (const ValidationError& e) {
    throw ConfigError(field, e.what());
  }
}

json functional_to_json(const AffineFunctional& f) {
  json terms = json::array();
  for (const auto& t : f.terms) terms.push_back({{"block", t.block}, {"weight", matrix_to_json(t.weight.matrix())}});
  return {{"terms", terms}, {"constant", f.constant}};
}

AffineFunctional functional_from_json(const json& j, const std::string& field) {
  AffineFunctional f;
  f.constant = j.value("constant", 0.0);
  for (const auto& t : j.at("terms")) {
    f.add(t.at("block").get<std::string>(), hermitian_from_json(t.at("weight"), field + ".weight"));
  }
  return f;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }) ==
        allowed.end()) {
      throw ConfigError(where + "." + it.key(), "unknown field");
    }
  }
}

}  // namespace

json SdpProblem::to_json() const {
  json j;
  j["schema"] = kSchema;
  json blocks = json::array();
  for (const auto& b : blocks_) {
    json jb = {{"id", b.id}, {"dim", b.dim}, {"kind", b.kind == BlockKind::Psd ? "psd" : "free"}};
    if (b.trace_norm_bound) jb["trace_norm_bound"] = *b.trace_norm_bound;
    blocks.push_back(jb);
  }
  j["blocks"] = blocks;
  j["objective"] = functional_to_json(objective);
  json mcs = json::array();
  for (const auto& c : matrix_constraints) {
    json terms = json::array();
    for (const auto& t : c.expr.terms) {
      terms.push_back({{"block", t.block},
                       {"input_dim", t.map.input_dim()},
                       {"superop", matrix_to_json(CMatrix(t.map.superop()))}});
    }
    mcs.push_back({{"label", c.label},
                   {"relation", c.relation == MatrixRelation::Psd ? "psd" : "zero"},
                   {"output_dim", c.expr.output_dim},
                   {"constant", matrix_to_json(c.expr.constant.matrix())},
                   {"terms", terms}});
  }
  j["matrix_constraints"] = mcs;
  json scs = json::array();
  for (const auto& c : scalar_constraints) {
    scs.push_back({{"label", c.label},
                   {"relation", c.relation == ScalarRelation::NonNegative ? "nonnegative" : "zero"},
                   {"functional", functional_to_json(c.functional)}});
  }
  j["scalar_constraints"] = scs;
  return j;
}

SdpProblem SdpProblem::from_json(const json& j) {
  require_keys(j, {"schema", "blocks", "objective", "matrix_constraints", "scalar_constraints"}, "problem");
  if (j.value("schema", "") != kSchema) throw ConfigError("schema", std::string("expected '") + kSchema + "'");
  SdpProblem p;
  try {
    for (const auto& jb : j.at("blocks")) {
      require_keys(jb, {"id", "dim", "kind", "trace_norm_bound"}, "blocks[]");
      SdpVariableBlock b;
      b.id = jb.at("id").get<std::string>();
      b.dim = jb.at("dim").get<int>();
      const auto kind = jb.value("kind", "psd");
      if (kind == "psd") {
        b.kind = BlockKind::Psd;
      } else if (kind == "free") {
        b.kind = BlockKind::Free;
      } else {
        throw ConfigError("blocks[].kind", "expected 'psd' or 'free'");
      }
      if (jb.contains("trace_norm_bound")) b.trace_norm_bound = jb["trace_norm_bound"].get<double>();
      p.add_block(b);
    }
    p.objective = functional_from_json(j.at("objective"), "objective");
    for (const auto& jc : j.value("matrix_constraints", json::array())) {
      require_keys(jc, {"label", "relation", "output_dim", "constant", "terms"}, "matrix_constraints[]");
      const int out = jc.at("output_dim").get<int>();
      AffineOperatorExpr expr(out);
      expr.add_constant(hermitian_from_json(jc.at("constant"), "matrix_constraints[].constant"));
      for (const auto& jt : jc.at("terms")) {
        const int in = jt.at("input_dim").get<int>();
        const CMatrix dense = matrix_from_json(jt.at("superop"), "matrix_constraints[].terms[].superop");
        linalg::SparseSuperop s = dense.sparseView();
        expr.add(jt.at("block").get<std::string>(), LinearMap(in, out, std::move(s)));
      }
      const auto rel = jc.value("relation", "psd");
      if (rel != "psd" && rel != "zero") throw ConfigError("matrix_constraints[].relation", "expected 'psd' or 'zero'");
      p.matrix_constraints.push_back(
          {std::move(expr), rel == "psd" ? MatrixRelation::Psd : MatrixRelation::Zero, jc.value("label", "")});
    }
    for (const auto& jc : j.value("scalar_constraints", json::array())) {
      require_keys(jc, {"label", "relation", "functional"}, "scalar_constraints[]");
      const auto rel = jc.value("relation", "nonnegative");
      if (rel != "nonnegative" && rel != "zero") {
        throw ConfigError("scalar_constraints[].relation", "expected 'nonnegative' or 'zero'");
      }
      p.scalar_constraints.push_back({functional_from_json(jc.at("functional"), "scalar_constraints[]"),
                                      rel == "zero" ? ScalarRelation::Zero : ScalarRelation::NonNegative,
                                      jc.value("label", "")});
    }
  } catch (const json::exception& e) {
    throw ConfigError("problem", e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("problem", e.what());
  }
  p.validate();
  return p;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::NearOptimal: return "near-optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

}  // namespace relent::sdp
