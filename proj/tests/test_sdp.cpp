#include <cmath>

#include "doctest.h"
#include "relent/sdp.hpp"

using namespace relent;
using namespace relent::sdp;
using linalg::CMatrix;
using linalg::Complex;
using linalg::HermitianMatrix;
using linalg::LinearMap;

namespace {

SdpProblem lambda_min_problem(const HermitianMatrix& c) {
  SdpProblem p;
  p.add_block({"X", c.dim(), BlockKind::Psd, 1.0});
  p.objective.add("X", c);
  AffineFunctional tr;
  tr.add("X", HermitianMatrix::identity(c.dim()));
  tr.constant = -1.0;
  p.scalar_constraints.push_back({tr, ScalarRelation::Zero, "trace"});
  return p;
}

}  // namespace

TEST_CASE("basis coordinates round-trip and are orthonormal") {
  linalg::random::Rng rng(11);
  for (int d : {1, 2, 3, 5}) {
    const auto h = linalg::random::hermitian(d, rng);
    const auto y = HermitianBasis::coordinates(h);
    const auto back = HermitianBasis::matrix(y.data(), d);
    CHECK((back.matrix() - h.matrix()).cwiseAbs().maxCoeff() < 1e-13);
    double norm2 = 0.0;
    for (double v : y) norm2 += v * v;
    CHECK(norm2 == doctest::Approx(h.inner(h)).epsilon(1e-12));
  }
  for (int j = 0; j < 9; ++j) {
    for (int k = 0; k < 9; ++k) {
      std::vector<double> a(9, 0.0), b(9, 0.0);
      a[j] = 1.0;
      b[k] = 1.0;
      const double ip = HermitianBasis::matrix(a.data(), 3).inner(HermitianBasis::matrix(b.data(), 3));
      CHECK(ip == doctest::Approx(j == k ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("embedding preserves spectra") {
  CMatrix y(2, 2);
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  // iY is anti-Hermitian; its Hermitian counterpart Y has eigenvalues -1, 1.
  const auto e = embed(y);
  const Eigen::SelfAdjointEigenSolver<linalg::RMatrix> es(e);
  CHECK(es.eigenvalues()[0] == doctest::Approx(-1.0));
  CHECK(es.eigenvalues()[3] == doctest::Approx(1.0));
  const CMatrix ipy = CMatrix::Identity(2, 2) + y;
  const Eigen::SelfAdjointEigenSolver<linalg::RMatrix> es2(embed(ipy));
  CHECK(es2.eigenvalues()[0] == doctest::Approx(0.0).epsilon(1e-12));

  linalg::random::Rng rng(3);
  const auto h = linalg::random::hermitian(4, rng);
  CHECK((extract(embed(h.matrix())).matrix() - h.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(embed(h.matrix()).trace() == doctest::Approx(2.0 * h.trace()));
}

TEST_CASE("min tr X subject to X >= I") {
  SdpProblem p;
  p.add_block({"X", 2, BlockKind::Free, std::nullopt});
  p.objective.add("X", HermitianMatrix::identity(2));
  AffineOperatorExpr e(2);
  e.add("X", LinearMap::identity(2)).add_constant(-HermitianMatrix::identity(2));
  p.matrix_constraints.push_back({e, MatrixRelation::Psd, "X >= I"});
  const auto sol = solve(p);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_value == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.dual_value == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("lambda_min problems are solved and certified") {
  linalg::random::Rng rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 2 + trial % 4;
    const auto c = linalg::random::hermitian(d, rng);
    const double lmin = linalg::min_eigenvalue(c);
    const Settings st;
    const auto sol = solve(lambda_min_problem(c), st);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.primal_value - lmin) < 1e-7);
    REQUIRE(sol.certified_lower.has_value());
    CHECK(*sol.certified_lower <= lmin + 1e-12);
    CHECK(*sol.certified_lower <= sol.primal_value);
    CHECK(sol.primal_value - *sol.certified_lower <= 10 * st.eps_gap);
  }
}

TEST_CASE("infeasible and unbounded problems are detected") {
  SdpProblem inf;
  inf.add_block({"X", 2, BlockKind::Psd, 1.0});
  inf.objective.add("X", HermitianMatrix::identity(2));
  AffineFunctional tr;
  tr.add("X", HermitianMatrix::identity(2));
  tr.constant = 1.0;
  inf.scalar_constraints.push_back({tr, ScalarRelation::Zero, "tr = -1"});
  CHECK(solve(inf).status == SolveStatus::Infeasible);

  SdpProblem unb;
  unb.add_block({"X", 2, BlockKind::Psd, std::nullopt});
  unb.objective.add("X", -HermitianMatrix::identity(2));
  CHECK(solve(unb).status == SolveStatus::Unbounded);

  // Dependent, inconsistent equality rows.
  SdpProblem dep;
  dep.add_block({"X", 1, BlockKind::Psd, 1.0});
  dep.objective.add("X", HermitianMatrix::identity(1));
  AffineFunctional a, b;
  a.add("X", HermitianMatrix::identity(1));
  a.constant = -1.0;
  b.add("X", HermitianMatrix::identity(1) * 2.0);
  b.constant = -3.0;
  dep.scalar_constraints.push_back({a, ScalarRelation::Zero, "x = 1"});
  dep.scalar_constraints.push_back({b, ScalarRelation::Zero, "2x = 3"});
  CHECK(solve(dep).status == SolveStatus::Infeasible);
}

TEST_CASE("redundant consistent equalities are tolerated") {
  SdpProblem p;
  p.add_block({"X", 1, BlockKind::Psd, 2.0});
  p.objective.add("X", HermitianMatrix::identity(1));
  AffineFunctional a, b;
  a.add("X", HermitianMatrix::identity(1));
  a.constant = -1.0;
  b.add("X", HermitianMatrix::identity(1) * 2.0);
  b.constant = -2.0;
  p.scalar_constraints.push_back({a, ScalarRelation::Zero, "x = 1"});
  p.scalar_constraints.push_back({b, ScalarRelation::Zero, "2x = 2"});
  const auto sol = solve(p);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_value == doctest::Approx(1.0));
}

TEST_CASE("scaling the objective scales the value and keeps the argmin") {
  linalg::random::Rng rng(5);
  const auto c = linalg::random::hermitian(3, rng);
  const auto base = solve(lambda_min_problem(c));
  const auto scaled = solve(lambda_min_problem(c * 7.5));
  CHECK(scaled.primal_value == doctest::Approx(7.5 * base.primal_value).epsilon(1e-7));
  const auto diff = base.blocks.at("X").matrix() - scaled.blocks.at("X").matrix();
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("json round-trip gives identical solves") {
  linalg::random::Rng rng(9);
  const auto c = linalg::random::hermitian(3, rng);
  SdpProblem p = lambda_min_problem(c);
  AffineOperatorExpr e(3);
  e.add("X", LinearMap::identity(3)).add_constant(HermitianMatrix::identity(3) * 0.01);
  p.matrix_constraints.push_back({e, MatrixRelation::Psd, "shifted"});
  const auto text = p.to_json().dump();
  const auto q = SdpProblem::from_json(nlohmann::json::parse(text));
  const auto a = solve(p), b = solve(q);
  CHECK(a.status == b.status);
  CHECK(a.primal_value == b.primal_value);
  CHECK(a.dual_value == b.dual_value);
  CHECK(q.to_json() == p.to_json());
}

TEST_CASE("malformed json is rejected") {
  nlohmann::json j = {{"schema", "relent/sdp-problem-v1"}, {"blocks", nlohmann::json::array()},
                      {"objective", {{"terms", nlohmann::json::array()}}}, {"bogus", 1}};
  CHECK_THROWS_AS(SdpProblem::from_json(j), ConfigError);
  j.erase("bogus");
  j["schema"] = "other";
  CHECK_THROWS_AS(SdpProblem::from_json(j), ConfigError);
}

TEST_CASE("validation rejects dangling references") {
  SdpProblem p;
  p.add_block({"X", 2, BlockKind::Psd, 1.0});
  p.objective.add("Y", HermitianMatrix::identity(2));
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_THROWS_AS(p.add_block({"X", 2, BlockKind::Psd, 1.0}), ValidationError);
}

TEST_CASE("dense matrix constraints leave lambda_min unchanged") {
  linalg::random::Rng rng(5);
  const auto c = linalg::random::hermitian(5, rng);
  auto p = lambda_min_problem(c);
  const CMatrix k = linalg::random::ginibre(8, 5, rng);
  AffineOperatorExpr e(8);
  e.add("X", LinearMap::kraus({k}));
  e.add_constant(HermitianMatrix::identity(8) * 0.1);
  p.matrix_constraints.push_back({e, MatrixRelation::Psd, "K X K^dag + I/10 >= 0"});
  const auto sol = solve(p);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.iterations <= 12);
  CHECK(sol.primal_value == doctest::Approx(linalg::eigh(c).values[0]).epsilon(1e-7));
  REQUIRE(sol.certified_lower.has_value());
  CHECK(*sol.certified_lower <= linalg::eigh(c).values[0] + 1e-12);
}
