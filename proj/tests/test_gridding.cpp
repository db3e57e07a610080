#include <cmath>
#include <numbers>

#include "doctest.h"
#include "relent/gridding.hpp"
#include "relent/linalg.hpp"

using namespace relent;
using namespace relent::grid;

TEST_CASE("uniform grids") {
  const auto g = uniform_grid(1.0, 2.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g.points()[1] == doctest::Approx(1.5));
  const auto f = uniform_grid(0.0, 2.0, 5, 1e-3);
  CHECK(f.first() == doctest::Approx(1e-3));
  const double delta = (2.0 - 1e-3) / 4.0;
  for (int k = 1; k < f.size(); ++k) CHECK(f.points()[k] - f.points()[k - 1] == doctest::Approx(delta));
  CHECK(f.points().back() == 2.0);
  CHECK_THROWS_AS(uniform_grid(2.0, 1.0, 3), ValidationError);
}

TEST_CASE("adaptive grids") {
  const auto g = adaptive_grid(1.0, 2.0, 0.01, 8.0);
  CHECK(g.points()[1] == doctest::Approx(1.0 + std::sqrt(0.08)));
  const auto h = adaptive_grid(0.1, 4.0, 1e-3, 8.0);
  CHECK(h.size() <= 92);
  for (int k = 1; k < h.size(); ++k) CHECK(h.points()[k] > h.points()[k - 1]);
  CHECK(h.points().back() == 4.0);
  CHECK(adaptive_grid(0.0, 2.0, 1e-2).first() == doctest::Approx(mu_floor(1e-2)));
}

TEST_CASE("grid invariants") {
  CHECK(Grid({1.0, 1.0 + 1e-14, 2.0}, 1.0, 2.0).size() == 2);
  CHECK_THROWS_AS(Grid({0.5, 2.0}, 1.0, 2.0), ValidationError);
  CHECK(Grid::degenerate(1.0).is_degenerate());
  const auto a = uniform_grid(1.0, 3.0, 3), b = uniform_grid(1.0, 3.0, 5);
  const auto m = a.merged(b);
  CHECK(m.contains_all(a));
  CHECK(m.contains_all(b));
  CHECK(m.size() == 5);
}

TEST_CASE("lower coefficients") {
  const auto c = lower_coefficients(Grid({1.0, 2.0}, 1.0, 2.0));
  REQUIRE(c.alpha.size() == 1);
  CHECK(c.alpha[0] == doctest::Approx(-std::log(2.0)));
  CHECK(c.beta[0] == doctest::Approx(1.0));
  const auto e = lower_coefficients(Grid({1.0, std::numbers::e}, 1.0, std::numbers::e));
  CHECK(e.alpha[0] == doctest::Approx(-1.0));
  CHECK(e.beta[0] == doctest::Approx(std::numbers::e - 1.0));
  const auto g = adaptive_grid(0.3, 5.0, 1e-2);
  const auto s = lower_coefficients(g);
  double sum = 0.0;
  for (double b : s.beta) sum += b;
  CHECK(sum == doctest::Approx(5.0 - g.first()));
}

TEST_CASE("upper coefficients") {
  const auto c = upper_coefficients(Grid({1.0, 2.0}, 1.0, 2.0));
  REQUIRE(c.weights.size() == 2);
  CHECK(c.weights[0] == doctest::Approx(2.0 * std::log(2.0) - 1.0));
  CHECK(c.weights[1] == doctest::Approx(1.0 - std::log(2.0)));
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(c.gamma[k] == -c.weights[k]);
    CHECK(c.delta[k] == doctest::Approx(c.weights[k] * (k + 1.0)));
  }

  linalg::random::Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double mu = u(rng) < 0.2 ? 0.0 : u(rng);
    const double lambda = mu + 0.01 + 5.0 * u(rng);
    std::vector<double> pts{std::max(mu, 1e-3), lambda};
    const int extra = static_cast<int>(u(rng) * 10);
    for (int k = 0; k < extra; ++k) pts.push_back(pts[0] + (lambda - pts[0]) * u(rng));
    const auto w = upper_coefficients(Grid(pts, mu, lambda)).weights;
    for (double x : w) CHECK(x >= 0.0);
  }

  // rho = sigma with (mu, lambda) = (1, 1): g(1) = 0 and the constant vanishes.
  const auto d = upper_coefficients(Grid::degenerate(1.0));
  double v = std::log(1.0) + 1.0 - 1.0;
  for (double w : d.weights) v += w * 0.0;
  CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("worst case gap and point predictions") {
  const auto g = uniform_grid(0.5, 1.5, 11);
  REQUIRE(worst_case_gap(g, 4, 0.5).has_value());
  // 2 * 0.1^2 * 4 / 0.5
  CHECK(*worst_case_gap(g, 4, 0.5) == doctest::Approx(0.16));
  CHECK(*worst_case_gap(uniform_grid(0.5, 1.5, 11), 4, 1.0) == doctest::Approx(0.08));
  const auto h = uniform_grid(0.5, 1.5, 21);
  CHECK(*worst_case_gap(h, 4, 0.5) == doctest::Approx(0.04));
  CHECK_FALSE(worst_case_gap(uniform_grid(0.0, 1.0, 5), 4, 0.0).has_value());

  CHECK(predicted_points(1.0, 2.0, 1e-2, 4).uniform == 20);
  CHECK(predicted_points(1.0, 2.0, 1e-2, 4).adaptive == 20);
  CHECK(predicted_points(1.0, 2.0, 1e-2, 64).adaptive == 20);
}

TEST_CASE("refinement strategies") {
  RefineContext ctx;
  const auto h = refine(Grid({1.0, 2.0}, 1.0, 2.0), Strategy::UniformHalve, ctx);
  REQUIRE(h.size() == 3);
  CHECK(h.points()[1] == doctest::Approx(1.5));

  RefineContext a{1e-2, 8.0, std::nullopt};
  const auto g0 = adaptive_grid(0.2, 4.0, 1e-2);
  const auto g1 = refine(g0, Strategy::AdaptiveTighten, a);
  CHECK(a.eps == doctest::Approx(2.5e-3));
  const double ratio = static_cast<double>(g1.size()) / g0.size();
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);

  const auto forty = uniform_grid(0.5, 4.0, 40);
  RefineContext u{1.0, 8.0, 17};
  const auto anchored = refine(forty, Strategy::UpperAnchor, u);
  int retained = 0;
  for (double p : forty.points())
    for (double q : anchored.points())
      if (p == q && p != forty.first() && p != forty.points().back()) ++retained;
  CHECK(retained <= 3);
  CHECK(anchored.points().back() == 4.0);

  CHECK(parse_strategy("upper-anchor") == Strategy::UpperAnchor);
  CHECK(to_string(parse_strategy(to_string(Strategy::UniformHalve))) == "uniform-halve");
  CHECK_THROWS_AS(parse_strategy("bogus"), ValidationError);
}
