// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "oracles.hpp"
#include "relent/bounds.hpp"
#include "relent/commands.hpp"
#include "relent/divergence.hpp"
#include "relent/gridding.hpp"
#include "relent/instances.hpp"

using namespace relent;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path work_dir() {
  const fs::path d = fs::temp_directory_path() / ("relent_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

struct Row {
  double x, y, err;
};

std::vector<Row> read_rows(const fs::path& file) {
  std::ifstream in(file);
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Row r{};
    ss >> r.x >> r.y >> r.err;
    rows.push_back(r);
  }
  return rows;
}

std::string read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes `cfg` next to `dir` and runs `command` with outputs in `dir`.
commands::ExitCode run_command(const std::string& command, const json& cfg, const fs::path& dir,
                               std::optional<std::uint64_t> seed = std::nullopt) {
  fs::create_directories(dir);
  const fs::path path = dir / "config.json";
  std::ofstream(path) << cfg.dump(2);
  commands::RunOptions o;
  o.config_path = path.string();
  o.out_dir = dir.string();
  o.seed = seed;
  o.log_level = commands::LogLevel::Warn;
  std::ostringstream out;
  std::ostringstream log;
  const auto code = commands::run(command, o, out, log);
  std::fputs(log.str().c_str(), stderr);
  return code;
}

divergence::StatePair random_pair(int d, linalg::random::Rng& rng, bool deficient) {
  return divergence::StatePair(linalg::random::density(d, rng, deficient ? d - 1 : -1),
                               linalg::random::density(d, rng));
}

// --- criteria -----------------------------------------------------------------

Outcome sandwich_and_worst_case(bool& worst_case_ok, std::string& worst_case_detail) {
  const auto t0 = Clock::now();
  linalg::random::Rng rng(101);
  long checks = 0, violations = 0, wc_checks = 0, wc_violations = 0;
  double worst = 0.0, wc_ratio = 0.0;
  for (int d : {2, 3, 4, 6}) {
    for (int i = 0; i < 200; ++i) {
      const auto pair = random_pair(d, rng, i % 4 == 3);
      const double exact = oracle::relative_entropy(pair.rho.matrix(), pair.sigma.matrix());
      const auto sc = divergence::sandwich_constants(pair);
      std::vector<grid::Grid> grids;
      for (double eps : {1e-1, 1e-2, 1e-3}) grids.push_back(grid::adaptive_grid(sc.mu, sc.lambda, eps));
      for (int r : {3, 9, 33}) grids.push_back(grid::uniform_grid(sc.mu, sc.lambda, r));
      for (std::size_t g = 0; g < grids.size(); ++g) {
        const double lo = divergence::eta_lower_fixed(pair, grids[g]);
        const double up = divergence::upper_fixed(pair, grids[g]);
        const double v = std::max(lo - exact, exact - up);
        worst = std::max(worst, v);
        ++checks;
        if (v > 1e-8) ++violations;
        if (g >= 3 && sc.mu > 0.0) {
          const int r = grids[g].size();
          const double delta = (sc.lambda - sc.mu) / (r - 1);
          const double bound = 2.0 * delta * delta * d / sc.mu;
          ++wc_checks;
          wc_ratio = std::max(wc_ratio, (up - lo) / bound);
          if (up - lo > bound + 1e-12) ++wc_violations;
        }
      }
    }
  }
  const double t = seconds_since(t0);
  worst_case_ok = wc_violations == 0 && wc_checks > 0;
  worst_case_detail = fmt("%ld uniform-grid checks with mu > 0, %ld violations, max gap/bound %.3f", wc_checks,
                          wc_violations, wc_ratio);
  return {violations == 0 && t < 120.0,
          fmt("%ld grid checks over 800 pairs, %ld violations, max excess %.2e, %.1fs", checks, violations, worst, t)};
}

Outcome integral_representation() {
  const auto t0 = Clock::now();
  linalg::random::Rng rng(202);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto pair = random_pair(3, rng, false);
    const double exact = oracle::relative_entropy(pair.rho.matrix(), pair.sigma.matrix());
    worst = std::max(worst, std::abs(divergence::integral_check(pair, 1e-7) - exact));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 60.0, fmt("max deviation %.2e over 100 pairs, %.1fs", worst, t)};
}

Outcome quadratic_convergence() {
  const auto t0 = Clock::now();
  linalg::random::Rng rng(303);
  const auto pair = random_pair(4, rng, false);
  const auto sc = divergence::sandwich_constants(pair);
  std::vector<double> x, y;
  for (double eps : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) {
    const auto g = grid::adaptive_grid(sc.mu, sc.lambda, eps, 8.0);
    x.push_back(1.0 / (static_cast<double>(g.size()) * g.size()));
    y.push_back(divergence::upper_fixed(pair, g) - divergence::eta_lower_fixed(pair, g));
  }
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += x[i] * y[i], sxx += x[i] * x[i], mean += y[i];
  mean /= static_cast<double>(y.size());
  const double c = sxy / sxx;
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    res += (y[i] - c * x[i]) * (y[i] - c * x[i]);
    tot += (y[i] - mean) * (y[i] - mean);
  }
  const double r2 = 1.0 - res / tot;
  bool adaptive_ok = true;
  std::string adaptive;
  for (double eps : {1e-2, 1e-3}) {
    const auto g = grid::adaptive_grid(sc.mu, sc.lambda, eps, 8.0);
    const double gap = divergence::upper_fixed(pair, g) - divergence::eta_lower_fixed(pair, g);
    const int limit = static_cast<int>(std::ceil(std::sqrt(2.0 * sc.lambda / eps))) + 2;
    adaptive_ok = adaptive_ok && gap <= eps && g.size() <= limit;
    adaptive += fmt("; eps %.0e: %d points (limit %d), gap %.2e", eps, g.size(), limit, gap);
  }
  const double t = seconds_since(t0);
  return {r2 >= 0.95 && adaptive_ok && t < 300.0,
          fmt("c %.3f (lambda %.3f), R2 %.4f", c, sc.lambda, r2) + adaptive + fmt(", %.1fs", t)};
}

Outcome full_sandwich() {
  const auto t0 = Clock::now();
  linalg::random::Rng rng(404);
  const auto problem = instances::witness_instance(3, 3, rng, 1e-2);
  const auto rep = bounds::refine_until(problem, 1e-3, grid::Strategy::UpperAnchor, 20);
  bool ordered = true;
  for (const auto& it : rep.iterations) ordered = ordered && it.c_l <= it.c_u + 1e-9;
  const double t = seconds_since(t0);
  const bool ok = ordered && rep.status == bounds::RefinementStatus::GapMet && rep.final_gap() <= 1e-3 &&
                  rep.iterations.size() <= 20 && t < 600.0;
  return {ok, fmt("%s after %zu iterations, bracket [%.6f, %.6f], gap %.2e, %.1fs",
                  bounds::to_string(rep.status).c_str(), rep.iterations.size(), rep.best_lower, rep.best_upper,
                  rep.final_gap(), t)};
}

json qkd_config() {
  return {{"schema", "relent/v1"}, {"dim", 2},   {"alpha", {{"start", 0.0}, {"stop", 1.0}, {"count", 11}}},
          {"eps", 1e-3},           {"seed", 606}};
}

/// Solves lower and upper relaxations of one QKD instance; true when both
/// solves succeed and bracket each other.
bool qkd_smoke(int dim, std::optional<std::vector<double>> points, std::string& detail) {
  const auto t0 = Clock::now();
  const auto problem = instances::qkd_instance(instances::isotropic_qkd_setup(0.2, dim, 1e-2));
  std::vector<grid::Grid> grids = problem.grids();
  if (points) grids = {grid::Grid(*points, problem.terms[0].mu, problem.terms[0].lambda)};
  const auto lo = bounds::solve_lower(problem, grids);
  const auto up = bounds::solve_upper(problem, grids);
  auto good = [](sdp::SolveStatus s) {
    return s == sdp::SolveStatus::Optimal || s == sdp::SolveStatus::NearOptimal;
  };
  const bool ok = good(lo.status) && good(up.status) && std::isfinite(lo.value) && lo.value <= up.value;
  detail += fmt("; d=%d: [%.4f, %.4f] on %d points, %.0fs", dim, lo.value, up.value, grids[0].size(),
                seconds_since(t0));
  return ok;
}

Outcome qkd(const fs::path& dir) {
  const auto t0 = Clock::now();
  const auto code = run_command("qkd-sweep", qkd_config(), dir / "qkd_a");
  const auto rows = read_rows(dir / "qkd_a" / "qkd_sweep.dat");
  const double sweep_t = seconds_since(t0);
  bool ok = code == commands::ExitCode::Ok && rows.size() == 11;
  double anchor = rows.empty() ? -1.0 : rows.front().y;
  ok = ok && rows.front().x == 0.0 && anchor >= std::log(2.0) - 2e-3;
  const double tol = 2.0 * 1e-3;
  double worst_rise = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) worst_rise = std::max(worst_rise, rows[i].y - rows[i - 1].y);
  ok = ok && worst_rise <= tol && sweep_t < 900.0;
  std::string detail = fmt("alpha=0 lower %.6f (need >= %.6f), max rise %.2e, sweep %.1fs", anchor,
                           std::log(2.0) - 2e-3, worst_rise, sweep_t);
  const bool s4 = qkd_smoke(4, std::nullopt, detail);
  const bool s8 = qkd_smoke(8, std::vector<double>{1e-2, std::sqrt(64.0)}, detail);
  return {ok && s4 && s8, detail};
}

Outcome capacity(const fs::path& dir) {
  const auto t0 = Clock::now();
  const std::vector<double> ps = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
  json cfg = {{"schema", "relent/v1"}, {"units", "bits"}, {"p", ps}, {"eps", 1e-2}, {"target_eps", 5e-3}};
  const auto code = run_command("capacity-sweep", cfg, dir / "capacity");
  const auto rows = read_rows(dir / "capacity" / "capacity_sweep.dat");
  bool ok = code == commands::ExitCode::Ok && rows.size() == ps.size();
  double worst = 0.0;
  for (const auto& r : rows) {
    const double want = oracle::ad_capacity(r.x) / std::numbers::ln2;
    worst = std::max(worst, std::abs(r.y - want));
  }
  ok = ok && worst <= 5e-3 && std::abs(rows.front().y - 2.0) <= 5e-3 && std::abs(rows.back().y) <= 5e-3;
  const double t = seconds_since(t0);
  return {ok && t < 600.0, fmt("p=0 %.5f bits, p=1 %.5f bits, max deviation from oracle %.2e bits, %.1fs",
                               rows.empty() ? NAN : rows.front().y, rows.empty() ? NAN : rows.back().y, worst, t)};
}

Outcome ree(const fs::path& dir) {
  const auto t0 = Clock::now();
  json zero = {{"schema", "relent/v1"},
               {"problem", {{"kind", "ree"}, {"alpha", 1.0}}},
               {"target_eps", 1e-5},
               {"budget", 12}};
  const auto zcode = run_command("solve", zero, dir / "ree_zero");
  std::ifstream zin(dir / "ree_zero" / "solve.json");
  const json z = json::parse(zin);
  const double zl = z["best_lower"], zu = z["best_upper"];
  bool ok = zcode == commands::ExitCode::Ok && zl >= -1e-5 && zu <= 1e-5 && zl <= zu;

  const std::vector<double> alphas = {0.01, 0.2, 0.35, 0.5, 0.6, 0.7, 0.8, 0.9};
  json cfg = {{"schema", "relent/v1"}, {"alpha", alphas}, {"eps", 1e-2}, {"target_eps", 2e-3}};
  const auto code = run_command("ree-sweep", cfg, dir / "ree");
  const auto rows = read_rows(dir / "ree" / "ree_sweep.dat");
  ok = ok && code == commands::ExitCode::Ok && rows.size() == alphas.size();
  double worst = 0.0, past = 0.0;
  for (const auto& r : rows) {
    const double want = oracle::ree_isotropic(r.x);
    worst = std::max(worst, std::abs(r.y - want));
    if (r.x > 2.0 / 3.0) past = std::max(past, std::abs(r.y));
  }
  ok = ok && worst <= 5e-3 && past <= 5e-3;
  const double t = seconds_since(t0);
  return {ok && t < 600.0, fmt("I/4 in [%.2e, %.2e]; sweep max deviation %.2e; past threshold max |y| %.2e; %.1fs",
                               zl, zu, worst, past, t)};
}

Outcome lemma_properties() {
  const auto t0 = Clock::now();
  linalg::random::Rng rng(909);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long triples = 0, violations = 0;
  double excess = 0.0;
  auto record = [&](double v) {
    excess = std::max(excess, v);
    if (v > 1e-9) ++violations;
  };
  const linalg::Dims shapes[] = {{2, 1}, {2, 2}, {2, 3}};
  for (int i = 0; triples < 10000; ++i) {
    const linalg::Dims dims = shapes[i % 3];
    const int d = dims.total();
    const auto pair = random_pair(d, rng, i % 5 == 4);
    const auto sc = divergence::sandwich_constants(pair);
    const bool use_trace = (i / 3) % 2 == 0 && dims.b > 1;
    divergence::StatePair mapped = pair;
    if (use_trace) {
      mapped = divergence::StatePair(
          linalg::DensityMatrix(linalg::partial_trace(pair.rho, dims, linalg::Subsystem::A)),
          linalg::DensityMatrix(linalg::partial_trace(pair.sigma, dims, linalg::Subsystem::A)));
    } else {
      const auto pinch = linalg::KrausChannel::pinching(d);
      mapped = divergence::StatePair(linalg::apply_channel(pinch, pair.rho), linalg::apply_channel(pinch, pair.sigma));
    }
    for (int j = 0; j < 10; ++j, ++triples) {
      const double span = sc.lambda + 2.0;
      double s1 = -0.5 + unit(rng) * span, s2 = -0.5 + unit(rng) * span;
      if (s1 > s2) std::swap(s1, s2);
      const double g1 = divergence::g_value(pair, s1), g2 = divergence::g_value(pair, s2);
      record(divergence::g_value(pair, 0.5 * (s1 + s2)) - 0.5 * (g1 + g2));
      record(g1 - g2);
      const double tail = sc.lambda + 3.0 * unit(rng);
      record(std::abs(divergence::g_value(pair, tail) - (tail - 1.0)));
      record(std::max(s1 - 1.0, 0.0) - g1);
      record(g1 - std::max(s1, 0.0));
      record(divergence::g_value(mapped, s1) - g1);
    }
  }
  const double t = seconds_since(t0);
  return {violations == 0 && t < 120.0,
          fmt("%ld triples, %ld violations, max excess %.2e, %.1fs", triples, violations, excess, t)};
}

Outcome determinism(const fs::path& dir) {
  const auto code = run_command("qkd-sweep", qkd_config(), dir / "qkd_b");
  bool same = code == commands::ExitCode::Ok;
  for (const char* f : {"qkd_sweep.dat", "qkd_sweep.json"}) {
    const std::string a = read_bytes(dir / "qkd_a" / f), b = read_bytes(dir / "qkd_b" / f);
    same = same && !a.empty() && a == b;
  }
  return {same, same ? "qkd_sweep.dat and qkd_sweep.json identical across runs" : "outputs differ"};
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  bool wc_ok = false;
  std::string wc_detail;
  report(1, "oracle sandwich", guarded([&] { return sandwich_and_worst_case(wc_ok, wc_detail); }));
  report(2, "integral representation", guarded(integral_representation));
  report(3, "quadratic convergence", guarded(quadratic_convergence));
  report(4, "worst-case gap bound", Outcome{wc_ok, wc_detail});
  report(5, "full SDP sandwich", guarded(full_sandwich));
  report(6, "QKD", guarded([&] { return qkd(dir); }));
  report(7, "capacity", guarded([&] { return capacity(dir); }));
  report(8, "relative entropy of entanglement", guarded([&] { return ree(dir); }));
  report(9, "integrand properties", guarded(lemma_properties));
  report(10, "determinism", guarded([&] { return determinism(dir); }));

  std::error_code ec;
  fs::remove_all(dir, ec);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
