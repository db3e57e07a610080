#include "relent/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>

#include "config.hpp"
#include "relent/bounds.hpp"
#include "relent/divergence.hpp"
#include "relent/instances.hpp"

namespace relent::commands {

namespace fs = std::filesystem;
using config::json;
using config::Reader;

LogLevel parse_log_level(const char* value) {
  if (value == nullptr) return LogLevel::Warn;
  const std::string v(value);
  if (v == "off" || v == "0") return LogLevel::Off;
  if (v == "error") return LogLevel::Error;
  if (v == "warn" || v == "warning") return LogLevel::Warn;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

namespace {

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
    default: return "off";
  }
}

/// Line logger writing to a private buffer, flushed by the owner.
class Log {
 public:
  explicit Log(LogLevel level) : level_(level) {}
  void write(LogLevel l, const std::string& msg) {
    if (l == LogLevel::Off || static_cast<int>(l) > static_cast<int>(level_)) return;
    buf_ << "[relent " << level_name(l) << "] " << msg << '\n';
  }
  void error(const std::string& m) { write(LogLevel::Error, m); }
  void warn(const std::string& m) { write(LogLevel::Warn, m); }
  void info(const std::string& m) { write(LogLevel::Info, m); }
  void debug(const std::string& m) { write(LogLevel::Debug, m); }
  LogLevel level() const { return level_; }
  std::string take() {
    std::string s = buf_.str();
    buf_.str({});
    return s;
  }

 private:
  LogLevel level_;
  std::ostringstream buf_;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

struct Units {
  std::string name = "nats";
  double scale = 1.0;
  double operator()(double nats) const { return nats * scale; }
};

Units parse_units(const std::string& name, const std::string& field) {
  if (name == "nats") return {"nats", 1.0};
  if (name == "bits") return {"bits", 1.0 / std::numbers::ln2};
  throw ConfigError(field, "units must be \"nats\" or \"bits\"");
}

/// Settings shared by every command.
struct Common {
  Units units;
  std::uint64_t seed = 1;
  sdp::Settings solver;
};

Common read_common(Reader& r, const RunOptions& opts) {
  Common c;
  const std::string units = r.get_or<std::string>("units", "nats");
  c.units = parse_units(opts.units.value_or(units), opts.units ? "--units" : "units");
  c.seed = opts.seed.value_or(r.get_or<std::uint64_t>("seed", 1));
  if (r.has("solver")) {
    Reader s = r.child("solver");
    c.solver.eps_gap = s.positive("eps_gap", c.solver.eps_gap);
    c.solver.eps_feas = s.positive("eps_feas", c.solver.eps_feas);
    c.solver.max_iters = s.get_or<int>("max_iters", c.solver.max_iters);
    if (c.solver.max_iters < 1) throw ConfigError("solver.max_iters", "must be >= 1");
    s.finish();
  } else {
    r.get_or<json>("solver", {});
  }
  return c;
}

/// Grid accuracy and refinement controls.
struct Refinement {
  double eps = 1e-2;
  double target_eps = 1e-2;
  grid::Strategy strategy = grid::Strategy::UpperAnchor;
  int budget = 8;
  double factor = 8.0;
};

Refinement read_refinement(Reader& r, double default_eps) {
  Refinement f;
  f.eps = r.positive("eps", default_eps);
  f.target_eps = r.positive("target_eps", f.eps);
  const std::string strategy = r.get_or<std::string>("strategy", "upper-anchor");
  try {
    f.strategy = grid::parse_strategy(strategy);
  } catch (const ValidationError& e) {
    throw ConfigError(r.field("strategy"), e.what());
  }
  f.budget = r.get_or<int>("budget", f.budget);
  if (f.budget < 1) throw ConfigError(r.field("budget"), "must be >= 1");
  f.factor = r.positive("factor", f.factor);
  return f;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

bool bounds_usable(const bounds::RefinementReport& r) {
  return (r.status == bounds::RefinementStatus::GapMet || r.status == bounds::RefinementStatus::BudgetExhausted) &&
         std::isfinite(r.best_lower) && std::isfinite(r.best_upper);
}

bounds::RefinementReport refine(const bounds::RelEntProblem& p, const Refinement& f, const Common& c) {
  bounds::RefineOptions o;
  o.factor = f.factor;
  o.settings = c.solver;
  return bounds::refine_until(p, f.target_eps, f.strategy, f.budget, o);
}

// --- sweeps -------------------------------------------------------------------

struct PointResult {
  double x = 0.0;
  bool ok = false;
  double y = 0.0;
  double error = 0.0;
  json record;
  std::string log;
};

/// Evaluates `point` for every x on `jobs` threads; results keep input order.
std::vector<PointResult> run_points(const std::vector<double>& xs, int jobs, LogLevel level,
                                    const std::function<PointResult(double, Log&)>& point) {
  std::vector<PointResult> results(xs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < xs.size(); i = next++) {
      Log log(level);
      try {
        results[i] = point(xs[i], log);
      } catch (const std::exception& e) {
        results[i] = PointResult{};
        results[i].record = {{"error", e.what()}};
        log.error("point " + num(xs[i]) + " failed: " + e.what());
      }
      results[i].x = xs[i];
      results[i].log = log.take();
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(xs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

struct SweepSpec {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::string error_label;
};

ExitCode finish_sweep(const SweepSpec& spec, std::vector<PointResult> results, const Units& units, json meta,
                      const RunOptions& opts, std::ostream& out, std::ostream& log) {
  for (const auto& r : results) log << r.log;
  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  std::string dat = "# " + spec.x_label + " " + spec.y_label + " " + spec.error_label + "\n";
  dat += "# units " + units.name + "\n";
  json points = json::array();
  int failed = 0;
  for (const auto& r : results) {
    json rec = r.record;
    rec["x"] = r.x;
    rec["ok"] = r.ok;
    points.push_back(rec);
    if (!r.ok) {
      ++failed;
      dat += "# failed " + num(r.x) + "\n";
      continue;
    }
    dat += num(r.x) + " " + num(r.y) + " " + num(r.error) + "\n";
  }
  meta["points"] = points;
  meta["units"] = units.name;
  const fs::path dir(opts.out_dir);
  write_file(dir / (spec.name + ".dat"), dat);
  write_file(dir / (spec.name + ".json"), meta.dump(2) + "\n");
  out << dat;
  if (failed > 0) {
    log << "[relent error] " << failed << " of " << results.size() << " points failed\n";
    return ExitCode::PartialFailure;
  }
  return ExitCode::Ok;
}

ExitCode qkd_sweep(Reader& r, const RunOptions& opts, std::ostream& out, std::ostream& log) {
  const Common c = read_common(r, opts);
  const Refinement f = read_refinement(r, 1e-2);
  const int dim = r.get_or<int>("dim", 2);
  if (dim < 2) throw ConfigError("dim", "must be >= 2");
  const double lambda = r.get_or<double>("lambda", 0.0);
  if (lambda < 0.0) throw ConfigError("lambda", "must be nonnegative");
  const std::string stats = r.get_or<std::string>("statistics", "full");
  if (stats != "full" && stats != "matching") throw ConfigError("statistics", "must be \"full\" or \"matching\"");
  const auto alphas = r.values("alpha");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha", "values must lie in [0, 1]");
  r.finish();

  auto point = [&](double alpha, Log& plog) {
    auto setup = instances::isotropic_qkd_setup(alpha, dim, f.eps);
    setup.lambda = lambda;
    setup.matching_only = stats == "matching";
    const auto rep = refine(instances::qkd_instance(setup), f, c);
    PointResult p;
    p.ok = bounds_usable(rep);
    p.y = c.units(rep.best_lower);
    p.error = c.units(rep.final_gap());
    p.record = rep.to_json();
    plog.info("alpha " + num(alpha) + ": " + bounds::to_string(rep.status) + ", lower " + num(rep.best_lower) +
              " nats, gap " + num(rep.final_gap()));
    if (!p.ok) plog.error("alpha " + num(alpha) + ": " + bounds::to_string(rep.status));
    return p;
  };
  const auto results = run_points(alphas, opts.jobs, opts.log_level, point);
  json meta = {{"command", "qkd-sweep"},
               {"dim", dim},
               {"lambda", instances::qkd_lambda([&] {
                  instances::QkdSetup s;
                  s.dim_a = s.dim_b = dim;
                  s.lambda = lambda;
                  return s;
                }())},
               {"lambda_source", lambda > 0.0 ? "config" : "default sqrt(d_A d_B)"},
               {"statistics", stats},
               {"seed", c.seed}};
  return finish_sweep({"qkd_sweep", "alpha", "key_rate_lower_bound", "gap"}, results, c.units, meta, opts, out,
                      log);
}

ExitCode capacity_sweep(Reader& r, const RunOptions& opts, std::ostream& out, std::ostream& log) {
  const Common c = read_common(r, opts);
  const Refinement f = read_refinement(r, 1e-2);
  const auto ps = r.values("p");
  for (double p : ps)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p", "values must lie in [0, 1]");
  r.finish();

  auto point = [&](double p, Log& plog) {
    const auto rep = refine(instances::amplitude_damping_instance(p, f.eps), f, c);
    PointResult res;
    res.ok = bounds_usable(rep);
    const double hi = instances::capacity_from_minimum(rep.best_lower);
    const double lo = instances::capacity_from_minimum(rep.best_upper);
    res.y = c.units(0.5 * (lo + hi));
    res.error = c.units(0.5 * (hi - lo));
    res.record = rep.to_json();
    res.record["capacity_lower"] = lo;
    res.record["capacity_upper"] = hi;
    plog.info("p " + num(p) + ": capacity in [" + num(lo) + ", " + num(hi) + "] nats");
    if (!res.ok) plog.error("p " + num(p) + ": " + bounds::to_string(rep.status));
    return res;
  };
  const auto results = run_points(ps, opts.jobs, opts.log_level, point);
  json meta = {{"command", "capacity-sweep"}, {"channel", "amplitude-damping"}, {"seed", c.seed}};
  return finish_sweep({"capacity_sweep", "p", "capacity", "half_gap"}, results, c.units, meta, opts, out, log);
}

ExitCode ree_sweep(Reader& r, const RunOptions& opts, std::ostream& out, std::ostream& log) {
  const Common c = read_common(r, opts);
  const Refinement f = read_refinement(r, 1e-2);
  const double cap = r.positive("lambda_cap", 50.0);
  const auto alphas = r.values("alpha");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha", "values must lie in [0, 1]");
  r.finish();

  auto point = [&](double alpha, Log& plog) {
    const auto problem = instances::ree_instance(instances::isotropic(alpha, 2), cap, f.eps);
    const auto rep = refine(problem, f, c);
    PointResult res;
    res.ok = bounds_usable(rep);
    res.y = c.units(0.5 * (rep.best_lower + rep.best_upper));
    res.error = c.units(0.5 * rep.final_gap());
    res.record = rep.to_json();
    const bool interior = res.ok && bounds::validate_interior(problem, rep.last_lower);
    res.record["interior"] = interior;
    if (res.ok && !interior) plog.warn("alpha " + num(alpha) + ": optimizer touches lambda_cap");
    if (!res.ok) plog.error("alpha " + num(alpha) + ": " + bounds::to_string(rep.status));
    plog.info("alpha " + num(alpha) + ": [" + num(rep.best_lower) + ", " + num(rep.best_upper) + "] nats");
    return res;
  };
  const auto results = run_points(alphas, opts.jobs, opts.log_level, point);
  json meta = {{"command", "ree-sweep"}, {"state", "isotropic two-qubit"}, {"lambda_cap", cap}, {"seed", c.seed}};
  return finish_sweep({"ree_sweep", "alpha", "ree", "half_gap"}, results, c.units, meta, opts, out, log);
}

// --- fixed pair ---------------------------------------------------------------

divergence::StatePair matrices_pair(Reader& r) {
  return divergence::StatePair(linalg::DensityMatrix(r.matrix("rho")), linalg::DensityMatrix(r.matrix("sigma")));
}

divergence::StatePair read_pair(Reader r, const Common& c, const fs::path& config_dir) {
  const std::string source = r.get<std::string>("source");
  linalg::random::Rng rng(c.seed);
  try {
    if (source == "random") {
      const int dim = r.get<int>("dim");
      if (dim < 1) throw ConfigError(r.field("dim"), "must be >= 1");
      const int rank_rho = r.get_or<int>("rank_rho", dim);
      const int rank_sigma = r.get_or<int>("rank_sigma", dim);
      r.finish();
      auto rho = linalg::random::density(dim, rng, rank_rho);
      auto sigma = linalg::random::density(dim, rng, rank_sigma);
      return {rho, sigma};
    }
    if (source == "identical") {
      const int dim = r.get<int>("dim");
      if (dim < 1) throw ConfigError(r.field("dim"), "must be >= 1");
      r.finish();
      const auto s = linalg::random::density(dim, rng);
      return {s, s};
    }
    if (source == "inline") {
      auto pair = matrices_pair(r);
      r.finish();
      return pair;
    }
    if (source == "file") {
      fs::path path = r.get<std::string>("path");
      r.finish();
      if (path.is_relative()) path = config_dir / path;
      std::ifstream in(path);
      if (!in) throw ConfigError(r.field("path"), "cannot open " + path.string());
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(r.field("path"), std::string("malformed JSON: ") + e.what());
      }
      Reader f(doc, path.filename().string());
      auto pair = matrices_pair(f);
      f.finish();
      return pair;
    }
  } catch (const ValidationError& e) {
    throw ConfigError(r.path(), e.what());
  }
  throw ConfigError(r.field("source"), "must be one of random, identical, inline, file");
}

struct Fit {
  double c = 0.0;
  double r2 = 0.0;
};

/// Least squares y = c / n^2 through the origin; R^2 against the mean of y.
Fit fit_inverse_square(const std::vector<double>& n, const std::vector<double>& y) {
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = 1.0 / (n[i] * n[i]);
    sxy += x * y[i];
    sxx += x * x;
    mean += y[i];
  }
  mean /= static_cast<double>(y.size());
  Fit f;
  f.c = sxy / sxx;
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double e = y[i] - f.c / (n[i] * n[i]);
    res += e * e;
    tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r2 = tot > 0.0 ? 1.0 - res / tot : 0.0;
  return f;
}

ExitCode fixed_pair(Reader& r, const RunOptions& opts, std::ostream& out, std::ostream& log) {
  const Common c = read_common(r, opts);
  const fs::path config_dir = fs::path(opts.config_path).parent_path();
  const auto pair = read_pair(r.child("pair"), c, config_dir);
  Reader s = r.child("schedule");
  const std::string strategy = s.get<std::string>("strategy");
  std::vector<double> eps_list;
  std::vector<int> sizes;
  double factor = 8.0;
  if (strategy == "adaptive") {
    eps_list = s.values("eps");
    for (double e : eps_list)
      if (!(e > 0.0)) throw ConfigError(s.field("eps"), "values must be positive");
    factor = s.positive("factor", factor);
  } else if (strategy == "uniform") {
    for (double v : s.values("points")) {
      if (v < 2 || v != std::floor(v)) throw ConfigError(s.field("points"), "point counts must be integers >= 2");
      sizes.push_back(static_cast<int>(v));
    }
  } else {
    throw ConfigError(s.field("strategy"), "must be \"adaptive\" or \"uniform\"");
  }
  s.finish();
  r.finish();

  const auto sc = divergence::sandwich_constants(pair);
  if (!sc.support_ok) throw ConfigError("pair", "rho is not supported on the support of sigma");
  const double exact = divergence::relative_entropy_exact(pair).nats();

  std::vector<grid::Grid> grids;
  const bool degenerate = sc.lambda - sc.mu <= 1e-12;
  if (degenerate) {
    grids.push_back(grid::Grid::degenerate(sc.lambda));
  } else if (!eps_list.empty()) {
    for (double e : eps_list) grids.push_back(grid::adaptive_grid(sc.mu, sc.lambda, e, factor));
  } else {
    for (int n : sizes) grids.push_back(grid::uniform_grid(sc.mu, sc.lambda, n));
  }
  std::stable_sort(grids.begin(), grids.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });

  std::string dat = "# n error_lower error_upper\n# units " + c.units.name + "\n";
  std::vector<double> ns, gaps;
  json rows = json::array();
  for (const auto& g : grids) {
    const double lo = divergence::eta_lower_fixed(pair, g);
    const double up = divergence::upper_fixed(pair, g);
    const double el = exact - lo, eu = up - exact;
    dat += std::to_string(g.size()) + " " + num(c.units(el)) + " " + num(c.units(eu)) + "\n";
    rows.push_back({{"n", g.size()}, {"lower", lo}, {"upper", up}});
    ns.push_back(g.size());
    gaps.push_back(c.units(el + eu));
  }
  json meta = {{"command", "fixed-pair"}, {"exact", exact},       {"mu", sc.mu},        {"lambda", sc.lambda},
               {"rows", rows},            {"units", c.units.name}, {"seed", c.seed}};
  bool distinct = false;
  for (double n : ns) distinct = distinct || n != ns.front();
  const double largest = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
  std::string summary;
  if (degenerate || largest <= 1e-12) {
    summary = "# regression skipped: errors vanish (rho = sigma or trivial sandwich)\n";
    meta["fit"] = nullptr;
  } else if (!distinct) {
    summary = "# regression skipped: fewer than two distinct grid sizes\n";
    meta["fit"] = nullptr;
  } else {
    const Fit fit = fit_inverse_square(ns, gaps);
    summary = "# fit gap = c / n^2: c " + num(fit.c) + " R2 " + num(fit.r2) + "\n";
    meta["fit"] = {{"c", fit.c}, {"r2", fit.r2}};
  }
  dat += summary;
  const fs::path dir(opts.out_dir);
  write_file(dir / "fixed_pair.dat", dat);
  write_file(dir / "fixed_pair.json", meta.dump(2) + "\n");
  out << dat;
  log << std::flush;
  return ExitCode::Ok;
}

// --- solve --------------------------------------------------------------------

std::vector<sdp::ScalarConstraint> read_constraints(Reader& r) {
  std::vector<sdp::ScalarConstraint> out;
  int i = 0;
  for (auto& item : r.children("constraints")) {
    const auto m = item.matrix("observable");
    const double v = item.get<double>("value");
    item.finish();
    try {
      out.push_back(instances::expectation_constraint("rho", linalg::HermitianMatrix(m), v,
                                                      "constraint " + std::to_string(i++)));
    } catch (const ValidationError& e) {
      throw ConfigError(item.path(), e.what());
    }
  }
  return out;
}

linalg::Dims read_dims(Reader& r, linalg::Dims fallback) {
  if (!r.has("dims")) {
    r.get_or<json>("dims", {});
    return fallback;
  }
  const auto v = r.get<std::vector<int>>("dims");
  if (v.size() != 2 || v[0] < 1 || v[1] < 1) throw ConfigError(r.field("dims"), "expected two positive dimensions");
  return {v[0], v[1]};
}

struct Built {
  bounds::RelEntProblem problem;
  std::string kind;
  /// Maps the minimum (nats) to the reported quantity; identity for plain minima.
  std::function<double(double)> derived;
  std::string derived_name;
  bool decreasing = false;  // derived quantity decreases in the minimum
  json info = json::object();
};

Built build_problem(Reader p, const Common& c, const Refinement& f) {
  Built b;
  b.kind = p.get<std::string>("kind");
  linalg::random::Rng rng(c.seed);
  try {
    if (b.kind == "witness") {
      const int dim = p.get_or<int>("dim", 3);
      const int count = p.get_or<int>("witnesses", 3);
      p.finish();
      b.problem = instances::witness_instance(dim, count, rng, f.eps);
    } else if (b.kind == "two-free") {
      const int dim = p.get_or<int>("dim", 2);
      const double lambda = p.positive("lambda", 4.0);
      p.finish();
      if (dim < 1) throw ConfigError(p.field("dim"), "must be >= 1");
      b.problem.states = {{"rho", dim}, {"sigma", dim}};
      bounds::RelEntTerm t;
      t.rho = bounds::StateMap::free("rho");
      t.sigma = bounds::StateMap::free("sigma");
      t.mu = 0.0;
      t.lambda = lambda;
      t.eps = f.eps;
      t.grid = bounds::default_grid(0.0, lambda, f.eps);
      b.problem.terms.push_back(t);
    } else if (b.kind == "qkd") {
      instances::QkdSetup s;
      if (p.has("alpha")) {
        const int dim = p.get_or<int>("dim", 2);
        s = instances::isotropic_qkd_setup(p.get<double>("alpha"), dim, f.eps);
      } else {
        s.dim_a = p.get<int>("dim_a");
        s.dim_b = p.get<int>("dim_b");
        for (const auto& m : p.raw("alice_bases")) s.alice_bases.push_back(config::parse_matrix(m, p.field("alice_bases")));
        for (const auto& m : p.raw("bob_bases")) s.bob_bases.push_back(config::parse_matrix(m, p.field("bob_bases")));
        for (const auto& row : p.raw("tables")) {
          std::vector<linalg::RMatrix> out;
          if (!row.is_array()) throw ConfigError(p.field("tables"), "expected a list of lists of tables");
          for (const auto& t : row) out.push_back(config::parse_matrix(t, p.field("tables")).real());
          s.tables.push_back(out);
        }
        s.eps = f.eps;
      }
      s.lambda = p.get_or<double>("lambda", 0.0);
      const std::string stats = p.get_or<std::string>("statistics", "full");
      if (stats != "full" && stats != "matching") {
        throw ConfigError(p.field("statistics"), "must be \"full\" or \"matching\"");
      }
      s.matching_only = stats == "matching";
      p.finish();
      b.problem = instances::qkd_instance(s);
      b.info["lambda"] = instances::qkd_lambda(s);
      b.info["lambda_source"] = s.lambda > 0.0 ? "config" : "default sqrt(d_A d_B)";
    } else if (b.kind == "capacity") {
      std::optional<linalg::KrausChannel> ch;
      if (p.has("p")) {
        const double damping = p.get<double>("p");
        if (!(damping >= 0.0 && damping <= 1.0)) throw ConfigError(p.field("p"), "must lie in [0, 1]");
        ch = linalg::KrausChannel::amplitude_damping(damping);
      } else {
        std::vector<linalg::CMatrix> ops;
        for (const auto& m : p.raw("kraus")) ops.push_back(config::parse_matrix(m, p.field("kraus")));
        ch = linalg::KrausChannel(ops);
      }
      p.finish();
      const int d_out = ch->output_dim();
      b.problem = instances::channel_capacity_instance(*ch, f.eps);
      b.derived = [d_out](double m) { return instances::capacity_from_minimum(m, d_out); };
      b.derived_name = "capacity";
      b.decreasing = true;
    } else if (b.kind == "ree") {
      const linalg::Dims dims = read_dims(p, {2, 2});
      std::optional<linalg::DensityMatrix> rho;
      if (p.has("alpha")) {
        if (dims.a != dims.b) throw ConfigError(p.field("dims"), "isotropic states need equal dimensions");
        rho = instances::isotropic(p.get<double>("alpha"), dims.a);
      } else {
        rho = linalg::DensityMatrix(p.matrix("state"));
      }
      const double cap = p.positive("lambda_cap", 50.0);
      p.finish();
      b.problem = instances::ree_instance(*rho, cap, f.eps, dims);
    } else if (b.kind == "entropy") {
      const int dim = p.get<int>("dim");
      auto cons = read_constraints(p);
      p.finish();
      b.problem = instances::entropy_max_instance(dim, cons, f.eps);
      b.derived = [dim](double m) { return std::log(dim) - m; };
      b.derived_name = "entropy";
      b.decreasing = true;
    } else if (b.kind == "cond-entropy") {
      const linalg::Dims dims = read_dims(p, {2, 2});
      auto cons = read_constraints(p);
      p.finish();
      b.problem = instances::cond_entropy_instance(dims, cons, f.eps);
      const int da = dims.a;
      b.derived = [da](double m) { return std::log(da) - m; };
      b.derived_name = "conditional_entropy";
      b.decreasing = true;
    } else {
      throw ConfigError(p.field("kind"),
                        "must be one of witness, two-free, qkd, capacity, ree, entropy, cond-entropy");
    }
  } catch (const ValidationError& e) {
    throw ConfigError(p.path(), e.what());
  }
  return b;
}

ExitCode solve(Reader& r, const RunOptions& opts, std::ostream& out, std::ostream& log) {
  const Common c = read_common(r, opts);
  const Refinement f = read_refinement(r, 1e-2);
  Built b = build_problem(r.child("problem"), c, f);
  r.finish();

  Log lg(opts.log_level);
  const auto rep = refine(b.problem, f, c);
  const auto& u = c.units;
  std::string text = "# iteration c_l c_u gap\n# units " + u.name + "\n";
  for (const auto& it : rep.iterations) {
    text += std::to_string(it.iteration) + " " + num(u(it.c_l)) + " " + num(u(it.c_u)) + " " + num(u(it.gap)) + "\n";
  }
  json meta = rep.to_json();
  meta["command"] = "solve";
  meta["kind"] = b.kind;
  meta["units"] = u.name;
  meta["seed"] = c.seed;
  meta["info"] = b.info;
  std::ostringstream summary;
  summary << "status " << bounds::to_string(rep.status) << "\n";
  summary << "c_l " << num(u(rep.best_lower)) << "\nc_u " << num(u(rep.best_upper)) << "\ngap "
          << num(u(rep.final_gap())) << "\n";
  if (b.derived && bounds_usable(rep)) {
    double lo = b.derived(rep.best_upper), hi = b.derived(rep.best_lower);
    if (!b.decreasing) std::swap(lo, hi);
    meta[b.derived_name] = {{"lower", lo}, {"upper", hi}};
    summary << b.derived_name << " [" << num(u(lo)) << ", " << num(u(hi)) << "]\n";
  }
  if (rep.status == bounds::RefinementStatus::BudgetExhausted) lg.warn("budget exhausted before the target gap");
  const fs::path dir(opts.out_dir);
  write_file(dir / "solve.dat", text);
  write_file(dir / "solve.json", meta.dump(2) + "\n");
  out << summary.str() << text;
  log << lg.take();
  switch (rep.status) {
    case bounds::RefinementStatus::Infeasible: return ExitCode::Infeasible;
    case bounds::RefinementStatus::SolverFailure: return ExitCode::PartialFailure;
    default: return ExitCode::Ok;
  }
}

}  // namespace

ExitCode run(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& log) {
  Log lg(options.log_level);
  try {
    if (options.jobs < 1) throw ConfigError("--jobs", "must be >= 1");
    const json doc = config::load(options.config_path);
    Reader r(doc, "");
    r.get<std::string>("schema");
    lg.info("running " + command + " with " + options.config_path);
    log << lg.take();
    if (command == "fixed-pair") return fixed_pair(r, options, out, log);
    if (command == "solve") return solve(r, options, out, log);
    if (command == "qkd-sweep") return qkd_sweep(r, options, out, log);
    if (command == "capacity-sweep") return capacity_sweep(r, options, out, log);
    if (command == "ree-sweep") return ree_sweep(r, options, out, log);
    throw ConfigError("command", "unknown command \"" + command + "\"");
  } catch (const ConfigError& e) {
    lg.error(std::string("config error: ") + e.what());
    log << lg.take();
    return ExitCode::ConfigError;
  } catch (const std::exception& e) {
    lg.error(std::string("run failed: ") + e.what());
    log << lg.take();
    return ExitCode::PartialFailure;
  }
}

}  // namespace relent::commands
