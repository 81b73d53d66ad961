#include "ratecert/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace ratecert {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError("config: " + field + ": " + message);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "must be an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  return j.get<int>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (j.is_number()) return Vector::Constant(1, number(j, path));
  if (!j.is_array() || j.empty()) fail(path, "must be a nonempty list of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

// Scalar (multiple of the identity), flat row-major list, or list of rows.
Matrix matrix_of(const json& j, Eigen::Index n, const std::string& path) {
  if (j.is_number()) return number(j, path) * Matrix::Identity(n, n);
  if (!j.is_array()) fail(path, "must be a number or a list");
  Matrix m(n, n);
  if (!j.empty() && j[0].is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != n) fail(path, "expected " + std::to_string(n) + " rows");
    for (Eigen::Index r = 0; r < n; ++r) {
      const Vector row = vector_of(j[static_cast<std::size_t>(r)], path);
      if (row.size() != n) fail(path, "expected " + std::to_string(n) + " columns");
      m.row(r) = row.transpose();
    }
    return m;
  }
  const Vector flat = vector_of(j, path);
  if (flat.size() != n * n) fail(path, "expected " + std::to_string(n * n) + " entries");
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = flat(r * n + c);
  }
  return m;
}

template <class F>
auto field_guard(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractViolation& e) {
    fail(field, e.what());
  }
}

void validate(const RunConfig& c) {
  field_guard("theta", [&] { check_theta(c.theta, {}); return 0; });
  const Problem p = field_guard("model", [&] { return c.problem(); });
  field_guard("partition", [&] { return c.partition(); });
  if (c.inner_tol && !(*c.inner_tol > 0.0)) fail("tolerances.inner_tol", "must be positive");
  if (!(c.adapt_tol > 0.0)) fail("adapt.tol", "must be positive");
  if (c.adapt_max_rounds < 0) fail("adapt.max_rounds", "must be nonnegative");
  if (!(c.adapt_budget_divisor > 0.0)) fail("adapt.budget_divisor", "must be positive");
  if (c.adapt_initial_steps < 1) fail("adapt.initial_steps", "must be positive");
  if (c.reference_factor < 1) fail("converge.reference_factor", "must be positive");
  for (double th : c.sweep_thetas) field_guard("sweep.thetas", [&] { check_theta(th, {}); return 0; });
  for (int n : c.sweep_steps) if (n < 1) fail("sweep.steps", "step counts must be positive");
  for (int n : c.refinements) if (n < 1) fail("converge.refinements", "step counts must be positive");
  (void)p;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string out_dir(const RunConfig& c, const CommandOptions& o) {
  return o.out_dir.empty() ? c.output_dir : o.out_dir;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(json_number(v(k)));
  return a;
}

double load_scale(const Problem& p) { return 1.0 + p.load.sup_norm(); }

Trajectory run_solver(const Problem& p, const Partition& part, double theta, const RunConfig& c) {
  SolverOptions opts;
  opts.tol = c.tol;
  if (c.inner_tol) return solve_theta_inexact(p, part, theta, *c.inner_tol, opts);
  return solve_theta(p, part, theta, opts);
}

// ell(t) = rate * t with rate >= 0 on a scalar kinematic model starting at rest.
std::optional<Oracle> analytic_oracle(const RunConfig& c, const Problem& p) {
  if (c.model.kind != HardeningKind::Kinematic || p.dimension() != 1 || p.y0(0) != 0.0) return std::nullopt;
  const auto& knots = p.load.knots();
  const auto& last = knots.back();
  if (last.time <= 0.0) return std::nullopt;
  const double rate = last.value(0) / last.time;
  if (rate < 0.0) return std::nullopt;
  for (const auto& k : knots) {
    if (std::abs(k.value(0) - rate * k.time) > 1e-14 * (1.0 + std::abs(k.value(0)))) return std::nullopt;
  }
  const double a = p.energy.matrix()(0, 0);
  const double sigma = c.model.sigma_y;
  return Oracle([a, sigma, rate](double t) { return Vector::Constant(1, analytic_1d(a, sigma, rate, t)); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Problem RunConfig::problem() const { return assemble(model, LoadPath(knots, horizon), y0); }

Partition RunConfig::partition() const {
  if (!explicit_steps.empty()) {
    std::vector<double> t{0.0};
    for (double s : explicit_steps) {
      require(s > 0.0, "time steps must be positive");
      t.push_back(t.back() + s);
    }
    require(std::abs(t.back() - horizon) <= 1e-12 * horizon, "time steps must sum to T");
    t.back() = horizon;
    return Partition(std::move(t));
  }
  require(steps_count.has_value(), "partition needs N or steps");
  return Partition::uniform(horizon, *steps_count);
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "", {"model", "load", "initial_state", "partition", "theta", "tolerances", "adapt",
                       "converge", "sweep", "seed", "output"});
  RunConfig c;
  if (!doc.contains("model")) fail("model", "missing");
  if (!doc.contains("load")) fail("load", "missing");

  const json& m = doc["model"];
  check_keys(m, "model", {"kind", "p_dim", "elastic_C", "Hp", "h_xi", "sigma_y"});
  if (!m.contains("kind") || !m["kind"].is_string()) fail("model.kind", "must be a string");
  c.model.kind = field_guard("model.kind", [&] { return hardening_kind_from_string(m["kind"].get<std::string>()); });
  c.model.p_dim = m.contains("p_dim") ? integer(m["p_dim"], "model.p_dim") : 1;
  if (c.model.p_dim < 1) fail("model.p_dim", "must be positive");
  if (!m.contains("elastic_C")) fail("model.elastic_C", "missing");
  c.model.elastic_C = matrix_of(m["elastic_C"], c.model.p_dim, "model.elastic_C");
  c.model.hardening_Hp = m.contains("Hp") ? matrix_of(m["Hp"], c.model.p_dim, "model.Hp")
                                          : Matrix::Zero(c.model.p_dim, c.model.p_dim);
  c.model.hardening_hxi = m.contains("h_xi") ? number(m["h_xi"], "model.h_xi") : 0.0;
  if (!m.contains("sigma_y")) fail("model.sigma_y", "missing");
  c.model.sigma_y = number(m["sigma_y"], "model.sigma_y");
  field_guard("model", [&] { validate_model(c.model); return 0; });
  const Eigen::Index n = c.model.state_dimension();

  const json& l = doc["load"];
  check_keys(l, "load", {"T", "knots"});
  if (!l.contains("T")) fail("load.T", "missing");
  c.horizon = number(l["T"], "load.T");
  if (!l.contains("knots") || !l["knots"].is_array() || l["knots"].empty()) fail("load.knots", "must be a nonempty list");
  for (std::size_t k = 0; k < l["knots"].size(); ++k) {
    const std::string path = "load.knots[" + std::to_string(k) + "]";
    const json& kn = l["knots"][k];
    check_keys(kn, path, {"t", "value"});
    if (!kn.contains("t") || !kn.contains("value")) fail(path, "needs t and value");
    Vector v = vector_of(kn["value"], path + ".value");
    if (v.size() == c.model.p_dim && n == c.model.p_dim + 1) {
      v.conservativeResize(n);
      v(n - 1) = 0.0;
    }
    if (v.size() != n) fail(path + ".value", "expected " + std::to_string(n) + " entries");
    c.knots.push_back({number(kn["t"], path + ".t"), std::move(v)});
  }
  field_guard("load", [&] { return LoadPath(c.knots, c.horizon); });

  c.y0 = doc.contains("initial_state") ? vector_of(doc["initial_state"], "initial_state") : Vector::Zero(n);
  if (c.y0.size() != n) fail("initial_state", "expected " + std::to_string(n) + " entries");

  if (doc.contains("partition")) {
    const json& p = doc["partition"];
    check_keys(p, "partition", {"N", "steps"});
    if (p.contains("N") == p.contains("steps")) fail("partition", "give exactly one of N and steps");
    if (p.contains("N")) {
      c.steps_count = integer(p["N"], "partition.N");
      if (*c.steps_count < 1) fail("partition.N", "must be positive");
    } else {
      const Vector s = vector_of(p["steps"], "partition.steps");
      c.explicit_steps.assign(s.data(), s.data() + s.size());
    }
  } else {
    c.steps_count = 100;
  }

  if (doc.contains("theta")) c.theta = number(doc["theta"], "theta");

  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    check_keys(t, "tolerances", {"tau_feas", "tau_kkt", "tau_func", "tau_domain", "inner_tol"});
    auto positive = [&](const char* key, double& dst) {
      if (!t.contains(key)) return;
      dst = number(t[key], std::string("tolerances.") + key);
      if (!(dst > 0.0)) fail(std::string("tolerances.") + key, "must be positive");
    };
    positive("tau_feas", c.tol.feas_rel);
    positive("tau_kkt", c.tol.kkt_rel);
    positive("tau_func", c.tol.func);
    positive("tau_domain", c.tol.domain_rel);
    if (t.contains("inner_tol")) c.inner_tol = number(t["inner_tol"], "tolerances.inner_tol");
  }

  if (doc.contains("adapt")) {
    const json& a = doc["adapt"];
    check_keys(a, "adapt", {"tol", "max_rounds", "budget_divisor", "initial_steps"});
    if (a.contains("tol")) c.adapt_tol = number(a["tol"], "adapt.tol");
    if (a.contains("max_rounds")) c.adapt_max_rounds = integer(a["max_rounds"], "adapt.max_rounds");
    if (a.contains("budget_divisor")) c.adapt_budget_divisor = number(a["budget_divisor"], "adapt.budget_divisor");
    if (a.contains("initial_steps")) c.adapt_initial_steps = integer(a["initial_steps"], "adapt.initial_steps");
  }

  if (doc.contains("converge")) {
    const json& v = doc["converge"];
    check_keys(v, "converge", {"refinements", "oracle", "reference_factor"});
    if (v.contains("refinements")) {
      if (!v["refinements"].is_array()) fail("converge.refinements", "must be a list");
      c.refinements.clear();
      for (const auto& r : v["refinements"]) c.refinements.push_back(integer(r, "converge.refinements"));
    }
    if (v.contains("oracle")) {
      if (!v["oracle"].is_string()) fail("converge.oracle", "must be a string");
      c.oracle = v["oracle"].get<std::string>();
      if (c.oracle != "auto" && c.oracle != "analytic" && c.oracle != "reference") {
        fail("converge.oracle", "must be auto, analytic or reference");
      }
    }
    if (v.contains("reference_factor")) c.reference_factor = integer(v["reference_factor"], "converge.reference_factor");
  }

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    check_keys(s, "sweep", {"thetas", "steps"});
    if (s.contains("thetas")) {
      const Vector th = vector_of(s["thetas"], "sweep.thetas");
      c.sweep_thetas.assign(th.data(), th.data() + th.size());
    }
    if (s.contains("steps")) {
      if (!s["steps"].is_array() || s["steps"].empty()) fail("sweep.steps", "must be a nonempty list");
      c.sweep_steps.clear();
      for (const auto& r : s["steps"]) c.sweep_steps.push_back(integer(r, "sweep.steps"));
    }
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed", "must be a nonnegative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    const json& o = doc["output"];
    check_keys(o, "output", {"dir"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) fail("output.dir", "must be a string");
      c.output_dir = o["dir"].get<std::string>();
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_number(double x) {
  if (std::isnan(x)) throw std::domain_error("refusing to serialize NaN");
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json json_number(double x) {
  if (std::isnan(x)) throw std::domain_error("refusing to serialize NaN");
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x == 0.0 ? 0.0 : x;
}

json json_number(ExtendedReal x) { return json_number(x.as_double()); }

void write_trajectory_csv(std::ostream& out, const Problem& problem, const Trajectory& traj,
                          const Tolerances& tol) {
  const Eigen::Index n = problem.dimension();
  out << "i,t";
  for (Eigen::Index k = 0; k < n; ++k) out << ",y" << k;
  out << ",slope_norm,psi_increment,tau_L,dist_theta\n";
  const FunctionalReport rep = eval_Fn_theta(problem, traj.states, traj.partition, traj.theta, tol);
  const Partition& part = traj.partition;
  for (int i = 0; i <= part.steps(); ++i) {
    const Vector& y = traj.states[static_cast<std::size_t>(i)];
    out << i << ',' << format_number(part.time(i));
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_number(y(k));
    if (i == 0) {
      out << ",0,0,0," << format_number(problem.psi.distance_to_cstar(problem.stress(0.0, y))) << '\n';
      continue;
    }
    const Vector e = y - traj.states[static_cast<std::size_t>(i - 1)];
    const Vector q = problem.stress(part.theta_time(i, traj.theta), traj.theta_state(i));
    out << ',' << format_number(e.norm() / part.step(i)) << ','
        << format_number(problem.psi.eval(e, tol).as_double()) << ','
        << format_number(rep.per_interval[static_cast<std::size_t>(i - 1)]) << ','
        << format_number(problem.psi.distance_to_cstar(q)) << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in, Eigen::Index dimension, double theta) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("candidate: empty file");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "i" || header[1] != "t") throw ConfigError("candidate: header must start with i,t");
  Eigen::Index ycols = 0;
  while (2 + static_cast<std::size_t>(ycols) < header.size() && header[2 + static_cast<std::size_t>(ycols)] == "y" + std::to_string(ycols)) ++ycols;
  if (ycols != dimension) {
    throw ConfigError("candidate: dimension mismatch (got " + std::to_string(ycols) + " state columns, expected " +
                      std::to_string(dimension) + ")");
  }
  std::vector<double> times;
  std::vector<Vector> states;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ConfigError("candidate: row " + std::to_string(row) + " has the wrong number of columns");
    try {
      times.push_back(std::stod(cells[1]));
      Vector y(dimension);
      for (Eigen::Index k = 0; k < dimension; ++k) y(k) = std::stod(cells[2 + static_cast<std::size_t>(k)]);
      if (!y.allFinite()) throw ConfigError("candidate: row " + std::to_string(row) + " has a non-finite state");
      states.push_back(std::move(y));
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw ConfigError("candidate: row " + std::to_string(row) + " is not numeric");
    }
  }
  Partition part = field_guard("candidate", [&] { return Partition(times); });
  return Trajectory{std::move(part), std::move(states), {}, theta};
}

json to_json(const Certificate& c) {
  return json{{"functional_value", json_number(c.functional_value)},
              {"alpha", json_number(c.alpha)},
              {"coercivity_scope", to_string(c.scope)},
              {"uniform_phi_bound", json_number(c.uniform_phi_bound)},
              {"uniform_norm_bound", json_number(c.uniform_norm_bound)},
              {"applicable", c.applicable},
              {"per_interval_budget", c.per_interval_budget ? json_number(*c.per_interval_budget) : json(nullptr)}};
}

json to_json(const FunctionalReport& r) {
  json viol = json::array();
  for (const auto& v : r.feasibility_violations) viol.push_back({{"interval", v.interval}, {"distance", json_number(v.distance)}});
  double sum = 0.0;
  for (double v : r.per_interval) sum += v;
  return json{{"total", json_number(r.total)},
              {"interval_sum", json_number(sum)},
              {"initial_penalty", json_number(r.initial_penalty)},
              {"dissipation_total", json_number(r.dissipation_total)},
              {"feasibility_violations", viol}};
}

json to_json(const LipschitzReport& r) {
  return json{{"max_slope", json_number(r.max_slope)},
              {"worst_interval", r.worst_interval},
              {"load_lipschitz", json_number(r.load_lipschitz)},
              {"applicable", r.applicable},
              {"bound", r.applicable ? json_number(r.bound) : json(nullptr)},
              {"margin", r.applicable ? json_number(r.margin) : json(nullptr)},
              {"note", r.note}};
}

json to_json(const ConvergenceReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"steps", l.steps}, {"tau", json_number(l.tau)}, {"error", json_number(l.error)}, {"at_floor", l.at_floor}});
  }
  return json{{"levels", levels},
              {"slope", r.slope ? json_number(*r.slope) : json(nullptr)},
              {"clamped_slope", r.clamped_slope ? json_number(*r.clamped_slope) : json(nullptr)},
              {"floor", json_number(r.floor)},
              {"required_slope", json_number(r.required_slope)},
              {"slope_tested", r.slope_tested},
              {"passed", r.passed}};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_solve(const RunConfig& c, const CommandOptions& o) {
  const Problem p = c.problem();
  const Trajectory traj = run_solver(p, c.partition(), c.theta, c);
  std::ostringstream csv;
  write_trajectory_csv(csv, p, traj, c.tol);
  const FunctionalReport f = eval_Fn_theta(p, traj.states, traj.partition, c.theta, c.tol);
  const LipschitzReport lip = verify_lipschitz(p, traj, c.theta);
  const double residual = energy_balance_residual(p, traj);
  const json summary{{"command", "solve"},
                     {"theta", json_number(c.theta)},
                     {"steps", traj.steps()},
                     {"inner_tol", c.inner_tol ? json_number(*c.inner_tol) : json(nullptr)},
                     {"seed", c.seed},
                     {"functional", to_json(f)},
                     {"energy_residual", json_number(residual)},
                     {"energy_residual_continuous", json_number(energy_balance_residual(p, traj, BalanceMode::Continuous))},
                     {"lipschitz", to_json(lip)},
                     {"final_state", vector_json(traj.states.back())}};
  const std::string dir = out_dir(c, o);
  write_file(dir, "trajectory.csv", csv.str());
  write_file(dir, "summary.json", dump(summary));
  std::cout << "solve: N=" << traj.steps() << " F=" << format_number(f.total.as_double()) << " -> " << dir << "\n";
  if (o.assert_mode) {
    const double limit = c.inner_tol ? *c.inner_tol + c.tol.func * load_scale(p) : c.tol.func * load_scale(p);
    if (!(f.total.as_double() <= limit) || !lip.passed()) return kExitBoundExceeded;
  }
  return kExitOk;
}

int cmd_certify(const RunConfig& c, const CommandOptions& o) {
  if (!o.candidate) throw ConfigError("certify: --candidate is required");
  const Problem p = c.problem();
  std::ifstream in(*o.candidate);
  if (!in) throw ConfigError("certify: cannot open candidate " + *o.candidate);
  const Trajectory cand = read_trajectory_csv(in, p.dimension(), c.theta);
  field_guard("candidate", [&] {
    require(std::abs(cand.partition.horizon() - p.horizon()) <= 1e-12 * p.horizon(), "candidate must end at T");
    return 0;
  });
  const FunctionalReport f = eval_Fn_theta(p, cand.states, cand.partition, c.theta, c.tol);
  const Certificate cert = make_certificate(p, f.total);
  json doc{{"command", "certify"}, {"theta", json_number(c.theta)}, {"steps", cand.steps()},
           {"certificate", to_json(cert)}, {"functional", to_json(f)}};
  const std::string dir = out_dir(c, o);
  write_file(dir, "certificate.json", dump(doc));
  std::cout << "certify: norm bound " << format_number(cert.uniform_norm_bound.as_double()) << " -> " << dir << "\n";
  if (o.assert_mode) {
    const double tol = o.tol.value_or(c.adapt_tol);
    if (!(cert.uniform_norm_bound.as_double() <= tol)) return kExitBoundExceeded;
  }
  return kExitOk;
}

int cmd_adapt(const RunConfig& c, const CommandOptions& o) {
  const Problem p = c.problem();
  const double tol = o.tol.value_or(c.adapt_tol);
  if (!(tol > 0.0)) throw ConfigError("config: adapt.tol: must be positive");
  AdaptOptions opts;
  opts.initial_steps = c.adapt_initial_steps;
  opts.budget_divisor = c.adapt_budget_divisor;
  opts.solver.tol = c.tol;
  const AdaptResult r = adapt_partition(p, c.theta, tol, c.adapt_max_rounds, opts);
  std::ostringstream rounds;
  rounds << "round,steps,budget,refined,functional\n";
  for (std::size_t k = 0; k < r.rounds.size(); ++k) {
    const auto& rd = r.rounds[k];
    rounds << k << ',' << rd.steps << ',' << format_number(rd.budget) << ',' << rd.refined << ','
           << format_number(rd.functional_value.as_double()) << '\n';
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, p, r.trajectory, c.tol);
  json mids = json::array();
  for (double t : r.refined_midpoints) mids.push_back(json_number(t));
  json doc{{"command", "adapt"},
           {"theta", json_number(c.theta)},
           {"tol", json_number(tol)},
           {"converged", r.converged},
           {"steps", r.partition.steps()},
           {"rounds", static_cast<int>(r.rounds.size()) - 1},
           {"refined_midpoints", mids},
           {"certificate", to_json(r.certificate)}};
  if (auto oracle = analytic_oracle(c, p)) doc["analytic_error"] = json_number(uniform_error(r.trajectory, *oracle, 8));
  const std::string dir = out_dir(c, o);
  write_file(dir, "adapt_rounds.csv", rounds.str());
  write_file(dir, "adapt_trajectory.csv", csv.str());
  write_file(dir, "adapt.json", dump(doc));
  std::cout << "adapt: N=" << r.partition.steps() << " bound " << format_number(r.certificate.uniform_norm_bound.as_double())
            << (r.converged ? "" : " (budget not met)") << " -> " << dir << "\n";
  if (o.assert_mode && (!r.converged || !(r.certificate.uniform_norm_bound.as_double() <= tol))) return kExitBoundExceeded;
  return kExitOk;
}

int cmd_converge(const RunConfig& c, const CommandOptions& o) {
  const Problem p = c.problem();
  if (c.refinements.size() < 3) throw ConfigError("config: converge.refinements: needs at least 3 levels");
  std::optional<Oracle> oracle;
  std::string kind = c.oracle;
  if (kind != "reference") oracle = analytic_oracle(c, p);
  if (kind == "analytic" && !oracle) throw ConfigError("config: converge.oracle: no analytic solution for this problem");
  if (!oracle) {
    kind = "reference";
    const int finest = *std::max_element(c.refinements.begin(), c.refinements.end());
    SolverOptions so;
    so.tol = c.tol;
    oracle = reference_oracle(p, c.reference_factor * finest, so);
  } else {
    kind = "analytic";
  }
  ConvergenceOptions opts;
  opts.solver.tol = c.tol;
  const ConvergenceReport r = convergence_study(p, c.theta, c.refinements, *oracle, opts);
  std::ostringstream csv;
  csv << "steps,tau,error,at_floor\n";
  for (const auto& l : r.levels) {
    csv << l.steps << ',' << format_number(l.tau) << ',' << format_number(l.error) << ',' << (l.at_floor ? 1 : 0) << '\n';
  }
  json doc = to_json(r);
  doc["command"] = "converge";
  doc["theta"] = json_number(c.theta);
  doc["oracle"] = kind;
  const std::string dir = out_dir(c, o);
  write_file(dir, "rates.csv", csv.str());
  write_file(dir, "converge.json", dump(doc));
  std::cout << "converge: slope " << (r.slope ? format_number(*r.slope) : std::string("untested")) << " -> " << dir << "\n";
  if (o.assert_mode && !r.passed) return kExitBoundExceeded;
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, const CommandOptions& o) {
  const Problem p = c.problem();
  struct Cell {
    double theta;
    int steps;
    std::string row;
    bool within = true;
    std::exception_ptr error;
  };
  std::vector<Cell> cells;
  for (double th : c.sweep_thetas) {
    for (int n : c.sweep_steps) cells.push_back({th, n, {}, true, nullptr});
  }
  const double limit = (c.inner_tol ? *c.inner_tol : 0.0) + c.tol.func * load_scale(p);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      Cell& cell = cells[k];
      try {
        const Trajectory traj = run_solver(p, Partition::uniform(p.horizon(), cell.steps), cell.theta, c);
        const FunctionalReport f = eval_Fn_theta(p, traj.states, traj.partition, cell.theta, c.tol);
        const LipschitzReport lip = verify_lipschitz(p, traj, cell.theta);
        std::ostringstream row;
        row << format_number(cell.theta) << ',' << cell.steps << ',' << format_number(f.total.as_double()) << ','
            << format_number(energy_balance_residual(p, traj)) << ',' << format_number(lip.max_slope) << ','
            << (lip.applicable ? format_number(lip.bound) : std::string("")) << ','
            << format_number(traj.states.back().norm()) << '\n';
        cell.row = row.str();
        cell.within = f.total.as_double() <= limit && lip.passed();
      } catch (...) {
        cell.error = std::current_exception();
      }
    }
  };
  unsigned workers = o.threads > 0 ? static_cast<unsigned>(o.threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "theta,steps,F_total,energy_residual,max_slope,lipschitz_bound,final_norm\n";
  bool all_within = true;
  for (const auto& cell : cells) {
    if (cell.error) std::rethrow_exception(cell.error);
    csv << cell.row;
    all_within = all_within && cell.within;
  }
  const std::string dir = out_dir(c, o);
  write_file(dir, "sweep.csv", csv.str());
  std::cout << "sweep: " << cells.size() << " cells -> " << dir << "\n";
  if (o.assert_mode && !all_within) return kExitBoundExceeded;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"ratecert: theta-scheme solver and error certificates for rate-independent evolution"};
  app.require_subcommand(1);
  std::string config_path, out, candidate, refinements;
  double theta = 0.0, tol = 0.0;
  int steps = 0, threads = 0;
  std::uint64_t seed = 0;
  bool assert_mode = false;

  std::vector<CLI::App*> subs{
      app.add_subcommand("solve", "run the theta-scheme and write the trajectory"),
      app.add_subcommand("certify", "certify a candidate trajectory"),
      app.add_subcommand("adapt", "adaptive refinement to a certified tolerance"),
      app.add_subcommand("converge", "convergence-rate study"),
      app.add_subcommand("sweep", "theta x step-count grid"),
  };
  for (auto* s : subs) {
    s->add_option("--config", config_path, "JSON configuration file")->required();
    s->add_option("--out", out, "output directory (overrides output.dir)");
    s->add_option("--theta", theta, "override theta");
    s->add_option("--steps", steps, "override partition.N");
    s->add_option("--tol", tol, "tolerance for adapt and --assert");
    s->add_flag("--assert", assert_mode, "exit with status 4 when a bound is exceeded");
    s->add_option("--seed", seed, "override seed");
  }
  subs[1]->add_option("--candidate", candidate, "candidate trajectory CSV")->required();
  subs[3]->add_option("--refinements", refinements, "comma-separated step counts");
  subs[4]->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig c = load_config(config_path);
    if (sub->count("--theta")) c.theta = theta;
    if (sub->count("--steps")) {
      c.steps_count = steps;
      c.explicit_steps.clear();
    }
    if (sub->count("--seed")) c.seed = seed;
    if (sub->get_name() == "converge" && sub->count("--refinements")) {
      c.refinements.clear();
      std::stringstream ss(refinements);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          c.refinements.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw ConfigError("--refinements: '" + item + "' is not an integer");
        }
      }
    }
    validate(c);
    CommandOptions o;
    o.out_dir = out;
    o.assert_mode = assert_mode;
    if (sub->count("--tol")) o.tol = tol;
    if (!candidate.empty()) o.candidate = candidate;
    o.threads = threads;
    const std::string& name = sub->get_name();
    if (name == "solve") return cmd_solve(c, o);
    if (name == "certify") return cmd_certify(c, o);
    if (name == "adapt") return cmd_adapt(c, o);
    if (name == "converge") return cmd_converge(c, o);
    return cmd_sweep(c, o);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ratecert
