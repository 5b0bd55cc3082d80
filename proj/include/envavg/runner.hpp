#pragma once

// Config-driven experiments. Each writes its tables into an OutputDir and returns a summary with the
// outcome of every asserted inequality.

#include "config.hpp"
#include "io.hpp"

namespace envavg {

inline constexpr const char* version = "0.9.0";

struct Check {
  std::string name;
  double value = 0;
  std::string op;  // "<", "<=", ">", ">=", "=="
  double threshold = 0;
  bool pass = false;
};

inline Check check(std::string name, double value, const std::string& op, double threshold) {
  bool p = op == "<"    ? value < threshold
           : op == "<=" ? value <= threshold
           : op == ">"  ? value > threshold
           : op == ">=" ? value >= threshold
                        : value == threshold;
  return {std::move(name), value, op, threshold, p};
}

// Tracks every file written so a failed run can still list (and hash) its partial outputs.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& path() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  void text(const std::string& name, const std::string& content) {
    io::write_text(dir_ / name, content);
    note(name);
  }
  void csv(const std::string& name, const io::Table& t) { text(name, io::to_csv(t)); }
  void json(const std::string& name, const io::json& j) { text(name, j.dump(2) + "\n"); }
  void note(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

struct ExperimentOutcome {
  io::json results = io::json::object();
  std::vector<Check> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline io::json to_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"op", c.op}, {"threshold", c.threshold}, {"pass", c.pass}};
}

namespace experiments {

inline SwarmState initial_swarm(const ExperimentConfig& cfg) {
  ConfigNode in = cfg.section("initial");
  const std::string sampler = in.get<std::string>("sampler", "uniform");
  if (sampler == "uniform") {
    in.only({"sampler", "N", "domain", "length", "dim", "speed", "equal_mass"});
    const int N = in.count("N", 50);
    const int dim = in.count("dim", 1);
    if (dim > 2) in.child("dim").fail("must be 1 or 2");
    const std::string dom = in.get<std::string>("domain", "line");
    const double len = in.positive("length", 1.0);
    Domain d;
    if (dom == "line") d = Domain::line(dim);
    else if (dom == "torus") d = Domain::torus(len, dim);
    else in.child("domain").fail("expected 'line' or 'torus'");
    const double speed = in.positive("speed", 1.0);
    const bool equal = in.get<bool>("equal_mass", true);
    std::mt19937_64 rng = job_rng(cfg.seed, 0);
    std::uniform_real_distribution<double> U(0, 1);
    Mat x(N, dim), v(N, dim);
    Vec m(N);
    for (int i = 0; i < N; ++i) {
      for (int a = 0; a < dim; ++a) {
        x(i, a) = U(rng) * len;
        v(i, a) = speed * (2 * U(rng) - 1);
      }
      m(i) = equal ? 1.0 : 0.5 + U(rng);
    }
    return make_swarm(d, x, v, m / m.sum());
  }
  if (sampler == "explicit") {
    in.only({"sampler", "x", "v", "m", "domain", "length"});
    auto x = in.list<double>("x"), v = in.list<double>("v");
    if (x.size() != v.size() || x.empty()) in.child("v").fail("x and v must be non-empty lists of equal length");
    auto m = in.list<double>("m", std::vector<double>(x.size(), 1.0));
    if (m.size() != x.size()) in.child("m").fail("must have one mass per agent");
    const std::string dom = in.get<std::string>("domain", "line");
    Domain d = dom == "torus" ? Domain::torus(in.positive("length", 1.0)) : Domain::line();
    Vec mm = Eigen::Map<Vec>(m.data(), static_cast<Eigen::Index>(m.size()));
    if ((mm.array() <= 0).any()) in.child("m").fail("masses must be positive");
    return make_swarm(d, Eigen::Map<Mat>(x.data(), static_cast<Eigen::Index>(x.size()), 1),
                      Eigen::Map<Mat>(v.data(), static_cast<Eigen::Index>(v.size()), 1), mm / mm.sum());
  }
  in.child("sampler").fail("unknown sampler '" + sampler + "' (uniform, explicit)");
}

inline ExperimentOutcome flocking(const ExperimentConfig& cfg, OutputDir& out) {
  const Model& M = *cfg.model;
  SwarmState s = initial_swarm(cfg);
  ConfigNode num = cfg.section("numerics");
  num.only({"T", "dt", "sigma", "record_every", "chain_r", "thickness_r"});
  RunOptions o;
  o.T = num.positive("T", 10.0);
  o.dt = num.positive("dt", 1e-2);
  o.sigma = num.get<double>("sigma", 0.0);
  if (o.sigma < 0) num.child("sigma").fail("must be non-negative");
  o.record_every = num.count("record_every", 10);
  o.chain_r = num.get<double>("chain_r", 0.0);
  o.thickness_r = num.get<double>("thickness_r", 0.0);
  o.seed = cfg.seed;
  ConfigNode ck = cfg.section("checks");
  ck.only({"expect", "decay_window"});
  const std::string expect = ck.get<std::string>("expect", "none");
  if (expect != "none" && expect != "decay" && expect != "no_decay") ck.child("expect").fail("expected decay, no_decay or none");
  auto window = ck.list<double>("decay_window", {0.2 * o.T, o.T});
  if (window.size() != 2 || !(window[0] < window[1])) ck.child("decay_window").fail("expected [t0, t1] with t0 < t1");

  io::FrameWriter frames(out.path() / "frames.bin", s.size(), s.domain.dim, o.dt);
  out.note("frames.bin");
  o.on_record = [&](const SwarmState& st) { frames.write(st); };
  Diagnostics d = run(M, s, o);
  out.csv("diagnostics.csv", io::diagnostics_table(d));

  std::vector<double> t, A;
  for (const auto& r : d.rows) {
    t.push_back(r.t);
    A.push_back(r.A);
  }
  ExperimentOutcome res;
  LinearFit fit = fit_log_decay(t, A, window[0], window[1]);
  const double ratio = d.rows.back().A / std::max(d.rows.front().A, 1e-300);
  const double drift = (d.rows.back().ubar - d.rows.front().ubar).cwiseAbs().maxCoeff();
  res.results = {{"decay_fit", io::to_json(fit)},
                 {"A_ratio", ratio},
                 {"momentum_drift", drift},
                 {"max_overshoot", d.max_overshoot},
                 {"max_energy_increase", d.max_energy_increase},
                 {"dt_used", d.dt_used},
                 {"dt_halved", d.dt_halved}};
  if (expect == "decay") {
    res.checks.push_back(check("decay rate", fit.slope, "<", 0.0));
    res.checks.push_back(check("decay fit R2", fit.r2, ">", 0.95));
  } else if (expect == "no_decay") {
    res.checks.push_back(check("A(T)/A(0)", ratio, ">=", 0.9));
  }
  if (o.sigma == 0) {
    if (M.flags().conservative) res.checks.push_back(check("momentum drift", drift, "<", 1e-8));
    res.checks.push_back(check("max-speed overshoot", d.max_overshoot, "<", 1e-6));
    if (M.flags().symmetric) res.checks.push_back(check("energy increase per step", d.max_energy_increase, "<=", 1e-6));
  }
  return res;
}

inline ExperimentOutcome relaxation(const ExperimentConfig& cfg, OutputDir& out) {
  const Model& M = *cfg.model;
  ConfigNode num = cfg.section("numerics");
  num.only({"sigma", "nx", "nv", "V", "T", "record_dt", "dt_max"});
  const double sigma = num.positive("sigma", 0.5);
  ConfigNode in = cfg.section("initial");
  in.only({"profile", "velocities", "modulation", "ubar"});
  const std::string profile = in.get<std::string>("profile", "bimodal");
  auto vel = in.list<double>("velocities", {1.5, -1.2});
  const double amp = in.get<double>("modulation", 0.5);
  if (std::abs(amp) >= 1) in.child("modulation").fail("must lie in (-1, 1)");
  double umax = 0;
  for (double v : vel) umax = std::max(umax, std::abs(v));
  PhaseGrid g = default_phase_grid(sigma, umax, 1.0, num.count("nx", 128, 8), num.count("nv", 256, 8));
  if (num.has("V")) g.V = num.positive("V");
  const double two_pi = 2 * M_PI;
  KineticState f0;
  if (profile == "bimodal") {
    f0 = from_density(g, sigma, [&](double x, double v) {
      double s = 0;
      for (double c : vel) s += std::exp(-std::pow(v - c, 2) / (2 * sigma));
      return (1 + amp * std::cos(two_pi * x)) * s;
    });
  } else if (profile == "half_vacuum") {
    f0 = from_density(g, sigma, [](double x, double v) { return (x < 0.5 ? 1.0 : 0.0) * std::exp(-v * v); });
  } else if (profile == "maxwellian") {
    f0 = maxwellian(sigma, in.get<double>("ubar", 0.0), g);
  } else {
    in.child("profile").fail("unknown profile '" + profile + "' (bimodal, half_vacuum, maxwellian)");
  }
  KineticRunOptions o;
  o.T = num.positive("T", 6.0);
  o.record_dt = num.positive("record_dt", 0.25);
  o.dt_max = num.positive("dt_max", 1e-2);
  ConfigNode ck = cfg.section("checks");
  ck.only({"monotone_after", "max_slope", "min_density_at"});
  RelaxResult r = relax_experiment(M, f0, o);
  io::Table t{{"t", "H", "l1", "min_rho"}, {}};
  for (size_t k = 0; k < r.t.size(); ++k) t.add({r.t[k], r.H[k], r.l1[k], r.min_rho[k]});
  out.csv("entropy.csv", t);
  out.csv("final_f.csv", io::kinetic_table(r.final_state));

  ExperimentOutcome res;
  EntropyAudit audit = entropy_law_audit(r.t, r.H, M.flags().conservative);
  res.results = {{"fit", io::to_json(r.fit)},
                 {"ck_worst", r.ck_worst},
                 {"entropy_audit", {{"ok", audit.ok}, {"worst", audit.worst}, {"growth", audit.growth}}},
                 {"final_min_rho", r.min_rho.back()}};
  res.checks.push_back(check("Csiszar-Kullback margin", r.ck_worst, ">=", -1e-14));
  res.checks.push_back(check("entropy law audit", audit.ok ? 1 : 0, "==", 1));
  if (ck.has("monotone_after")) {
    const double t0 = ck.get<double>("monotone_after");
    double worst = -1e300;
    for (size_t k = 1; k < r.t.size(); ++k)
      if (r.t[k] > t0) worst = std::max(worst, r.H[k] - r.H[k - 1]);
    res.checks.push_back(check("largest H increase after t0", worst, "<=", 0.0));
  }
  if (ck.has("max_slope")) res.checks.push_back(check("log H slope", r.fit.slope, "<", ck.get<double>("max_slope")));
  if (ck.has("min_density_at")) res.checks.push_back(check("min density at T", r.min_rho.back(), ">", 0.0));
  return res;
}

inline ExperimentOutcome meanfield(const ExperimentConfig& cfg, OutputDir& out) {
  ConfigNode in = cfg.section("initial");
  in.only({"sampler", "modulation", "spread", "length"});
  if (in.get<std::string>("sampler", "smooth_flock") != "smooth_flock") in.child("sampler").fail("only smooth_flock is available");
  const double L = in.positive("length", 1.0);
  PhaseSampler f0 = smooth_flock_sampler(L, in.get<double>("modulation", 0.5), in.get<double>("spread", 0.3));
  ConfigNode num = cfg.section("numerics");
  num.only({"Ns", "N_ref", "T", "dt", "sigma", "paths"});
  MeanfieldOptions o;
  o.Ns = num.list<int>("Ns", o.Ns);
  o.N_ref = num.count("N_ref", o.N_ref);
  o.T = num.positive("T", 1.0);
  o.dt = num.positive("dt", 0.02);
  o.sigma = num.get<double>("sigma", 0.0);
  if (o.sigma < 0) num.child("sigma").fail("must be non-negative");
  o.paths = num.count("paths", 64);
  o.seed = cfg.seed;
  auto pts = meanfield_experiment(*cfg.model, Domain::torus(L), f0, o);
  io::Table t{{"N", "w1", "w1_sd"}, {}};
  for (const auto& p : pts) t.add({double(p.N), p.w1, p.w1_sd});
  out.csv("meanfield.csv", t);
  ExperimentOutcome res;
  double worst = -1e300;
  for (size_t k = 1; k < pts.size(); ++k) worst = std::max(worst, pts[k].w1 - pts[k - 1].w1);
  res.results = {{"stochastic", o.sigma > 0}, {"points", pts.size()}};
  if (pts.size() > 1) res.checks.push_back(check("largest W1 increase with N", worst, "<", 0.0));
  return res;
}

inline ExperimentOutcome gap_survey(const ExperimentConfig& cfg, OutputDir& out) {
  const Model& M = *cfg.model;
  ConfigNode num = cfg.section("numerics");
  num.only({"samples", "cells", "amp_min", "amp_max", "constant"});
  const int samples = num.count("samples", 100);
  const int cells = num.count("cells", 256, 16);
  const double a0 = num.get<double>("amp_min", 0.25), a1 = num.get<double>("amp_max", 2.25);
  if (a0 < 0 || a1 < a0) num.child("amp_max").fail("need 0 <= amp_min <= amp_max");
  const Domain d = Domain::torus(1.0);
  double C = 0;
  try {
    C = num.has("constant") ? num.positive("constant") : calibrate_gap_constant(M, d, cells);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    cfg.section("model").fail(e.what());
  }
  io::Table t{{"sample", "amp", "eps_measured", "eps_bound", "thickness", "lambda", "holds"}, {}};
  int violations = 0;
  double worst = 1e300;
  for (int s = 0; s < samples; ++s) {
    std::mt19937_64 rng = job_rng(cfg.seed, s);
    const double amp = samples > 1 ? a0 + (a1 - a0) * s / (samples - 1) : a0;
    Measure rho = random_grid_density(rng, d, cells, amp);
    GapReport g = low_energy_bounds(M, rho, C);
    violations += !g.holds;
    worst = std::min(worst, g.eps_measured / g.eps_bound);
    t.add({double(s), amp, g.eps_measured, g.eps_bound, g.thickness, g.lambda_measured, g.holds ? 1.0 : 0.0});
  }
  out.csv("gaps.csv", t);
  ExperimentOutcome res;
  res.results = {{"law", law_name(bound_shape(M).law)}, {"constant", C}, {"min_ratio", worst}};
  res.checks.push_back(check("bound violations", violations, "==", 0));
  return res;
}

inline ExperimentOutcome hydro_threshold(const ExperimentConfig& cfg, OutputDir& out) {
  const Model& M = *cfg.model;
  ConfigNode in = cfg.section("initial");
  in.only({"rho_modulation", "u_amplitude", "transported_strength"});
  const double ra = in.get<double>("rho_modulation", 0.3), ua = in.get<double>("u_amplitude", 0.1);
  if (std::abs(ra) >= 1) in.child("rho_modulation").fail("must lie in (-1, 1)");
  const bool transport = in.get<bool>("transported_strength", false);
  ConfigNode num = cfg.section("numerics");
  num.only({"cells", "T", "cfl_fraction", "record_every"});
  auto cells = num.list<int>("cells", {256, 512});
  if (cells.empty()) num.child("cells").fail("need at least one resolution");
  HydroRunOptions o;
  o.T = num.positive("T", 5.0);
  o.cfl_fraction = num.positive("cfl_fraction", 1.0);
  o.record_every = num.count("record_every", 5);
  HydroSolver S(M);
  const double two_pi = 2 * M_PI;
  ExperimentOutcome res;
  std::vector<double> times;
  double e0min = 0;
  io::json runs = io::json::array();
  for (int n : cells) {
    if (n < 16) num.child("cells").fail("each resolution needs at least 16 cells");
    HydroState h = make_hydro(
        1.0, n, [&](double x) { return 1 + ra * std::cos(two_pi * x); }, [&](double x) { return -ua * std::sin(two_pi * x); });
    if (transport) h = with_transported_strength(M, h);
    e0min = S.e_field(h).minCoeff();
    HydroRun r = run_hydro(S, h, o);
    io::Table t{{"t", "mass", "momentum", "energy", "e_integral", "oscillation", "ratio_min", "ratio_max"}, {}};
    double drift = 0, ratio = 0;
    for (const auto& rec : r.records) {
      t.add({rec.t, rec.mass, rec.momentum, rec.energy, rec.e_integral, rec.oscillation, rec.ratio_min, rec.ratio_max});
      drift = std::max(drift, std::abs(rec.e_integral - r.records.front().e_integral));
      if (transport) ratio = std::max({ratio, rec.ratio_max - 1.0, 1.0 - rec.ratio_min});
    }
    const std::string tag = std::to_string(n);
    out.csv("records_" + tag + ".csv", t);
    out.csv("final_" + tag + ".csv", io::hydro_table(r.final_state, S.e_field(r.final_state)));
    runs.push_back({{"cells", n}, {"blew_up", r.blew_up}, {"blowup_time", r.blowup_time}, {"blowup_x", r.blowup_x},
                    {"e_integral_drift", drift}});
    if (r.blew_up) times.push_back(r.blowup_time);
    else res.checks.push_back(check("int e drift (" + tag + " cells)", drift, "<", 1e-6));
    if (transport && !r.blew_up) res.checks.push_back(check("s/rho_phi drift (" + tag + " cells)", ratio, "<", 0.01));
  }
  res.results = {{"min_e0", e0min}, {"runs", runs}};
  const bool predicted = e0min < 0;
  res.checks.push_back(check("blow-up detected iff min e0 < 0", (times.size() == cells.size()) == predicted ? 1 : 0, "==", 1));
  if (predicted && times.size() >= 2) {
    double spread = std::abs(times.back() - times[times.size() - 2]) / times.back();
    res.results["blowup_time_spread"] = spread;
    res.checks.push_back(check("blow-up time spread under refinement", spread, "<", 0.10));
  }
  return res;
}

inline ExperimentOutcome monokinetic_limit(const ExperimentConfig& cfg, OutputDir& out) {
  ConfigNode in = cfg.section("initial");
  in.only({"rho_modulation", "u_amplitude"});
  const double ra = in.get<double>("rho_modulation", 0.2), ua = in.get<double>("u_amplitude", 0.1);
  if (std::abs(ra) >= 1) in.child("rho_modulation").fail("must lie in (-1, 1)");
  ConfigNode num = cfg.section("numerics");
  num.only({"eps", "T", "nx", "nv", "delta_coeff", "delta_power"});
  MonokineticOptions o;
  o.eps = num.list<double>("eps", o.eps);
  o.T = num.positive("T", 1.0);
  o.nx = num.count("nx", 256, 16);
  o.nv = num.count("nv", 512, 16);
  o.delta_coeff = num.positive("delta_coeff", 1.0);
  o.delta_power = num.positive("delta_power", 2.0);
  ConfigNode ck = cfg.section("checks");
  ck.only({"slope_range"});
  auto window = ck.list<double>("slope_range", {0.3, 0.7});
  if (window.size() != 2) ck.child("slope_range").fail("expected [lo, hi]");
  const double two_pi = 2 * M_PI;
  MonokineticResult r = monokinetic_experiment(
      *cfg.model, [&](double x) { return 1 + ra * std::sin(two_pi * x); }, [&](double x) { return ua * std::cos(two_pi * x); }, o);
  io::Table t{{"eps", "delta", "w2"}, {}};
  double worst = -1e300;
  for (size_t k = 0; k < r.points.size(); ++k) {
    t.add({r.points[k].eps, r.points[k].delta, r.points[k].w2});
    if (k) worst = std::max(worst, r.points[k].w2 - r.points[k - 1].w2);
  }
  out.csv("w2.csv", t);
  ExperimentOutcome res;
  res.results = {{"loglog", io::to_json(r.loglog)}};
  if (r.points.size() > 1) {
    res.checks.push_back(check("largest W2 increase as eps decreases", worst, "<", 0.0));
    res.checks.push_back(check("log-log slope lower", r.loglog.slope, ">=", window[0]));
    res.checks.push_back(check("log-log slope upper", r.loglog.slope, "<=", window[1]));
  }
  return res;
}

inline ExperimentOutcome property_suite(const ExperimentConfig& cfg, OutputDir& out) {
  ConfigNode num = cfg.section("numerics");
  num.only({"cells", "amp", "probes"});
  const int cells = num.count("cells", 64, 8);
  std::mt19937_64 rng = job_rng(cfg.seed, 0);
  Measure rho = random_grid_density(rng, Domain::torus(1.0), cells, num.get<double>("amp", 1.0));
  ProbeOptions po;
  po.probes = num.count("probes", 100);
  po.seed = cfg.seed;
  io::json reports = io::json::array();
  ExperimentOutcome res;
  int agree = 0;
  for (ModelKind k : cfg.suite_models) {
    Model M = builtin_model(k);
    PropertyReport p = property_report(M, rho, po);
    io::json j = io::to_json(p);
    j["describe"] = M.describe();
    reports.push_back(j);
    agree += p.agree;
    res.checks.push_back(check("flags agree: " + M.name(), p.agree ? 1 : 0, "==", 1));
  }
  out.json("properties.json", reports);
  out.csv("density.csv", io::density_table(rho));
  res.results = {{"models", cfg.suite_models.size()}, {"agree", agree}};
  return res;
}

}  // namespace experiments

inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, OutputDir& out) {
  switch (cfg.kind) {
    case ExperimentKind::flocking: return experiments::flocking(cfg, out);
    case ExperimentKind::relaxation: return experiments::relaxation(cfg, out);
    case ExperimentKind::meanfield: return experiments::meanfield(cfg, out);
    case ExperimentKind::gap_survey: return experiments::gap_survey(cfg, out);
    case ExperimentKind::hydro_threshold: return experiments::hydro_threshold(cfg, out);
    case ExperimentKind::monokinetic_limit: return experiments::monokinetic_limit(cfg, out);
    case ExperimentKind::property_suite: return experiments::property_suite(cfg, out);
  }
  throw Error("unhandled experiment kind");
}

// Manifest: everything needed to reproduce and verify a run; no timestamps, so reruns hash equal.
inline io::json manifest(const ExperimentConfig& cfg, const OutputDir& out, bool partial) {
  io::json files = io::json::object();
  for (const auto& f : out.files())
    if (std::filesystem::exists(out.path() / f)) files[f] = io::sha256_file(out.path() / f);
  return {{"tool", "envavg"},
          {"version", version},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"experiment", experiment_name(cfg.kind)},
          {"config", cfg.source},
          {"config_sha256", io::sha256_hex(cfg.text)},
          {"seeds", {{"master", cfg.seed}, {"derivation", "job k uses mt19937_64(seed_seq{seed_lo, seed_hi, k_lo, k_hi})"}}},
          {"partial", partial},
          {"outputs", files}};
}

}  // namespace envavg
