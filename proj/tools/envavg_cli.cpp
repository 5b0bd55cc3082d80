// envavg: run experiment configs, inspect models, run the acceptance battery.
// Exit codes: 0 ok, 1 an asserted inequality failed, 2 config or usage error, 3 solver error (partial outputs).

#include <envavg/acceptance.hpp>
#include <envavg/runner.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace envavg;

namespace {

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ENVAVG_OUTPUT_ROOT"); env && *env) return env;
  return "envavg-out";
}

int cmd_run(const std::string& config_path, const std::string& root_flag) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << config_path << ":" << e.what() << "\n";
    return 2;
  }
  OutputDir out(output_root(root_flag) / cfg.name);
  io::json summary{{"experiment", experiment_name(cfg.kind)}, {"seed", cfg.seed}};
  if (cfg.model) summary["model"] = cfg.model->name();
  int code = 0;
  try {
    ExperimentOutcome r = run_experiment(cfg, out);
    summary["status"] = "complete";
    summary["results"] = r.results;
    summary["checks"] = io::json::array();
    for (const auto& c : r.checks) summary["checks"].push_back(to_json(c));
    summary["pass"] = r.all_pass();
    code = r.all_pass() ? 0 : 1;
    for (const auto& c : r.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " " << c.op << " " << c.threshold << "\n";
  } catch (const ConfigError& e) {
    // experiment sections are validated lazily; nothing useful was written
    std::cerr << config_path << ":" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    summary["status"] = "partial";
    summary["error"] = e.what();
    summary["pass"] = false;
    std::cerr << "error: " << e.what() << " (partial outputs in " << out.path().string() << ")\n";
    code = 3;
  }
  out.json("summary.json", summary);
  io::write_text(out.path() / "manifest.json", manifest(cfg, out, code == 3).dump(2) + "\n");
  std::cout << "outputs: " << out.path().string() << "\n";
  return code;
}

int cmd_list() {
  for (ModelKind k : all_model_kinds()) {
    Model M = builtin_model(k);
    Flags f = M.flags();
    std::cout << kind_name(k) << "\n  " << M.kernel_formula() << "\n  flags:" << (f.conservative ? " conservative" : "")
              << (f.symmetric ? " symmetric" : "") << (f.ball_positive ? " ball-positive" : "")
              << (f.galilean ? " galilean" : "") << "\n";
  }
  return 0;
}

int cmd_describe(const std::string& name) {
  try {
    std::cout << builtin_model(parse_kind(name)).describe();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_suite(const std::vector<int>& only, const std::string& root_flag) {
  io::json results = io::json::array();
  int failed = 0;
  for (const auto& e : acceptance::battery()) {
    if (!only.empty() && std::find(only.begin(), only.end(), e.id) == only.end()) continue;
    acceptance::Result r = acceptance::run_timed(e);
    std::cout << acceptance::format(r) << std::endl;
    failed += !r.pass;
    results.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
  }
  OutputDir out(output_root(root_flag) / "suite");
  out.json("summary.json", {{"criteria", results}, {"failed", failed}, {"version", version}});
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"environmental averaging models: experiments and checks"};
  app.require_subcommand(1);
  std::string root;
  app.add_option("-o,--output-root", root, "output root (default: $ENVAVG_OUTPUT_ROOT or ./envavg-out)");

  std::string config;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config, "YAML config file")->required();

  app.add_subcommand("list-models", "list built-in models with kernels and flags");

  std::string model;
  auto* describe = app.add_subcommand("describe", "describe a built-in model");
  describe->add_option("model", model, "model name")->required();

  std::vector<int> only;
  auto* suite = app.add_subcommand("suite", "run the acceptance battery");
  suite->add_option("--only", only, "criterion ids to run")->check(CLI::Range(1, 10));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int c = app.exit(e);
    return c == 0 ? 0 : 2;
  }
  try {
    if (*run) return cmd_run(config, root);
    if (app.got_subcommand("list-models")) return cmd_list();
    if (*describe) return cmd_describe(model);
    if (*suite) return cmd_suite(only, root);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
