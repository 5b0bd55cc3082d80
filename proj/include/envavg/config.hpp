#pragma once

// YAML experiment configs. Errors carry the line and dotted field path of the offending node.

#include "model.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace envavg {

class ConfigError : public Error {
 public:
  ConfigError(int line, std::string field, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + (field.empty() ? "" : "field '" + field + "': ") + msg),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

enum class ExperimentKind { flocking, relaxation, meanfield, gap_survey, hydro_threshold, monokinetic_limit, property_suite };

inline const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::flocking: return "flocking";
    case ExperimentKind::relaxation: return "relaxation";
    case ExperimentKind::meanfield: return "meanfield";
    case ExperimentKind::gap_survey: return "gap_survey";
    case ExperimentKind::hydro_threshold: return "hydro_threshold";
    case ExperimentKind::monokinetic_limit: return "monokinetic_limit";
    case ExperimentKind::property_suite: return "property_suite";
  }
  return "?";
}

// Read-only view of a YAML node that remembers its dotted path, so errors can name the field.
class ConfigNode {
 public:
  ConfigNode(YAML::Node n, std::string path, int fallback_line) : n_(std::move(n)), path_(std::move(path)) {
    line_ = n_.IsDefined() && n_.Mark().line >= 0 ? n_.Mark().line + 1 : fallback_line;
  }

  const std::string& path() const { return path_; }
  int line() const { return line_; }
  bool is_map() const { return n_.IsMap(); }
  bool is_sequence() const { return n_.IsSequence(); }
  size_t size() const { return n_.size(); }
  const YAML::Node& raw() const { return n_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(line_, path_, msg); }

  bool has(const std::string& key) const { return n_.IsMap() && n_[key].IsDefined(); }

  ConfigNode child(const std::string& key) const {
    if (!n_.IsMap()) fail("expected a mapping");
    return ConfigNode(n_[key], join(key), line_);
  }
  ConfigNode at(const std::string& key) const {
    ConfigNode c = child(key);
    if (!has(key)) c.fail("missing required field");
    return c;
  }
  ConfigNode operator[](size_t i) const {
    if (!n_.IsSequence() || i >= n_.size()) fail("expected a list with at least " + std::to_string(i + 1) + " entries");
    return ConfigNode(n_[i], path_ + "[" + std::to_string(i) + "]", line_);
  }

  template <class T>
  T as() const {
    if (!n_.IsScalar()) fail("expected a scalar value");
    try {
      return n_.as<T>();
    } catch (const YAML::Exception&) {
      fail("cannot read '" + n_.Scalar() + "' as " + type_name<T>());
    }
  }
  template <class T>
  T get(const std::string& key) const {
    return at(key).as<T>();
  }
  template <class T>
  T get(const std::string& key, T def) const {
    return has(key) ? child(key).as<T>() : def;
  }
  template <class T>
  std::vector<T> list(const std::string& key) const {
    ConfigNode c = at(key);
    if (!c.is_sequence()) c.fail("expected a list");
    std::vector<T> out;
    for (size_t i = 0; i < c.size(); ++i) out.push_back(c[i].as<T>());
    return out;
  }
  template <class T>
  std::vector<T> list(const std::string& key, std::vector<T> def) const {
    return has(key) ? list<T>(key) : def;
  }

  double positive(const std::string& key) const {
    double v = get<double>(key);
    if (!(v > 0)) child(key).fail("must be positive");
    return v;
  }
  double positive(const std::string& key, double def) const { return has(key) ? positive(key) : def; }
  int count(const std::string& key, int def, int min = 1) const {
    int v = has(key) ? get<int>(key) : def;
    if (v < min) child(key).fail("must be at least " + std::to_string(min));
    return v;
  }

  // Rejects keys outside the allowed set (typos otherwise pass silently).
  void only(std::initializer_list<const char*> keys) const {
    if (!n_.IsMap()) fail("expected a mapping");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = n_.begin(); it != n_.end(); ++it) {
      std::string k = it->first.as<std::string>();
      if (!ok.count(k)) ConfigNode(it->first, join(k), line_).fail("unknown field");
    }
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }

  YAML::Node n_;
  std::string path_;
  int line_ = 1;
};

// ---- kernels and models

inline Kernel parse_kernel(const ConfigNode& k) {
  const std::string type = k.get<std::string>("type");
  try {
    Kernel out = [&]() -> Kernel {
      if (type == "cs_power") {
        k.only({"type", "lambda", "beta", "scale"});
        const double beta = k.get<double>("beta");
        if (!(beta >= 0)) k.child("beta").fail("must be non-negative");
        return Kernel::cs_power(k.positive("lambda", 1.0), beta);
      }
      if (type == "bump") {
        k.only({"type", "radius", "scale"});
        return Kernel::bump(k.positive("radius"));
      }
      if (type == "gaussian") {
        k.only({"type", "width", "scale"});
        return Kernel::gaussian(k.positive("width"));
      }
      if (type == "bochner") {
        k.only({"type", "psi", "scale"});
        return Kernel::bochner(parse_kernel(k.at("psi")));
      }
      if (type == "tabulated") {
        k.only({"type", "r", "values", "scale"});
        return Kernel::tabulated(k.list<double>("r"), k.list<double>("values"));
      }
      k.child("type").fail("unknown kernel type '" + type + "' (cs_power, bump, gaussian, bochner, tabulated)");
    }();
    if (k.has("scale")) out = out.scaled(k.positive("scale"));
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    k.fail(e.what());
  }
}

inline Model parse_model(const ConfigNode& m) {
  const ConfigNode kind_node = m.at("kind");
  ModelKind kind;
  try {
    kind = parse_kind(kind_node.as<std::string>());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    kind_node.fail(e.what());
  }
  auto kernel = [&] { return parse_kernel(m.at("kernel")); };
  try {
    switch (kind) {
      case ModelKind::global:
        m.only({"kind"});
        return Model::global();
      case ModelKind::identity:
        m.only({"kind"});
        return Model::identity();
      case ModelKind::cucker_smale:
        m.only({"kind", "kernel"});
        return Model::cucker_smale(kernel());
      case ModelKind::motsch_tadmor:
        m.only({"kind", "kernel"});
        return Model::motsch_tadmor(kernel());
      case ModelKind::beta:
        m.only({"kind", "kernel", "beta"});
        if (double b = m.get<double>("beta"); !(b >= 0 && b <= 1)) m.child("beta").fail("must lie in [0, 1]");
        return Model::beta(kernel(), m.get<double>("beta"));
      case ModelKind::overmollified:
        m.only({"kind", "kernel", "quad_nodes"});
        return Model::overmollified(kernel(), m.get<int>("quad_nodes", 512));
      case ModelKind::segregation: {
        m.only({"kind", "bumps", "period", "width_factor", "centers", "width"});
        if (m.has("centers")) {
          SegregationSpec s;
          auto c = m.list<double>("centers");
          s.centers = Eigen::Map<Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
          s.width = m.get<double>("width");
          return Model::segregation(std::move(s));
        }
        return Model::segregation_uniform(m.count("bumps", 4), m.positive("period", 1.0), m.positive("width_factor", 1.0));
      }
      case ModelKind::rough_partition:
        m.only({"kind", "cuts"});
        return Model::rough_partition({m.list<double>("cuts")});
      case ModelKind::topological: {
        m.only({"kind", "kernel", "alpha", "eps", "eta", "ecc"});
        TopologicalSpec t;
        t.alpha = m.get<double>("alpha", t.alpha);
        t.eps = m.get<double>("eps", t.eps);
        t.eta = m.get<double>("eta", t.eta);
        t.ecc = m.get<double>("ecc", t.ecc);
        return Model::topological(kernel(), t);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    m.fail(e.what());
  }
  m.fail("unhandled model kind");
}

// One representative instance per model family, used by list-models and the property suite.
inline Model builtin_model(ModelKind k) {
  switch (k) {
    case ModelKind::global: return Model::global();
    case ModelKind::identity: return Model::identity();
    case ModelKind::cucker_smale: return Model::cucker_smale(Kernel::cs_power(1.0, 1.0));
    case ModelKind::motsch_tadmor: return Model::motsch_tadmor(Kernel::bump(0.3));
    case ModelKind::beta: return Model::beta(Kernel::gaussian(0.15), 0.5);
    case ModelKind::overmollified: return Model::overmollified(Kernel::bump(0.3), 256);
    case ModelKind::segregation: return Model::segregation_uniform(4, 1.0, 1.0);
    case ModelKind::rough_partition: return Model::rough_partition({{0.0, 0.25, 0.5, 0.75}});
    case ModelKind::topological: return Model::topological(Kernel::bump(0.4), {});
  }
  throw Error("unknown model kind");
}

// ---- experiment config

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::flocking;
  std::uint64_t seed = 0;
  std::string name;      // output subdirectory
  std::optional<Model> model;
  std::vector<ModelKind> suite_models;  // property_suite
  YAML::Node root;       // the whole document, for experiment-specific sections
  std::string text;      // raw config text (hashed into the manifest)
  std::string source;    // file path or "<string>"

  ConfigNode section(const std::string& key) const {
    ConfigNode top(root, "", 1);
    return top.has(key) ? top.child(key) : ConfigNode(YAML::Node(YAML::NodeType::Map), key, 1);
  }
};

inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>") {
  ExperimentConfig c;
  c.text = text;
  c.source = source;
  try {
    c.root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.mark.line + 1, "", "YAML syntax error: " + e.msg);
  }
  ConfigNode top(c.root, "", 1);
  if (!top.is_map()) top.fail("config must be a mapping");
  top.only({"experiment", "seed", "name", "model", "models", "initial", "numerics", "checks"});

  const ConfigNode kind = top.at("experiment");
  static const std::map<std::string, ExperimentKind> kinds = {
      {"flocking", ExperimentKind::flocking},         {"relaxation", ExperimentKind::relaxation},
      {"meanfield", ExperimentKind::meanfield},       {"gap_survey", ExperimentKind::gap_survey},
      {"hydro_threshold", ExperimentKind::hydro_threshold},
      {"monokinetic_limit", ExperimentKind::monokinetic_limit},
      {"property_suite", ExperimentKind::property_suite}};
  auto it = kinds.find(kind.as<std::string>());
  if (it == kinds.end()) kind.fail("unknown experiment kind '" + kind.as<std::string>() + "'");
  c.kind = it->second;

  const ConfigNode seed = top.at("seed");
  long long s = seed.as<long long>();
  if (s < 0) seed.fail("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(s);

  c.name = top.get<std::string>("name", experiment_name(c.kind));
  if (c.name.empty() || c.name.find("..") != std::string::npos || c.name.front() == '/')
    top.child("name").fail("must be a relative directory name");

  if (c.kind == ExperimentKind::property_suite) {
    if (top.has("models")) {
      ConfigNode ms = top.child("models");
      if (ms.is_sequence()) {
        for (size_t i = 0; i < ms.size(); ++i) {
          try {
            c.suite_models.push_back(parse_kind(ms[i].as<std::string>()));
          } catch (const ConfigError&) {
            throw;
          } catch (const Error& e) {
            ms[i].fail(e.what());
          }
        }
      } else if (ms.as<std::string>() != "all") {
        ms.fail("expected 'all' or a list of model names");
      }
    }
    if (c.suite_models.empty()) c.suite_models = all_model_kinds();
  } else {
    c.model = parse_model(top.at("model"));
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError(0, "", "cannot open config file " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), p.string());
}

}  // namespace envavg
