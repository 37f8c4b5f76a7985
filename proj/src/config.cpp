#include "kfql/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace kfql {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(path.empty() ? "config error: " + message
                                      : "config error at '" + path + "': " + message),
      path_(std::move(path)) {}

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

std::uint64_t as_count(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  // Accept integral floats such as 2e5.
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0.0 && std::floor(v) == v && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  throw ConfigError(path, "expected a non-negative integer");
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], index_path(path, i)));
  return out;
}

// Reads keys of one JSON object and rejects the ones nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string sub(const std::string& key) const { return join_path(path_, key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) throw ConfigError(sub(key), "required key is missing");
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, sub(key)) : fallback;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    return v ? as_count(*v, sub(key)) : fallback;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    return v ? as_string(*v, sub(key)) : fallback;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = find(key);
    return v ? as_numbers(*v, sub(key)) : std::move(fallback);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) throw ConfigError(sub(item.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs a validating call and re-labels its std::invalid_argument with a path.
template <class F>
void checked(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

template <class Parse>
auto parse_enum(ObjectReader& r, const std::string& key, Parse parse, const std::string& fallback) {
  const std::string path = r.sub(key);
  const std::string text = r.string(key, fallback);
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

Metric parse_metric(std::string_view name) {
  if (name == "return") return Metric::Return;
  if (name == "mean_reward") return Metric::MeanReward;
  throw std::invalid_argument("unknown metric '" + std::string(name) +
                              "' (expected return|mean_reward)");
}

std::string_view to_string(EpsilonReading reading) {
  return reading == EpsilonReading::Variance ? "variance" : "stddev";
}

EpsilonReading parse_reading(std::string_view name) {
  if (name == "variance") return EpsilonReading::Variance;
  if (name == "stddev") return EpsilonReading::StdDev;
  throw std::invalid_argument("unknown epsilon0_reading '" + std::string(name) +
                              "' (expected variance|stddev)");
}

GridSpec default_grid(EnvKind kind) {
  return kind == EnvKind::CarHill ? carhill_grid() : cartpole_grid();
}

EnvironmentConfig parse_environment(const json& j, const json* basis) {
  ObjectReader r(j, "environment");
  EnvironmentConfig env;
  env.kind = parse_enum(r, "kind", parse_env_kind, "");
  switch (env.kind) {
    case EnvKind::CartPole: {
      auto& p = env.cartpole;
      p.cart_mass = r.number("cart_mass", p.cart_mass);
      p.pole_mass = r.number("pole_mass", p.pole_mass);
      p.pole_length = r.number("pole_length", p.pole_length);
      p.gravity = r.number("gravity", p.gravity);
      p.cart_friction = r.number("cart_friction", p.cart_friction);
      p.pole_friction = r.number("pole_friction", p.pole_friction);
      p.control_dt = r.number("control_dt", p.control_dt);
      p.substep_dt = r.number("substep_dt", p.substep_dt);
      p.forces = r.numbers("forces", p.forces);
      p.noise_halfwidth = r.number("noise_halfwidth", p.noise_halfwidth);
      p.fail_angle = r.number("fail_angle", p.fail_angle);
      p.initial_theta_halfwidth = r.number("initial_theta_halfwidth", p.initial_theta_halfwidth);
      p.gamma = r.number("gamma", p.gamma);
      checked("environment", [&] { p.validate(); });
      break;
    }
    case EnvKind::Cashier: {
      auto& c = env.cashier;
      c.queues = r.count("queues", c.queues);
      const std::string jobs_path = r.sub("jobs");
      const auto jobs = r.count("jobs", static_cast<std::uint64_t>(c.jobs));
      if (jobs > 1'000'000'000ULL) throw ConfigError(jobs_path, "too many jobs");
      c.jobs = static_cast<int>(jobs);
      c.cost = parse_enum(r, "cost", parse_cashier_cost, std::string(to_string(c.cost)));
      c.routing_seed = r.count("routing_seed", c.routing_seed);
      c.gamma = r.number("gamma", c.gamma);
      if (c.queues < 1) throw ConfigError(r.sub("queues"), "must be >= 1");
      if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError(r.sub("gamma"), "must be in (0,1]");
      break;
    }
    case EnvKind::CarHill: {
      auto& p = env.carhill;
      p.forces = r.numbers("forces", p.forces);
      p.control_dt = r.number("control_dt", p.control_dt);
      p.euler_dt = r.number("euler_dt", p.euler_dt);
      p.gamma = r.number("gamma", p.gamma);
      p.mass = r.number("mass", p.mass);
      p.gravity = r.number("gravity", p.gravity);
      checked("environment", [&] { p.validate(); });
      break;
    }
  }
  r.finish();

  if (env.kind == EnvKind::Cashier) {
    if (basis != nullptr) throw ConfigError("basis", "the cashier environment has no grid basis");
    return env;
  }
  env.grid = default_grid(env.kind);
  env.grid.action_count =
      env.kind == EnvKind::CartPole ? env.cartpole.forces.size() : env.carhill.forces.size();
  if (basis != nullptr) {
    ObjectReader b(*basis, "basis");
    env.grid.axis1 = b.numbers("axis1", env.grid.axis1);
    env.grid.axis2 = b.numbers("axis2", env.grid.axis2);
    env.grid.width1 = b.number("width1", env.grid.width1);
    env.grid.width2 = b.number("width2", env.grid.width2);
    b.finish();
  }
  checked("basis", [&] { env.grid.validate(); });
  return env;
}

EvaluationSpec parse_evaluation(const json* j, EnvKind kind) {
  EvaluationSpec spec = default_evaluation(kind);
  if (j == nullptr) return spec;
  ObjectReader r(*j, "evaluation");
  spec.trials = r.count("trials", spec.trials);
  spec.horizon = r.count("horizon", spec.horizon);
  spec.gamma = r.number("gamma", spec.gamma);
  spec.metric = parse_enum(r, "metric", parse_metric, std::string(to_string(spec.metric)));
  r.finish();
  if (spec.trials < 1) throw ConfigError("evaluation.trials", "must be >= 1");
  if (spec.horizon < 1) throw ConfigError("evaluation.horizon", "must be >= 1");
  if (!(spec.gamma >= 0.0 && spec.gamma <= 1.0)) {
    throw ConfigError("evaluation.gamma", "must be in [0,1]");
  }
  return spec;
}

bool valid_name(const std::string& name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char ch) {
    return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
  }) && name.front() != '.';
}

LearnerConfig parse_learner(const json& j, const std::string& path, const EnvironmentConfig& env) {
  ObjectReader r(j, path);
  LearnerConfig lc;
  lc.kind = parse_enum(r, "kind", parse_learner_kind, "");
  lc.name = r.string("name", std::string(to_string(lc.kind)));
  if (!valid_name(lc.name)) {
    throw ConfigError(r.sub("name"), "must be 1-64 characters of [A-Za-z0-9_.-]");
  }

  if (const json* noise = r.find("sensor_noise")) {
    ObjectReader n(*noise, r.sub("sensor_noise"));
    lc.noise.kind = parse_enum(n, "method", parse_noise_method, "max");
    lc.noise.epsilon0 = n.number("epsilon0", lc.noise.epsilon0);
    lc.noise.temperature = n.number("temperature", lc.noise.temperature);
    lc.reading = parse_enum(n, "epsilon0_reading", parse_reading, "variance");
    n.finish();
    if (!(lc.noise.epsilon0 >= 0.0)) throw ConfigError(n.sub("epsilon0"), "must be >= 0");
    if (!(lc.noise.temperature > 0.0)) throw ConfigError(n.sub("temperature"), "must be > 0");
  }

  if (const json* prior = r.find("prior")) {
    ObjectReader p(*prior, r.sub("prior"));
    lc.prior_variance = p.number("variance", lc.prior_variance);
    if (!(lc.prior_variance >= 0.0)) throw ConfigError(p.sub("variance"), "must be >= 0");
    if (const json* mean = p.find("mean")) {
      const std::string mpath = p.sub("mean");
      if (mean->is_number()) {
        lc.prior_mean = {PriorMeanSpec::Kind::Constant, as_number(*mean, mpath), {}};
      } else if (mean->is_string()) {
        if (as_string(*mean, mpath) != "carhill") {
          throw ConfigError(mpath, "expected a number, an array, or \"carhill\"");
        }
        if (env.kind != EnvKind::CarHill) {
          throw ConfigError(mpath, "the \"carhill\" prior needs the carhill environment");
        }
        lc.prior_mean = {PriorMeanSpec::Kind::CarHill, 0.0, {}};
      } else {
        lc.prior_mean = {PriorMeanSpec::Kind::Explicit, 0.0, as_numbers(*mean, mpath)};
        if (lc.prior_mean.values.size() != env.feature_count()) {
          throw ConfigError(mpath, "dimension mismatch: " +
                                       std::to_string(lc.prior_mean.values.size()) +
                                       " values for " + std::to_string(env.feature_count()) +
                                       " basis functions");
        }
      }
    }
    p.finish();
  }

  if (const json* rate = r.find("learning_rate")) {
    ObjectReader lr(*rate, r.sub("learning_rate"));
    lc.rate.s = lr.number("s", lc.rate.s);
    lc.rate.c = lr.number("c", lc.rate.c);
    lr.finish();
    if (!(lc.rate.s > 0.0)) throw ConfigError(lr.sub("s"), "must be > 0");
    if (!(lc.rate.c > 0.0)) throw ConfigError(lr.sub("c"), "must be > 0");
  }

  lc.exploration_temperature = r.number("exploration_temperature", lc.exploration_temperature);
  if (!(lc.exploration_temperature > 0.0)) {
    throw ConfigError(r.sub("exploration_temperature"), "must be > 0");
  }
  lc.budget = as_count(r.require("budget"), r.sub("budget"));

  if (const json* snaps = r.find("snapshots")) {
    const std::string spath = r.sub("snapshots");
    if (snaps->is_array()) {
      lc.snapshots.points.clear();
      for (std::size_t i = 0; i < snaps->size(); ++i) {
        lc.snapshots.points.push_back(as_count((*snaps)[i], index_path(spath, i)));
      }
      if (lc.snapshots.points.empty()) throw ConfigError(spath, "must not be empty");
      if (!std::is_sorted(lc.snapshots.points.begin(), lc.snapshots.points.end()) ||
          std::adjacent_find(lc.snapshots.points.begin(), lc.snapshots.points.end()) !=
              lc.snapshots.points.end()) {
        throw ConfigError(spath, "must be strictly increasing");
      }
      if (lc.snapshots.points.back() > lc.budget) throw ConfigError(spath, "exceeds the budget");
    } else {
      ObjectReader s(*snaps, spath);
      const auto per_decade = s.count("per_decade", lc.snapshots.per_decade);
      s.finish();
      if (per_decade < 1 || per_decade > 1000) {
        throw ConfigError(s.sub("per_decade"), "must be in [1, 1000]");
      }
      lc.snapshots.per_decade = static_cast<unsigned>(per_decade);
    }
  }
  r.finish();
  return lc;
}

json learner_to_json(const LearnerConfig& lc) {
  json prior;
  prior["variance"] = lc.prior_variance;
  switch (lc.prior_mean.kind) {
    case PriorMeanSpec::Kind::Constant: prior["mean"] = lc.prior_mean.value; break;
    case PriorMeanSpec::Kind::CarHill: prior["mean"] = "carhill"; break;
    case PriorMeanSpec::Kind::Explicit: prior["mean"] = lc.prior_mean.values; break;
  }
  json snapshots;
  if (lc.snapshots.points.empty()) {
    snapshots["per_decade"] = lc.snapshots.per_decade;
  } else {
    snapshots = lc.snapshots.points;
  }
  return json{
      {"name", lc.name},
      {"kind", std::string(to_string(lc.kind))},
      {"sensor_noise",
       {{"method", std::string(to_string(lc.noise.kind))},
        {"epsilon0", lc.noise.epsilon0},
        {"temperature", lc.noise.temperature},
        {"epsilon0_reading", std::string(to_string(lc.reading))}}},
      {"prior", prior},
      {"learning_rate", {{"s", lc.rate.s}, {"c", lc.rate.c}}},
      {"exploration_temperature", lc.exploration_temperature},
      {"budget", lc.budget},
      {"snapshots", snapshots},
  };
}

}  // namespace

double EnvironmentConfig::gamma() const {
  switch (kind) {
    case EnvKind::CartPole: return cartpole.gamma;
    case EnvKind::Cashier: return cashier.gamma;
    case EnvKind::CarHill: return carhill.gamma;
  }
  return 1.0;
}

std::size_t EnvironmentConfig::feature_count() const {
  return kind == EnvKind::Cashier ? cashier.queues : grid.feature_count();
}

std::string_view to_string(Metric metric) {
  return metric == Metric::Return ? "return" : "mean_reward";
}

EvaluationSpec default_evaluation(EnvKind kind) {
  switch (kind) {
    case EnvKind::CartPole: return {1, 72000, 1.0, Metric::Return};
    case EnvKind::Cashier: return {1, 1000, 1.0, Metric::MeanReward};
    case EnvKind::CarHill: return {1, 1000, 0.999, Metric::Return};
  }
  return {};
}

json parse_config_document(std::string_view text) {
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](unsigned char ch) { return std::isspace(ch) != 0; });
  if (blank) return json::object();
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("syntax error: ") + e.what());
  }
}

ExperimentConfig parse_config(std::string_view text) {
  return parse_config(parse_config_document(text));
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");
  std::vector<std::string> missing;
  for (const char* key : {"environment", "learners"}) {
    if (!doc.contains(key)) missing.emplace_back(key);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("", "missing required keys: " + list);
  }

  ObjectReader r(doc, "");
  ExperimentConfig config;
  config.environment = parse_environment(r.require("environment"), r.find("basis"));
  config.evaluation = parse_evaluation(r.find("evaluation"), config.environment.kind);
  config.runs = r.count("runs", config.runs);
  if (config.runs < 1) throw ConfigError("runs", "must be >= 1");
  config.seed = r.count("seed", config.seed);
  config.output = r.string("output", config.output);

  json defaults = json::object();
  if (const json* d = r.find("defaults")) {
    if (!d->is_object()) throw ConfigError("defaults", "expected an object");
    defaults = *d;
  }
  const json& learners = r.require("learners");
  if (!learners.is_array() || learners.empty()) {
    throw ConfigError("learners", "expected a non-empty array");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < learners.size(); ++i) {
    const std::string path = index_path("learners", i);
    if (!learners[i].is_object()) throw ConfigError(path, "expected an object");
    json merged = defaults;
    merged.merge_patch(learners[i]);
    auto lc = parse_learner(merged, path, config.environment);
    if (!names.insert(lc.name).second) {
      throw ConfigError(path + ".name", "duplicate learner name '" + lc.name + "'");
    }
    config.learners.push_back(std::move(lc));
  }
  r.finish();
  return config;
}

json to_json(const ExperimentConfig& config) {
  const auto& env = config.environment;
  json e;
  e["kind"] = std::string(to_string(env.kind));
  json doc;
  switch (env.kind) {
    case EnvKind::CartPole: {
      const auto& p = env.cartpole;
      e["cart_mass"] = p.cart_mass;
      e["pole_mass"] = p.pole_mass;
      e["pole_length"] = p.pole_length;
      e["gravity"] = p.gravity;
      e["cart_friction"] = p.cart_friction;
      e["pole_friction"] = p.pole_friction;
      e["control_dt"] = p.control_dt;
      e["substep_dt"] = p.substep_dt;
      e["forces"] = p.forces;
      e["noise_halfwidth"] = p.noise_halfwidth;
      e["fail_angle"] = p.fail_angle;
      e["initial_theta_halfwidth"] = p.initial_theta_halfwidth;
      e["gamma"] = p.gamma;
      break;
    }
    case EnvKind::Cashier: {
      const auto& c = env.cashier;
      e["queues"] = c.queues;
      e["jobs"] = c.jobs;
      e["cost"] = std::string(to_string(c.cost));
      e["routing_seed"] = c.routing_seed;
      e["gamma"] = c.gamma;
      break;
    }
    case EnvKind::CarHill: {
      const auto& p = env.carhill;
      e["forces"] = p.forces;
      e["control_dt"] = p.control_dt;
      e["euler_dt"] = p.euler_dt;
      e["gamma"] = p.gamma;
      e["mass"] = p.mass;
      e["gravity"] = p.gravity;
      break;
    }
  }
  doc["environment"] = e;
  if (env.kind != EnvKind::Cashier) {
    doc["basis"] = {{"axis1", env.grid.axis1},
                    {"axis2", env.grid.axis2},
                    {"width1", env.grid.width1},
                    {"width2", env.grid.width2}};
  }
  doc["evaluation"] = {{"trials", config.evaluation.trials},
                       {"horizon", config.evaluation.horizon},
                       {"gamma", config.evaluation.gamma},
                       {"metric", std::string(to_string(config.evaluation.metric))}};
  doc["runs"] = config.runs;
  doc["seed"] = config.seed;
  doc["output"] = config.output;
  doc["learners"] = json::array();
  for (const auto& lc : config.learners) doc["learners"].push_back(learner_to_json(lc));
  return doc;
}

std::string serialize(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

void apply_overrides(json& doc, const std::vector<std::string>& assignments) {
  for (const auto& assignment : assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(assignment, "override must look like key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError(key, "empty path component");
      const bool last = dot == std::string::npos;
      if (node->is_array()) {
        if (!std::all_of(part.begin(), part.end(), [](unsigned char c) { return std::isdigit(c); })) {
          throw ConfigError(key, "'" + part + "' is not an array index");
        }
        const auto idx = std::stoul(part);
        if (idx >= node->size()) throw ConfigError(key, "array index out of range");
        node = &(*node)[idx];
      } else {
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw ConfigError(key, "cannot descend into a scalar");
        node = &(*node)[part];
      }
      if (last) break;
      start = dot + 1;
    }
    *node = value;
  }
}

std::unique_ptr<Task> make_task(const EnvironmentConfig& env) {
  switch (env.kind) {
    case EnvKind::CartPole: return std::make_unique<CartPoleTask>(env.cartpole, env.grid);
    case EnvKind::Cashier: {
      const auto& c = env.cashier;
      return std::make_unique<CashierTask>(
          CashierParams::make(c.queues, c.jobs, c.cost, c.routing_seed, c.gamma));
    }
    case EnvKind::CarHill: return std::make_unique<CarHillTask>(env.carhill, env.grid);
  }
  throw std::logic_error("unreachable");
}

GenerationConfig generation_config(const LearnerConfig& lc, const EnvironmentConfig& env) {
  GenerationConfig g;
  g.learner = lc.kind;
  g.noise = lc.noise;
  if (lc.reading == EpsilonReading::StdDev) g.noise.epsilon0 = lc.noise.epsilon0 * lc.noise.epsilon0;
  const std::size_t n = env.feature_count();
  switch (lc.prior_mean.kind) {
    case PriorMeanSpec::Kind::Constant: g.prior_mean.assign(n, lc.prior_mean.value); break;
    case PriorMeanSpec::Kind::CarHill: g.prior_mean = carhill_prior_mean(env.grid); break;
    case PriorMeanSpec::Kind::Explicit: g.prior_mean = lc.prior_mean.values; break;
  }
  g.prior_variance = lc.prior_variance;
  g.rate = lc.rate;
  g.exploration_temperature = lc.exploration_temperature;
  g.gamma = env.gamma();
  g.budget = lc.budget;
  g.snapshots = lc.snapshots.points.empty()
                    ? geometric_snapshots(lc.budget, lc.snapshots.per_decade)
                    : lc.snapshots.points;
  return g;
}

std::vector<LearnerSpec> learner_specs(const ExperimentConfig& config) {
  std::vector<LearnerSpec> specs;
  for (const auto& lc : config.learners) {
    specs.push_back({lc.name, generation_config(lc, config.environment)});
  }
  return specs;
}

}  // namespace kfql
