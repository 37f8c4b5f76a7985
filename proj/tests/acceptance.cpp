// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance [work-dir] [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kfql/cli.hpp"
#include "kfql/config.hpp"
#include "kfql/harness.hpp"
#include "kfql/learners.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kfql;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Final-snapshot performance per run, read back from a written curve CSV.
struct FinalPoint {
  std::uint64_t visited = 0;
  std::vector<double> per_run;
  double mean = std::nan("");
};

std::map<std::string, FinalPoint> final_points(const fs::path& csv, bool key_by_method) {
  std::map<std::string, FinalPoint> out;
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 5) continue;
    auto& p = out[key_by_method ? f[1] : f[0]];
    const auto visited = std::stoull(f[2]);
    if (visited > p.visited || (p.per_run.empty() && std::isnan(p.mean))) {
      p = FinalPoint{visited, {}, std::nan("")};
    }
    if (visited < p.visited) continue;
    if (f[3] == "mean") {
      p.mean = std::stod(f[4]);
    } else if (f[3] != "stderr") {
      p.per_run.push_back(std::stod(f[4]));
    }
  }
  return out;
}

struct RunResult {
  int exit_code = -1;
  fs::path dir;
  json manifest;
};

RunResult run_cli(const fs::path& dir, const std::string& preset,
                  std::vector<std::string> overrides, bool noise_compare = false) {
  fs::remove_all(dir);
  cli::Options o;
  o.preset = preset;
  o.out = dir.string();
  o.overrides = std::move(overrides);
  std::ostringstream log;
  RunResult r;
  r.dir = dir;
  r.exit_code = noise_compare ? cli::cmd_noise_compare(o, log) : cli::cmd_run(o, log);
  if (fs::exists(dir / cli::kManifestName)) {
    r.manifest = json::parse(slurp(dir / cli::kManifestName));
  }
  return r;
}

std::size_t aborted(const RunResult& r, const std::string& learner) {
  if (!r.manifest.contains("aborted_runs") || !r.manifest["aborted_runs"].contains(learner)) {
    return static_cast<std::size_t>(-1);
  }
  return r.manifest["aborted_runs"][learner].get<std::size_t>();
}

const char* kAkfqlAndPtd = R"(learners=[{"name":"AKFQL","kind":"akfql"},{"name":"PTD","kind":"ptd"}])";

// ---------------------------------------------------------------- exact checks

Verdict conjugacy() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> noise(0.05, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const auto cov0 = testing::random_psd(n, rng, 0.5);
    std::vector<double> mean0(n);
    for (auto& m : mean0) m = normal(rng);
    WeightBelief belief{mean0, cov0};
    std::vector<oracle::LinearObservation> data;
    for (int k = 0; k < 200; ++k) {
      const auto phi = testing::random_basis(n, rng, 0.7);
      const double y = 2.0 * normal(rng);
      const double eps = noise(rng);
      belief = observe_full(std::move(belief), {phi, y, eps});
      data.push_back({phi.to_dense(), y, eps});
    }
    Eigen::MatrixXd c0(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c0(i, j) = cov0(i, j);
    const auto post =
        oracle::conjugate_posterior(Eigen::Map<const Eigen::VectorXd>(mean0.data(), n), c0, data);
    const auto& sigma = std::get<FullCovariance>(belief.covariance);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(belief.mean[i] - post.mean(i)));
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(sigma(i, j) - post.covariance(i, j)));
      }
    }
  }
  return {worst <= 1e-8, "max-norm error " + fmt(worst) + " (tolerance 1e-8, 50 cases x 200 obs)"};
}

Verdict diagonal_consistency() {
  std::mt19937_64 rng(102);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> var(0.0, 10.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<double> mean(n);
    DiagonalCovariance d{std::vector<double>(n)};
    FullCovariance f(n);
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] = normal(rng);
      f(i, i) = d.variances[i] = var(rng);
    }
    const Observation obs{testing::random_basis(n, rng, 0.5), 5.0 * normal(rng),
                          0.01 + var(rng)};
    const auto a = observe_diag(WeightBelief{mean, d}, obs);
    const auto b = observe_full(WeightBelief{mean, f}, obs);
    const auto& fd = std::get<FullCovariance>(b.covariance);
    const auto& dd = std::get<DiagonalCovariance>(a.covariance).variances;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(a.mean[i] - b.mean[i]));
      worst = std::max(worst, std::abs(dd[i] - fd(i, i)));
    }
  }
  return {worst <= 1e-12, "max difference " + fmt(worst) + " over 10^4 cases (tolerance 1e-12)"};
}

Verdict contraction() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const Observation obs{testing::random_basis(n, rng, 0.6), unit(rng), unit(rng)};
    const WeightBelief full{std::vector<double>(n), testing::random_psd(n, rng)};
    DiagonalCovariance d{std::vector<double>(n)};
    for (auto& v : d.variances) v = unit(rng);
    const WeightBelief diag{std::vector<double>(n), d};
    for (const auto* prior : {&full, &diag}) {
      const auto post = observe(*prior, obs);
      const double before = quadratic_form(obs.phi, prior->covariance);
      const double after = quadratic_form(obs.phi, post.covariance);
      if (after > before * (1.0 + 1e-12) + 1e-15) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) + " increases in 2x10^4 updates"};
}

Verdict noise_identities() {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> normal(0.0, 20.0);
  std::uniform_real_distribution<double> unit(0.0, 5.0);
  std::size_t failures = 0;
  double boltzmann_gap = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t a = 1 + rng() % 8;
    std::vector<double> means(a), vars(a), zeros(a, 0.0);
    for (std::size_t i = 0; i < a; ++i) {
      means[i] = normal(rng);
      vars[i] = unit(rng);
    }
    const double eps0 = unit(rng);
    const double gamma = unit(rng) / 5.0;
    const SuccessorSummary s{means, vars, 0.0, false, gamma};
    const SuccessorSummary z{means, zeros, 0.0, false, gamma};
    const double mx = sensor_noise({NoiseMethod::Max, eps0, 1.0}, s);
    for (auto m : {NoiseMethod::Policy, NoiseMethod::Average, NoiseMethod::Max,
                   NoiseMethod::Boltzmann}) {
      if (sensor_noise({m, eps0, 1.0}, z) != eps0) ++failures;
      if (sensor_noise({m, eps0, 0.1 + unit(rng)}, s) > mx) ++failures;
    }
    const double avg = sensor_noise({NoiseMethod::Average, eps0, 1.0}, s);
    const double hot = sensor_noise({NoiseMethod::Boltzmann, eps0, 1e9}, s);
    boltzmann_gap = std::max(boltzmann_gap, std::abs(hot - avg));
  }
  const bool ok = failures == 0 && boltzmann_gap <= 1e-6;
  return {ok, std::to_string(failures) + " identity violations; |Boltzmann(1e9) - Average| max " +
                  fmt(boltzmann_gap) + " (tolerance 1e-6)"};
}

Verdict tabular() {
  // Deterministic, continuing: rows are (state, action).
  const std::vector<std::size_t> next{1, 2, 2, 0, 0, 1};
  const std::vector<double> reward{0.0, 1.0, 2.0, -1.0, 0.5, 3.0};
  const std::vector<bool> terminal{false, false, false};
  const double gamma = 0.5;
  const auto q = oracle::value_iteration(3, 2, next, reward, terminal, gamma);
  TabularTask task(3, 2, next, reward, terminal, 0);

  auto config = [&](LearnerKind kind) {
    GenerationConfig g;
    g.learner = kind;
    g.noise = {NoiseMethod::Max, 1e-6, 1.0};
    g.prior_mean.assign(6, 0.0);
    g.prior_variance = 100.0;
    g.rate = {0.5, 1e4};
    g.exploration_temperature = 5.0;
    g.gamma = gamma;
    g.budget = 200000;
    g.snapshots = {g.budget};
    g.seed = 5;
    return g;
  };
  auto error = [&](LearnerKind kind) {
    const auto w = generate(config(kind), task).back().weights;
    double e = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) e = std::max(e, std::abs(w[i] - q[i]));
    return e;
  };
  const double ptd = error(LearnerKind::PTD);
  const double kfql = error(LearnerKind::KFQL);
  return {ptd <= 1e-3 && kfql <= 1e-2, "max |Q - Q*|: PTD " + fmt(ptd) + " (<= 1e-3), KFQL " +
                                           fmt(kfql) + " (<= 1e-2, eps0 = 1e-6)"};
}

// -------------------------------------------------------------- benchmarks

struct Context {
  fs::path root;
  std::map<std::string, RunResult> runs;
};

Verdict cartpole(Context& ctx) {
  auto r = run_cli(ctx.root / "c6_cartpole", "cartpole-paper",
                   {"runs=10", "defaults.budget=200000", "evaluation.trials=5", kAkfqlAndPtd});
  ctx.runs["c6"] = r;
  if (r.exit_code != cli::kSuccess) return {false, "run failed with exit " + std::to_string(r.exit_code)};
  const auto ak = final_points(r.dir / "AKFQL.csv", false)["AKFQL"];
  const auto td = final_points(r.dir / "PTD.csv", false)["PTD"];
  const auto above = std::count_if(ak.per_run.begin(), ak.per_run.end(),
                                   [](double v) { return v > 10000.0; });
  const double ratio = ak.mean / td.mean;
  const bool ok = ak.per_run.size() == 10 && ratio >= 5.0 && above * 2 > 10;
  return {ok, "AKFQL mean " + fmt(ak.mean) + " vs PTD " + fmt(td.mean) + " (ratio " + fmt(ratio) +
                  ", need >= 5); AKFQL > 10000 steps in " + std::to_string(above) +
                  "/10 runs (need majority)"};
}

Verdict carhill(Context& ctx) {
  auto r = run_cli(ctx.root / "c7_carhill", "carhill-paper",
                   {"runs=10", "defaults.budget=500000", kAkfqlAndPtd});
  ctx.runs["c7"] = r;
  if (r.exit_code != cli::kSuccess) return {false, "run failed with exit " + std::to_string(r.exit_code)};
  const auto ak = final_points(r.dir / "AKFQL.csv", false)["AKFQL"];
  const auto td = final_points(r.dir / "PTD.csv", false)["PTD"];
  const auto positive =
      std::count_if(ak.per_run.begin(), ak.per_run.end(), [](double v) { return v > 0.0; });
  const bool ok = ak.per_run.size() == 10 && positive >= 6 && ak.mean > td.mean;
  return {ok, "AKFQL positive return in " + std::to_string(positive) +
                  "/10 runs (need >= 6); final mean AKFQL " + fmt(ak.mean) + " vs PTD " +
                  fmt(td.mean)};
}

Verdict cashier(Context& ctx) {
  auto r = run_cli(ctx.root / "c8_cashier", "cashier-paper", {"runs=10", kAkfqlAndPtd});
  ctx.runs["c8"] = r;
  if (r.exit_code != cli::kSuccess) return {false, "run failed with exit " + std::to_string(r.exit_code)};
  const auto ak = final_points(r.dir / "AKFQL.csv", false)["AKFQL"];
  const auto td = final_points(r.dir / "PTD.csv", false)["PTD"];

  const auto config = parse_config(std::string_view(preset_text("cashier-paper")));
  const auto task = make_task(config.environment);
  EvaluationSpec spec = config.evaluation;
  spec.trials = 100;
  Rng rng(derive_seed(config.seed, 0xca51e7));
  const auto random = evaluate_random(*task, spec, rng);
  const double random_cost = -std::accumulate(random.begin(), random.end(), 0.0) /
                             static_cast<double>(random.size());
  const double ak_cost = -ak.mean;
  const double td_cost = -td.mean;
  const double improvement = 1.0 - ak_cost / random_cost;
  const bool ok = ak.per_run.size() == 10 && improvement >= 0.10 && ak_cost <= td_cost;
  return {ok, "mean per-step cost: AKFQL " + fmt(ak_cost) + ", PTD " + fmt(td_cost) +
                  ", uniform random " + fmt(random_cost) + "; AKFQL improvement over random " +
                  fmt(100.0 * improvement, 3) + "% (need >= 10%), AKFQL <= PTD required"};
}

Verdict instability(Context& ctx) {
  auto r = run_cli(ctx.root / "c9_kfql_carhill", "carhill-paper",
                   {"runs=4", "defaults.budget=100000", "defaults.sensor_noise.epsilon0=0",
                    R"(learners=[{"name":"KFQL","kind":"kfql"}])"});
  const std::size_t kfql_aborts = aborted(r, "KFQL");
  std::size_t akfql_aborts = 0;
  bool counts_present = kfql_aborts != static_cast<std::size_t>(-1);
  for (const char* key : {"c6", "c7", "c8"}) {
    const auto it = ctx.runs.find(key);
    if (it == ctx.runs.end()) {
      counts_present = false;
      continue;
    }
    const auto n = aborted(it->second, "AKFQL");
    if (n == static_cast<std::size_t>(-1)) {
      counts_present = false;
    } else {
      akfql_aborts += n;
    }
  }
  std::string first;
  if (r.manifest.contains("aborts") && !r.manifest["aborts"].empty()) {
    first = r.manifest["aborts"][0]["diagnostic"].get<std::string>();
  }
  const bool ok = counts_present && kfql_aborts != static_cast<std::size_t>(-1) &&
                  kfql_aborts > 0 && akfql_aborts == 0;
  return {ok, "KFQL car-hill eps0 = 0: " + std::to_string(kfql_aborts) +
                  "/4 runs aborted (need > 0); AKFQL aborts across criteria 6-8: " +
                  std::to_string(akfql_aborts) + " (need 0); manifest counts present: " +
                  (counts_present ? "yes" : "no") + (first.empty() ? "" : "; e.g. '" + first + "'")};
}

Verdict noise_compare(Context& ctx) {
  auto r = run_cli(ctx.root / "c10_noise", "cartpole-paper",
                   {"runs=10", "defaults.budget=200000", "evaluation.trials=5",
                    R"(learners=[{"name":"AKFQL","kind":"akfql"}])"},
                   true);
  if (r.exit_code != cli::kSuccess) return {false, "noise-compare failed with exit " + std::to_string(r.exit_code)};
  auto points = final_points(r.dir / cli::kNoiseCompareCsv, true);
  const double policy = points["policy"].mean;
  const double average = points["average"].mean;
  const double max = points["max"].mean;
  const double boltzmann = points["boltzmann"].mean;
  const bool ok = policy >= boltzmann && average >= boltzmann;
  return {ok, "final means: policy " + fmt(policy) + ", average " + fmt(average) + ", max " +
                  fmt(max) + ", boltzmann " + fmt(boltzmann) +
                  " (need policy, average >= boltzmann)"};
}

Verdict reproducibility(Context& ctx) {
  const std::vector<std::string> small{"runs=2", "defaults.budget=3000", "evaluation.trials=2",
                                       "evaluation.horizon=300"};
  std::vector<std::string> problems;
  std::size_t files = 0;
  for (const auto& preset : preset_list()) {
    const auto a = run_cli(ctx.root / "c11" / (preset.name + "_a"), preset.name, small);
    const auto b = run_cli(ctx.root / "c11" / (preset.name + "_b"), preset.name, small);
    if (a.exit_code != cli::kSuccess || b.exit_code != cli::kSuccess) {
      problems.push_back(preset.name + ": run failed");
      continue;
    }
    for (const auto& entry : fs::directory_iterator(a.dir)) {
      if (!entry.is_regular_file()) continue;
      ++files;
      const auto name = entry.path().filename();
      if (slurp(entry.path()) != slurp(b.dir / name)) {
        problems.push_back(preset.name + ": " + name.string() + " differs between reruns");
      }
    }
    std::ostringstream log;
    if (cli::cmd_replay(a.dir / cli::kManifestName, "", 1, log) != cli::kSuccess) {
      problems.push_back(preset.name + ": replay failed");
    }
  }
  std::string detail = std::to_string(preset_list().size()) + " presets replayed, " +
                       std::to_string(files) + " files compared byte for byte";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path root = fs::temp_directory_path() / "kfql_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string n; std::getline(ss, n, ',');) only.insert(std::stoi(n));
    } else {
      root = arg;
    }
  }
  fs::create_directories(root);
  Context ctx{root, {}};

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"C1 conjugate posterior", conjugacy},
      {"C2 diagonal consistency", diagonal_consistency},
      {"C3 variance contraction", contraction},
      {"C4 sensor-noise identities", noise_identities},
      {"C5 tabular reduction", tabular},
      {"C6 cart-pole ordering", [&] { return cartpole(ctx); }},
      {"C7 car-hill ordering", [&] { return carhill(ctx); }},
      {"C8 cashier ordering", [&] { return cashier(ctx); }},
      {"C9 instability surfacing", [&] { return instability(ctx); }},
      {"C10 noise-method comparison", [&] { return noise_compare(ctx); }},
      {"C11 reproducibility", [&] { return reproducibility(ctx); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.contains(static_cast<int>(i + 1))) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << criteria[i].first << ": " << v.detail
              << " [" << fmt(secs, 3) << " s]" << std::endl;
    failed += v.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion(s) failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
