// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gridsiting/demo.h"
#include "gridsiting/dispatch.h"
#include "gridsiting/frontier.h"
#include "gridsiting/grid_model.h"
#include "gridsiting/lp.h"
#include "gridsiting/min_cost_flow.h"
#include "gridsiting/saa.h"
#include "gridsiting/weather.h"
#include "test_support.h"

namespace fs = std::filesystem;
using namespace gridsiting;
using testing::Rng;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

GridInstance bundled_demo() {
  return load_instance_file((fs::path(GRIDSITING_DATA_DIR) / "demo_small.json").string());
}

// 1. L-shaped against enumeration.
Outcome solver_oracle() {
  const auto start = Clock::now();
  Rng rng(1);
  int agree = 0;
  double worst = 0.0;
  const int instances = 50;
  for (int k = 0; k < instances; ++k) {
    testing::RandomInstanceOptions opt;
    opt.max_buses = 8;
    opt.max_sites = 8;
    const GridInstance g = testing::random_instance(rng, opt);
    const SpatialModel model = testing::random_model(rng);
    const ScenarioSet set =
        rng.coin() ? sample_iid(g, model, rng.integer(1, 20), 100 + k)
                   : sample_stratified(g, model,
                                       StratificationPlan{0.01, rng.integer(1, 6),
                                                          rng.integer(1, 8), rng.integer(1, 6)},
                                       100 + k);
    SolveConfig cfg;
    cfg.variant = rng.coin(0.25) ? Variant::kBase : Variant::kBoCvar;
    cfg.beta = rng.coin(0.2) ? 0.0 : std::exp(rng.uniform(0.0, std::log(1e4)));
    cfg.alpha = rng.coin() ? 0.99 : rng.uniform(0.5, 0.99);
    SaaProblem problem(g, set);
    const Solution e = solve_enumeration(problem, cfg);
    const Solution l = solve_lshaped(problem, cfg);
    const double rel = std::fabs(l.scalarized - e.scalarized) / std::max(1.0, std::fabs(e.scalarized));
    worst = std::max(worst, rel);
    if (rel <= 1e-6 && l.status == SolveStatus::kOptimal) ++agree;
  }
  const double secs = seconds_since(start);
  return {agree == instances && secs < 300.0,
          fmt::format("{}/{} instances within 1e-6 relative, worst {:.2e}, {:.1f} s (< 300 s)",
                      agree, instances, worst, secs)};
}

// 2. Min-cost flow against the generic simplex on the same arc-flow LP.
Outcome dispatch_oracle() {
  Rng rng(2);
  int agree = 0;
  int certified = 0;
  double worst = 0.0;
  const int networks = 100;
  for (int k = 0; k < networks; ++k) {
    FlowNetwork net;
    if (k % 2 == 0) {
      const GridInstance g = testing::random_instance(rng);
      const ScenarioSet set = sample_iid(g, testing::random_model(rng), 1, 500 + k);
      const SitingDecision x =
          SitingDecision::from_mask(g.num_sites(), static_cast<std::uint64_t>(rng.integer(0, 255)));
      net = build_network(g, x, set.scenarios[0],
                          rng.coin() ? Objective::kCost : Objective::kMinShed);
    } else {
      net.source = net.add_node(NodeRole::kSource, "s");
      const int inner = rng.integer(1, 6);
      for (int v = 0; v < inner; ++v) net.add_node(NodeRole::kBus, "v");
      net.sink = net.add_node(NodeRole::kSink, "t");
      for (int e = rng.integer(2, 14); e > 0; --e) {
        const int u = rng.integer(0, net.num_nodes() - 2);
        const int w = rng.integer(1, net.num_nodes() - 1);
        if (u != w) net.add_arc(u, w, to_units(rng.uniform(0, 12)), rng.uniform(0, 20));
      }
      net.add_arc(net.source, net.sink, to_units(60), 500.0);
      net.required_flow = to_units(rng.uniform(0.5, 50));
    }
    const FlowSolution sol = solve_min_cost_flow(net);
    const LpSolution lp = solve_lp(testing::flow_lp(net));
    const double diff = lp.status == LpStatus::kOptimal
                            ? std::fabs(sol.objective - lp.objective) / std::max(1.0, std::fabs(lp.objective))
                            : INFINITY;
    worst = std::max(worst, diff);
    if (diff <= 1e-6) ++agree;
    bool ok = std::fabs(sol.objective - sol.dual_objective) <= 1e-6;
    for (int a = 0; a < static_cast<int>(net.arcs.size()); ++a) {
      const double rc = reduced_cost(net, sol, a);
      if (sol.flow[a] < net.arcs[a].capacity && rc < -1e-9) ok = false;
      if (sol.flow[a] > 0 && rc > 1e-9) ok = false;
    }
    if (ok) ++certified;
  }
  return {agree == networks && certified == networks,
          fmt::format("{}/{} objectives within 1e-6 (worst {:.2e}), {}/{} certificates hold",
                      agree, networks, worst, certified, networks)};
}

// 3. Exhaustive Benders cut validity.
Outcome cut_validity() {
  Rng rng(3);
  long checks = 0;
  long violations = 0;
  double worst_tight = 0.0;
  for (int k = 0; k < 100; ++k) {
    const GridInstance g = testing::random_instance(rng);
    const ScenarioSet set = sample_iid(g, testing::random_model(rng), 3, 900 + k);
    const int sites = g.num_sites();
    const std::uint64_t count = std::uint64_t{1} << sites;
    for (Objective obj : {Objective::kCost, Objective::kMinShed}) {
      // value[s][m]: true recourse value of scenario s at decision m.
      std::vector<std::vector<double>> value(set.size(), std::vector<double>(count));
      for (std::size_t s = 0; s < set.size(); ++s) {
        for (std::uint64_t m = 0; m < count; ++m) {
          value[s][m] = dispatch(g, SitingDecision::from_mask(sites, m), set.scenarios[s], obj).objective;
        }
      }
      for (std::uint64_t gen = 0; gen < count; ++gen) {
        const SitingDecision xg = SitingDecision::from_mask(sites, gen);
        CutCoefficients aggregate{0.0, std::vector<double>(sites, 0.0)};
        for (std::size_t s = 0; s < set.size(); ++s) {
          const DispatchResult r = dispatch(g, xg, set.scenarios[s], obj);
          const CutCoefficients cut = cut_coefficients(r, g, set.scenarios[s]);
          const double w = set.scenarios[s].weight;
          aggregate.constant += w * cut.constant;
          for (int j = 0; j < sites; ++j) aggregate.coefficients[j] += w * cut.coefficients[j];
          worst_tight = std::max(worst_tight, std::fabs(cut.evaluate(xg) - value[s][gen]));
          for (std::uint64_t m = 0; m < count; ++m) {
            ++checks;
            if (cut.evaluate(SitingDecision::from_mask(sites, m)) > value[s][m] + 1e-6) ++violations;
          }
        }
        for (std::uint64_t m = 0; m < count; ++m) {
          double expected = 0.0;
          for (std::size_t s = 0; s < set.size(); ++s) expected += set.scenarios[s].weight * value[s][m];
          ++checks;
          if (aggregate.evaluate(SitingDecision::from_mask(sites, m)) > expected + 1e-6) ++violations;
        }
      }
    }
  }
  return {violations == 0 && worst_tight <= 1e-6,
          fmt::format("{} cut evaluations, {} violations, worst gap at generating point {:.2e}",
                      checks, violations, worst_tight)};
}

// 4. CVaR identity and shape.
Outcome cvar_identity() {
  Rng rng(4);
  double worst = 0.0;
  int monotone_fail = 0;
  int constant_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = rng.integer(1, 40);
    std::vector<double> v(n), w(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      v[i] = rng.coin(0.3) ? 0.0 : rng.uniform(0.0, 500.0);
      w[i] = rng.uniform(0.001, 1.0);
      total += w[i];
    }
    for (double& x : w) x /= total;
    const double alpha = rng.uniform(0.01, 0.999);
    const double sorted = cvar(v, w, alpha);
    worst = std::max(worst, std::fabs(sorted - testing::cvar_by_minimization(v, w, alpha)));

    const double c = rng.uniform(-50, 50);
    const std::vector<double> flat(n, c);
    if (std::fabs(cvar(flat, w, alpha) - c) > 1e-9) ++constant_fail;

    double prev = -INFINITY;
    for (double a = 0.05; a < 0.999; a += 0.05) {
      const double now = cvar(v, w, a);
      if (now < prev - 1e-9) ++monotone_fail;
      prev = now;
    }
  }
  return {worst <= 1e-9 && monotone_fail == 0 && constant_fail == 0,
          fmt::format("1000 samples, worst |sort - RU| {:.2e}, constant failures {}, "
                      "alpha-monotonicity failures {}",
                      worst, constant_fail, monotone_fail)};
}

// 5. Stratified weighted expected cost against a large i.i.d. reference.
Outcome stratified_unbiased() {
  const auto start = Clock::now();
  const GridInstance g = bundled_demo();
  const SpatialModel truth = demo_spatial_model();
  const SitingDecision x = SitingDecision::from_bits("101000");
  auto recourse = [&](const Scenario& s) { return dispatch(g, x, s, Objective::kCost).objective; };

  std::vector<double> estimates;
  for (int r = 0; r < 200; ++r) {
    const ScenarioSet set = sample_stratified(g, truth, StratificationPlan{}, 50000 + r);
    double e = 0.0;
    for (const Scenario& s : set.scenarios) e += s.weight * recourse(s);
    estimates.push_back(e);
  }
  const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / 200.0;
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= 199.0;

  double sum = 0.0, sum2 = 0.0;
  const int chunks = 10, per = 100000;
  for (int c = 0; c < chunks; ++c) {
    const ScenarioSet set = sample_iid(g, truth, per, 880000 + c);
    for (const Scenario& s : set.scenarios) {
      const double v = recourse(s);
      sum += v;
      sum2 += v * v;
    }
  }
  const double n_ref = static_cast<double>(chunks) * per;
  const double ref = sum / n_ref;
  const double ref_var = (sum2 - n_ref * ref * ref) / (n_ref - 1.0);
  const double se = std::sqrt(var / 200.0 + ref_var / n_ref);
  const double z = std::fabs(mean - ref) / se;
  const double secs = seconds_since(start);
  return {z <= 3.0 && secs < 600.0,
          fmt::format("stratified mean {:.3f}, reference {:.3f}, |diff| = {:.2f} SE (<= 3), {:.1f} s",
                      mean, ref, z, secs)};
}

// Shared by 6 and 7: best out-of-sample tail shed of one training sweep.
const std::vector<double> kBetas = {0, 1, 3, 10, 30, 100, 300, 1000, 3000, 10000};

double best_tail(const std::vector<FrontierPoint>& points) {
  double best = INFINITY;
  for (const FrontierPoint& p : points) {
    if (!p.failed()) best = std::min(best, p.oos_tail_shed);
  }
  return best;
}

struct PairedSweeps {
  std::vector<double> bo_cvar;
  std::vector<double> cond_dependent;
  std::vector<double> cond_independent;
  double seconds = 0.0;
};

const PairedSweeps& paired_sweeps() {
  static const PairedSweeps result = [] {
    const auto start = Clock::now();
    PairedSweeps r;
    const GridInstance g = bundled_demo();
    const SpatialModel truth = demo_spatial_model();
    EvalConfig ecfg;
    ecfg.m = 100000;
    ecfg.tau = 0.01;
    ecfg.seed = 20240904;
    OosEvaluator evaluator(g, truth, ecfg);
    SolveConfig scfg;
    scfg.alpha = 0.99;
    SpatialModel independent = truth;
    independent.kernel = Kernel::kIndependent;
    for (int rep = 0; rep < 20; ++rep) {
      TrainingSpec spec;
      spec.seed = 7000 + rep;
      spec.n = 300;
      spec.plan = StratificationPlan{0.01, 100, 100, 100};
      spec.model = truth;
      spec.label = ModelLabel::kBoCvar;
      r.bo_cvar.push_back(best_tail(sweep(g, spec, kBetas, scfg, evaluator)));
      spec.label = ModelLabel::kBoCvarCond;
      r.cond_dependent.push_back(best_tail(sweep(g, spec, kBetas, scfg, evaluator)));
      spec.model = independent;
      r.cond_independent.push_back(best_tail(sweep(g, spec, kBetas, scfg, evaluator)));
    }
    r.seconds = seconds_since(start);
    return r;
  }();
  return result;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += fmt::format("{}{:.2f}", out.empty() ? "" : " ", x);
  return out;
}

// 6. Conditional sampling finds lower-risk solutions.
Outcome conditional_advantage() {
  const PairedSweeps& s = paired_sweeps();
  int wins = 0;
  for (int r = 0; r < 20; ++r) wins += s.cond_dependent[r] <= s.bo_cvar[r];
  return {wins >= 15, fmt::format("bo_cvar_cond <= bo_cvar in {}/20 (need 15); best tail shed "
                                  "cond [{}] vs bo_cvar [{}]; sweeps took {:.0f} s",
                                  wins, join(s.cond_dependent), join(s.bo_cvar), s.seconds)};
}

// 7. Training under independence misses low-risk solutions.
Outcome dependence_matters() {
  const PairedSweeps& s = paired_sweeps();
  int wins = 0;
  for (int r = 0; r < 20; ++r) wins += s.cond_independent[r] > s.cond_dependent[r];
  return {wins >= 15, fmt::format("independent-trained minimum > dependent-trained in {}/20 "
                                  "(need 15); independent [{}]",
                                  wins, join(s.cond_independent))};
}

// 8. Kernel recovery on a fixed 5-bus layout.
Outcome kernel_recovery() {
  std::vector<Bus> buses;
  const double xy[5][2] = {{0, 0}, {100, 0}, {0, 150}, {200, 200}, {300, 50}};
  for (int i = 0; i < 5; ++i) {
    Bus b;
    b.id = fmt::format("k{}", i);
    b.x_km = xy[i][0];
    b.y_km = xy[i][1];
    b.base_demand_mw = 10;
    b.mean_temp_c = 18;
    buses.push_back(b);
  }
  GeneratorSpec gen;
  gen.id = "g";
  gen.bus = "k0";
  gen.capacity_mw = 10;
  const GridInstance g(buses, {}, {gen}, ResponseParams{});
  const SpatialModel model;  // sigma 5, range 500, exponential
  const int n = 50000;
  const ScenarioSet set = sample_iid(g, model, n, 424242);
  const Eigen::MatrixXd cov = build_covariance(g.buses(), model);
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(5, 5);
  for (const Scenario& s : set.scenarios) {
    Eigen::VectorXd d(5);
    for (int b = 0; b < 5; ++b) d[b] = s.temps_c[b] - g.buses()[b].mean_temp_c;
    emp += d * d.transpose();
  }
  emp /= n;
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) worst = std::max(worst, std::fabs(emp(i, j) / cov(i, j) - 1.0));
  return {worst <= 0.05, fmt::format("5e4 fields, worst entrywise relative error {:.4f} (<= 0.05)", worst)};
}

// 9. Thread count does not change the sweep CSV.
Outcome determinism() {
  const fs::path work = fs::path(GRIDSITING_TEST_WORKDIR) / "acceptance_work";
  fs::create_directories(work);
  const std::string demo = (fs::path(GRIDSITING_DATA_DIR) / "demo_small.json").string();
  auto sweep_with = [&](int threads) {
    const fs::path out = work / fmt::format("frontier_t{}.csv", threads);
    const std::string cmd = fmt::format(
        "{} --seed 11 --threads {} sweep --instance {} --variant bo_cvar_cond "
        "--betas 0,10,100,1000 --out {} > /dev/null 2>&1",
        GRIDSITING_CLI, threads, demo, out.string());
    const int status = std::system(cmd.c_str());
    std::ifstream in(out, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return std::make_pair(WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str());
  };
  const auto one = sweep_with(1);
  const auto eight = sweep_with(8);
  const bool same = one.first == 0 && eight.first == 0 && !one.second.empty() &&
                    one.second == eight.second;
  return {same, fmt::format("exit codes {} and {}, {} bytes, identical: {}", one.first,
                            eight.first, one.second.size(), one.second == eight.second)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver oracle equivalence", solver_oracle},
      {"dispatch oracle equivalence", dispatch_oracle},
      {"Benders cut validity", cut_validity},
      {"CVaR identity", cvar_identity},
      {"stratified estimator unbiasedness", stratified_unbiased},
      {"conditional-sampling advantage", conditional_advantage},
      {"dependence matters", dependence_matters},
      {"kernel recovery", kernel_recovery},
      {"determinism across threads", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failed += !o.pass;
    std::cout << fmt::format("criterion {} {}: {}: {}", i + 1, o.pass ? "PASS" : "FAIL",
                             criteria[i].first, o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
