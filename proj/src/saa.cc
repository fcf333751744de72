#include "gridsiting/saa.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <numeric>
#include <queue>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridsiting/errors.h"
#include "gridsiting/lp.h"
#include "gridsiting/parallel.h"

namespace gridsiting {
namespace {

// Decisions beyond this many cached entries are evaluated without memoizing.
constexpr std::size_t kCacheLimit = 8192;

double relative_gap(double upper, double lower) {
  return (upper - lower) / std::max(1.0, std::fabs(upper));
}

double weighted_sum(const ScenarioSet& set, const std::vector<double>& v) {
  double total = 0.0;
  for (std::size_t s = 0; s < set.size(); ++s) total += set.scenarios[s].weight * v[s];
  return total;
}

std::vector<double> weights_of(const ScenarioSet& set) {
  std::vector<double> w(set.size());
  for (std::size_t s = 0; s < set.size(); ++s) w[s] = set.scenarios[s].weight;
  return w;
}

// Benders master: min build.x + theta + beta (eta + sum_s w_s e_s / (1-alpha)).
// Cost cuts are in $ while shed cuts are in MW; theta is held in MW at the shed
// penalty so both row families share one scale.
class Master {
 public:
  Master(const SaaProblem& problem, const SolveConfig& cfg)
      : problem_(problem),
        sites_(problem.instance().num_sites()),
        risk_(cfg.risk_weight()),
        tail_(1.0 - cfg.alpha),
        cost_scale_(std::max(1.0, problem.instance().response().shed_penalty)),
        excess_(problem.scenarios().size(), -1) {
    for (int j = 0; j < sites_; ++j) {
      const GeneratorSpec& g =
          problem.instance().generators()[problem.instance().site_generator(j)];
      lp_.add_variable(g.build_cost, 0.0, 1.0);
    }
    theta_ = lp_.add_variable(cost_scale_, 0.0, kLpInf);
    // The CVaR minimizer is a quantile of a nonnegative loss, so eta >= 0
    // loses nothing.
    eta_ = lp_.add_variable(risk_, 0.0, kLpInf);
  }

  struct Result {
    SitingDecision x;
    double value = 0.0;
    double theta = 0.0;
    double eta = 0.0;
    std::vector<double> excess;  // per scenario, 0 when no variable yet
  };

  void add_cost_cut(const Cut& cut) {
    std::vector<std::pair<int, double>> terms{{theta_, 1.0}};
    for (int j = 0; j < sites_; ++j) {
      if (cut.coefficients[j] != 0.0) terms.emplace_back(j, -cut.coefficients[j] / cost_scale_);
    }
    lp_.add_row(std::move(terms), RowSense::kGe, cut.constant / cost_scale_);
  }

  void add_shed_cut(const Cut& cut) {
    int& e = excess_[cut.scenario];
    if (e < 0) {
      const double w = problem_.scenarios().scenarios[cut.scenario].weight;
      e = lp_.add_variable(risk_ * w / tail_, 0.0, kLpInf);
    }
    std::vector<std::pair<int, double>> terms{{e, 1.0}, {eta_, 1.0}};
    for (int j = 0; j < sites_; ++j) {
      if (cut.coefficients[j] != 0.0) terms.emplace_back(j, -cut.coefficients[j]);
    }
    lp_.add_row(std::move(terms), RowSense::kGe, cut.constant);
  }

  // Best-bound branch and bound on x, branching on the most fractional site.
  Result solve() const {
    struct Node {
      double bound;
      long order;
      std::vector<double> lo, hi;
      std::shared_ptr<const LpBasis> start;  // parent's optimal basis
    };
    auto worse = [](const Node& a, const Node& b) {
      return a.bound > b.bound || (a.bound == b.bound && a.order > b.order);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
    long counter = 0;
    open.push(Node{-kLpInf, counter++, std::vector<double>(sites_, 0.0),
                   std::vector<double>(sites_, 1.0), root_basis_});

    Result best;
    best.value = kLpInf;
    bool found = false;
    const int depth_cap = 2 * sites_;
    while (!open.empty()) {
      Node node = open.top();
      open.pop();
      if (found && node.bound >= best.value - tolerance(best.value)) break;

      LpSolution sol = solve_with_bounds(node.lo, node.hi, node.start.get());
      if (sol.status != LpStatus::kOptimal) continue;
      auto basis = std::make_shared<const LpBasis>(std::move(sol.basis));
      if (node.order == 0) root_basis_ = basis;
      if (found && sol.objective >= best.value - tolerance(best.value)) continue;

      int branch = -1;
      double most = 1e-7;
      for (int j = 0; j < sites_; ++j) {
        const double frac = std::min(sol.x[j], 1.0 - sol.x[j]);
        if (frac > most) {
          most = frac;
          branch = j;
        }
      }
      int depth = 0;
      for (int j = 0; j < sites_; ++j) depth += node.lo[j] == node.hi[j];
      if (branch < 0 || depth >= depth_cap) {
        // Integral: pin x exactly so the objective carries no rounding.
        std::vector<double> fixed(sites_);
        bool exact = true;
        for (int j = 0; j < sites_; ++j) {
          fixed[j] = std::round(sol.x[j]);
          exact = exact && fixed[j] == sol.x[j];
        }
        if (!exact) {
          sol = solve_with_bounds(fixed, fixed, basis.get());
          if (sol.status != LpStatus::kOptimal) continue;
        }
        if (!found || sol.objective < best.value) {
          found = true;
          best = unpack(sol);
        }
        continue;
      }
      for (double v : {0.0, 1.0}) {
        Node child{sol.objective, counter++, node.lo, node.hi, basis};
        child.lo[branch] = child.hi[branch] = v;
        open.push(std::move(child));
      }
    }
    if (!found) throw NumericalBreakdownError("master problem has no solution");
    return best;
  }

  int rows() const { return lp_.num_rows(); }

 private:
  static double tolerance(double value) {
    return 1e-9 * std::max(1.0, std::fabs(value));
  }

  LpSolution solve_with_bounds(const std::vector<double>& lo, const std::vector<double>& hi,
                               const LpBasis* start) const {
    LpProblem p = lp_;
    for (int j = 0; j < sites_; ++j) {
      p.lower[j] = lo[j];
      p.upper[j] = hi[j];
    }
    return solve_lp(p, start != nullptr && !start->basic.empty() ? start : nullptr);
  }

  Result unpack(const LpSolution& sol) const {
    Result r;
    r.x = SitingDecision::zeros(sites_);
    for (int j = 0; j < sites_; ++j) r.x.build[j] = sol.x[j] > 0.5;
    r.value = sol.objective;
    r.theta = sol.x[theta_] * cost_scale_;
    r.eta = sol.x[eta_];
    r.excess.assign(excess_.size(), 0.0);
    for (std::size_t s = 0; s < excess_.size(); ++s) {
      if (excess_[s] >= 0) r.excess[s] = sol.x[excess_[s]];
    }
    return r;
  }

  const SaaProblem& problem_;
  int sites_;
  double risk_;
  double tail_;
  double cost_scale_;
  LpProblem lp_;
  // Root basis of the previous solve; cuts only append rows and variables.
  mutable std::shared_ptr<const LpBasis> root_basis_;
  int theta_ = -1;
  int eta_ = -1;
  std::vector<int> excess_;
};

Solution make_solution(const SitingDecision& x, const FirstStageEvaluation& ev) {
  Solution s;
  s.x = x;
  s.build_cost = ev.build_cost;
  s.exp_cost = ev.exp_cost;
  s.cvar_shed = ev.cvar_shed;
  s.scalarized = ev.scalarized;
  return s;
}

}  // namespace

const char* to_string(Variant variant) {
  return variant == Variant::kBase ? "base" : "bo_cvar";
}

const char* to_string(SolveStatus status) {
  return status == SolveStatus::kOptimal ? "optimal" : "iteration_limit";
}

void SolveConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("solve config: alpha must lie in (0,1)");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ValidationError("solve config: beta must be nonnegative");
  }
  if (!(gap_tol > 0.0)) throw ValidationError("solve config: gap_tol must be positive");
  if (max_iters < 1) throw ValidationError("solve config: max_iters must be >= 1");
  if (shed_penalty && !(*shed_penalty > 0.0)) {
    throw ValidationError("solve config: shed_penalty must be positive");
  }
}

double cvar(std::span<const double> values, std::span<const double> weights,
            double alpha) {
  if (values.empty()) throw ValidationError("cvar: empty input");
  if (values.size() != weights.size()) {
    throw DimensionMismatchError("cvar: values and weights differ in length");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("cvar: alpha must lie in (0,1)");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  const double tail = 1.0 - alpha;
  double mass = 0.0;
  double total = 0.0;
  for (std::size_t i : order) {
    const double take = std::min(weights[i], tail - mass);
    if (take <= 0.0) break;
    total += take * values[i];
    mass += take;
  }
  return total / tail;
}

SaaProblem::SaaProblem(const GridInstance& instance, const ScenarioSet& scenarios,
                       std::optional<double> shed_penalty, int threads)
    : instance_(instance),
      scenarios_(scenarios),
      shed_penalty_(shed_penalty.value_or(instance.response().shed_penalty)),
      threads_(threads) {
  if (scenarios.size() == 0) throw ValidationError("SAA needs at least one scenario");
}

ScenarioOutcomes SaaProblem::compute(const SitingDecision& x, bool with_cuts) {
  const std::size_t n = scenarios_.size();
  ScenarioOutcomes out;
  out.cost.resize(n);
  out.shed.resize(n);
  if (with_cuts) {
    out.cost_cuts.resize(n);
    out.shed_cuts.resize(n);
  }
  parallel_for(n, threads_, [&](std::size_t s) {
    const Scenario& sc = scenarios_.scenarios[s];
    const DispatchResult cost = dispatch(instance_, x, sc, Objective::kCost, shed_penalty_);
    const DispatchResult shed = dispatch(instance_, x, sc, Objective::kMinShed);
    out.cost[s] = cost.objective;
    out.shed[s] = shed.objective;
    if (with_cuts) {
      out.cost_cuts[s] = cut_coefficients(cost, instance_, sc);
      out.shed_cuts[s] = cut_coefficients(shed, instance_, sc);
    }
  });
  dispatch_calls_ += static_cast<int>(2 * n);
  return out;
}

const ScenarioOutcomes& SaaProblem::outcomes(const SitingDecision& x,
                                             bool with_cuts) {
  if (x.size() != instance_.num_sites()) {
    throw DimensionMismatchError("siting decision length does not match sites");
  }
  const std::uint64_t key = x.mask();
  auto it = cache_.find(key);
  if (it != cache_.end() && (!with_cuts || !it->second.cost_cuts.empty())) {
    return it->second;
  }
  if (it == cache_.end() && cache_.size() >= kCacheLimit) {
    scratch_ = compute(x, with_cuts);
    return scratch_;
  }
  ScenarioOutcomes fresh = compute(x, with_cuts);
  return cache_.insert_or_assign(key, std::move(fresh)).first->second;
}

FirstStageEvaluation SaaProblem::evaluate(const SitingDecision& x,
                                          const SolveConfig& cfg) {
  const ScenarioOutcomes& out = outcomes(x, false);
  FirstStageEvaluation ev;
  ev.build_cost = build_cost(instance_, x);
  ev.exp_cost = ev.build_cost + weighted_sum(scenarios_, out.cost);
  ev.shed = out.shed;
  ev.cvar_shed = cvar(ev.shed, weights_of(scenarios_), cfg.alpha);
  ev.scalarized = ev.exp_cost + cfg.risk_weight() * ev.cvar_shed;
  return ev;
}

FirstStageEvaluation evaluate_first_stage(const SitingDecision& x,
                                          const ScenarioSet& scenarios,
                                          const GridInstance& instance,
                                          const SolveConfig& cfg) {
  cfg.validate();
  SaaProblem problem(instance, scenarios, cfg.shed_penalty, cfg.threads);
  return problem.evaluate(x, cfg);
}

Solution solve_enumeration(SaaProblem& problem, const SolveConfig& cfg) {
  cfg.validate();
  const int sites = problem.instance().num_sites();
  if (sites > kMaxEnumerationSites) {
    throw TooManySitesError(fmt::format(
        "enumeration supports at most {} sites, instance has {}",
        kMaxEnumerationSites, sites));
  }
  Solution best;
  bool found = false;
  const std::uint64_t count = std::uint64_t{1} << sites;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const SitingDecision x = SitingDecision::from_mask(sites, mask);
    const FirstStageEvaluation ev = problem.evaluate(x, cfg);
    if (!found || ev.scalarized < best.scalarized) {
      best = make_solution(x, ev);
      found = true;
    }
  }
  best.lower_bound = best.scalarized;
  best.iters = static_cast<int>(count);
  best.status = SolveStatus::kOptimal;
  return best;
}

Solution solve_enumeration(const GridInstance& instance,
                           const ScenarioSet& scenarios, const SolveConfig& cfg) {
  SaaProblem problem(instance, scenarios, cfg.shed_penalty, cfg.threads);
  return solve_enumeration(problem, cfg);
}

Solution solve_lshaped(SaaProblem& problem, const SolveConfig& cfg) {
  cfg.validate();
  const ScenarioSet& set = problem.scenarios();
  const int sites = problem.instance().num_sites();
  const bool risk = cfg.risk_weight() > 0.0;
  Master master(problem, cfg);

  Solution best;
  bool have_incumbent = false;
  double lower = 0.0;
  int cuts = 0;
  best.status = SolveStatus::kIterationLimit;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const Master::Result m = master.solve();
    lower = std::max(lower, m.value);

    const FirstStageEvaluation ev = problem.evaluate(m.x, cfg);
    if (!have_incumbent || ev.scalarized < best.scalarized) {
      const auto status = best.status;
      auto lb_trace = std::move(best.lower_bound_trace);
      auto ub_trace = std::move(best.upper_bound_trace);
      best = make_solution(m.x, ev);
      best.status = status;
      best.lower_bound_trace = std::move(lb_trace);
      best.upper_bound_trace = std::move(ub_trace);
      have_incumbent = true;
    }
    // Cuts are exact at visited points, so the master can only overshoot the
    // incumbent by rounding.
    lower = std::min(lower, best.scalarized);
    best.lower_bound = lower;
    best.iters = iter;
    best.lower_bound_trace.push_back(lower);
    best.upper_bound_trace.push_back(best.scalarized);
    const double gap = relative_gap(best.scalarized, lower);

    // Add the cuts violated at the master's point.
    const ScenarioOutcomes& out = problem.outcomes(m.x, true);
    int added = 0;
    const double expected = weighted_sum(set, out.cost);
    if (expected > m.theta + 1e-9 * std::max(1.0, expected)) {
      Cut agg{CutKind::kCost, -1, 0.0, std::vector<double>(sites, 0.0)};
      for (std::size_t s = 0; s < set.size(); ++s) {
        const double w = set.scenarios[s].weight;
        agg.constant += w * out.cost_cuts[s].constant;
        for (int j = 0; j < sites; ++j) {
          agg.coefficients[j] += w * out.cost_cuts[s].coefficients[j];
        }
      }
      master.add_cost_cut(agg);
      ++added;
    }
    if (risk) {
      for (std::size_t s = 0; s < set.size(); ++s) {
        const CutCoefficients& c = out.shed_cuts[s];
        double ceiling = c.constant;
        for (double v : c.coefficients) ceiling += std::max(0.0, v);
        if (ceiling <= 0.0) continue;  // implied by e_s, eta >= 0
        if (out.shed[s] - m.eta - m.excess[s] <= 1e-9 * std::max(1.0, out.shed[s])) {
          continue;
        }
        master.add_shed_cut(Cut{CutKind::kShed, static_cast<int>(s), c.constant,
                                c.coefficients});
        ++added;
      }
    }
    cuts += added;
    best.cuts_added = cuts;
    if (cfg.verbose) {
      fmt::print(std::cerr, "iter {}, lb {:.10g}, ub {:.10g}, gap {:.3e}, cuts_total {}\n",
                 iter, lower, best.scalarized, gap, cuts);
    }
    if (gap <= cfg.gap_tol) {
      best.status = SolveStatus::kOptimal;
      break;
    }
    if (added == 0) break;  // stalled on rounding; reported as not converged
  }
  return best;
}

Solution solve_lshaped(const GridInstance& instance,
                       const ScenarioSet& scenarios, const SolveConfig& cfg) {
  SaaProblem problem(instance, scenarios, cfg.shed_penalty, cfg.threads);
  return solve_lshaped(problem, cfg);
}

}  // namespace gridsiting
