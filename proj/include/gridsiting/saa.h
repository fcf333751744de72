#ifndef GRIDSITING_SAA_H_
#define GRIDSITING_SAA_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridsiting/dispatch.h"
#include "gridsiting/grid_model.h"
#include "gridsiting/weather.h"

namespace gridsiting {

// `kBase` minimizes expected cost (shed priced by the penalty). `kBoCvar`
// adds beta * CVaR_alpha of the minimal load shed. Conditional sampling is a
// property of the scenario set, so `kBoCvar` over a stratified set is the
// conditional-sampling model.
enum class Variant { kBase, kBoCvar };

const char* to_string(Variant variant);

struct SolveConfig {
  Variant variant = Variant::kBase;
  double alpha = 0.99;
  double beta = 0.0;
  std::optional<double> shed_penalty;  // overrides the instance penalty
  double gap_tol = 1e-6;
  int max_iters = 200;
  int threads = 1;
  bool verbose = false;

  void validate() const;  // throws ValidationError
  double risk_weight() const { return variant == Variant::kBoCvar ? beta : 0.0; }
};

enum class SolveStatus { kOptimal, kIterationLimit };

const char* to_string(SolveStatus status);

struct Solution {
  SitingDecision x;
  double build_cost = 0.0;
  double exp_cost = 0.0;  // build cost + expected second-stage cost
  double cvar_shed = 0.0;
  double scalarized = 0.0;
  double lower_bound = 0.0;
  int iters = 0;
  int cuts_added = 0;
  SolveStatus status = SolveStatus::kOptimal;
  std::vector<double> lower_bound_trace;  // per Benders iteration
  std::vector<double> upper_bound_trace;
};

enum class CutKind { kCost, kShed };

struct Cut {
  CutKind kind = CutKind::kCost;
  int scenario = -1;  // -1 for the aggregated cost cut
  double constant = 0.0;
  std::vector<double> coefficients;
};

// CVaR_alpha of a discrete distribution: the average of the upper (1-alpha)
// probability mass, splitting the boundary atom. Throws ValidationError on
// empty input or alpha outside (0,1).
double cvar(std::span<const double> values, std::span<const double> weights,
            double alpha);

// Per-scenario recourse values of one siting decision.
struct ScenarioOutcomes {
  std::vector<double> cost;  // cost-objective dispatch value
  std::vector<double> shed;  // minimal load shed
  // Filled only when requested.
  std::vector<CutCoefficients> cost_cuts;
  std::vector<CutCoefficients> shed_cuts;
};

struct FirstStageEvaluation {
  double build_cost = 0.0;
  double exp_cost = 0.0;
  std::vector<double> shed;
  double cvar_shed = 0.0;
  double scalarized = 0.0;
};

// Sample-average problem over a fixed scenario set. Recourse values are
// memoized per siting decision, so sweeps over beta reuse dispatch work.
class SaaProblem {
 public:
  SaaProblem(const GridInstance& instance, const ScenarioSet& scenarios,
             std::optional<double> shed_penalty = std::nullopt, int threads = 1);

  const GridInstance& instance() const { return instance_; }
  const ScenarioSet& scenarios() const { return scenarios_; }
  double shed_penalty() const { return shed_penalty_; }
  int dispatch_calls() const { return dispatch_calls_; }

  const ScenarioOutcomes& outcomes(const SitingDecision& x, bool with_cuts);
  FirstStageEvaluation evaluate(const SitingDecision& x, const SolveConfig& cfg);

 private:
  ScenarioOutcomes compute(const SitingDecision& x, bool with_cuts);

  const GridInstance& instance_;
  const ScenarioSet& scenarios_;
  double shed_penalty_;
  int threads_;
  int dispatch_calls_ = 0;
  std::unordered_map<std::uint64_t, ScenarioOutcomes> cache_;
  ScenarioOutcomes scratch_;
};

FirstStageEvaluation evaluate_first_stage(const SitingDecision& x,
                                          const ScenarioSet& scenarios,
                                          const GridInstance& instance,
                                          const SolveConfig& cfg);

// Exhaustive search over {0,1}^J, J <= 16. Ties go to the smaller mask.
inline constexpr int kMaxEnumerationSites = 16;
Solution solve_enumeration(SaaProblem& problem, const SolveConfig& cfg);
Solution solve_enumeration(const GridInstance& instance,
                           const ScenarioSet& scenarios, const SolveConfig& cfg);

// L-shaped decomposition: a branch-and-bound master over x accumulates an
// aggregated cost cut and per-scenario shed cuts per iteration.
Solution solve_lshaped(SaaProblem& problem, const SolveConfig& cfg);
Solution solve_lshaped(const GridInstance& instance,
                       const ScenarioSet& scenarios, const SolveConfig& cfg);

}  // namespace gridsiting

#endif  // GRIDSITING_SAA_H_
