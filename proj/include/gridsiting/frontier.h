#ifndef GRIDSITING_FRONTIER_H_
#define GRIDSITING_FRONTIER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gridsiting/dispatch.h"
#include "gridsiting/saa.h"
#include "gridsiting/weather.h"

namespace gridsiting {

struct EvalConfig {
  int m = 100000;      // out-of-sample draws
  double tau = 0.01;   // tail fraction of the resiliency metric
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;  // throws ValidationError
};

// Mean of the largest ceil(tau * n) values.
double tail_average(std::span<const double> values, double tau);

struct OosMetrics {
  double avg_cost = 0.0;
  double tail_shed = 0.0;
  double avg_cost_se = 0.0;   // standard error of avg_cost
  double tail_shed_se = 0.0;  // standard error of the tail mean
};

// Out-of-sample evaluator on one fixed set of ground-truth draws. Every
// decision is judged on the same draws (common random numbers) and results
// are memoized per decision.
class OosEvaluator {
 public:
  OosEvaluator(const GridInstance& instance, const SpatialModel& model,
               const EvalConfig& cfg);

  const EvalConfig& config() const { return cfg_; }
  const ScenarioSet& draws() const { return draws_; }
  OosMetrics evaluate(const SitingDecision& x);

 private:
  const GridInstance& instance_;
  EvalConfig cfg_;
  ScenarioSet draws_;
  std::map<std::string, OosMetrics> cache_;
};

OosMetrics evaluate_oos(const SitingDecision& x, const GridInstance& instance,
                        const SpatialModel& model, const EvalConfig& cfg);

enum class ModelLabel { kBase, kBoCvar, kBoCvarCond };

const char* to_string(ModelLabel label);
ModelLabel parse_model_label(const std::string& name);  // throws ValidationError

// How a sweep draws its training sample. `base` and `bo_cvar` train on i.i.d.
// scenarios; `bo_cvar_cond` on the stratified plan. `model` is the
// (possibly misspecified) field used for training only.
struct TrainingSpec {
  ModelLabel label = ModelLabel::kBoCvar;
  SpatialModel model;
  int n = 300;
  StratificationPlan plan;
  std::uint64_t seed = 1;

  const char* dependence() const;
  ScenarioSet sample(const GridInstance& instance, int threads) const;
};

enum class SolveMethod { kLShaped, kEnumeration };

struct FrontierPoint {
  double beta = 0.0;
  SitingDecision x;
  double in_exp_cost = 0.0;
  double in_cvar_shed = 0.0;
  double oos_avg_cost = 0.0;
  double oos_tail_shed = 0.0;
  ModelLabel label = ModelLabel::kBase;
  std::string dependence = "dependent";
  std::string status = "ok";  // ok | iteration_limit | error: ...

  bool failed() const { return status != "ok"; }
};

// One frontier point per beta. For `base`, beta raises the load-shed penalty
// (penalty + beta) since the model has no risk term; for the bi-objective
// models it weights CVaR. Betas must be nonempty, nonnegative and strictly
// increasing (std::invalid_argument otherwise). A failed solve is recorded
// in the point's status instead of aborting the sweep.
std::vector<FrontierPoint> sweep(const GridInstance& instance,
                                 const TrainingSpec& training,
                                 std::span<const double> betas,
                                 const SolveConfig& solve_cfg,
                                 OosEvaluator& evaluator,
                                 SolveMethod method = SolveMethod::kLShaped);

// Indices of points not dominated in (first, second), both minimized, in
// input order.
std::vector<std::size_t> pareto_indices(
    std::span<const std::pair<double, double>> points);
std::vector<FrontierPoint> pareto_filter(std::span<const FrontierPoint> points);

// CSV with header
// label,dependence,beta,x_bits,in_exp_cost,in_cvar_shed,oos_avg_cost,oos_tail_shed,status
void write_frontier_csv(std::span<const FrontierPoint> points, std::ostream& out);
std::vector<FrontierPoint> read_frontier_csv(std::istream& in);  // ParseError

}  // namespace gridsiting

#endif  // GRIDSITING_FRONTIER_H_
