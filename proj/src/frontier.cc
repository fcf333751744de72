#include "gridsiting/frontier.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridsiting/errors.h"
#include "gridsiting/parallel.h"

namespace gridsiting {
namespace {

constexpr const char* kFrontierColumns[] = {
    "label",       "dependence",    "beta",          "x_bits", "in_exp_cost",
    "in_cvar_shed", "oos_avg_cost", "oos_tail_shed", "status"};

std::size_t tail_count(std::size_t n, double tau) {
  // The small slack absorbs representation error in tau * n.
  const auto k = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, const char* column, int row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(fmt::format("frontier csv row {}: column {} is not a number: \"{}\"",
                               row, column, text));
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

void EvalConfig::validate() const {
  if (m < 1) throw ValidationError("eval config: m must be >= 1");
  if (!(tau > 0.0 && tau < 1.0) && tau != 1.0) {
    throw ValidationError("eval config: tau must lie in (0,1]");
  }
}

double tail_average(std::span<const double> values, double tau) {
  if (values.empty()) throw ValidationError("tail_average: empty input");
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ValidationError("tail_average: tau must lie in (0,1]");
  }
  const std::size_t k = tail_count(values.size(), tau);
  std::vector<double> sorted(values.begin(), values.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k),
                    sorted.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += sorted[i];
  return total / static_cast<double>(k);
}

OosEvaluator::OosEvaluator(const GridInstance& instance,
                           const SpatialModel& model, const EvalConfig& cfg)
    : instance_(instance), cfg_(cfg) {
  cfg_.validate();
  draws_ = sample_iid(instance, model, cfg.m, cfg.seed, cfg.threads);
}

OosMetrics OosEvaluator::evaluate(const SitingDecision& x) {
  const std::string key = x.bits();
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  const std::size_t n = draws_.size();
  std::vector<double> cost(n);
  std::vector<double> shed(n);
  parallel_for(n, cfg_.threads, [&](std::size_t s) {
    const Scenario& sc = draws_.scenarios[s];
    cost[s] = dispatch(instance_, x, sc, Objective::kCost).objective;
    shed[s] = dispatch(instance_, x, sc, Objective::kMinShed).objective;
  });

  OosMetrics r;
  double sum = 0.0;
  for (double c : cost) sum += c;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double c : cost) ss += (c - mean) * (c - mean);
  r.avg_cost = build_cost(instance_, x) + mean;
  r.avg_cost_se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;

  r.tail_shed = tail_average(shed, cfg_.tau);
  const std::size_t k = tail_count(n, cfg_.tau);
  std::partial_sort(shed.begin(), shed.begin() + static_cast<std::ptrdiff_t>(k), shed.end(),
                    std::greater<>());
  double tss = 0.0;
  for (std::size_t i = 0; i < k; ++i) tss += (shed[i] - r.tail_shed) * (shed[i] - r.tail_shed);
  r.tail_shed_se =
      k > 1 ? std::sqrt(tss / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;

  cache_.emplace(key, r);
  return r;
}

OosMetrics evaluate_oos(const SitingDecision& x, const GridInstance& instance,
                        const SpatialModel& model, const EvalConfig& cfg) {
  OosEvaluator evaluator(instance, model, cfg);
  return evaluator.evaluate(x);
}

const char* to_string(ModelLabel label) {
  switch (label) {
    case ModelLabel::kBase:
      return "base";
    case ModelLabel::kBoCvar:
      return "bo_cvar";
    case ModelLabel::kBoCvarCond:
      return "bo_cvar_cond";
  }
  return "?";
}

ModelLabel parse_model_label(const std::string& name) {
  if (name == "base") return ModelLabel::kBase;
  if (name == "bo_cvar") return ModelLabel::kBoCvar;
  if (name == "bo_cvar_cond") return ModelLabel::kBoCvarCond;
  throw ValidationError(fmt::format("unknown model variant \"{}\"", name));
}

const char* TrainingSpec::dependence() const {
  return model.kernel == Kernel::kIndependent ? "independent" : "dependent";
}

ScenarioSet TrainingSpec::sample(const GridInstance& instance, int threads) const {
  if (label == ModelLabel::kBoCvarCond) {
    return sample_stratified(instance, model, plan, seed, threads);
  }
  return sample_iid(instance, model, n, seed, threads);
}

std::vector<FrontierPoint> sweep(const GridInstance& instance,
                                 const TrainingSpec& training,
                                 std::span<const double> betas,
                                 const SolveConfig& solve_cfg,
                                 OosEvaluator& evaluator, SolveMethod method) {
  if (betas.empty()) throw std::invalid_argument("sweep: betas must be nonempty");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] >= 0.0) || !std::isfinite(betas[i])) {
      throw std::invalid_argument("sweep: betas must be nonnegative");
    }
    if (i > 0 && !(betas[i] > betas[i - 1])) {
      throw std::invalid_argument("sweep: betas must be strictly increasing");
    }
  }
  solve_cfg.validate();

  const ScenarioSet scenarios = training.sample(instance, solve_cfg.threads);
  const bool base = training.label == ModelLabel::kBase;
  const double penalty =
      solve_cfg.shed_penalty.value_or(instance.response().shed_penalty);
  std::optional<SaaProblem> shared;
  if (!base) shared.emplace(instance, scenarios, penalty, solve_cfg.threads);

  std::vector<FrontierPoint> points;
  for (double beta : betas) {
    FrontierPoint point;
    point.beta = beta;
    point.label = training.label;
    point.dependence = training.dependence();
    SolveConfig cfg = solve_cfg;
    cfg.beta = beta;
    cfg.variant = base ? Variant::kBase : Variant::kBoCvar;
    if (base) cfg.shed_penalty = penalty + beta;
    try {
      std::optional<SaaProblem> own;
      if (base) own.emplace(instance, scenarios, cfg.shed_penalty, cfg.threads);
      SaaProblem& problem = base ? *own : *shared;
      const Solution sol = method == SolveMethod::kEnumeration
                               ? solve_enumeration(problem, cfg)
                               : solve_lshaped(problem, cfg);
      point.x = sol.x;
      point.in_exp_cost = sol.exp_cost;
      point.in_cvar_shed = sol.cvar_shed;
      if (sol.status != SolveStatus::kOptimal) point.status = to_string(sol.status);
      const OosMetrics oos = evaluator.evaluate(sol.x);
      point.oos_avg_cost = oos.avg_cost;
      point.oos_tail_shed = oos.tail_shed;
    } catch (const Error& e) {
      point.status = fmt::format("error: {}", e.what());
    }
    points.push_back(std::move(point));
  }
  return points;
}

std::vector<std::size_t> pareto_indices(
    std::span<const std::pair<double, double>> points) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      const auto& p = points[j];
      const auto& q = points[i];
      dominated = p.first <= q.first && p.second <= q.second &&
                  (p.first < q.first || p.second < q.second);
    }
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

std::vector<FrontierPoint> pareto_filter(std::span<const FrontierPoint> points) {
  std::vector<std::pair<double, double>> coords;
  coords.reserve(points.size());
  for (const FrontierPoint& p : points) coords.emplace_back(p.oos_avg_cost, p.oos_tail_shed);
  std::vector<FrontierPoint> out;
  for (std::size_t i : pareto_indices(coords)) out.push_back(points[i]);
  return out;
}

void write_frontier_csv(std::span<const FrontierPoint> points, std::ostream& out) {
  for (std::size_t c = 0; c < std::size(kFrontierColumns); ++c) {
    out << (c ? "," : "") << kFrontierColumns[c];
  }
  out << "\n";
  for (const FrontierPoint& p : points) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", to_string(p.label),
               p.dependence, p.beta, p.x.bits(), p.in_exp_cost, p.in_cvar_shed,
               p.oos_avg_cost, p.oos_tail_shed, csv_safe(p.status));
  }
}

std::vector<FrontierPoint> read_frontier_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("frontier csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  const std::size_t expected = std::size(kFrontierColumns);
  for (std::size_t c = 0; c < std::max(header.size(), expected); ++c) {
    if (c >= header.size()) {
      throw ParseError(fmt::format("frontier csv: missing column \"{}\"",
                                   kFrontierColumns[c]));
    }
    if (c >= expected || header[c] != kFrontierColumns[c]) {
      throw ParseError(fmt::format("frontier csv: unexpected column \"{}\" at position {}",
                                   header[c], c + 1));
    }
  }

  std::vector<FrontierPoint> points;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != expected) {
      throw ParseError(fmt::format("frontier csv row {}: expected {} fields, got {}",
                                   row, expected, f.size()));
    }
    FrontierPoint p;
    p.label = parse_model_label(f[0]);
    p.dependence = f[1];
    p.beta = parse_number(f[2], "beta", row);
    p.x = SitingDecision::from_bits(f[3]);
    p.in_exp_cost = parse_number(f[4], "in_exp_cost", row);
    p.in_cvar_shed = parse_number(f[5], "in_cvar_shed", row);
    p.oos_avg_cost = parse_number(f[6], "oos_avg_cost", row);
    p.oos_tail_shed = parse_number(f[7], "oos_tail_shed", row);
    p.status = f[8];
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace gridsiting
