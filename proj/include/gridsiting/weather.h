#ifndef GRIDSITING_WEATHER_H_
#define GRIDSITING_WEATHER_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridsiting/grid_model.h"

namespace gridsiting {

enum class Kernel { kExponential, kIndependent };

// Gaussian temperature-anomaly field over the buses.
struct SpatialModel {
  double sigma_c = 5.0;
  double range_km = 500.0;
  Kernel kernel = Kernel::kExponential;
  double nugget = 1e-10;

  void validate() const;  // throws ValidationError
};

// Stratification on the spatial mean anomaly A: a lower tail, a middle
// and an upper tail stratum with probabilities (p, 1-2p, p).
struct StratificationPlan {
  double tail_prob = 0.01;
  int n_low = 100;
  int n_mid = 100;
  int n_high = 100;

  void validate() const;  // throws ValidationError
  int total() const { return n_low + n_mid + n_high; }
};

enum class Stratum { kNone, kLow, kMid, kHigh };

struct Scenario {
  std::vector<double> temps_c;     // per bus
  double weight = 0.0;
  std::vector<double> demands_mw;  // per bus
  std::vector<double> avail_mw;    // per generator
  Stratum stratum = Stratum::kNone;
  double mean_anomaly = 0.0;       // conditioning statistic A
};

struct ScenarioSet {
  std::vector<Scenario> scenarios;
  std::uint64_t seed = 0;
  SpatialModel model;
  std::optional<StratificationPlan> plan;

  std::size_t size() const { return scenarios.size(); }
};

const char* to_string(Kernel kernel);
const char* to_string(Stratum stratum);
Kernel parse_kernel(const std::string& name);  // throws ValidationError

// Covariance of the anomaly field; the nugget is added on the diagonal.
Eigen::MatrixXd build_covariance(const std::vector<Bus>& buses,
                                 const SpatialModel& model);

// Lower Cholesky factor. Throws NotPositiveDefiniteError on a pivot <= 0.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m);

// Applies the grid's temperature maps to a temperature field.
Scenario realize_scenario(const GridInstance& instance,
                          std::vector<double> temps_c, double weight,
                          Stratum stratum);

ScenarioSet sample_iid(const GridInstance& instance, const SpatialModel& model,
                       int n, std::uint64_t seed, int threads = 1);

// Tail-conditional stratified sample. Scenarios are ordered low, mid, high.
ScenarioSet sample_stratified(const GridInstance& instance,
                              const SpatialModel& model,
                              const StratificationPlan& plan,
                              std::uint64_t seed, int threads = 1);

// Standard deviation of the spatial mean anomaly under `model`.
double mean_anomaly_sd(const GridInstance& instance, const SpatialModel& model);

// CSV: scenario,stratum,weight,bus_id,temp_c,demand_mw (one row per
// scenario and bus).
void write_scenarios_csv(const GridInstance& instance, const ScenarioSet& set,
                         std::ostream& out);

}  // namespace gridsiting

#endif  // GRIDSITING_WEATHER_H_
