#include "gridsiting/weather.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridsiting/errors.h"
#include "gridsiting/parallel.h"
#include "gridsiting/random.h"

namespace gridsiting {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Field {
  Eigen::MatrixXd factor;        // L with L L^T = covariance
  Eigen::VectorXd mean_loading;  // a = L^T 1 / n, so A = a^T z
  double anomaly_variance = 0.0;
};

Field make_field(const GridInstance& instance, const SpatialModel& model) {
  model.validate();
  Field f;
  f.factor = cholesky(build_covariance(instance.buses(), model));
  const auto n = static_cast<double>(instance.num_buses());
  f.mean_loading = f.factor.transpose() * Eigen::VectorXd::Ones(f.factor.rows());
  f.mean_loading /= n;
  f.anomaly_variance = f.mean_loading.squaredNorm();
  return f;
}

std::vector<double> temperatures(const GridInstance& instance,
                                 const Eigen::MatrixXd& factor,
                                 const Eigen::VectorXd& z) {
  const Eigen::VectorXd anomaly = factor.triangularView<Eigen::Lower>() * z;
  std::vector<double> temps(instance.num_buses());
  for (int b = 0; b < instance.num_buses(); ++b) {
    temps[b] = instance.buses()[b].mean_temp_c + anomaly[b];
  }
  return temps;
}

Eigen::VectorXd standard_normals(int n, RandomStream& rng) {
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

void SpatialModel::validate() const {
  if (!(sigma_c > 0.0) || !std::isfinite(sigma_c)) {
    throw ValidationError("spatial model: sigma_c must be positive");
  }
  if (!(range_km > 0.0) || !std::isfinite(range_km)) {
    throw ValidationError("spatial model: range_km must be positive");
  }
  if (!(nugget >= 0.0)) {
    throw ValidationError("spatial model: nugget must be nonnegative");
  }
}

void StratificationPlan::validate() const {
  if (!(tail_prob > 0.0 && tail_prob < 0.5)) {
    throw ValidationError("stratification: tail_prob must lie in (0, 0.5)");
  }
  if (n_low < 1 || n_mid < 1 || n_high < 1) {
    throw ValidationError("stratification: every stratum needs >= 1 sample");
  }
}

const char* to_string(Kernel kernel) {
  return kernel == Kernel::kExponential ? "exponential" : "independent";
}

const char* to_string(Stratum stratum) {
  switch (stratum) {
    case Stratum::kLow:
      return "low";
    case Stratum::kMid:
      return "mid";
    case Stratum::kHigh:
      return "high";
    case Stratum::kNone:
      break;
  }
  return "none";
}

Kernel parse_kernel(const std::string& name) {
  if (name == "exponential") return Kernel::kExponential;
  if (name == "independent") return Kernel::kIndependent;
  throw ValidationError(fmt::format("unknown kernel \"{}\"", name));
}

Eigen::MatrixXd build_covariance(const std::vector<Bus>& buses,
                                 const SpatialModel& model) {
  const auto n = static_cast<Eigen::Index>(buses.size());
  const double var = model.sigma_c * model.sigma_c;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cov(i, i) = var + model.nugget;
    if (model.kernel == Kernel::kIndependent) continue;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = std::hypot(buses[i].x_km - buses[j].x_km,
                                  buses[i].y_km - buses[j].y_km);
      cov(i, j) = cov(j, i) = var * std::exp(-d / model.range_km);
    }
  }
  return cov;
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw DimensionMismatchError("cholesky: matrix not square");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw NotPositiveDefiniteError(
          fmt::format("cholesky: pivot {} at column {} is not positive", pivot, j));
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

Scenario realize_scenario(const GridInstance& instance,
                          std::vector<double> temps_c, double weight,
                          Stratum stratum) {
  Scenario s;
  const ResponseParams& p = instance.response();
  double anomaly = 0.0;
  s.demands_mw.resize(instance.num_buses());
  for (int b = 0; b < instance.num_buses(); ++b) {
    const Bus& bus = instance.buses()[b];
    s.demands_mw[b] = demand_at(bus, temps_c[b], p);
    anomaly += temps_c[b] - bus.mean_temp_c;
  }
  s.avail_mw.resize(instance.num_generators());
  for (int g = 0; g < instance.num_generators(); ++g) {
    s.avail_mw[g] = available_capacity(instance.generators()[g],
                                       temps_c[instance.generator_bus(g)], p);
  }
  s.mean_anomaly = anomaly / instance.num_buses();
  s.temps_c = std::move(temps_c);
  s.weight = weight;
  s.stratum = stratum;
  return s;
}

ScenarioSet sample_iid(const GridInstance& instance, const SpatialModel& model,
                       int n, std::uint64_t seed, int threads) {
  if (n < 1) throw ValidationError("sample_iid: n must be >= 1");
  const Field field = make_field(instance, model);
  ScenarioSet set;
  set.seed = seed;
  set.model = model;
  set.scenarios.resize(n);
  const double weight = 1.0 / n;
  parallel_for(n, threads, [&](std::size_t i) {
    RandomStream rng(seed, i);
    const Eigen::VectorXd z = standard_normals(instance.num_buses(), rng);
    set.scenarios[i] = realize_scenario(
        instance, temperatures(instance, field.factor, z), weight, Stratum::kNone);
  });
  return set;
}

double mean_anomaly_sd(const GridInstance& instance, const SpatialModel& model) {
  return std::sqrt(make_field(instance, model).anomaly_variance);
}

ScenarioSet sample_stratified(const GridInstance& instance,
                              const SpatialModel& model,
                              const StratificationPlan& plan,
                              std::uint64_t seed, int threads) {
  plan.validate();
  const Field field = make_field(instance, model);
  const double sd = std::sqrt(field.anomaly_variance);
  const double q_low = sd * normal_quantile(plan.tail_prob);
  const double q_high = -q_low;

  struct StratumSpec {
    Stratum stratum;
    int count;
    double prob;
    double lo, hi;
  };
  const StratumSpec strata[] = {
      {Stratum::kLow, plan.n_low, plan.tail_prob, -kInf, q_low},
      {Stratum::kMid, plan.n_mid, 1.0 - 2.0 * plan.tail_prob, q_low, q_high},
      {Stratum::kHigh, plan.n_high, plan.tail_prob, q_high, kInf},
  };

  std::vector<const StratumSpec*> owner;
  owner.reserve(plan.total());
  for (const StratumSpec& s : strata) owner.insert(owner.end(), s.count, &s);

  ScenarioSet set;
  set.seed = seed;
  set.model = model;
  set.plan = plan;
  set.scenarios.resize(owner.size());
  parallel_for(owner.size(), threads, [&](std::size_t i) {
    const StratumSpec& spec = *owner[i];
    RandomStream rng(seed, i);
    const double target = sample_truncated_normal(0.0, sd, spec.lo, spec.hi, rng);
    // Exact Gaussian conditioning of z on a^T z = target.
    Eigen::VectorXd z = standard_normals(instance.num_buses(), rng);
    z += field.mean_loading *
         ((target - field.mean_loading.dot(z)) / field.anomaly_variance);
    Scenario s = realize_scenario(instance, temperatures(instance, field.factor, z),
                                  spec.prob / spec.count, spec.stratum);
    s.mean_anomaly = target;
    set.scenarios[i] = std::move(s);
  });
  return set;
}

void write_scenarios_csv(const GridInstance& instance, const ScenarioSet& set,
                         std::ostream& out) {
  out << "scenario,stratum,weight,bus_id,temp_c,demand_mw\n";
  for (std::size_t s = 0; s < set.size(); ++s) {
    const Scenario& sc = set.scenarios[s];
    for (int b = 0; b < instance.num_buses(); ++b) {
      fmt::print(out, "{},{},{},{},{},{}\n", s, to_string(sc.stratum), sc.weight,
                 instance.buses()[b].id, sc.temps_c[b], sc.demands_mw[b]);
    }
  }
}

}  // namespace gridsiting
