// Command-line front end: demo instances, scenario sampling, single solves,
// frontier sweeps, out-of-sample evaluation and SVG plots.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "gridsiting/demo.h"
#include "gridsiting/dispatch.h"
#include "gridsiting/errors.h"
#include "gridsiting/frontier.h"
#include "gridsiting/grid_model.h"
#include "gridsiting/plot.h"
#include "gridsiting/saa.h"
#include "gridsiting/version.h"
#include "gridsiting/weather.h"

namespace gs = gridsiting;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMalformed = 1;
constexpr int kExitIterationLimit = 2;
constexpr int kExitPartial = 3;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool verbose = false;
};

struct FieldOptions {
  std::string kernel = "exponential";
  double sigma = gs::demo_spatial_model().sigma_c;
  double range = gs::demo_spatial_model().range_km;

  gs::SpatialModel model() const {
    gs::SpatialModel m;
    m.sigma_c = sigma;
    m.range_km = range;
    m.kernel = gs::parse_kernel(kernel);
    return m;
  }
  // Same field with the dependence switched off when training independent.
  gs::SpatialModel with_dependence(const std::string& dependence) const {
    gs::SpatialModel m = model();
    if (dependence == "independent") m.kernel = gs::Kernel::kIndependent;
    return m;
  }
};

struct SamplingOptions {
  int n = 300;
  double tail_prob = 0.01;
  std::string alloc;  // "low,mid,high"; empty splits n evenly

  gs::StratificationPlan plan() const {
    gs::StratificationPlan p;
    p.tail_prob = tail_prob;
    if (alloc.empty()) {
      p.n_low = p.n_high = n / 3;
      p.n_mid = n - 2 * (n / 3);
    } else {
      std::stringstream ss(alloc);
      std::string part;
      std::vector<int> counts;
      while (std::getline(ss, part, ',')) counts.push_back(std::stoi(part));
      if (counts.size() != 3) {
        throw gs::ValidationError("--alloc expects three comma-separated counts");
      }
      p.n_low = counts[0];
      p.n_mid = counts[1];
      p.n_high = counts[2];
    }
    p.validate();
    return p;
  }
};

struct SolveOptions {
  double alpha = 0.99;
  double gap_tol = 1e-6;
  int max_iters = 200;
  std::optional<double> shed_penalty;
  std::string method = "lshaped";
};

struct EvalOptions {
  int m = 100000;
  double tau = 0.01;
  std::uint64_t eval_seed = 20240904;
};

class Manifest {
 public:
  explicit Manifest(std::string command)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["tool_version"] = gs::kVersion;
    doc_["parameters"] = json::object();
    doc_["seeds"] = json::object();
    doc_["artifacts"] = json::array();
  }
  json& parameters() { return doc_["parameters"]; }
  json& seeds() { return doc_["seeds"]; }
  void artifact(const std::string& path) { doc_["artifacts"].push_back(path); }

  void write(const std::string& primary_output) {
    doc_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(primary_output + ".manifest.json");
    if (!out) throw gs::Error(fmt::format("cannot write manifest for {}", primary_output));
    out << doc_.dump(2) << "\n";
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::uint64_t require_seed(const GlobalOptions& g) {
  if (!g.seed) throw gs::ValidationError("--seed is required for this command");
  return *g.seed;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gs::Error(fmt::format("cannot open \"{}\" for writing", path));
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) {
      throw gs::ValidationError(fmt::format("not a number in list: \"{}\"", part));
    }
    values.push_back(v);
  }
  return values;
}

json plan_json(const gs::StratificationPlan& p) {
  return {{"tail_prob", p.tail_prob}, {"n_low", p.n_low}, {"n_mid", p.n_mid},
          {"n_high", p.n_high}};
}

json model_json(const gs::SpatialModel& m) {
  return {{"kernel", gs::to_string(m.kernel)}, {"sigma_c", m.sigma_c},
          {"range_km", m.range_km}, {"nugget", m.nugget}};
}

void warn_seed_overlap(std::uint64_t train, std::uint64_t eval) {
  if (train == eval) {
    fmt::print(std::cerr,
               "warning: evaluation seed equals training seed {}; out-of-sample "
               "metrics will reuse training draws\n",
               train);
  }
}

gs::SolveMethod parse_method(const std::string& name) {
  return name == "enum" ? gs::SolveMethod::kEnumeration : gs::SolveMethod::kLShaped;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generator siting under weather uncertainty"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Random seed (required by sampling commands)");
  app.add_option("--threads", global.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", global.verbose, "Per-iteration solver log on stderr");

  const std::vector<std::string> variants{"base", "bo_cvar", "bo_cvar_cond"};
  const std::vector<std::string> dependences{"dependent", "independent"};

  // demo
  std::string demo_size = "small";
  std::string demo_out;
  auto* demo = app.add_subcommand("demo", "Write a synthetic demo instance");
  demo->add_option("--size", demo_size)->check(CLI::IsMember({"small", "medium"}));
  demo->add_option("--out", demo_out)->required();

  // Shared option blocks.
  std::string instance_path;
  FieldOptions field;
  SamplingOptions sampling;
  SolveOptions solve_opts;
  EvalOptions eval_opts;
  std::string variant = "bo_cvar";
  std::string dependence = "dependent";
  auto add_field = [&](CLI::App* c) {
    c->add_option("--kernel", field.kernel)->check(CLI::IsMember({"exponential", "independent"}));
    c->add_option("--sigma", field.sigma, "Temperature anomaly std dev (C)");
    c->add_option("--range", field.range, "Correlation length (km)");
  };
  auto add_sampling = [&](CLI::App* c) {
    c->add_option("--n", sampling.n, "Training scenarios")->check(CLI::PositiveNumber);
    c->add_option("--tail-prob", sampling.tail_prob, "Tail stratum probability");
    c->add_option("--alloc", sampling.alloc, "Stratum counts low,mid,high");
  };
  auto add_solve = [&](CLI::App* c) {
    c->add_option("--alpha", solve_opts.alpha, "CVaR level");
    c->add_option("--gap-tol", solve_opts.gap_tol);
    c->add_option("--max-iters", solve_opts.max_iters);
    c->add_option("--shed-penalty", solve_opts.shed_penalty);
    c->add_option("--method", solve_opts.method)->check(CLI::IsMember({"lshaped", "enum"}));
  };
  auto add_eval = [&](CLI::App* c) {
    c->add_option("--m", eval_opts.m, "Out-of-sample draws")->check(CLI::PositiveNumber);
    c->add_option("--tau", eval_opts.tau, "Tail fraction for the shed metric");
    c->add_option("--eval-seed", eval_opts.eval_seed, "Seed of the evaluation draws");
  };

  // gen
  std::string gen_out;
  std::string sampler = "iid";
  auto* gen = app.add_subcommand("gen", "Sample temperature scenarios to CSV");
  gen->add_option("--instance", instance_path)->required();
  gen->add_option("--sampler", sampler)->check(CLI::IsMember({"iid", "stratified"}));
  gen->add_option("--out", gen_out)->required();
  add_field(gen);
  add_sampling(gen);

  // solve
  double solve_beta = 0.0;
  std::string solve_out;
  std::string dump_network;
  auto* solve = app.add_subcommand("solve", "Solve one SAA instance");
  solve->add_option("--instance", instance_path)->required();
  solve->add_option("--variant", variant)->check(CLI::IsMember(variants));
  solve->add_option("--dependence", dependence)->check(CLI::IsMember(dependences));
  solve->add_option("--beta", solve_beta, "Risk weight")->check(CLI::NonNegativeNumber);
  solve->add_option("--out", solve_out, "Solution JSON");
  solve->add_option("--dump-network", dump_network,
                    "Write the scenario-0 cost network at the solution as an arc list");
  add_field(solve);
  add_sampling(solve);
  add_solve(solve);

  // sweep
  std::string betas_text = "0";
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Trace one efficient frontier");
  sweep_cmd->add_option("--instance", instance_path)->required();
  sweep_cmd->add_option("--variant", variant)->required()->check(CLI::IsMember(variants));
  sweep_cmd->add_option("--dependence", dependence)->check(CLI::IsMember(dependences));
  sweep_cmd->add_option("--betas", betas_text, "Comma-separated, strictly increasing");
  sweep_cmd->add_option("--out", sweep_out)->required();
  add_field(sweep_cmd);
  add_sampling(sweep_cmd);
  add_solve(sweep_cmd);
  add_eval(sweep_cmd);

  // eval
  std::string eval_bits;
  auto* eval_cmd = app.add_subcommand("eval", "Out-of-sample metrics of a siting vector");
  eval_cmd->add_option("--instance", instance_path)->required();
  eval_cmd->add_option("--x", eval_bits, "Siting vector as a 0/1 string")->required();
  add_field(eval_cmd);
  add_eval(eval_cmd);

  // plot
  std::vector<std::string> plot_inputs;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Render frontier CSVs to SVG");
  plot->add_option("csv", plot_inputs)->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(std::cerr, "error: {}\n\n{}", e.what(), app.help());
    return kExitMalformed;
  }

  try {
    if (*demo) {
      const std::uint64_t seed = require_seed(global);
      const gs::GridInstance inst = gs::make_demo(gs::parse_demo_size(demo_size), seed);
      open_output(demo_out) << gs::serialize_instance(inst);
      Manifest manifest("demo");
      manifest.parameters() = {{"size", demo_size}};
      manifest.seeds()["seed"] = seed;
      manifest.artifact(demo_out);
      manifest.write(demo_out);
      return kExitOk;
    }

    if (*plot) {
      std::vector<gs::FrontierPoint> points;
      for (const std::string& path : plot_inputs) {
        std::ifstream in(path);
        std::vector<gs::FrontierPoint> rows = gs::read_frontier_csv(in);
        if (rows.empty()) {
          throw gs::ValidationError(fmt::format("{}: no data rows", path));
        }
        points.insert(points.end(), rows.begin(), rows.end());
      }
      open_output(plot_out) << gs::render_frontier_svg(points);
      Manifest manifest("plot");
      manifest.parameters() = {{"inputs", plot_inputs}};
      manifest.artifact(plot_out);
      manifest.write(plot_out);
      return kExitOk;
    }

    const gs::GridInstance inst = gs::load_instance_file(instance_path);

    if (*gen) {
      const std::uint64_t seed = require_seed(global);
      const gs::SpatialModel model = field.model();
      Manifest manifest("gen");
      manifest.parameters() = {{"instance", instance_path}, {"sampler", sampler},
                               {"model", model_json(model)}};
      gs::ScenarioSet set;
      if (sampler == "stratified") {
        const gs::StratificationPlan plan = sampling.plan();
        manifest.parameters()["plan"] = plan_json(plan);
        set = gs::sample_stratified(inst, model, plan, seed, global.threads);
      } else {
        manifest.parameters()["n"] = sampling.n;
        set = gs::sample_iid(inst, model, sampling.n, seed, global.threads);
      }
      std::ofstream out = open_output(gen_out);
      gs::write_scenarios_csv(inst, set, out);
      out.close();
      manifest.seeds()["seed"] = seed;
      manifest.artifact(gen_out);
      manifest.write(gen_out);
      return kExitOk;
    }

    if (*eval_cmd) {
      const gs::SitingDecision x = gs::SitingDecision::from_bits(eval_bits);
      if (x.size() != inst.num_sites()) {
        throw gs::ValidationError(fmt::format("--x has {} bits, instance has {} sites",
                                              x.size(), inst.num_sites()));
      }
      gs::EvalConfig ecfg{eval_opts.m, eval_opts.tau, eval_opts.eval_seed, global.threads};
      const gs::OosMetrics r = gs::evaluate_oos(x, inst, field.model(), ecfg);
      fmt::print("x_bits,avg_cost,avg_cost_se,tail_shed,tail_shed_se\n{},{},{},{},{}\n",
                 x.bits(), r.avg_cost, r.avg_cost_se, r.tail_shed, r.tail_shed_se);
      return kExitOk;
    }

    const std::uint64_t seed = require_seed(global);
    gs::TrainingSpec training;
    training.label = gs::parse_model_label(variant);
    training.model = field.with_dependence(dependence);
    training.n = sampling.n;
    training.seed = seed;
    if (training.label == gs::ModelLabel::kBoCvarCond) training.plan = sampling.plan();

    gs::SolveConfig scfg;
    scfg.alpha = solve_opts.alpha;
    scfg.gap_tol = solve_opts.gap_tol;
    scfg.max_iters = solve_opts.max_iters;
    scfg.shed_penalty = solve_opts.shed_penalty;
    scfg.threads = global.threads;
    scfg.verbose = global.verbose;

    Manifest manifest(*solve ? "solve" : "sweep");
    json& params = manifest.parameters();
    params = {{"instance", instance_path},
              {"variant", variant},
              {"dependence", dependence},
              {"training_model", model_json(training.model)},
              {"alpha", scfg.alpha},
              {"gap_tol", scfg.gap_tol},
              {"max_iters", scfg.max_iters},
              {"method", solve_opts.method},
              {"threads", global.threads}};
    if (scfg.shed_penalty) params["shed_penalty"] = *scfg.shed_penalty;
    if (training.label == gs::ModelLabel::kBoCvarCond) {
      params["plan"] = plan_json(training.plan);
    } else {
      params["n"] = training.n;
    }
    manifest.seeds()["training_seed"] = seed;

    if (*solve) {
      scfg.variant = training.label == gs::ModelLabel::kBase ? gs::Variant::kBase
                                                             : gs::Variant::kBoCvar;
      scfg.beta = solve_beta;
      params["beta"] = solve_beta;
      const gs::ScenarioSet set = training.sample(inst, global.threads);
      const gs::Solution sol = parse_method(solve_opts.method) == gs::SolveMethod::kEnumeration
                                   ? gs::solve_enumeration(inst, set, scfg)
                                   : gs::solve_lshaped(inst, set, scfg);
      json result = {{"x_bits", sol.x.bits()},
                     {"build_cost", sol.build_cost},
                     {"exp_cost", sol.exp_cost},
                     {"cvar_shed", sol.cvar_shed},
                     {"scalarized", sol.scalarized},
                     {"lower_bound", sol.lower_bound},
                     {"iters", sol.iters},
                     {"cuts_added", sol.cuts_added},
                     {"status", gs::to_string(sol.status)}};
      const std::string text = result.dump(2) + "\n";
      std::cout << text;
      if (!dump_network.empty()) {
        std::ofstream out = open_output(dump_network);
        gs::write_network(gs::build_network(inst, sol.x, set.scenarios.front(),
                                            gs::Objective::kCost,
                                            scfg.shed_penalty.value_or(inst.response().shed_penalty)),
                          out);
        manifest.artifact(dump_network);
      }
      if (!solve_out.empty()) {
        open_output(solve_out) << text;
        manifest.artifact(solve_out);
        manifest.write(solve_out);
      }
      return sol.status == gs::SolveStatus::kOptimal ? kExitOk : kExitIterationLimit;
    }

    // sweep
    const std::vector<double> betas = parse_list(betas_text);
    warn_seed_overlap(seed, eval_opts.eval_seed);
    gs::EvalConfig ecfg{eval_opts.m, eval_opts.tau, eval_opts.eval_seed, global.threads};
    const gs::SpatialModel truth = field.model();
    params["betas"] = betas;
    params["eval"] = {{"m", ecfg.m}, {"tau", ecfg.tau}, {"model", model_json(truth)}};
    manifest.seeds()["eval_seed"] = ecfg.seed;
    gs::OosEvaluator evaluator(inst, truth, ecfg);
    const std::vector<gs::FrontierPoint> points =
        gs::sweep(inst, training, betas, scfg, evaluator, parse_method(solve_opts.method));
    std::ofstream out = open_output(sweep_out);
    gs::write_frontier_csv(points, out);
    out.close();
    manifest.artifact(sweep_out);
    manifest.write(sweep_out);

    std::size_t failed = 0;
    std::size_t limited = 0;
    for (const gs::FrontierPoint& p : points) {
      failed += p.failed();
      limited += p.status == "iteration_limit";
    }
    if (failed == 0) return kExitOk;
    if (limited == points.size()) return kExitIterationLimit;
    return kExitPartial;
  } catch (const std::invalid_argument& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitMalformed;
  } catch (const gs::ParseError& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitMalformed;
  } catch (const gs::ValidationError& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitMalformed;
  } catch (const gs::Error& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitMalformed;
  }
}
