#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "gridsiting/demo.h"
#include "gridsiting/errors.h"
#include "gridsiting/frontier.h"
#include "gridsiting/plot.h"
#include "test_support.h"

using namespace gridsiting;

namespace {

FrontierPoint point(double cost, double shed, ModelLabel label = ModelLabel::kBoCvar) {
  FrontierPoint p;
  p.oos_avg_cost = cost;
  p.oos_tail_shed = shed;
  p.label = label;
  p.x = SitingDecision::from_bits("01");
  return p;
}

std::vector<std::pair<double, double>> coords(const std::vector<FrontierPoint>& pts) {
  std::vector<std::pair<double, double>> out;
  for (const FrontierPoint& p : pts) out.emplace_back(p.oos_avg_cost, p.oos_tail_shed);
  return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("tail average examples") {
  const std::vector<double> zeros(10, 0.0);
  CHECK(tail_average(zeros, 0.01) == 0.0);
  const std::vector<double> v = {5, 1, 4, 2, 3};
  CHECK(tail_average(v, 0.4) == doctest::Approx(4.5));
  CHECK(tail_average(v, 0.01) == 5);
  CHECK(tail_average(v, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  const std::vector<double> none;
  CHECK_THROWS_AS(tail_average(none, 0.5), ValidationError);
  CHECK_THROWS_AS(tail_average(v, 0.0), ValidationError);
}

TEST_CASE("tail average against a full sort") {
  RandomStream rng(3, 3);
  std::vector<double> draws(10000);
  for (double& d : draws) d = -std::log(rng.uniform());
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  const double top = std::accumulate(sorted.end() - 100, sorted.end(), 0.0) / 100;
  CHECK(tail_average(draws, 0.01) == top);
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
  CHECK(std::fabs(tail_average(draws, 1.0) - mean) <= 1e-12 * mean);
  CHECK(tail_average(draws, 0.3) >= mean);
  CHECK(tail_average(draws, 0.3) <= sorted.back());
}

TEST_CASE("pareto filter") {
  std::vector<FrontierPoint> pts = {point(1, 5), point(2, 4), point(3, 6)};
  std::vector<FrontierPoint> kept = pareto_filter(pts);
  CHECK(coords(kept) == std::vector<std::pair<double, double>>{{1, 5}, {2, 4}});
  CHECK(pareto_filter(std::vector<FrontierPoint>{point(1, 1)}).size() == 1);
  CHECK(pareto_filter(std::vector<FrontierPoint>{point(1, 1), point(1, 1)}).size() == 2);

  testing::Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FrontierPoint> cloud;
    for (int i = rng.integer(1, 30); i > 0; --i) {
      cloud.push_back(point(rng.integer(0, 9), rng.integer(0, 9)));
    }
    const std::vector<FrontierPoint> once = pareto_filter(cloud);
    CHECK(coords(pareto_filter(once)) == coords(once));
    for (const FrontierPoint& p : cloud) {
      const bool dominated = std::any_of(cloud.begin(), cloud.end(), [&](const FrontierPoint& q) {
        return q.oos_avg_cost <= p.oos_avg_cost && q.oos_tail_shed <= p.oos_tail_shed &&
               (q.oos_avg_cost < p.oos_avg_cost || q.oos_tail_shed < p.oos_tail_shed);
      });
      const bool survived = std::any_of(once.begin(), once.end(), [&](const FrontierPoint& q) {
        return q.oos_avg_cost == p.oos_avg_cost && q.oos_tail_shed == p.oos_tail_shed;
      });
      CHECK(dominated != survived);
    }
  }
}

TEST_CASE("out-of-sample evaluation") {
  const GridInstance demo = make_demo(DemoSize::kSmall, 7);
  EvalConfig cfg;
  cfg.m = 1000;
  cfg.seed = 55;
  const SpatialModel truth = demo_spatial_model();
  const SitingDecision none = SitingDecision::zeros(6);
  const SitingDecision some = SitingDecision::from_bits("101000");
  const SitingDecision all = SitingDecision::from_bits("111111");

  OosEvaluator one(demo, truth, cfg);
  cfg.threads = 4;
  OosEvaluator four(demo, truth, cfg);
  for (const SitingDecision& x : {none, some, all}) {
    const OosMetrics a = one.evaluate(x);
    const OosMetrics b = four.evaluate(x);
    CHECK(a.avg_cost == b.avg_cost);
    CHECK(a.tail_shed == b.tail_shed);
    CHECK(std::isfinite(a.avg_cost));
    CHECK(a.tail_shed >= 0.0);
    CHECK(a.avg_cost_se >= 0.0);
    const OosMetrics c = evaluate_oos(x, demo, truth, cfg);
    CHECK(c.avg_cost == a.avg_cost);
    CHECK(c.tail_shed == a.tail_shed);
  }
  CHECK(one.evaluate(some).tail_shed <= one.evaluate(none).tail_shed);
  CHECK(one.evaluate(all).tail_shed <= one.evaluate(some).tail_shed);

  // Zero demand everywhere: only the build cost remains.
  std::vector<Bus> buses = demo.buses();
  for (Bus& b : buses) b.base_demand_mw = 0.0;
  const GridInstance idle(buses, demo.lines(), demo.generators(), demo.response());
  const OosMetrics m = evaluate_oos(some, idle, truth, cfg);
  CHECK(m.avg_cost == doctest::Approx(build_cost(idle, some)));
  CHECK(m.tail_shed == 0.0);

  cfg.m = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("sweep contract") {
  const GridInstance demo = make_demo(DemoSize::kSmall, 7);
  EvalConfig ecfg;
  ecfg.m = 2000;
  ecfg.seed = 20240904;
  OosEvaluator evaluator(demo, demo_spatial_model(), ecfg);
  TrainingSpec spec;
  spec.model = demo_spatial_model();
  spec.n = 60;
  spec.seed = 3;
  SolveConfig scfg;

  const std::vector<double> bad_dup = {0, 10, 10};
  CHECK_THROWS_AS(sweep(demo, spec, bad_dup, scfg, evaluator), std::invalid_argument);
  const std::vector<double> bad_neg = {-1};
  CHECK_THROWS_AS(sweep(demo, spec, bad_neg, scfg, evaluator), std::invalid_argument);
  CHECK_THROWS_AS(sweep(demo, spec, std::vector<double>{}, scfg, evaluator), std::invalid_argument);

  // beta = 0 is the plain expected-cost solve.
  spec.label = ModelLabel::kBoCvar;
  const std::vector<double> zero = {0};
  const std::vector<FrontierPoint> single = sweep(demo, spec, zero, scfg, evaluator);
  REQUIRE(single.size() == 1);
  const ScenarioSet train = spec.sample(demo, 1);
  const Solution base = solve_enumeration(demo, train, SolveConfig{});
  CHECK(single[0].x == base.x);
  CHECK(single[0].in_exp_cost == doctest::Approx(base.exp_cost).epsilon(1e-6));
  CHECK(single[0].status == "ok");

  spec.label = ModelLabel::kBoCvarCond;
  spec.plan = StratificationPlan{0.01, 20, 20, 20};
  const std::vector<double> two = {0, 1e3};
  const std::vector<FrontierPoint> pts = sweep(demo, spec, two, scfg, evaluator);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].in_cvar_shed <= pts[0].in_cvar_shed + 1e-9);
  CHECK(pts[0].label == ModelLabel::kBoCvarCond);
  CHECK(pts[0].dependence == "dependent");

  // Lshaped and enumeration give the same frontier.
  const std::vector<FrontierPoint> enum_pts =
      sweep(demo, spec, two, scfg, evaluator, SolveMethod::kEnumeration);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(enum_pts[i].in_exp_cost + two[i] * enum_pts[i].in_cvar_shed ==
          doctest::Approx(pts[i].in_exp_cost + two[i] * pts[i].in_cvar_shed).epsilon(1e-6));
  }

  // A solver failure is recorded, not thrown.
  scfg.max_iters = 1;
  scfg.variant = Variant::kBoCvar;
  const std::vector<double> big = {5e3};
  const std::vector<FrontierPoint> limited = sweep(demo, spec, big, scfg, evaluator);
  REQUIRE(limited.size() == 1);
  if (limited[0].failed()) CHECK(limited[0].status == "iteration_limit");
}

TEST_CASE("frontier csv round trip and schema errors") {
  std::vector<FrontierPoint> pts = {point(10.5, 2.25), point(9, 3, ModelLabel::kBoCvarCond)};
  pts[1].dependence = "independent";
  pts[1].beta = 30;
  pts[1].status = "error: bad, worse";
  std::ostringstream out;
  write_frontier_csv(pts, out);
  const std::string text = out.str();
  CHECK(text.rfind("label,dependence,beta,x_bits,in_exp_cost,in_cvar_shed,oos_avg_cost,"
                   "oos_tail_shed,status\n", 0) == 0);
  std::istringstream in(text);
  const std::vector<FrontierPoint> back = read_frontier_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].oos_avg_cost == 10.5);
  CHECK(back[1].label == ModelLabel::kBoCvarCond);
  CHECK(back[1].dependence == "independent");
  CHECK(back[1].x.bits() == "01");
  CHECK(back[1].failed());

  std::istringstream renamed("label,dependence,beta,x_bits,in_exp_cost,in_cvar_shed,"
                             "avg_cost,oos_tail_shed,status\n");
  try {
    read_frontier_csv(renamed);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("avg_cost") != std::string::npos);
  }
  std::istringstream short_header("label,dependence\n");
  CHECK_THROWS_AS(read_frontier_csv(short_header), ParseError);
  std::istringstream bad_row(
      "label,dependence,beta,x_bits,in_exp_cost,in_cvar_shed,oos_avg_cost,oos_tail_shed,status\n"
      "base,dependent,0,01,1,2,abc,4,ok\n");
  try {
    read_frontier_csv(bad_row);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("oos_avg_cost") != std::string::npos);
  }
}

TEST_CASE("frontier svg") {
  const std::vector<FrontierPoint> one = {point(3, 4)};
  const std::string svg = render_frontier_svg(one);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "class=\"marker\"") == 1);
  CHECK(svg.find("Average cost ($/h)") != std::string::npos);
  CHECK(svg.find("Tail load shed (MW)") != std::string::npos);

  std::vector<FrontierPoint> two = {point(1, 5), point(2, 4), point(3, 6),
                                    point(1, 9, ModelLabel::kBoCvarCond),
                                    point(4, 1, ModelLabel::kBoCvarCond)};
  const std::string both = render_frontier_svg(two);
  CHECK(count(both, "class=\"legend-entry\"") == 2);
  CHECK(count(both, "class=\"marker\"") == 4);  // (3,6) is dominated
  CHECK(both == render_frontier_svg(two));

  CHECK_THROWS_WITH_AS(render_frontier_svg(std::vector<FrontierPoint>{}), "no data rows",
                       ValidationError);
}
