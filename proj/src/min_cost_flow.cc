#include "gridsiting/min_cost_flow.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridsiting/errors.h"

namespace gridsiting {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* role_name(NodeRole role) {
  switch (role) {
    case NodeRole::kSource:
      return "source";
    case NodeRole::kBus:
      return "bus";
    case NodeRole::kGenerator:
      return "generator";
    case NodeRole::kSink:
      return "sink";
  }
  return "?";
}

// Residual graph: edge 2a is arc a, edge 2a+1 its reverse.
class Residual {
 public:
  explicit Residual(const FlowNetwork& net)
      : net_(net), flow_(net.arcs.size(), 0), out_(net.num_nodes()) {
    for (int a = 0; a < static_cast<int>(net.arcs.size()); ++a) {
      out_[net.arcs[a].tail].push_back(2 * a);
      out_[net.arcs[a].head].push_back(2 * a + 1);
    }
  }

  int from(int e) const {
    const Arc& a = net_.arcs[e >> 1];
    return (e & 1) ? a.head : a.tail;
  }
  int to(int e) const {
    const Arc& a = net_.arcs[e >> 1];
    return (e & 1) ? a.tail : a.head;
  }
  double cost(int e) const {
    const double c = net_.arcs[e >> 1].cost;
    return (e & 1) ? -c : c;
  }
  std::int64_t residual(int e) const {
    return (e & 1) ? flow_[e >> 1] : net_.arcs[e >> 1].capacity - flow_[e >> 1];
  }
  void push(int e, std::int64_t amount) {
    flow_[e >> 1] += (e & 1) ? -amount : amount;
  }
  const std::vector<int>& out(int v) const { return out_[v]; }
  std::vector<std::int64_t> take_flow() { return std::move(flow_); }

 private:
  const FlowNetwork& net_;
  std::vector<std::int64_t> flow_;
  std::vector<std::vector<int>> out_;
};

}  // namespace

std::int64_t to_units(double mw) {
  return static_cast<std::int64_t>(std::llround(mw * kUnitsPerMw));
}

int FlowNetwork::add_node(NodeRole role, std::string label) {
  roles.push_back(role);
  labels.push_back(std::move(label));
  return num_nodes() - 1;
}

int FlowNetwork::add_arc(int tail, int head, std::int64_t capacity,
                         double cost) {
  arcs.push_back(Arc{tail, head, capacity, cost});
  return static_cast<int>(arcs.size()) - 1;
}

FlowSolution solve_min_cost_flow(const FlowNetwork& net) {
  const int n = net.num_nodes();
  if (net.source < 0 || net.source >= n || net.sink < 0 || net.sink >= n) {
    throw InfeasibleNetworkError("min-cost flow: source or sink missing");
  }
  Residual g(net);
  std::vector<double> pot(n, 0.0);

  // Bellman-Ford start only when some arc has a negative cost.
  const bool negative = std::any_of(net.arcs.begin(), net.arcs.end(),
                                    [](const Arc& a) { return a.cost < 0.0; });
  if (negative) {
    std::vector<double> d(n, kInf);
    d[net.source] = 0.0;
    for (int round = 0; round < n; ++round) {
      bool changed = false;
      for (int a = 0; a < static_cast<int>(net.arcs.size()); ++a) {
        const Arc& arc = net.arcs[a];
        if (arc.capacity > 0 && d[arc.tail] + arc.cost < d[arc.head]) {
          d[arc.head] = d[arc.tail] + arc.cost;
          changed = true;
        }
      }
      if (!changed) break;
    }
    for (int v = 0; v < n; ++v) pot[v] = std::isfinite(d[v]) ? d[v] : 0.0;
  }

  std::vector<double> dist(n);
  std::vector<int> parent(n);
  std::int64_t sent = 0;
  using Entry = std::pair<double, int>;
  while (sent < net.required_flow) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), -1);
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[net.source] = 0.0;
    heap.emplace(0.0, net.source);
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > dist[v]) continue;
      for (int e : g.out(v)) {
        if (g.residual(e) <= 0) continue;
        const int w = g.to(e);
        const double rc = std::max(0.0, g.cost(e) + pot[v] - pot[w]);
        if (d + rc < dist[w]) {
          dist[w] = d + rc;
          parent[w] = e;
          heap.emplace(dist[w], w);
        }
      }
    }
    if (!std::isfinite(dist[net.sink])) {
      throw InfeasibleNetworkError(fmt::format(
          "min-cost flow: only {} of {} units can reach the sink", sent,
          net.required_flow));
    }
    // Capping at the sink distance keeps reduced costs nonnegative for nodes
    // beyond the sink or unreachable from the source.
    const double cap = dist[net.sink];
    for (int v = 0; v < n; ++v) pot[v] += std::min(dist[v], cap);

    std::int64_t push = net.required_flow - sent;
    for (int v = net.sink; v != net.source; v = g.from(parent[v])) {
      push = std::min(push, g.residual(parent[v]));
    }
    for (int v = net.sink; v != net.source; v = g.from(parent[v])) {
      g.push(parent[v], push);
    }
    sent += push;
  }

  FlowSolution sol;
  sol.flow = g.take_flow();
  sol.potential = std::move(pot);
  double primal = 0.0;
  double penalty = 0.0;
  for (int a = 0; a < static_cast<int>(net.arcs.size()); ++a) {
    const Arc& arc = net.arcs[a];
    primal += arc.cost * static_cast<double>(sol.flow[a]);
    const double rc = reduced_cost(net, sol, a);
    if (rc < 0.0) penalty += static_cast<double>(arc.capacity) * -rc;
  }
  sol.objective = primal / kUnitsPerMw;
  sol.dual_objective =
      (static_cast<double>(net.required_flow) *
           (sol.potential[net.sink] - sol.potential[net.source]) -
       penalty) /
      kUnitsPerMw;
  return sol;
}

void write_network(const FlowNetwork& net, std::ostream& out) {
  fmt::print(out, "# nodes {} arcs {} required_flow_mw {}\n", net.num_nodes(),
             net.arcs.size(), to_mw(net.required_flow));
  for (int v = 0; v < net.num_nodes(); ++v) {
    fmt::print(out, "node {} {} {}\n", v, role_name(net.roles[v]), net.labels[v]);
  }
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const Arc& arc = net.arcs[a];
    fmt::print(out, "arc {} {} -> {} cap_mw {} cost {}\n", a,
               net.labels[arc.tail], net.labels[arc.head], to_mw(arc.capacity),
               arc.cost);
  }
}

}  // namespace gridsiting
