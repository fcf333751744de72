#ifndef GRIDSITING_MIN_COST_FLOW_H_
#define GRIDSITING_MIN_COST_FLOW_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace gridsiting {

// Flow quantities are integers on a 1e-3 MW grid.
inline constexpr std::int64_t kUnitsPerMw = 1000;
std::int64_t to_units(double mw);
inline double to_mw(std::int64_t units) {
  return static_cast<double>(units) / kUnitsPerMw;
}

enum class NodeRole { kSource, kBus, kGenerator, kSink };

struct Arc {
  int tail = 0;
  int head = 0;
  std::int64_t capacity = 0;  // units
  double cost = 0.0;          // per MW
};

// Single-source single-sink network: `required_flow` units must travel from
// source to sink.
struct FlowNetwork {
  std::vector<NodeRole> roles;
  std::vector<std::string> labels;
  std::vector<Arc> arcs;
  int source = -1;
  int sink = -1;
  std::int64_t required_flow = 0;

  int num_nodes() const { return static_cast<int>(roles.size()); }
  int add_node(NodeRole role, std::string label);
  int add_arc(int tail, int head, std::int64_t capacity, double cost);
};

struct FlowSolution {
  std::vector<std::int64_t> flow;  // per arc, units
  std::vector<double> potential;   // per node
  double objective = 0.0;          // sum cost * flow, in MW-scaled units
  double dual_objective = 0.0;
};

// Successive shortest paths with Dijkstra on reduced costs. The returned
// potentials certify optimality: arcs below capacity have reduced cost >= 0
// and arcs carrying flow have reduced cost <= 0. Ties in path length go to
// the lowest-index arc. Throws InfeasibleNetworkError when the required flow
// cannot be routed.
FlowSolution solve_min_cost_flow(const FlowNetwork& net);

inline double reduced_cost(const FlowNetwork& net, const FlowSolution& sol,
                           int arc) {
  const Arc& a = net.arcs[arc];
  return a.cost + sol.potential[a.tail] - sol.potential[a.head];
}

// Plain-text arc list, one arc per line.
void write_network(const FlowNetwork& net, std::ostream& out);

}  // namespace gridsiting

#endif  // GRIDSITING_MIN_COST_FLOW_H_
