#ifndef GRIDSITING_LP_H_
#define GRIDSITING_LP_H_

#include <limits>
#include <utility>
#include <vector>

namespace gridsiting {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

enum class RowSense { kLe, kGe, kEq };

struct LpRow {
  std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
};

// minimize cost . x  subject to rows and lower <= x <= upper.
struct LpProblem {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpRow> rows;

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(double c, double lo, double hi);
  int add_row(std::vector<std::pair<int, double>> terms, RowSense sense,
              double rhs);
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

// Basis of an optimal solve. It stays a valid start for a problem that only
// appends rows, appends variables or changes bounds.
struct LpBasis {
  // One entry per row: a variable index, or -1 - i for the slack of row i.
  std::vector<int> basic;
  // Per variable: nonbasic at its upper bound.
  std::vector<char> at_upper;
  // Column-major inverse of the basis matrix and the number of product-form
  // updates it has absorbed since its last factorization. Empty when not kept.
  std::vector<double> inverse;
  int updates = 0;
};

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  // d objective / d rhs_i. Nonpositive on <= rows, nonnegative on >= rows.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  int iterations = 0;
  LpBasis basis;  // filled when status is optimal

  // Optimality certificate, filled when status is optimal.
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double dual_objective = 0.0;
};

// Two-phase bounded-variable primal simplex over a dense explicit basis
// inverse, refactorized periodically. Bland's rule selects both the entering
// and the leaving variable. A solve that breaks down in double precision is
// retried once in long double. Throws NumericalBreakdownError when the basis
// becomes singular or the final certificate fails in both.
//
// With a start basis the solve first runs a dual simplex from it, which after
// appended cuts or tightened bounds usually needs only a few pivots; any
// failure on that path falls back to the cold two-phase solve.
LpSolution solve_lp(const LpProblem& problem, const LpBasis* start = nullptr);

}  // namespace gridsiting

#endif  // GRIDSITING_LP_H_
