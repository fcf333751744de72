#include "gridsiting/lp.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "gridsiting/errors.h"

namespace gridsiting {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kRelPivotTol = 1e-8;
constexpr double kBreakdownPivot = 1e-11;
constexpr double kOptTol = 1e-9;  // relative to the magnitude of the priced terms
constexpr double kTieTol = 1e-12;
constexpr double kFeasTol = 1e-9;
constexpr int kRefactorEvery = 64;

// Columns are laid out as [structural | slack | artificial]. Row i reads
// a_i x + s_i + sign_i r_i = b_i, where the slack bounds encode the row sense
// and the artificial r_i >= 0 is only live during phase one. Scalar is the
// working precision of the basis arithmetic.
template <typename Scalar>
class Simplex {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

 public:
  explicit Simplex(const LpProblem& p)
      : n_(p.num_vars()), m_(p.num_rows()), a_(Mat::Zero(m_, n_)), b_(m_) {
    for (int i = 0; i < m_; ++i) {
      const LpRow& row = p.rows[i];
      for (auto [j, v] : row.terms) {
        if (j < 0 || j >= n_) {
          throw DimensionMismatchError(
              fmt::format("lp: row {} references variable {}", i, j));
        }
        a_(i, j) += v;
      }
      b_[i] = row.rhs;
    }
    const int total = n_ + 2 * m_;
    lo_.assign(total, 0.0);
    hi_.assign(total, 0.0);
    cost_.assign(total, 0.0);
    x_.assign(total, 0.0);
    position_.assign(total, -1);
    for (int j = 0; j < n_; ++j) {
      if (!(p.lower[j] <= p.upper[j])) {
        throw DimensionMismatchError(
            fmt::format("lp: variable {} has lower > upper", j));
      }
      lo_[j] = p.lower[j];
      hi_[j] = p.upper[j];
      x_[j] = std::isfinite(p.lower[j]) ? p.lower[j]
                                        : (std::isfinite(p.upper[j]) ? p.upper[j] : 0.0);
    }
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      switch (p.rows[i].sense) {
        case RowSense::kLe:
          lo_[s] = 0.0;
          hi_[s] = kLpInf;
          break;
        case RowSense::kGe:
          lo_[s] = -kLpInf;
          hi_[s] = 0.0;
          break;
        case RowSense::kEq:
          break;
      }
    }
    // Artificial basis absorbs the residual of the initial nonbasic point.
    Vec residual = b_;
    for (int j = 0; j < n_; ++j) {
      if (x_[j] != 0) residual -= a_.col(j) * x_[j];
    }
    sign_.resize(m_);
    basis_.resize(m_);
    binv_ = Mat::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int r = n_ + m_ + i;
      sign_[i] = residual[i] >= 0 ? 1 : -1;
      lo_[r] = 0.0;
      hi_[r] = kLpInf;
      x_[r] = residual[i] >= 0 ? residual[i] : -residual[i];
      basis_[i] = r;
      position_[r] = i;
      binv_(i, i) = sign_[i];
    }
  }

  // Fills status, x, objective, duals and reduced costs; certification is the
  // caller's job so it can be done against the double-precision data.
  LpSolution run() {
    LpSolution sol;
    for (int i = 0; i < m_; ++i) cost_[n_ + m_ + i] = 1.0;
    iterate();  // phase one cannot be unbounded
    Scalar infeasibility = 0;
    for (int i = 0; i < m_; ++i) infeasibility += x_[n_ + m_ + i];
    const Scalar scale = 1 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : Scalar(0));
    if (infeasibility > Scalar(1e-9) * scale) {
      sol.status = LpStatus::kInfeasible;
      sol.iterations = iterations_;
      return sol;
    }

    for (int i = 0; i < m_; ++i) {
      const int r = n_ + m_ + i;
      cost_[r] = 0.0;
      hi_[r] = 0.0;
      if (position_[r] < 0) x_[r] = 0;
    }
    for (int j = 0; j < n_; ++j) cost_[j] = true_cost_[j];
    refactor();
    const bool bounded = iterate();
    refactor();
    return finish(bounded);
  }

  // Dual simplex from a previous basis, then primal cleanup. Returns nothing
  // when the start cannot be used and a cold solve should decide instead.
  std::optional<LpSolution> run_from(const LpBasis& start) {
    if (!load(start) || !make_dual_feasible() || !dual_iterate()) return std::nullopt;
    const bool bounded = iterate();
    recompute_primal();
    return finish(bounded);
  }

  void set_true_cost(const std::vector<double>& c) { true_cost_ = c; }

 private:
  LpSolution finish(bool bounded) {
    LpSolution sol;
    sol.iterations = iterations_;
    sol.x.resize(n_);
    for (int j = 0; j < n_; ++j) sol.x[j] = static_cast<double>(x_[j]);
    sol.objective = 0.0;
    for (int j = 0; j < n_; ++j) sol.objective += true_cost_[j] * sol.x[j];
    if (!bounded) {
      sol.status = LpStatus::kUnbounded;
      sol.objective = -kLpInf;
      return sol;
    }
    sol.status = LpStatus::kOptimal;
    const Vec y = duals();
    sol.row_duals.resize(m_);
    for (int i = 0; i < m_; ++i) sol.row_duals[i] = static_cast<double>(y[i]);
    sol.reduced_costs.resize(n_);
    for (int j = 0; j < n_; ++j) {
      sol.reduced_costs[j] = static_cast<double>(cost_[j] - y.dot(a_.col(j)));
    }
    // A degenerate artificial left in the basis has no place in a later
    // problem, so no basis is exported then.
    bool exportable = true;
    sol.basis.basic.resize(m_);
    for (int i = 0; i < m_; ++i) {
      const int k = basis_[i];
      exportable = exportable && k < n_ + m_;
      sol.basis.basic[i] = k < n_ ? k : -1 - (k - n_);
    }
    sol.basis.at_upper.assign(n_, 0);
    for (int j = 0; j < n_; ++j) {
      sol.basis.at_upper[j] = position_[j] < 0 && lo_[j] != hi_[j] && x_[j] == hi_[j];
    }
    if (!exportable) {
      sol.basis = LpBasis{};
    } else if constexpr (std::is_same_v<Scalar, double>) {
      sol.basis.inverse.assign(binv_.data(), binv_.data() + binv_.size());
      sol.basis.updates = since_refactor_;
    }
    return sol;
  }

  bool load(const LpBasis& start) {
    if (static_cast<int>(start.basic.size()) > m_) return false;
    std::fill(position_.begin(), position_.end(), -1);
    for (int i = 0; i < m_; ++i) {
      int k = n_ + i;  // rows appended since the start keep their slack basic
      if (i < static_cast<int>(start.basic.size())) {
        const int e = start.basic[i];
        if (e >= n_ || -1 - e >= m_) return false;
        k = e >= 0 ? e : n_ + (-1 - e);
      }
      if (position_[k] >= 0) return false;
      basis_[i] = k;
      position_[k] = i;
    }
    for (int j = 0; j < n_; ++j) {
      cost_[j] = true_cost_[j];
      if (position_[j] >= 0) continue;
      const bool up = j < static_cast<int>(start.at_upper.size()) && start.at_upper[j] &&
                      std::isfinite(hi_[j]);
      x_[j] = up ? hi_[j] : (std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0));
    }
    for (int k = n_; k < n_ + 2 * m_; ++k) {
      cost_[k] = 0.0;
      if (position_[k] < 0) x_[k] = 0;
    }
    for (int k = n_ + m_; k < n_ + 2 * m_; ++k) hi_[k] = 0.0;
    const int kept = static_cast<int>(start.basic.size());
    if (start.inverse.size() != static_cast<std::size_t>(kept) * kept ||
        start.updates >= kRefactorEvery) {
      refactor();
      return true;
    }
    // Appended rows keep their slacks basic, so the basis is block lower
    // triangular [B 0; C I] with inverse [B^-1 0; -C B^-1 I].
    binv_ = Mat::Zero(m_, m_);
    binv_.topLeftCorner(kept, kept) =
        Eigen::Map<const Eigen::MatrixXd>(start.inverse.data(), kept, kept).template cast<Scalar>();
    if (kept < m_) {
      Mat c = Mat::Zero(m_ - kept, kept);
      for (int r = 0; r < kept; ++r) {
        if (basis_[r] < n_) c.col(r) = a_.col(basis_[r]).tail(m_ - kept);
      }
      binv_.bottomLeftCorner(m_ - kept, kept).noalias() = -c * binv_.topLeftCorner(kept, kept);
      binv_.bottomRightCorner(m_ - kept, m_ - kept).setIdentity();
    }
    since_refactor_ = start.updates;
    recompute_primal();
    return true;
  }

  // Moves nonbasic variables to the bound their reduced cost prefers. Fails
  // when a reduced cost points toward an infinite bound.
  bool make_dual_feasible() {
    const Vec y = duals();
    bool moved = false;
    for (int j = 0; j < n_ + m_; ++j) {
      if (position_[j] >= 0 || lo_[j] == hi_[j]) continue;
      const Scalar dj = price(j, y);
      const Scalar tol = Scalar(kOptTol) * (1 + price_scale(j, y));
      if (dj < -tol && x_[j] < hi_[j]) {
        if (!std::isfinite(hi_[j])) return false;
        x_[j] = hi_[j];
        moved = true;
      } else if (dj > tol && x_[j] > lo_[j]) {
        if (!std::isfinite(lo_[j])) return false;
        x_[j] = lo_[j];
        moved = true;
      }
    }
    if (moved) refactor();
    return true;
  }

  // Bounded dual simplex with smallest-index choices for both the leaving row
  // and the entering column. Returns true once the basis is primal feasible,
  // false when no column can repair a violated row.
  bool dual_iterate() {
    using std::abs;
    const int total = n_ + 2 * m_;
    const int limit = 100000 + 200 * total;
    for (;;) {
      if (iterations_ >= limit) {
        throw NumericalBreakdownError("lp: iteration limit exceeded");
      }
      if (since_refactor_ >= kRefactorEvery) refactor();

      int row = -1;
      for (int r = 0; r < m_; ++r) {
        const int k = basis_[r];
        const bool low = x_[k] < lo_[k] - kFeasTol * (1 + std::fabs(lo_[k]));
        const bool high = x_[k] > hi_[k] + kFeasTol * (1 + std::fabs(hi_[k]));
        if ((low || high) && (row < 0 || k < basis_[row])) row = r;
      }
      if (row < 0) return true;
      const int leaving = basis_[row];
      const bool raise = x_[leaving] < lo_[leaving];
      const Scalar target = raise ? lo_[leaving] : hi_[leaving];

      const Vec y = duals();
      const RowVec rho = binv_.row(row);
      Scalar row_max = 0;
      std::vector<std::pair<int, Scalar>> eligible;
      for (int j = 0; j < n_ + m_; ++j) {
        if (position_[j] >= 0 || lo_[j] == hi_[j]) continue;
        const Scalar arj = j < n_ ? Scalar(rho.dot(a_.col(j))) : rho[j - n_];
        row_max = std::max(row_max, abs(arj));
        // x_leaving moves by -arj per unit of x_j.
        const bool increase = raise ? arj < 0 : arj > 0;
        if (increase ? !(x_[j] < hi_[j]) : !(x_[j] > lo_[j])) continue;
        eligible.emplace_back(j, arj);
      }
      const Scalar pivot_tol = std::max(Scalar(kPivotTol), Scalar(kRelPivotTol) * row_max);
      int entering = -1;
      Scalar best = 0;
      for (auto [j, arj] : eligible) {
        if (abs(arj) <= pivot_tol) continue;
        const Scalar ratio = abs(price(j, y)) / abs(arj);
        if (entering < 0 || ratio < best - kTieTol) {
          entering = j;
          best = ratio;
        }
      }
      if (entering < 0) return false;
      ++iterations_;

      const Vec alpha = binv_ * column(entering);
      const Scalar pivot = alpha[row];
      if (abs(pivot) < kBreakdownPivot) {
        throw NumericalBreakdownError("lp: pivot magnitude below tolerance");
      }
      const Scalar step = (x_[leaving] - target) / pivot;
      x_[entering] += step;
      for (int r = 0; r < m_; ++r) x_[basis_[r]] -= step * alpha[r];
      x_[leaving] = target;
      position_[leaving] = -1;
      basis_[row] = entering;
      position_[entering] = row;

      const RowVec pivot_row = binv_.row(row) / pivot;
      binv_.noalias() -= alpha * pivot_row;
      binv_.row(row) = pivot_row;
      ++since_refactor_;
    }
  }

  Vec column(int j) const {
    if (j < n_) return a_.col(j);
    Vec e = Vec::Zero(m_);
    if (j < n_ + m_) {
      e[j - n_] = 1;
    } else {
      e[j - n_ - m_] = sign_[j - n_ - m_];
    }
    return e;
  }

  Scalar price(int j, const Vec& y) const {
    if (j < n_) return cost_[j] - y.dot(a_.col(j));
    if (j < n_ + m_) return cost_[j] - y[j - n_];
    return cost_[j] - sign_[j - n_ - m_] * y[j - n_ - m_];
  }

  // Size of the terms summed in price(j); rounding error scales with it.
  Scalar price_scale(int j, const Vec& y) const {
    using std::abs;
    if (j < n_) return abs(Scalar(cost_[j])) + y.cwiseAbs().dot(a_.col(j).cwiseAbs());
    if (j < n_ + m_) return abs(Scalar(cost_[j])) + abs(y[j - n_]);
    return abs(Scalar(cost_[j])) + abs(y[j - n_ - m_]);
  }

  Vec duals() const {
    Vec cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    return binv_.transpose() * cb;
  }

  void refactor() {
    since_refactor_ = 0;
    if (m_ == 0) return;
    Mat basis(m_, m_);
    for (int i = 0; i < m_; ++i) basis.col(i) = column(basis_[i]);
    Eigen::PartialPivLU<Mat> lu(basis);
    if (!(lu.rcond() > Eigen::NumTraits<Scalar>::epsilon() * m_)) {
      throw NumericalBreakdownError("lp: basis matrix became singular");
    }
    binv_ = lu.inverse();
    recompute_primal();
  }

  // Basic values from the nonbasic ones through the current inverse.
  void recompute_primal() {
    if (m_ == 0) return;
    Vec rhs = b_;
    for (int j = 0; j < n_ + 2 * m_; ++j) {
      if (position_[j] < 0 && x_[j] != 0) rhs -= column(j) * x_[j];
    }
    const Vec xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  // Runs simplex iterations with the current costs. Returns false when the
  // objective is unbounded below.
  bool iterate() {
    using std::abs;
    const int total = n_ + 2 * m_;
    const int limit = 100000 + 200 * total;
    for (;;) {
      if (iterations_ >= limit) {
        throw NumericalBreakdownError("lp: iteration limit exceeded");
      }
      if (since_refactor_ >= kRefactorEvery) refactor();
      const Vec y = duals();

      int entering = -1;
      Scalar d = 0;
      for (int j = 0; j < total; ++j) {
        if (position_[j] >= 0 || lo_[j] == hi_[j]) continue;
        const Scalar dj = price(j, y);
        const Scalar tol = Scalar(kOptTol) * (1 + price_scale(j, y));
        if ((dj < -tol && x_[j] < hi_[j]) || (dj > tol && x_[j] > lo_[j])) {
          entering = j;
          d = dj;
          break;
        }
      }
      if (entering < 0) return true;
      ++iterations_;

      const Scalar dir = d < 0 ? 1 : -1;
      const Vec alpha = binv_ * column(entering);

      Scalar best_t = Scalar(hi_[entering]) - Scalar(lo_[entering]);  // bound flip
      int best_var = entering;
      int best_row = -1;
      // Entries tiny next to the rest of the column are mostly rounding error.
      const Scalar pivot_tol =
          std::max(Scalar(kPivotTol),
                   m_ > 0 ? Scalar(kRelPivotTol) * alpha.cwiseAbs().maxCoeff() : Scalar(0));
      for (int r = 0; r < m_; ++r) {
        const Scalar rate = dir * alpha[r];
        const int k = basis_[r];
        Scalar t;
        if (rate > pivot_tol && std::isfinite(lo_[k])) {
          t = (x_[k] - lo_[k]) / rate;
        } else if (rate < -pivot_tol && std::isfinite(hi_[k])) {
          t = (hi_[k] - x_[k]) / -rate;
        } else {
          continue;
        }
        t = std::max(t, Scalar(0));
        if (t < best_t - kTieTol || (t <= best_t + kTieTol && k < best_var)) {
          best_t = t;
          best_var = k;
          best_row = r;
        }
      }
      if (!(best_t < Scalar(kLpInf))) return false;

      if (best_row >= 0 && abs(alpha[best_row]) < kBreakdownPivot) {
        if (since_refactor_ == 0) {
          throw NumericalBreakdownError("lp: pivot magnitude below tolerance");
        }
        refactor();
        continue;
      }
      x_[entering] += dir * best_t;
      for (int r = 0; r < m_; ++r) x_[basis_[r]] -= dir * best_t * alpha[r];
      if (best_row < 0) {
        x_[entering] = dir > 0 ? hi_[entering] : lo_[entering];
        continue;
      }
      const Scalar pivot = alpha[best_row];
      const int leaving = basis_[best_row];
      x_[leaving] = dir * pivot > 0 ? lo_[leaving] : hi_[leaving];
      position_[leaving] = -1;
      basis_[best_row] = entering;
      position_[entering] = best_row;

      const RowVec pivot_row = binv_.row(best_row) / pivot;
      binv_.noalias() -= alpha * pivot_row;
      binv_.row(best_row) = pivot_row;
      ++since_refactor_;
    }
  }

  int n_;
  int m_;
  Mat a_;
  Vec b_;
  std::vector<double> lo_, hi_, cost_, true_cost_;
  std::vector<Scalar> x_, sign_;
  std::vector<int> basis_;
  std::vector<int> position_;
  Mat binv_;
  int since_refactor_ = 0;
  int iterations_ = 0;
};

// Strong-duality certificate computed from the problem data in double
// precision, independent of the working precision of the solve.
void certify(const LpProblem& p, LpSolution& sol) {
  const int n = p.num_vars();
  double primal = 0.0;
  double dual_infeas = 0.0;
  double dual_obj = 0.0;
  double y_scale = 0.0;
  std::vector<double> reduced(p.cost);
  for (int i = 0; i < p.num_rows(); ++i) {
    const LpRow& row = p.rows[i];
    const double yi = sol.row_duals[i];
    y_scale = std::max(y_scale, std::fabs(yi));
    double act = 0.0;
    for (auto [j, v] : row.terms) {
      act += v * sol.x[j];
      reduced[j] -= yi * v;
    }
    if (row.sense != RowSense::kGe) primal = std::max(primal, act - row.rhs);
    if (row.sense != RowSense::kLe) primal = std::max(primal, row.rhs - act);
    // Row duals must be <= 0 on <= rows and >= 0 on >= rows.
    if (row.sense == RowSense::kLe) dual_infeas = std::max(dual_infeas, yi);
    if (row.sense == RowSense::kGe) dual_infeas = std::max(dual_infeas, -yi);
    dual_obj += yi * row.rhs;
  }
  for (int j = 0; j < n; ++j) {
    primal = std::max({primal, p.lower[j] - sol.x[j], sol.x[j] - p.upper[j]});
    const double dj = reduced[j];
    if (dj > 0.0) {
      if (std::isfinite(p.lower[j])) {
        dual_obj += dj * p.lower[j];
      } else {
        dual_infeas = std::max(dual_infeas, dj);
      }
    } else if (dj < 0.0) {
      if (std::isfinite(p.upper[j])) {
        dual_obj += dj * p.upper[j];
      } else {
        dual_infeas = std::max(dual_infeas, -dj);
      }
    }
  }
  sol.reduced_costs = reduced;
  sol.primal_infeasibility = primal;
  sol.dual_infeasibility = dual_infeas;
  sol.dual_objective = dual_obj;
  const double gap = std::fabs(sol.objective - dual_obj);
  if (gap > 1e-6 * std::max(1.0, std::fabs(sol.objective)) || primal > 1e-6 ||
      dual_infeas > 1e-6 * (1.0 + y_scale)) {
    throw NumericalBreakdownError(fmt::format(
        "lp: optimality certificate failed (gap {}, primal {}, dual {})", gap, primal,
        dual_infeas));
  }
}

template <typename Scalar>
LpSolution solve_in(const LpProblem& problem) {
  Simplex<Scalar> simplex(problem);
  simplex.set_true_cost(problem.cost);
  LpSolution sol = simplex.run();
  if (sol.status == LpStatus::kOptimal) certify(problem, sol);
  return sol;
}

}  // namespace

int LpProblem::add_variable(double c, double lo, double hi) {
  cost.push_back(c);
  lower.push_back(lo);
  upper.push_back(hi);
  return num_vars() - 1;
}

int LpProblem::add_row(std::vector<std::pair<int, double>> terms,
                       RowSense sense, double rhs) {
  rows.push_back(LpRow{std::move(terms), sense, rhs});
  return num_rows() - 1;
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "?";
}

LpSolution solve_lp(const LpProblem& problem, const LpBasis* start) {
  if (static_cast<int>(problem.lower.size()) != problem.num_vars() ||
      static_cast<int>(problem.upper.size()) != problem.num_vars()) {
    throw DimensionMismatchError("lp: bound vectors do not match cost vector");
  }
  if (start != nullptr) {
    try {
      Simplex<double> simplex(problem);
      simplex.set_true_cost(problem.cost);
      std::optional<LpSolution> sol = simplex.run_from(*start);
      if (sol && sol->status == LpStatus::kOptimal) {
        certify(problem, *sol);
        return *sol;
      }
    } catch (const NumericalBreakdownError&) {
      // fall through to the cold solve
    }
  }
  try {
    return solve_in<double>(problem);
  } catch (const NumericalBreakdownError&) {
    // Near-parallel cut rows can drive Bland's rule through bases too
    // ill-conditioned for double precision; retry once with a wider mantissa.
    return solve_in<long double>(problem);
  }
}

}  // namespace gridsiting
