#pragma once

#include <wrenchlab/common.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace wrenchlab {

/* maximize c'z  subject to  A_eq z = b_eq,  A_ub z <= b_ub,  lower <= z <= upper.
 * Bounds may be +-infinity.  Empty constraint blocks are allowed. */
struct LinearProgram {
  VecX c;
  MatX A_eq;
  VecX b_eq;
  MatX A_ub;
  VecX b_ub;
  VecX lower;
  VecX upper;

  static LinearProgram maximize(VecX cost) {
    LinearProgram lp;
    int n = static_cast<int>(cost.size());
    lp.c = std::move(cost);
    lp.A_eq.resize(0, n);
    lp.b_eq.resize(0);
    lp.A_ub.resize(0, n);
    lp.b_ub.resize(0);
    lp.lower = VecX::Zero(n);
    lp.upper = VecX::Constant(n, std::numeric_limits<double>::infinity());
    return lp;
  }

  int n_vars() const { return static_cast<int>(c.size()); }

  void set_free(int k) {
    lower[k] = -std::numeric_limits<double>::infinity();
    upper[k] = std::numeric_limits<double>::infinity();
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, Failed };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    default: return "failed";
  }
}

struct LpSolution {
  LpStatus status = LpStatus::Failed;
  VecX z;                 // primal optimum (original variables)
  double value = 0;       // c'z at the optimum
  VecX dual_eq;           // multipliers for A_eq rows
  VecX dual_ub;           // multipliers for A_ub rows, >= 0
  double dual_value = 0;  // dual objective; |value - dual_value| <= gap tolerance
  std::vector<int> basis; // internal basic column ids (diagnostic)
  bool primal_degenerate = false;
  bool dual_degenerate = false;
  int iterations = 0;
  std::string message;
};

namespace detail {

inline bool finite(double v) { return std::isfinite(v); }

/* Internal standard form: minimize cmin'x, A x {=,<=} b, x >= 0, built by
 * shifting / negating / splitting the original variables.  Rows are ordered
 * eq block, ub block, then upper-bound rows for doubly-bounded variables. */
struct StandardForm {
  enum class VarKind { Shift, NegShift, Split };
  struct VarMap {
    VarKind kind;
    int col_a = -1, col_b = -1;
    double shift = 0;
  };

  std::vector<VarMap> vmap;
  int n_struct = 0;     // structural columns
  int n_eq = 0, n_ub = 0, n_bound = 0;
  MatX A;               // (n_eq+n_ub+n_bound) x n_struct
  VecX b;
  VecX cmin;            // minimize
  double offset = 0;    // value = offset - cmin'x

  static StandardForm build(const LinearProgram& lp) {
    int n = lp.n_vars();
    StandardForm sf;
    sf.vmap.resize(n);

    std::vector<int> bounded; // originals contributing an upper-bound row
    for (int k = 0; k < n; ++k) {
      double lo = lp.lower[k], hi = lp.upper[k];
      if (lo > hi) throw Error("inconsistent bounds");
      auto& m = sf.vmap[k];
      if (finite(lo)) {
        m.kind = VarKind::Shift;
        m.col_a = sf.n_struct++;
        m.shift = lo;
        if (finite(hi)) bounded.push_back(k);
      } else if (finite(hi)) {
        m.kind = VarKind::NegShift;
        m.col_a = sf.n_struct++;
        m.shift = hi;
      } else {
        m.kind = VarKind::Split;
        m.col_a = sf.n_struct++;
        m.col_b = sf.n_struct++;
      }
    }

    sf.n_eq = static_cast<int>(lp.b_eq.size());
    sf.n_ub = static_cast<int>(lp.b_ub.size());
    sf.n_bound = static_cast<int>(bounded.size());
    int m_rows = sf.n_eq + sf.n_ub + sf.n_bound;
    sf.A = MatX::Zero(m_rows, sf.n_struct);
    sf.b = VecX::Zero(m_rows);
    sf.cmin = VecX::Zero(sf.n_struct);

    // objective: maximize c'z = offset + sum_k c_k * (signed x) -> cmin = -that
    for (int k = 0; k < n; ++k) {
      const auto& m = sf.vmap[k];
      double ck = lp.c[k];
      switch (m.kind) {
        case VarKind::Shift:
          sf.offset += ck * m.shift;
          sf.cmin[m.col_a] -= ck;
          break;
        case VarKind::NegShift:
          sf.offset += ck * m.shift;
          sf.cmin[m.col_a] += ck;
          break;
        case VarKind::Split:
          sf.cmin[m.col_a] -= ck;
          sf.cmin[m.col_b] += ck;
          break;
      }
    }

    auto emit_row = [&](int row, const MatX& src, int src_row, double rhs) {
      double adj = rhs;
      for (int k = 0; k < n; ++k) {
        double a = src(src_row, k);
        if (a == 0) continue;
        const auto& m = sf.vmap[k];
        switch (m.kind) {
          case VarKind::Shift:
            adj -= a * m.shift;
            sf.A(row, m.col_a) += a;
            break;
          case VarKind::NegShift:
            adj -= a * m.shift;
            sf.A(row, m.col_a) -= a;
            break;
          case VarKind::Split:
            sf.A(row, m.col_a) += a;
            sf.A(row, m.col_b) -= a;
            break;
        }
      }
      sf.b[row] = adj;
    };

    for (int i = 0; i < sf.n_eq; ++i) emit_row(i, lp.A_eq, i, lp.b_eq[i]);
    for (int i = 0; i < sf.n_ub; ++i) emit_row(sf.n_eq + i, lp.A_ub, i, lp.b_ub[i]);
    for (int i = 0; i < sf.n_bound; ++i) {
      int row = sf.n_eq + sf.n_ub + i, k = bounded[i];
      sf.A(row, sf.vmap[k].col_a) = 1.0;
      sf.b[row] = lp.upper[k] - lp.lower[k];
    }
    return sf;
  }

  VecX recover_z(const LinearProgram& lp, const VecX& x) const {
    VecX z(lp.n_vars());
    for (int k = 0; k < lp.n_vars(); ++k) {
      const auto& m = vmap[k];
      switch (m.kind) {
        case VarKind::Shift: z[k] = m.shift + x[m.col_a]; break;
        case VarKind::NegShift: z[k] = m.shift - x[m.col_a]; break;
        case VarKind::Split: z[k] = x[m.col_a] - x[m.col_b]; break;
      }
    }
    return z;
  }
};

/* Tableau simplex core (minimization).  Dantzig pricing for a fixed budget,
 * then Bland's rule; leaving row always breaks ratio-test ties by smallest
 * basic variable index, so the Bland phase cannot cycle. */
class Tableau {
public:
  MatX T;               // m x (ncols+1); last column is the rhs
  MatX An;              // sign-normalized constraint matrix (m x ncols)
  VecX bn;              // normalized rhs, >= 0
  VecX row_sign;        // original internal row = row_sign * normalized row
  std::vector<int> basis;
  std::vector<bool> is_artificial;
  int m = 0, ncols = 0, n_core = 0; // n_core = structural + slack columns
  int iterations = 0;

  static constexpr double pivot_tol = 1e-9;
  static constexpr double ratio_tol = 1e-11;
  static constexpr double harris_slack = 1e-9; // bound slack in the ratio test

  /* sf rows: [0, n_eq) equalities, the rest inequalities with a +1 slack. */
  void assemble(const StandardForm& sf) {
    m = static_cast<int>(sf.b.size());
    int n_slack = sf.n_ub + sf.n_bound;
    row_sign = VecX::Ones(m);

    // Normalized system before artificials.
    MatX A0 = MatX::Zero(m, sf.n_struct + n_slack);
    A0.leftCols(sf.n_struct) = sf.A;
    for (int i = 0; i < n_slack; ++i) A0(sf.n_eq + i, sf.n_struct + i) = 1.0;
    bn = sf.b;
    for (int i = 0; i < m; ++i)
      if (bn[i] < 0) {
        A0.row(i) = -A0.row(i);
        bn[i] = -bn[i];
        row_sign[i] = -1.0;
      }

    basis.assign(m, -1);
    std::vector<int> art_rows;
    for (int i = 0; i < m; ++i) {
      int slack_col = (i >= sf.n_eq) ? sf.n_struct + (i - sf.n_eq) : -1;
      if (slack_col >= 0 && A0(i, slack_col) > 0.5)
        basis[i] = slack_col;
      else
        art_rows.push_back(i);
    }

    n_core = sf.n_struct + n_slack;
    ncols = n_core + static_cast<int>(art_rows.size());
    An = MatX::Zero(m, ncols);
    An.leftCols(n_core) = A0;
    is_artificial.assign(ncols, false);
    for (std::size_t j = 0; j < art_rows.size(); ++j) {
      int col = n_core + static_cast<int>(j);
      An(art_rows[j], col) = 1.0;
      is_artificial[col] = true;
      basis[art_rows[j]] = col;
    }

    T.resize(m, ncols + 1);
    T.leftCols(ncols) = An;
    T.col(ncols) = bn;
  }

  /* Runs simplex on the current tableau for costs `cost` (artificials are
   * never eligible to enter when banned=true).  Returns Optimal, Unbounded,
   * or IterationLimit. */
  LpStatus optimize(const VecX& cost, bool ban_artificials, int max_iter) {
    VecX r = cost;
    for (int i = 0; i < m; ++i)
      if (cost[basis[i]] != 0.0) r -= cost[basis[i]] * T.row(i).head(ncols);

    int budget = 100 + 5 * (m + ncols);
    for (;;) {
      if (iterations >= max_iter) return LpStatus::IterationLimit;
      bool bland = iterations >= budget;
      int enter = -1;
      double best = -pivot_tol;
      for (int j = 0; j < ncols; ++j) {
        if (ban_artificials && is_artificial[j]) continue;
        if (r[j] < (bland ? -pivot_tol : best)) {
          enter = j;
          if (bland) break;
          best = r[j];
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      int leave = -1;
      if (bland) {
        // Exact smallest-ratio rule with least-index ties: paired with the
        // least-index entering rule this is what makes cycling impossible.
        double best_ratio = 0;
        for (int i = 0; i < m; ++i) {
          double a = T(i, enter);
          if (a <= ratio_tol) continue;
          double ratio = T(i, ncols) / a;
          if (leave < 0 || ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      } else {
        // Two-pass ratio test: a sliver of bound slack buys the freedom to
        // pick the numerically largest pivot among eligible rows.  A pivot
        // element near ratio_tol would otherwise scale the row by ~1e11 and
        // wreck the tableau.
        double theta_max = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
          double a = T(i, enter);
          if (a <= ratio_tol) continue;
          double bound = (std::max(T(i, ncols), 0.0) + harris_slack) / a;
          theta_max = std::min(theta_max, bound);
        }
        double best_a = 0;
        for (int i = 0; i < m; ++i) {
          double a = T(i, enter);
          if (a <= ratio_tol) continue;
          if (std::max(T(i, ncols), 0.0) / a > theta_max) continue;
          if (leave < 0 || a > best_a ||
              (a == best_a && basis[i] < basis[leave])) {
            leave = i;
            best_a = a;
          }
        }
      }
      if (leave < 0) return LpStatus::Unbounded;

      pivot(leave, enter, r);
      ++iterations;
    }
  }

  void pivot(int row, int col, VecX& r) {
    double piv = T(row, col);
    T.row(row) /= piv;
    T(row, col) = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = T(i, col);
      if (f != 0.0) {
        T.row(i) -= f * T.row(row);
        T(i, col) = 0.0;
      }
    }
    double f = r[col];
    if (f != 0.0) {
      r -= f * T.row(row).head(ncols);
      r[col] = 0.0;
    }
    basis[row] = col;
  }

  /* Pivots basic artificials (at zero level) onto structural columns where
   * possible; rows with no eligible column are redundant and zeroed. */
  void purge_artificials() {
    VecX dummy = VecX::Zero(ncols);
    for (int i = 0; i < m; ++i) {
      if (!is_artificial[basis[i]]) continue;
      int col = -1;
      for (int j = 0; j < n_core; ++j)
        if (std::abs(T(i, j)) > 1e-7) {
          col = j;
          break;
        }
      if (col >= 0)
        pivot(i, col, dummy);
      else {
        T.row(i).head(n_core).setZero(); // 0 = 0 row; artificial stays basic at 0
        T(i, ncols) = 0.0;
      }
    }
  }
};

} // namespace detail

/* Deterministic dense simplex.  Same input always yields the same pivot
 * sequence, basis, and bit-identical solution. */
inline LpSolution solve(const LinearProgram& lp, double tol_feas = tol::feas) {
  int n = lp.n_vars();
  if (lp.A_eq.rows() != lp.b_eq.size() || lp.A_ub.rows() != lp.b_ub.size() ||
      (lp.A_eq.rows() > 0 && lp.A_eq.cols() != n) ||
      (lp.A_ub.rows() > 0 && lp.A_ub.cols() != n) || lp.lower.size() != n ||
      lp.upper.size() != n)
    throw Error("linear program dimensions are inconsistent");
  if (!lp.c.allFinite() ||
      (lp.A_eq.size() > 0 && !lp.A_eq.allFinite()) ||
      (lp.A_ub.size() > 0 && !lp.A_ub.allFinite()) ||
      (lp.b_eq.size() > 0 && !lp.b_eq.allFinite()) ||
      (lp.b_ub.size() > 0 && !lp.b_ub.allFinite()))
    throw Error("linear program contains non-finite data");

  auto sf = detail::StandardForm::build(lp);
  detail::Tableau tab;
  tab.assemble(sf);

  LpSolution sol;
  int max_iter = 2000 + 60 * (tab.m + tab.ncols);

  // Phase 1: drive artificials to zero.
  if (tab.ncols > tab.n_core) {
    VecX c1 = VecX::Zero(tab.ncols);
    for (int j = tab.n_core; j < tab.ncols; ++j) c1[j] = 1.0;
    LpStatus s1 = tab.optimize(c1, false, max_iter);
    if (s1 == LpStatus::IterationLimit) {
      sol.status = s1;
      sol.iterations = tab.iterations;
      sol.message = "iteration limit";
      return sol;
    }
    double infeas = 0;
    for (int i = 0; i < tab.m; ++i)
      if (tab.is_artificial[tab.basis[i]]) infeas += tab.T(i, tab.ncols);
    double scale = 1.0 + (tab.bn.size() ? tab.bn.maxCoeff() : 0.0);
    if (infeas > tol_feas * scale) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = tab.iterations;
      sol.message = "infeasible";
      return sol;
    }
    tab.purge_artificials();
  }

  // Phase 2.
  VecX c2 = VecX::Zero(tab.ncols);
  c2.head(sf.n_struct) = sf.cmin;
  LpStatus s2 = tab.optimize(c2, true, max_iter);
  if (s2 == LpStatus::IterationLimit) {
    sol.status = s2;
    sol.iterations = tab.iterations;
    sol.message = "iteration limit";
    return sol;
  }
  if (s2 == LpStatus::Unbounded) {
    sol.status = s2;
    sol.iterations = tab.iterations;
    sol.message = "unbounded";
    return sol;
  }

  // Refactorize for accurate primal/dual values: B x_B = bn, B' y = c_B.
  int m = tab.m;
  VecX x = VecX::Zero(tab.ncols);
  VecX y_norm = VecX::Zero(m);
  if (m > 0) {
    MatX B(m, m);
    VecX cB(m);
    for (int i = 0; i < m; ++i) {
      B.col(i) = tab.An.col(tab.basis[i]);
      cB[i] = c2[tab.basis[i]];
    }
    Eigen::PartialPivLU<MatX> lu(B);
    VecX xB = lu.solve(tab.bn);
    y_norm = lu.transpose().solve(cB);
    for (int i = 0; i < m; ++i) x[tab.basis[i]] = std::max(0.0, xB[i]);
  }

  sol.z = sf.recover_z(lp, x.head(sf.n_struct));
  sol.value = lp.c.size() ? lp.c.dot(sol.z) : 0.0;
  sol.dual_value = sf.offset - (m > 0 ? tab.bn.dot(y_norm) : 0.0);
  sol.basis = tab.basis;
  sol.iterations = tab.iterations;

  // Map row duals back: normalized -> internal -> public (max convention).
  sol.dual_eq.resize(sf.n_eq);
  sol.dual_ub.resize(sf.n_ub);
  for (int i = 0; i < sf.n_eq; ++i) sol.dual_eq[i] = -tab.row_sign[i] * y_norm[i];
  for (int i = 0; i < sf.n_ub; ++i)
    sol.dual_ub[i] = -tab.row_sign[sf.n_eq + i] * y_norm[sf.n_eq + i];

  // Degeneracy diagnostics for sensitivity users.
  double xb_scale = 1.0 + (tab.bn.size() ? tab.bn.maxCoeff() : 0.0);
  for (int i = 0; i < m; ++i)
    if (!tab.is_artificial[tab.basis[i]] && x[tab.basis[i]] < 1e-7 * xb_scale)
      sol.primal_degenerate = true;
  if (m > 0) {
    VecX r = c2 - tab.An.transpose() * y_norm;
    std::vector<bool> basic(tab.ncols, false);
    for (int i = 0; i < m; ++i) basic[tab.basis[i]] = true;
    double c_scale = 1.0 + c2.cwiseAbs().maxCoeff();
    for (int j = 0; j < tab.ncols; ++j)
      if (!basic[j] && !tab.is_artificial[j] && std::abs(r[j]) < 1e-7 * c_scale)
        sol.dual_degenerate = true;
  }

  sol.status = LpStatus::Optimal;
  return sol;
}

/* Independent solves, assembled in input order.  Elements may run on
 * multiple threads (capped by WRENCHLAB_THREADS); each element's result is
 * bit-identical to a sequential solve.  Per-element failures are reported in
 * the corresponding slot, never by aborting the batch. */
inline std::vector<LpSolution> solve_batch(const std::vector<LinearProgram>& lps,
                                           double tol_feas = tol::feas) {
  std::vector<LpSolution> out(lps.size());
  parallel_for(lps.size(), [&](std::size_t i) {
    try {
      out[i] = solve(lps[i], tol_feas);
    } catch (const std::exception& e) {
      out[i].status = LpStatus::Failed;
      out[i].message = e.what();
    }
  });
  return out;
}

/* Perturbation directions for the optimal-value derivative.  Empty blocks
 * mean zero. */
struct LpPerturbation {
  MatX dA_eq, dA_ub;
  VecX db_eq, db_ub, dc;
};

/* Directional derivative of the optimal value along (dA, db, dc), from the
 * envelope theorem at the optimal primal/dual pair.  Exact while the optimal
 * basis is unchanged, hence the non-degeneracy requirement.  Dual degeneracy
 * (alternative optimal vertices on a unique supporting face) can be waived by
 * the caller when the perturbation is known to act consistently across that
 * face — the returned value then uses the solver's deterministic vertex and is
 * a subgradient in general. */
inline double sensitivity(const LinearProgram& lp, const LpSolution& sol,
                          const LpPerturbation& d,
                          bool allow_dual_degenerate = false) {
  if (sol.status != LpStatus::Optimal)
    throw Error("sensitivity requires an optimal solution");
  if (sol.primal_degenerate || (sol.dual_degenerate && !allow_dual_degenerate))
    throw Error("degenerate — gradient undefined");

  double v = 0;
  if (d.dc.size()) {
    if (d.dc.size() != lp.c.size()) throw Error("dc dimension mismatch");
    v += d.dc.dot(sol.z);
  }
  if (d.db_eq.size() || d.dA_eq.size()) {
    VecX r = VecX::Zero(lp.b_eq.size());
    if (d.db_eq.size()) {
      if (d.db_eq.size() != lp.b_eq.size()) throw Error("db_eq dimension mismatch");
      r += d.db_eq;
    }
    if (d.dA_eq.size()) {
      if (d.dA_eq.rows() != lp.A_eq.rows() || d.dA_eq.cols() != lp.A_eq.cols())
        throw Error("dA_eq dimension mismatch");
      r -= d.dA_eq * sol.z;
    }
    v += sol.dual_eq.dot(r);
  }
  if (d.db_ub.size() || d.dA_ub.size()) {
    VecX r = VecX::Zero(lp.b_ub.size());
    if (d.db_ub.size()) {
      if (d.db_ub.size() != lp.b_ub.size()) throw Error("db_ub dimension mismatch");
      r += d.db_ub;
    }
    if (d.dA_ub.size()) {
      if (d.dA_ub.rows() != lp.A_ub.rows() || d.dA_ub.cols() != lp.A_ub.cols())
        throw Error("dA_ub dimension mismatch");
      r -= d.dA_ub * sol.z;
    }
    v += sol.dual_ub.dot(r);
  }
  return v;
}

} // namespace wrenchlab
