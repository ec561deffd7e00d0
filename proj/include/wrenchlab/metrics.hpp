#pragma once

#include <wrenchlab/hull.hpp>
#include <wrenchlab/linprog.hpp>
#include <wrenchlab/wrench.hpp>

#include <optional>
#include <string>
#include <vector>

namespace wrenchlab {

/* Min-weight metric: the largest L with W a = 0, sum(a) = 1, a >= L.
 * L* > 0 iff the origin is interior to conv(W); an infeasible program means
 * the affine system itself has no solution (reported as not force closure,
 * with no finite L*). */
struct MinWeightResult {
  bool feasible = false;
  double l_star = 0;
  VecX alpha;
  bool force_closure = false;
  bool marginal = false;
};

inline MinWeightResult min_weight(const MatX& W) {
  auto v = origin_verdict(W);
  MinWeightResult r;
  r.feasible = v.feasible;
  if (!v.feasible) return r;
  r.l_star = v.weight_margin;
  r.alpha = v.alpha;
  r.force_closure = v.inside;
  r.marginal = v.marginal;
  return r;
}

/* Dual of the min-weight program:
 *   min phi  s.t.  nu'w_l + phi >= 0 for all l,  sum_l (nu'w_l + phi) = 1.
 * Strong duality: phi* equals l*. */
struct MinWeightDual {
  bool feasible = false;
  double phi = 0;
  VecX nu;
};

inline MinWeightDual min_weight_dual(const MatX& W) {
  int d = int(W.rows()), n = int(W.cols());
  if (n < 1) throw Error("empty wrench set");
  // Variables (nu in R^d, phi); minimize phi == maximize -phi.
  VecX c = VecX::Zero(d + 1);
  c[d] = -1.0;
  LinearProgram lp = LinearProgram::maximize(c);
  lp.A_ub.resize(n, d + 1);
  lp.b_ub = VecX::Zero(n);
  for (int l = 0; l < n; ++l) {
    lp.A_ub.row(l).head(d) = -W.col(l).transpose();
    lp.A_ub(l, d) = -1.0;
  }
  lp.A_eq.resize(1, d + 1);
  lp.A_eq.row(0).head(d) = W.rowwise().sum().transpose();
  lp.A_eq(0, d) = double(n);
  lp.b_eq.resize(1);
  lp.b_eq[0] = 1.0;
  for (int k = 0; k <= d; ++k) lp.set_free(k);

  auto sol = solve(lp);
  MinWeightDual out;
  if (sol.status == LpStatus::Infeasible) return out;
  if (sol.status != LpStatus::Optimal)
    throw Error(std::string("dual min-weight solve failed: ") +
                to_string(sol.status));
  out.feasible = true;
  out.phi = -sol.value;
  out.nu = sol.z.head(d);
  return out;
}

/* Radius of the largest origin-centered ball inside conv(W): the smallest
 * facet offset.  Requires the origin inside a full-dimensional hull. */
struct FerrariCanny {
  double epsilon = 0;
  bool perturbed = false;
};

inline FerrariCanny ferrari_canny(const MatX& W) {
  if (!contains_origin(W))
    throw Error("origin not contained: ball radius undefined");
  Hull h = facets(W);
  double eps = std::numeric_limits<double>::infinity();
  for (const auto& f : h.facets) eps = std::min(eps, f.b);
  return {std::max(0.0, eps), h.perturbed};
}

/* Per-wrench tolerance certificate.  `certified` is the conjunction of the
 * per-wrench flags; when it holds, the origin membership of the perturbed
 * set is also checked directly and recorded in `closure_confirmed` (never
 * assumed). */
struct ToleranceCertificate {
  bool certified = false;
  std::vector<bool> per_wrench;
  double radius = 0; // ball certificates: the radius used
  bool closure_confirmed = false;
  bool marginal = false;
};

/* Containment criterion: certify per wrench that the perturbation
 * w_l - wbar_l stays inside the negated hull of the means, i.e. that
 * wbar_l - w_l is a convex combination of the mean wrenches.  Certification
 * implies the perturbed set keeps the origin. */
inline ToleranceCertificate certify_containment(const MatX& Wbar, const MatX& W) {
  if (Wbar.rows() != W.rows() || Wbar.cols() != W.cols())
    throw Error("mean and perturbed sets must have matching shape");
  int n = int(W.cols());
  ToleranceCertificate cert;
  cert.per_wrench.resize(n);
  cert.certified = true;
  for (int l = 0; l < n; ++l) {
    auto v = membership_verdict(VecX(Wbar.col(l) - W.col(l)), Wbar);
    cert.per_wrench[l] = v.inside;
    cert.certified = cert.certified && v.inside;
    cert.marginal = cert.marginal || (v.feasible && v.marginal);
  }
  if (cert.certified) cert.closure_confirmed = contains_origin(W);
  return cert;
}

/* Ball criterion: certify per wrench that ||w_l - wbar_l|| <= eps(Wbar).
 * Requires the mean set to be force closure with a full-dimensional hull. */
inline ToleranceCertificate certify_ball(const MatX& Wbar, const MatX& W) {
  if (Wbar.rows() != W.rows() || Wbar.cols() != W.cols())
    throw Error("mean and perturbed sets must have matching shape");
  double eps = ferrari_canny(Wbar).epsilon;
  int n = int(W.cols());
  ToleranceCertificate cert;
  cert.radius = eps;
  cert.per_wrench.resize(n);
  cert.certified = true;
  for (int l = 0; l < n; ++l) {
    double dev = (W.col(l) - Wbar.col(l)).norm();
    cert.per_wrench[l] = dev <= eps * (1 + 1e-12) + 1e-15;
    cert.certified = cert.certified && cert.per_wrench[l];
    cert.marginal = cert.marginal || std::abs(dev - eps) < tol::marginal;
  }
  if (cert.certified) cert.closure_confirmed = contains_origin(W);
  return cert;
}

/* Product bound linking the three scalar metrics: 2 * delta * l_star <= eps. */
struct BoundCheck {
  double lhs = 0;     // 2 * delta * l_star
  double epsilon = 0;
  double delta = 0;
  double l_star = 0;
  bool holds = false;
};

inline BoundCheck bound_check(const MatX& W) {
  auto mw = min_weight(W);
  if (!mw.feasible || !mw.force_closure)
    throw Error("product bound requires a force-closure set");
  auto fc = ferrari_canny(W);
  auto ball = chebyshev(W);
  BoundCheck bc;
  bc.l_star = mw.l_star;
  bc.epsilon = fc.epsilon;
  bc.delta = ball.delta;
  bc.lhs = 2.0 * ball.delta * mw.l_star;
  bc.holds = bc.lhs <= fc.epsilon + 1e-9;
  return bc;
}

/* Aggregate report over one wrench set.  Hull-based quantities are omitted
 * (not faked) when the hull is degenerate. */
struct GraspMetrics {
  bool force_closure = false;
  std::optional<double> l_star;
  std::optional<double> l_star_normalized; // n_w * l_star, in [0, 1]
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<bool> bound_holds;
  std::vector<std::string> warnings;
};

inline GraspMetrics compute_metrics(const MatX& W) {
  GraspMetrics m;
  auto mw = min_weight(W);
  if (mw.feasible) {
    m.l_star = mw.l_star;
    m.l_star_normalized = double(W.cols()) * mw.l_star;
    m.force_closure = mw.force_closure;
    if (mw.marginal) m.warnings.push_back("marginal");
  } else {
    m.force_closure = false;
    m.warnings.push_back("origin off the affine flat of the wrench set");
  }
  if (m.force_closure) {
    try {
      Hull h = facets(W);
      double eps = std::numeric_limits<double>::infinity();
      for (const auto& f : h.facets) eps = std::min(eps, f.b);
      m.epsilon = std::max(0.0, eps);
      if (h.perturbed) m.warnings.push_back("perturbed");

      int nf = int(h.facets.size());
      int d = int(W.rows());
      VecX c = VecX::Zero(d + 1);
      c[d] = 1.0;
      LinearProgram lp = LinearProgram::maximize(c);
      lp.A_ub.resize(nf, d + 1);
      lp.b_ub.resize(nf);
      for (int i = 0; i < nf; ++i) {
        lp.A_ub.row(i).head(d) = h.facets[i].a.transpose();
        lp.A_ub(i, d) = 1.0;
        lp.b_ub[i] = h.facets[i].b;
      }
      for (int k = 0; k < d; ++k) lp.set_free(k);
      auto sol = solve(lp);
      if (sol.status == LpStatus::Optimal) {
        m.delta = sol.value;
        if (m.l_star)
          m.bound_holds = 2.0 * sol.value * (*m.l_star) <= *m.epsilon + 1e-9;
      }
    } catch (const Error&) {
      m.warnings.push_back("degenerate hull: ball metrics unavailable");
    }
  }
  return m;
}

inline GraspMetrics compute_metrics(const WrenchSet& ws) {
  return compute_metrics(ws.as_matrix());
}

} // namespace wrenchlab
