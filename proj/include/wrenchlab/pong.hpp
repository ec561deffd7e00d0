#pragma once

/* Probability of force closure under normal-direction uncertainty.
 *
 * For each finger the admissible tilts of its contact normal form a convex
 * region in the tangent plane: tilt z keeps every pyramid wrench of that
 * finger coverable by the mean wrench set.  We trace that region's boundary
 * along a fan of directions (one bounded LP per direction and pyramid side),
 * obtaining a star polygon whose Gaussian measure under the contact's normal
 * uncertainty is a per-finger closure probability.  The product over fingers
 * lower-bounds the joint closure probability under independent tilts. */

#include <wrenchlab/common.hpp>
#include <wrenchlab/hull.hpp>
#include <wrenchlab/linprog.hpp>
#include <wrenchlab/polygon.hpp>
#include <wrenchlab/wrench.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace wrenchlab {

enum class GradMode {
  ImplicitKkt,       // dual-based sensitivity of the boundary LPs
  FiniteDifference,  // central differences on the full evaluation
};

struct PongConfig {
  int n_dirs = 8;      // boundary directions per finger
  int quad_nodes = 32; // Gauss-Legendre nodes per polygon edge
  GradMode grad_mode = GradMode::ImplicitKkt;
  double fd_step = 1e-6;
  double theta_max = tol::theta_max; // radius cap for the boundary trace

  void validate() const {
    if (n_dirs < 3) throw Error("need at least 3 boundary directions");
    if (quad_nodes < 2) throw Error("need at least 2 quadrature nodes");
    if (!(fd_step > 0)) throw Error("finite-difference step must be positive");
    if (!(theta_max > 0)) throw Error("radius cap must be positive");
  }
};

/* ---- Gauss-Legendre quadrature on [0, 1] ---- */

namespace pongdetail {

struct QuadRule {
  std::vector<double> x, w; // nodes and weights on [0, 1]
};

/* Nodes from Newton iteration on the Legendre polynomial (three-term
 * recurrence for value and derivative), then mapped from [-1, 1]. */
inline QuadRule make_rule(int n) {
  QuadRule r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x); // descending roots -> ascending nodes
    r.w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

inline const QuadRule& rule(int n) {
  thread_local int cached_n = -1;
  thread_local QuadRule cached;
  if (cached_n != n) {
    cached = make_rule(n);
    cached_n = n;
  }
  return cached;
}

} // namespace pongdetail

/* Gaussian measure of a simple counterclockwise polygon under an
 * axis-aligned normal with the given mean and standard deviations, as a
 * boundary integral (one smooth 1-D integral per edge).  Each edge integral
 * is restricted to the part within eight standard deviations of the mean in
 * the second coordinate; outside, the integrand is below 1.3e-14. */
inline double gauss_polygon(const Polygon2& poly, const Vec2& mean,
                            const Vec2& sigma, int quad_nodes = 32) {
  if (!(sigma.x() > 0) || !(sigma.y() > 0))
    throw Error("standard deviations must be positive");
  const int n = poly.size();
  if (n < 3) return 0.0;
  const auto& q = pongdetail::rule(quad_nodes);
  const double c = 1.0 / (sigma.y() * std::sqrt(8.0 * pi));
  const double s1r2 = sigma.x() * std::sqrt(2.0);
  double total = 0;
  for (int m = 0; m < n; ++m) {
    const Vec2 &a = poly.v[static_cast<std::size_t>(m)];
    const Vec2 &b = poly.v[static_cast<std::size_t>((m + 1) % n)];
    const double dy = b.y() - a.y();
    if (dy == 0) continue;
    // Support window in r for |y2(r) - mean2| <= 10 sigma2.
    double r0 = ((mean.y() - 8 * sigma.y()) - a.y()) / dy;
    double r1 = ((mean.y() + 8 * sigma.y()) - a.y()) / dy;
    if (r0 > r1) std::swap(r0, r1);
    r0 = std::max(r0, 0.0);
    r1 = std::min(r1, 1.0);
    if (r0 >= r1) continue;
    double acc = 0;
    for (int k = 0; k < quad_nodes; ++k) {
      double r = r0 + (r1 - r0) * q.x[static_cast<std::size_t>(k)];
      double y1 = a.x() + r * (b.x() - a.x());
      double y2 = a.y() + r * dy;
      double t2 = (y2 - mean.y()) / sigma.y();
      acc += q.w[static_cast<std::size_t>(k)] * std::exp(-0.5 * t2 * t2) *
             std::erf((y1 - mean.x()) / s1r2);
    }
    total += c * dy * (r1 - r0) * acc;
  }
  return total;
}

/* Analytic gradient of `gauss_polygon` with respect to the polygon vertices
 * (support-window endpoints treated as fixed; the integrand there is
 * negligible). */
inline std::vector<Vec2> gauss_polygon_gradient(const Polygon2& poly,
                                                const Vec2& mean,
                                                const Vec2& sigma,
                                                int quad_nodes = 32) {
  if (!(sigma.x() > 0) || !(sigma.y() > 0))
    throw Error("standard deviations must be positive");
  const int n = poly.size();
  std::vector<Vec2> grad(static_cast<std::size_t>(n), Vec2::Zero());
  if (n < 3) return grad;
  const auto& q = pongdetail::rule(quad_nodes);
  const double c = 1.0 / (sigma.y() * std::sqrt(8.0 * pi));
  const double s1r2 = sigma.x() * std::sqrt(2.0);
  const double berf = std::sqrt(2.0 / pi) / sigma.x();
  for (int m = 0; m < n; ++m) {
    const int ma = m, mb = (m + 1) % n;
    const Vec2 &a = poly.v[static_cast<std::size_t>(ma)];
    const Vec2 &b = poly.v[static_cast<std::size_t>(mb)];
    const double dy = b.y() - a.y();
    if (dy == 0) continue;
    double r0 = ((mean.y() - 8 * sigma.y()) - a.y()) / dy;
    double r1 = ((mean.y() + 8 * sigma.y()) - a.y()) / dy;
    if (r0 > r1) std::swap(r0, r1);
    r0 = std::max(r0, 0.0);
    r1 = std::min(r1, 1.0);
    if (r0 >= r1) continue;
    double I = 0;      // integral of A*B
    double Ia2 = 0;    // integral of A'*B*(1-r)
    double Ib2 = 0;    // integral of A'*B*r
    double Ia1 = 0;    // integral of A*B'*(1-r)
    double Ib1 = 0;    // integral of A*B'*r
    for (int k = 0; k < quad_nodes; ++k) {
      double r = r0 + (r1 - r0) * q.x[static_cast<std::size_t>(k)];
      double wq = q.w[static_cast<std::size_t>(k)];
      double y1 = a.x() + r * (b.x() - a.x());
      double y2 = a.y() + r * dy;
      double t2 = (y2 - mean.y()) / sigma.y();
      double A = std::exp(-0.5 * t2 * t2);
      double B = std::erf((y1 - mean.x()) / s1r2);
      double dA = -A * (y2 - mean.y()) / (sigma.y() * sigma.y());
      double t1 = (y1 - mean.x()) / sigma.x();
      double dB = berf * std::exp(-0.5 * t1 * t1);
      I += wq * A * B;
      Ia2 += wq * dA * B * (1 - r);
      Ib2 += wq * dA * B * r;
      Ia1 += wq * A * dB * (1 - r);
      Ib1 += wq * A * dB * r;
    }
    const double span = r1 - r0;
    grad[static_cast<std::size_t>(ma)].x() += c * dy * span * Ia1;
    grad[static_cast<std::size_t>(mb)].x() += c * dy * span * Ib1;
    grad[static_cast<std::size_t>(ma)].y() += c * span * (-I + dy * Ia2);
    grad[static_cast<std::size_t>(mb)].y() += c * span * (I + dy * Ib2);
  }
  return grad;
}

/* ---- boundary tracing ---- */

namespace pongdetail {

struct VertexSol {
  double theta = 0;
  int j_star = -1;     // active pyramid side (argmin over sides)
  bool tie = false;    // a *distinct* tilt ray within 1e-9 of the minimum
  bool clamped = false;
  bool degenerate = false; // LP non-optimal or primal-degenerate basis
  bool feasible = false;
  LinearProgram lp;    // the active side's program (kept for sensitivity)
  LpSolution sol;
};

/* max theta s.t. theta * u + Wbar a = 0, sum(a) = 1, a >= 0,
 * 0 <= theta <= cap. */
inline LinearProgram tilt_lp(const Vec6& u, const MatX& Wbar, double cap) {
  const int nw = int(Wbar.cols());
  VecX c = VecX::Zero(nw + 1);
  c[0] = 1.0;
  LinearProgram lp = LinearProgram::maximize(c);
  lp.A_eq.resize(7, nw + 1);
  lp.A_eq.block(0, 0, 6, 1) = u;
  lp.A_eq.block(0, 1, 6, nw) = Wbar;
  lp.A_eq.row(6).setZero();
  lp.A_eq.row(6).tail(nw).setOnes();
  lp.b_eq = VecX::Zero(7);
  lp.b_eq[6] = 1.0;
  lp.upper[0] = cap;
  return lp;
}

inline VertexSol trace_direction(const std::vector<Mat63>& maps_i,
                                 const Vec3& d3, const MatX& Wbar,
                                 double cap) {
  // Collapse coincident tilt rays first.  Two sides whose generators make
  // supplementary angles with the search direction yield the same column
  // T_j d3 (the generator enters only through sin of that angle times the
  // normal), and they stay equal under every contact perturbation because
  // generators and search directions ride the same frame.  Such pairs are one
  // ray solved once, not a tie; the tie flag is reserved for *distinct* rays
  // whose boundary distances coincide, where the minimum genuinely kinks.
  const int ns = int(maps_i.size());
  std::vector<Vec6> rays;
  std::vector<int> rep; // lowest side index producing each distinct ray
  rays.reserve(static_cast<std::size_t>(ns));
  rep.reserve(static_cast<std::size_t>(ns));
  for (int j = 0; j < ns; ++j) {
    Vec6 u = maps_i[static_cast<std::size_t>(j)] * d3;
    bool dup = false;
    for (const Vec6& r : rays)
      if ((u - r).norm() <= 1e-12 * (1.0 + r.norm())) {
        dup = true;
        break;
      }
    if (!dup) {
      rays.push_back(u);
      rep.push_back(j);
    }
  }

  VertexSol best;
  best.theta = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < rays.size(); ++g) {
    LinearProgram lp = tilt_lp(rays[g], Wbar, cap);
    LpSolution sol = solve(lp);
    double theta;
    bool feasible = true, degenerate = false;
    if (sol.status == LpStatus::Infeasible) {
      theta = 0;
      feasible = false;
    } else if (sol.status == LpStatus::Optimal) {
      theta = std::max(0.0, sol.value);
    } else {
      theta = 0;
      degenerate = true;
    }
    if (theta < best.theta) {
      second = best.theta;
      best.theta = theta;
      best.j_star = rep[g];
      best.feasible = feasible;
      best.degenerate = degenerate || sol.primal_degenerate;
      best.lp = std::move(lp);
      best.sol = std::move(sol);
    } else {
      second = std::min(second, theta);
    }
  }
  best.tie = second < best.theta + 1e-9;
  best.clamped = best.theta >= cap * (1.0 - 1e-9);
  if (best.clamped) best.theta = cap;
  return best;
}

} // namespace pongdetail

struct FingerPong {
  Polygon2 polygon;           // admissible-tilt boundary, tangent coordinates
  std::vector<double> theta;  // boundary radius per direction
  double probability = 0;     // Gaussian mass of the polygon
  bool clamped = false;       // some direction hit the radius cap
};

struct PongResult {
  double l_fc = 0;            // product of the per-finger probabilities
  std::vector<FingerPong> fingers;
  bool clamped = false;
};

namespace pongdetail {

struct Trace {
  MatX Wbar;
  std::vector<std::vector<Mat63>> maps;
  std::vector<std::vector<VertexSol>> sols; // [finger][direction]
};

inline Trace trace_all(const std::vector<ContactSpec>& contacts,
                       const FrictionModel& model, const PongConfig& cfg) {
  model.validate();
  cfg.validate();
  if (contacts.empty()) throw Error("no contacts");
  const int n_f = int(contacts.size());
  Trace tr;
  tr.maps.resize(contacts.size());
  std::vector<Vec6> cols;
  for (int i = 0; i < n_f; ++i) {
    const ContactSpec& c = contacts[static_cast<std::size_t>(i)];
    c.validate();
    auto& mi = tr.maps[static_cast<std::size_t>(i)];
    mi.reserve(static_cast<std::size_t>(model.n_sides));
    for (int j = 0; j < model.n_sides; ++j) {
      double ang = 2.0 * pi * j / model.n_sides;
      Vec3 g = std::cos(ang) * c.t1 + std::sin(ang) * c.t2;
      mi.push_back(wrench_map(c.x, g, model.mu));
      cols.push_back(mi.back() * c.n_bar);
    }
  }
  tr.Wbar.resize(6, int(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    tr.Wbar.col(int(k)) = cols[k];

  tr.sols.assign(contacts.size(),
                 std::vector<VertexSol>(static_cast<std::size_t>(cfg.n_dirs)));
  parallel_for(n_f * cfg.n_dirs, [&](int idx) {
    int i = idx / cfg.n_dirs, k = idx % cfg.n_dirs;
    const ContactSpec& c = contacts[static_cast<std::size_t>(i)];
    double phi = 2.0 * pi * k / cfg.n_dirs;
    Vec3 d3 = std::cos(phi) * c.t1 + std::sin(phi) * c.t2;
    tr.sols[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
        trace_direction(tr.maps[static_cast<std::size_t>(i)], d3, tr.Wbar,
                        cfg.theta_max);
  });
  return tr;
}

inline Vec2 sigma_of(const ContactSpec& c) {
  return Vec2(std::sqrt(std::max(c.sigma1_sq, tol::sigma_floor)),
              std::sqrt(std::max(c.sigma2_sq, tol::sigma_floor)));
}

inline PongResult assemble(const std::vector<ContactSpec>& contacts,
                           const PongConfig& cfg, const Trace& tr) {
  PongResult out;
  out.l_fc = 1.0;
  out.fingers.resize(contacts.size());
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    FingerPong& f = out.fingers[i];
    f.theta.resize(static_cast<std::size_t>(cfg.n_dirs));
    f.polygon.v.resize(static_cast<std::size_t>(cfg.n_dirs));
    for (int k = 0; k < cfg.n_dirs; ++k) {
      const VertexSol& vs = tr.sols[i][static_cast<std::size_t>(k)];
      double phi = 2.0 * pi * k / cfg.n_dirs;
      f.theta[static_cast<std::size_t>(k)] = vs.theta;
      f.polygon.v[static_cast<std::size_t>(k)] =
          vs.theta * Vec2(std::cos(phi), std::sin(phi));
      f.clamped = f.clamped || vs.clamped;
    }
    f.probability =
        gauss_polygon(f.polygon, Vec2::Zero(), sigma_of(contacts[i]),
                      cfg.quad_nodes);
    f.probability = std::clamp(f.probability, 0.0, 1.0);
    out.clamped = out.clamped || f.clamped;
    out.l_fc *= f.probability;
  }
  return out;
}

} // namespace pongdetail

/* Admissible-tilt polygon and closure probability for one finger. */
inline FingerPong fc_polygon(const std::vector<ContactSpec>& contacts,
                             const FrictionModel& model, int finger,
                             const PongConfig& cfg = {}) {
  if (finger < 0 || finger >= int(contacts.size()))
    throw Error("finger index out of range");
  auto tr = pongdetail::trace_all(contacts, model, cfg);
  return pongdetail::assemble(contacts, cfg, tr)
      .fingers[static_cast<std::size_t>(finger)];
}

/* Product lower bound on the probability of force closure. */
inline PongResult l_fc(const std::vector<ContactSpec>& contacts,
                       const FrictionModel& model, const PongConfig& cfg = {}) {
  auto tr = pongdetail::trace_all(contacts, model, cfg);
  return pongdetail::assemble(contacts, cfg, tr);
}

/* ---- differentiation ---- */

/* Parameter vector: per finger, position (3) then raw normal (3).  Applying
 * parameters rebuilds each contact with the normalized raw normal; the
 * stored tangent frame is carried over by projecting it onto the new
 * tangent plane (so uncertainty axes and boundary directions move smoothly
 * with the normal).  Variances are retained. */
inline VecX pack_params(const std::vector<ContactSpec>& contacts) {
  VecX p(6 * int(contacts.size()));
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    p.segment<3>(6 * int(i)) = contacts[i].x;
    p.segment<3>(6 * int(i) + 3) = contacts[i].n_bar;
  }
  return p;
}

inline std::vector<ContactSpec> apply_params(
    const std::vector<ContactSpec>& base, const VecX& p) {
  if (p.size() != 6 * int(base.size()))
    throw Error("parameter vector has the wrong length");
  std::vector<ContactSpec> out = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    ContactSpec& c = out[i];
    c.x = p.segment<3>(6 * int(i));
    Vec3 n_raw = p.segment<3>(6 * int(i) + 3);
    if ((n_raw - base[i].n_bar).isZero(0)) continue; // frame unchanged
    double nn = n_raw.norm();
    if (nn < 1e-12) throw Error("degenerate normal");
    Vec3 n = n_raw / nn;
    Vec3 u = base[i].t1 - base[i].t1.dot(n) * n;
    if (u.norm() < 1e-8) {
      std::tie(c.t1, c.t2) = tangent_basis(n);
    } else {
      c.t1 = u / u.norm();
      c.t2 = n.cross(c.t1);
    }
    c.n_bar = n;
  }
  return out;
}

struct PongGradient {
  double value = 0;
  VecX grad;            // layout matches pack_params
  bool fallback = false; // finite differences were used

  Vec3 d_x(int finger) const { return grad.segment<3>(6 * finger); }
  Vec3 d_n(int finger) const { return grad.segment<3>(6 * finger + 3); }
};

namespace pongdetail {

inline double eval_at(const std::vector<ContactSpec>& base,
                      const FrictionModel& model, const PongConfig& cfg,
                      const VecX& p) {
  return l_fc(apply_params(base, p), model, cfg).l_fc;
}

inline VecX fd_gradient(const std::vector<ContactSpec>& base,
                        const FrictionModel& model, const PongConfig& cfg,
                        const VecX& p0) {
  VecX g(p0.size());
  for (int k = 0; k < p0.size(); ++k) {
    VecX pp = p0, pm = p0;
    pp[k] += cfg.fd_step;
    pm[k] -= cfg.fd_step;
    g[k] = (eval_at(base, model, cfg, pp) - eval_at(base, model, cfg, pm)) /
           (2 * cfg.fd_step);
  }
  return g;
}

} // namespace pongdetail

/* Gradient of l_fc with respect to the packed contact parameters, at the
 * contacts' own values.  The default mode differentiates through the
 * boundary LPs via their dual solutions; configurations where that is
 * ill-posed (primal-degenerate bases, ties between distinct tilt rays,
 * collapsed or capped boundary radii) fall back to central finite
 * differences on the identical evaluation map, reported via `fallback`. */
inline PongGradient l_fc_gradient(const std::vector<ContactSpec>& contacts,
                                  const FrictionModel& model,
                                  const PongConfig& cfg = {}) {
  using namespace pongdetail;
  auto tr = trace_all(contacts, model, cfg);
  PongResult res = assemble(contacts, cfg, tr);
  const int n_f = int(contacts.size());

  PongGradient out;
  out.value = res.l_fc;
  out.grad = VecX::Zero(6 * n_f);

  bool needs_fd = cfg.grad_mode == GradMode::FiniteDifference;
  for (int i = 0; i < n_f && !needs_fd; ++i) {
    if (std::abs(res.fingers[static_cast<std::size_t>(i)].polygon.signed_area()) <
        1e-12)
      needs_fd = true;
    for (int k = 0; k < cfg.n_dirs && !needs_fd; ++k) {
      const VertexSol& vs =
          tr.sols[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      needs_fd = !vs.feasible || vs.degenerate || vs.tie || vs.clamped ||
                 vs.theta < 1e-9;
    }
  }

  VecX p0 = pack_params(contacts);
  if (needs_fd) {
    out.grad = fd_gradient(contacts, model, cfg, p0);
    out.fallback = true;
    return out;
  }

  // Per-finger polygon-vertex gradients of the Gaussian mass.
  std::vector<std::vector<Vec2>> pg(contacts.size());
  for (std::size_t i = 0; i < contacts.size(); ++i)
    pg[i] = gauss_polygon_gradient(res.fingers[i].polygon, Vec2::Zero(),
                                   sigma_of(contacts[i]), cfg.quad_nodes);

  const int nw = int(tr.Wbar.cols());
  try {
  for (int e = 0; e < 6 * n_f; ++e) {
    const int fi = e / 6;          // finger owning this parameter
    const int comp = e % 6;        // 0..2 position, 3..5 raw normal
    const ContactSpec& ce = contacts[static_cast<std::size_t>(fi)];

    // Differentials of that finger's frame and maps along this direction.
    Vec3 dx = Vec3::Zero(), dnhat = Vec3::Zero();
    if (comp < 3) {
      dx[comp] = 1.0;
    } else {
      Vec3 v = Vec3::Zero();
      v[comp - 3] = 1.0;
      dnhat = v - ce.n_bar.dot(v) * ce.n_bar; // unit normal at evaluation
    }
    const Vec3 dt1 = -(ce.t1.dot(dnhat)) * ce.n_bar;
    const Vec3 dt2 = dnhat.cross(ce.t1) + ce.n_bar.cross(dt1);

    // dWbar: only the owning finger's columns move.
    std::vector<Vec6> dW(static_cast<std::size_t>(nw), Vec6::Zero());
    std::vector<Mat63> dT(static_cast<std::size_t>(model.n_sides));
    for (int j = 0; j < model.n_sides; ++j) {
      double ang = 2.0 * pi * j / model.n_sides;
      Vec3 g = std::cos(ang) * ce.t1 + std::sin(ang) * ce.t2;
      Vec3 dg = std::cos(ang) * dt1 + std::sin(ang) * dt2;
      Mat3 F = Mat3::Identity() + model.mu * wedge(g);
      Mat3 dF = model.mu * wedge(dg);
      Mat63& d = dT[static_cast<std::size_t>(j)];
      d.topRows<3>() = dF;
      d.bottomRows<3>() = wedge(ce.x) * dF + wedge(dx) * F;
      dW[static_cast<std::size_t>(fi * model.n_sides + j)] =
          d * ce.n_bar +
          tr.maps[static_cast<std::size_t>(fi)][static_cast<std::size_t>(j)] *
              dnhat;
    }

    // Sensitivity of every boundary radius, then of every polygon mass.
    std::vector<double> dP(contacts.size(), 0.0);
    for (int i = 0; i < n_f; ++i) {
      const ContactSpec& ci = contacts[static_cast<std::size_t>(i)];
      for (int k = 0; k < cfg.n_dirs; ++k) {
        const VertexSol& vs =
            tr.sols[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        double phi = 2.0 * pi * k / cfg.n_dirs;
        Vec3 d3 = std::cos(phi) * ci.t1 + std::sin(phi) * ci.t2;

        LpPerturbation dlp;
        dlp.dA_eq = MatX::Zero(7, nw + 1);
        for (int l = 0; l < nw; ++l)
          dlp.dA_eq.block(0, 1 + l, 6, 1) = dW[static_cast<std::size_t>(l)];
        if (i == fi) {
          Vec3 dd3 = std::cos(phi) * dt1 + std::sin(phi) * dt2;
          dlp.dA_eq.block(0, 0, 6, 1) =
              dT[static_cast<std::size_t>(vs.j_star)] * d3 +
              tr.maps[static_cast<std::size_t>(i)]
                     [static_cast<std::size_t>(vs.j_star)] *
                  dd3;
        } else if (dlp.dA_eq.isZero(0)) {
          continue; // position of another finger: no dependence
        }
        // Dual degeneracy is endemic here by construction: a finger's pyramid
        // wrenches are coplanar (forces n + mu*g_j with g_j on a circle), so
        // binding facets often carry affinely dependent vertex sets and the
        // optimal weights are not unique.  The supporting facet itself is,
        // which is what the derivative depends on, so it is waived.
        double dtheta = sensitivity(vs.lp, vs.sol, dlp,
                                    /*allow_dual_degenerate=*/true);
        dP[static_cast<std::size_t>(i)] +=
            dtheta * pg[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]
                         .dot(Vec2(std::cos(phi), std::sin(phi)));
      }
    }
    double dL = 0;
    for (int i = 0; i < n_f; ++i) {
      double prod = 1;
      for (int i2 = 0; i2 < n_f; ++i2)
        if (i2 != i)
          prod *= res.fingers[static_cast<std::size_t>(i2)].probability;
      dL += prod * dP[static_cast<std::size_t>(i)];
    }
    out.grad[e] = dL;
  }
  } catch (const Error&) {
    out.grad = fd_gradient(contacts, model, cfg, p0);
    out.fallback = true;
  }
  return out;
}

} // namespace wrenchlab
