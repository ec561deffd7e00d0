#pragma once

#include <wrenchlab/common.hpp>
#include <wrenchlab/linprog.hpp>
#include <wrenchlab/rng.hpp>
#include <wrenchlab/wrench.hpp>

#include <algorithm>
#include <map>
#include <vector>

namespace wrenchlab {

/* Supporting halfspace a'x <= b with ||a|| = 1. */
struct Facet {
  VecX a;
  double b = 0;
};

struct Hull {
  std::vector<Facet> facets;
  bool perturbed = false; // built from a jittered copy of the input
  int dim = 0;
};

namespace hulldetail {

/* Internal signal: a geometric predicate was too close to call; the caller
 * retries on a jittered copy. */
struct NeedJitter {};

class Builder {
public:
  explicit Builder(const MatX& P) : P_(P), d_(int(P.rows())), n_(int(P.cols())) {
    scale_ = 1.0;
    for (int i = 0; i < n_; ++i)
      scale_ = std::max(scale_, P_.col(i).lpNorm<Eigen::Infinity>());
    eps_vis_ = 1e-10 * scale_;
    eps_rank_ = 1e-10 * scale_;
    ver_tol_ = 1e-9 * scale_;
  }

  void run() {
    pick_initial();
    for (int p = 0; p < n_; ++p)
      if (!used_[p]) insert(p);
    // Postcondition: every input point inside every facet.
    for (int p = 0; p < n_; ++p)
      for (const auto& f : facets_)
        if (f.alive && f.a.dot(P_.col(p)) - f.b > ver_tol_) throw NeedJitter{};
  }

  std::vector<Facet> extract() const {
    std::vector<Facet> out;
    for (const auto& f : facets_)
      if (f.alive) out.push_back({f.a, f.b});
    return out;
  }

private:
  struct FacetRec {
    std::vector<int> verts; // sorted, size d
    std::vector<int> nbrs;  // nbrs[k] shares the ridge omitting verts[k]
    VecX a;
    double b = 0;
    bool alive = true;
  };

  const MatX& P_;
  int d_, n_;
  double scale_, eps_vis_, eps_rank_, ver_tol_;
  std::vector<bool> used_;
  VecX interior_;
  std::vector<FacetRec> facets_;

  /* Greedy affinely-independent seed simplex; rank deficiency here means the
   * input itself is lower-dimensional. */
  void pick_initial() {
    used_.assign(n_, false);
    int i0 = 0;
    double best = -1;
    for (int i = 0; i < n_; ++i)
      if (P_.col(i).norm() > best) {
        best = P_.col(i).norm();
        i0 = i;
      }
    std::vector<int> chosen{i0};
    used_[i0] = true;
    MatX B(d_, d_); // orthonormal span directions
    int k = 0;
    while (k < d_) {
      int pick = -1;
      double bestr = eps_rank_;
      VecX bestdir;
      for (int i = 0; i < n_; ++i) {
        if (used_[i]) continue;
        VecX r = P_.col(i) - P_.col(i0);
        if (k > 0) r -= B.leftCols(k) * (B.leftCols(k).transpose() * r);
        double nr = r.norm();
        if (nr > bestr) {
          bestr = nr;
          pick = i;
          bestdir = r / nr;
        }
      }
      if (pick < 0) throw Error("degenerate hull");
      B.col(k++) = bestdir;
      chosen.push_back(pick);
      used_[pick] = true;
    }

    interior_ = VecX::Zero(d_);
    for (int id : chosen) interior_ += P_.col(id);
    interior_ /= double(chosen.size());

    std::map<std::vector<int>, std::pair<int, int>> open;
    for (int omit = 0; omit <= d_; ++omit) {
      std::vector<int> verts;
      for (int t = 0; t <= d_; ++t)
        if (t != omit) verts.push_back(chosen[t]);
      std::sort(verts.begin(), verts.end());
      int id = make_facet(verts);
      link(id, -1, open);
    }
    if (!open.empty()) throw NeedJitter{};
  }

  int make_facet(const std::vector<int>& verts) {
    MatX E(d_ - 1, d_);
    for (int r = 1; r < d_; ++r)
      E.row(r - 1) = (P_.col(verts[r]) - P_.col(verts[0])).transpose();
    Eigen::JacobiSVD<MatX> svd(E, Eigen::ComputeFullV);
    if (svd.singularValues()(d_ - 2) <= eps_rank_) throw NeedJitter{};
    VecX a = svd.matrixV().col(d_ - 1);
    double b = 0;
    for (int v : verts) b += a.dot(P_.col(v));
    b /= double(verts.size());
    double side = a.dot(interior_) - b;
    if (std::abs(side) <= eps_rank_) throw NeedJitter{};
    if (side > 0) {
      a = -a;
      b = -b;
    }
    FacetRec f;
    f.verts = verts;
    f.nbrs.assign(d_, -1);
    f.a = std::move(a);
    f.b = b;
    facets_.push_back(std::move(f));
    return int(facets_.size()) - 1;
  }

  /* Fills unset neighbor slots of facet `id` via a shared ridge map; two
   * facets registering the same ridge become neighbors. */
  void link(int id, int known_slot,
            std::map<std::vector<int>, std::pair<int, int>>& open) {
    auto& f = facets_[id];
    for (int k = 0; k < d_; ++k) {
      if (k == known_slot || f.nbrs[k] >= 0) continue;
      std::vector<int> ridge;
      for (int t = 0; t < d_; ++t)
        if (t != k) ridge.push_back(f.verts[t]);
      auto it = open.find(ridge);
      if (it == open.end()) {
        open.emplace(std::move(ridge), std::make_pair(id, k));
      } else {
        auto [oid, oslot] = it->second;
        facets_[id].nbrs[k] = oid;
        facets_[oid].nbrs[oslot] = id;
        open.erase(it);
      }
    }
  }

  void insert(int p) {
    std::vector<int> visible;
    std::vector<char> vis(facets_.size(), 0);
    for (std::size_t fi = 0; fi < facets_.size(); ++fi) {
      if (!facets_[fi].alive) continue;
      if (facets_[fi].a.dot(P_.col(p)) - facets_[fi].b > eps_vis_) {
        visible.push_back(int(fi));
        vis[fi] = 1;
      }
    }
    if (visible.empty()) return;

    struct HorizonEdge {
      std::vector<int> ridge;
      int hidden;
      int dead;
    };
    std::vector<HorizonEdge> horizon;
    for (int fi : visible) {
      const auto& f = facets_[fi];
      for (int k = 0; k < d_; ++k) {
        int g = f.nbrs[k];
        if (g < 0) throw NeedJitter{};
        if (vis[g]) continue;
        std::vector<int> ridge;
        for (int t = 0; t < d_; ++t)
          if (t != k) ridge.push_back(f.verts[t]);
        horizon.push_back({std::move(ridge), g, fi});
      }
    }
    if (horizon.empty()) throw NeedJitter{};

    for (int fi : visible) facets_[fi].alive = false;

    std::map<std::vector<int>, std::pair<int, int>> open;
    for (auto& e : horizon) {
      std::vector<int> verts = e.ridge;
      verts.push_back(p);
      std::sort(verts.begin(), verts.end());
      int id = make_facet(verts);
      // Slot omitting the apex is the horizon ridge; it borders the hidden
      // facet, whose stale pointer at the dead facet is re-aimed here.
      int apex_slot = -1;
      for (int k = 0; k < d_; ++k)
        if (facets_[id].verts[k] == p) apex_slot = k;
      facets_[id].nbrs[apex_slot] = e.hidden;
      auto& g = facets_[e.hidden];
      int back = -1;
      for (int k = 0; k < d_; ++k)
        if (g.nbrs[k] == e.dead) back = k;
      if (back < 0) throw NeedJitter{};
      g.nbrs[back] = id;
      link(id, apex_slot, open);
    }
    if (!open.empty()) throw NeedJitter{};
    used_[p] = true;
  }
};

inline MatX dedup(const MatX& pts) {
  double scale = 1.0;
  for (int i = 0; i < pts.cols(); ++i)
    scale = std::max(scale, pts.col(i).lpNorm<Eigen::Infinity>());
  std::vector<int> keep;
  for (int i = 0; i < pts.cols(); ++i) {
    bool dup = false;
    for (int j : keep)
      if ((pts.col(i) - pts.col(j)).lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
        dup = true;
        break;
      }
    if (!dup) keep.push_back(i);
  }
  MatX out(pts.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(k) = pts.col(keep[k]);
  return out;
}

} // namespace hulldetail

/* Complete facet list of conv(points) (columns of `pts`), as supporting
 * halfspaces with unit normals; non-simplicial faces are reported
 * triangulated.  Geometric predicates too close to call trigger a
 * deterministic, seeded jitter of magnitude 1e-9 (relative to data scale) on
 * a copy of the input; such results carry `perturbed = true`.  Genuinely
 * lower-dimensional input is an error. */
inline Hull facets(const MatX& pts) {
  int d = int(pts.rows());
  if (d < 2 || d > 6) throw Error("hull dimension must be between 2 and 6");
  MatX P = hulldetail::dedup(pts);
  if (P.cols() < d + 1) throw Error("degenerate hull");
  double scale = 1.0;
  for (int i = 0; i < P.cols(); ++i)
    scale = std::max(scale, P.col(i).lpNorm<Eigen::Infinity>());

  for (int attempt = 0; attempt < 4; ++attempt) {
    MatX Q = P;
    if (attempt > 0) {
      CounterRng rng(0x48554c4cull, std::uint64_t(attempt));
      for (int i = 0; i < Q.cols(); ++i)
        for (int r = 0; r < d; ++r)
          Q(r, i) += rng.uniform(-1e-9, 1e-9) * scale;
    }
    try {
      hulldetail::Builder builder(Q);
      builder.run();
      Hull h;
      h.facets = builder.extract();
      h.perturbed = attempt > 0;
      h.dim = d;
      if (attempt > 0) {
        // Facets come from the jittered copy; originals must still be inside
        // up to the jitter magnitude.
        for (int i = 0; i < P.cols(); ++i)
          for (const auto& f : h.facets)
            if (f.a.dot(P.col(i)) - f.b > 1e-8 * scale) throw hulldetail::NeedJitter{};
      }
      return h;
    } catch (const hulldetail::NeedJitter&) {
      continue;
    }
  }
  throw Error("hull construction failed after perturbation retries");
}

/* Membership verdict for a point v in conv(columns of W), by the best
 * achievable minimum combination weight:
 *   max L  s.t.  W a = v, sum(a) = 1, a >= L
 * (v is inside iff L* >= 0).  Verdicts within 1e-6 of the boundary are
 * flagged marginal; an infeasible system means v is off the affine flat of
 * the columns entirely. */
struct MembershipVerdict {
  bool inside = false;
  double weight_margin = 0;
  bool marginal = false;
  bool feasible = false; // the affine system W a = v, sum(a) = 1 has a solution
  VecX alpha;            // the maximizing weights (when feasible)
};

inline MembershipVerdict membership_verdict(const VecX& v, const MatX& W,
                                            double tol_feas = tol::feas) {
  int n = int(W.cols());
  if (W.rows() < 1 || n < 1) throw Error("empty wrench set");
  if (v.size() != W.rows()) throw Error("membership dimension mismatch");
  // Substituted form: a = beta + L, beta >= 0, L free.
  VecX c = VecX::Zero(n + 1);
  c[n] = 1.0;
  LinearProgram lp = LinearProgram::maximize(c);
  int d = int(W.rows());
  lp.A_eq.resize(d + 1, n + 1);
  lp.A_eq.topLeftCorner(d, n) = W;
  lp.A_eq.block(0, n, d, 1) = W.rowwise().sum();
  lp.A_eq.row(d).head(n).setOnes();
  lp.A_eq(d, n) = double(n);
  lp.b_eq.resize(d + 1);
  lp.b_eq.head(d) = v;
  lp.b_eq[d] = 1.0;
  lp.set_free(n);

  auto sol = solve(lp, tol_feas);
  MembershipVerdict out;
  if (sol.status == LpStatus::Infeasible) {
    out.feasible = false;
    out.inside = false;
    out.weight_margin = -std::numeric_limits<double>::infinity();
    return out;
  }
  if (sol.status != LpStatus::Optimal)
    throw Error(std::string("membership solve failed: ") + to_string(sol.status));
  out.feasible = true;
  out.weight_margin = sol.value;
  out.inside = sol.value >= -tol_feas;
  out.marginal = std::abs(sol.value) < tol::marginal;
  out.alpha = sol.z.head(n) + VecX::Constant(n, sol.value);
  return out;
}

using OriginVerdict = MembershipVerdict;

inline OriginVerdict origin_verdict(const MatX& W, double tol_feas = tol::feas) {
  return membership_verdict(VecX::Zero(W.rows()), W, tol_feas);
}

inline bool contains_origin(const MatX& W, double tol_feas = tol::feas) {
  return origin_verdict(W, tol_feas).inside;
}

inline bool contains_origin(const WrenchSet& ws, double tol_feas = tol::feas) {
  return contains_origin(ws.as_matrix(), tol_feas);
}

/* Is v a convex combination of the columns of `pts`? */
inline bool member(const VecX& v, const MatX& pts, double tol_feas = tol::feas) {
  int n = int(pts.cols());
  LinearProgram lp = LinearProgram::maximize(VecX::Zero(n));
  lp.A_eq.resize(pts.rows() + 1, n);
  lp.A_eq.topRows(pts.rows()) = pts;
  lp.A_eq.row(pts.rows()).setOnes();
  lp.b_eq.resize(pts.rows() + 1);
  lp.b_eq.head(pts.rows()) = v;
  lp.b_eq[pts.rows()] = 1.0;
  return solve(lp, tol_feas).status == LpStatus::Optimal;
}

struct ChebyshevBall {
  double delta = 0;
  VecX center;
  bool perturbed = false;
};

/* Largest inscribed ball of conv(columns).  max delta s.t. a'c + delta <= b
 * over all facets. */
inline ChebyshevBall chebyshev(const MatX& pts) {
  Hull h;
  try {
    h = facets(pts);
  } catch (const Error&) {
    throw Error("no inscribed ball (degenerate hull)");
  }
  int d = h.dim;
  int nf = int(h.facets.size());
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
  if (sol.status != LpStatus::Optimal)
    throw Error(std::string("inscribed-ball solve failed: ") +
                to_string(sol.status));
  ChebyshevBall ball;
  ball.delta = sol.value;
  ball.center = sol.z.head(d);
  ball.perturbed = h.perturbed;
  return ball;
}

} // namespace wrenchlab
