#pragma once

/* Monte-Carlo reference estimators and statistics helpers.  Everything here
 * is deliberately naive: straight sampling with per-sample RNG substreams
 * (thread-count independent) and direct feasibility solves, used to
 * cross-check the closed-form machinery elsewhere in the library. */

#include <wrenchlab/common.hpp>
#include <wrenchlab/hull.hpp>
#include <wrenchlab/polygon.hpp>
#include <wrenchlab/rng.hpp>
#include <wrenchlab/wrench.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace wrenchlab {

struct McEstimate {
  double p_hat = 0;
  long n_samples = 0;

  double std_err() const {
    if (n_samples <= 0) return 0;
    return std::sqrt(std::max(0.0, p_hat * (1.0 - p_hat)) /
                     static_cast<double>(n_samples));
  }
};

/* Probability that a grasp with normally perturbed contact normals is in
 * force closure.  Sample k draws, for each finger, a tangent perturbation
 * z ~ N(0, diag(sigma1_sq, sigma2_sq)) in the stored frame, renormalizes
 * n_bar + z1 t1 + z2 t2, rebuilds the wrench set, and solves the origin
 * membership feasibility problem. */
inline McEstimate mc_force_closure(const std::vector<ContactSpec>& contacts,
                                   const FrictionModel& model, long n_samples,
                                   std::uint64_t seed) {
  model.validate();
  for (const auto& c : contacts) c.validate();
  const int n_f = static_cast<int>(contacts.size());
  CounterRng root(seed, 0);
  std::vector<int> hits(static_cast<std::size_t>(n_samples), 0);
  parallel_for(static_cast<int>(n_samples), [&](int k) {
    CounterRng rng = root.substream(static_cast<std::uint64_t>(k));
    std::vector<Vec3> normals(contacts.size());
    for (int i = 0; i < n_f; ++i) {
      const ContactSpec& c = contacts[static_cast<std::size_t>(i)];
      double z1 = rng.gaussian() * std::sqrt(c.sigma1_sq);
      double z2 = rng.gaussian() * std::sqrt(c.sigma2_sq);
      Vec3 n = c.n_bar + z1 * c.t1 + z2 * c.t2;
      normals[static_cast<std::size_t>(i)] = n.normalized();
    }
    WrenchSet ws = basis_wrenches(contacts, model, normals);
    hits[static_cast<std::size_t>(k)] = contains_origin(ws) ? 1 : 0;
  });
  McEstimate est;
  est.n_samples = n_samples;
  est.p_hat = std::accumulate(hits.begin(), hits.end(), 0.0) /
              static_cast<double>(n_samples);
  return est;
}

/* Probability that a bivariate normal sample lands inside a convex
 * counterclockwise polygon. */
inline McEstimate mc_gauss_polygon(const Polygon2& poly, const Vec2& mean,
                                   const Vec2& sigma, long n_samples,
                                   std::uint64_t seed) {
  CounterRng root(seed, 0);
  std::vector<int> hits(static_cast<std::size_t>(n_samples), 0);
  parallel_for(static_cast<int>(n_samples), [&](int k) {
    CounterRng rng = root.substream(static_cast<std::uint64_t>(k));
    Vec2 p(mean.x() + sigma.x() * rng.gaussian(),
           mean.y() + sigma.y() * rng.gaussian());
    hits[static_cast<std::size_t>(k)] = poly.contains(p) ? 1 : 0;
  });
  McEstimate est;
  est.n_samples = n_samples;
  est.p_hat = std::accumulate(hits.begin(), hits.end(), 0.0) /
              static_cast<double>(n_samples);
  return est;
}

/* Random wrench set (standard Gaussian columns) that contains the origin in
 * its convex hull, by rejection.  Used to exercise metrics on nondegenerate
 * inputs without hand-constructing geometry.  `attempts_out`, when given,
 * receives the number of candidate clouds drawn (the last one succeeded). */
inline MatX random_force_closure_set(int n_w, std::uint64_t seed,
                                     int max_tries = 10000,
                                     int* attempts_out = nullptr) {
  if (n_w < 7) throw Error("need at least 7 wrenches for a full-dimensional set");
  CounterRng rng(seed, 0);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    MatX W(6, n_w);
    for (int j = 0; j < n_w; ++j) W.col(j) = rng.gaussian_vec(6);
    if (contains_origin(W)) {
      if (attempts_out) *attempts_out = attempt + 1;
      return W;
    }
  }
  throw Error("rejection sampling failed to find a force-closure set");
}

/* Random multi-finger grasp of the unit sphere (inward normals), resampled
 * until the nominal grasp is in force closure. */
inline std::vector<ContactSpec> random_sphere_grasp(int n_fingers,
                                                    const FrictionModel& model,
                                                    std::uint64_t seed,
                                                    double radius = 1.0,
                                                    double sigma_sq = 1e-3,
                                                    int max_tries = 1000) {
  model.validate();
  CounterRng rng(seed, 0);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    std::vector<ContactSpec> contacts;
    contacts.reserve(static_cast<std::size_t>(n_fingers));
    for (int i = 0; i < n_fingers; ++i) {
      Vec3 u = rng.unit_vec3();
      contacts.push_back(
          ContactSpec::from_normal(radius * u, -u, sigma_sq, sigma_sq));
    }
    if (contains_origin(basis_wrenches(contacts, model))) return contacts;
  }
  throw Error("failed to sample a force-closure sphere grasp");
}

/* ---- small statistics helpers ---- */

inline double mean_of(const std::vector<double>& x) {
  if (x.empty()) return 0;
  return std::accumulate(x.begin(), x.end(), 0.0) /
         static_cast<double>(x.size());
}

inline double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0;
  double m = mean_of(x), s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

namespace detail {
inline std::vector<double> ranks(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)];
  });
  std::vector<double> r(static_cast<std::size_t>(n));
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && x[static_cast<std::size_t>(idx[static_cast<std::size_t>(j + 1)])] ==
                            x[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])])
      ++j;
    double shared = 0.5 * (i + j) + 1.0;  // average rank over the tie run
    for (int k = i; k <= j; ++k)
      r[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = shared;
    i = j + 1;
  }
  return r;
}
}  // namespace detail

/* Spearman rank correlation (tie-aware: Pearson correlation of ranks). */
inline double spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error("spearman needs two equal-length series with >= 2 points");
  std::vector<double> rx = detail::ranks(x), ry = detail::ranks(y);
  double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    double a = rx[i] - mx, b = ry[i] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx <= 0 || syy <= 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

/* One-sample t statistic for H0: mean(x) == mu0. */
inline double t_statistic(const std::vector<double>& x, double mu0) {
  if (x.size() < 2) throw Error("t statistic needs >= 2 samples");
  double sd = sample_sd(x);
  if (sd == 0) return mean_of(x) > mu0 ? HUGE_VAL : (mean_of(x) < mu0 ? -HUGE_VAL : 0.0);
  return (mean_of(x) - mu0) /
         (sd / std::sqrt(static_cast<double>(x.size())));
}

}  // namespace wrenchlab
