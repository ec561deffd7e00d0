#pragma once

/* Robot-free grasp synthesis: contact points constrained to an implicit
 * surface, ascended on a closure-robustness objective by projected gradient
 * steps with a backtracking line search.  The gradient is taken by central
 * finite differences through the full composition point -> projection ->
 * contact frame and variances -> objective, so the surface geometry and the
 * uncertainty field both steer the ascent. */

#include <wrenchlab/metrics.hpp>
#include <wrenchlab/oracle.hpp>
#include <wrenchlab/pong.hpp>
#include <wrenchlab/surfaces.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace wrenchlab {

struct SynthProblem {
  enum class Objective { Lfc, MinWeight };

  const ImplicitSurface* surface = nullptr;
  UncertaintyField field{};
  FrictionModel model{0.5, 4};
  int n_f = 3;
  Objective objective = Objective::Lfc;
  double separation = 1e-3;  // minimum pairwise contact distance
  double k_l = 0.0;          // quality floor on the normalized min-weight
  PongConfig pong{};

  void validate() const {
    if (!surface) throw Error("problem needs a surface");
    model.validate();
    pong.validate();
    if (n_f < 2) throw Error("need at least two fingers");
    if (!(separation > 0)) throw Error("separation must be positive");
    if (k_l < 0) throw Error("quality floor must be >= 0");
  }
};

struct SynthResult {
  std::vector<ContactSpec> contacts;
  double objective_value = 0;
  int iterations = 0;
  bool converged = false;
  bool separation_ok = true;  // pairwise separation honored at return
  /* Ascended score per accepted iterate, starting with the initial sample.
   * The score is the objective minus the separation penalty; accepted steps
   * never decrease it. */
  std::vector<double> trace;
};

namespace synthdetail {

inline std::vector<ContactSpec> contacts_of(const SynthProblem& pb,
                                            const std::vector<Vec3>& pts) {
  std::vector<ContactSpec> contacts;
  contacts.reserve(pts.size());
  for (const Vec3& p : pts) contacts.push_back(contact_at(*pb.surface, pb.field, p));
  return contacts;
}

/* Raw objective.  L_FC is zero off closure; the min-weight branch uses the
 * signed weight margin (negative outside closure) so the ascent sees a slope
 * toward closure instead of a flat plateau. */
inline double raw_objective(const SynthProblem& pb,
                            const std::vector<ContactSpec>& contacts) {
  if (pb.objective == SynthProblem::Objective::Lfc)
    return l_fc(contacts, pb.model, pb.pong).l_fc;
  WrenchSet ws = basis_wrenches(contacts, pb.model);
  auto mw = min_weight(ws.as_matrix());
  if (!mw.feasible) throw Error("min-weight objective undefined off the affine flat");
  return double(ws.size()) * mw.l_star;
}

/* Quadratic hinge on pairwise separation, weight 1e3. */
inline double separation_penalty(const SynthProblem& pb,
                                 const std::vector<Vec3>& pts) {
  double pen = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double gap = pb.separation - (pts[i] - pts[j]).norm();
      if (gap > 0) pen += gap * gap;
    }
  return 1e3 * pen;
}

/* Ascended score at arbitrary ambient points: contact_at projects them, so
 * finite differences of this map differentiate through the projection. */
inline double score(const SynthProblem& pb, const std::vector<Vec3>& pts) {
  std::vector<Vec3> on_surface;
  on_surface.reserve(pts.size());
  for (const Vec3& p : pts)
    on_surface.push_back(project_to_surface(*pb.surface, p));
  return raw_objective(pb, contacts_of(pb, on_surface)) -
         separation_penalty(pb, on_surface);
}

inline bool separation_met(const SynthProblem& pb,
                           const std::vector<Vec3>& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() < pb.separation - 1e-9) return false;
  return true;
}

} // namespace synthdetail

/* Seeded synthesis run: random surface sample (retried until the objective is
 * informative, at most 50 draws), then projected steepest ascent along the
 * normalized gradient with Armijo backtracking (c = 1e-4, shrink 0.5, trial
 * arc 0.2x the surface scale).  Converged when an accepted step moves less
 * than 1e-6 or gains less than 1e-8 relative to the current score. */
inline SynthResult synthesize(const SynthProblem& pb, std::uint64_t seed,
                              int max_iters = 200) {
  using namespace synthdetail;
  pb.validate();
  CounterRng rng(seed, 0);
  const double scale = pb.surface->bounding_radius();

  std::vector<Vec3> pts;
  bool found = false;
  for (int attempt = 0; attempt < 50 && !found; ++attempt) {
    pts.clear();
    for (int i = 0; i < pb.n_f; ++i)
      pts.push_back(project_to_surface(*pb.surface, scale * rng.unit_vec3()));
    try {
      if (pb.objective == SynthProblem::Objective::Lfc)
        found = raw_objective(pb, contacts_of(pb, pts)) > 0;
      else
        found = std::isfinite(raw_objective(pb, contacts_of(pb, pts)));
    } catch (const Error&) {
      found = false;
    }
  }
  if (!found) throw Error("no feasible initial sample");

  SynthResult res;
  double f = score(pb, pts);
  res.trace.push_back(f);

  const double h = 1e-5 * scale;
  for (int it = 0; it < max_iters; ++it) {
    // Central finite differences, then tangent-plane projection per finger.
    std::vector<Vec3> grad(pts.size(), Vec3::Zero());
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (int a = 0; a < 3; ++a) {
        std::vector<Vec3> pp = pts, pm = pts;
        pp[i][a] += h;
        pm[i][a] -= h;
        grad[i][a] = (score(pb, pp) - score(pb, pm)) / (2 * h);
      }
    double g2 = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vec3 nb = inward_normal(*pb.surface, pts[i]);
      grad[i] -= nb.dot(grad[i]) * nb;
      g2 += grad[i].squaredNorm();
    }
    if (g2 == 0) {
      res.converged = true;
      break;
    }

    // Steepest ascent along the normalized direction: the gradient magnitude
    // tracks the objective scale (tail-mass products can sit thirty decades
    // below 1), so the trial step is an arc length, not a gradient multiple.
    const double gnorm = std::sqrt(g2);
    double alpha = 0.2 * scale;
    bool accepted = false;
    std::vector<Vec3> cand;
    double fc = f;
    while (alpha >= 1e-10 * scale) {
      cand.clear();
      for (std::size_t i = 0; i < pts.size(); ++i)
        cand.push_back(project_to_surface(
            *pb.surface, pts[i] + (alpha / gnorm) * grad[i]));
      fc = score(pb, cand);
      if (fc >= f + 1e-4 * alpha * gnorm) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.converged = true; // no ascent left at the smallest step
      break;
    }

    double step = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      step += (cand[i] - pts[i]).squaredNorm();
    step = std::sqrt(step);
    double gain = fc - f;
    pts = cand;
    f = fc;
    res.trace.push_back(f);
    ++res.iterations;
    // Relative gain test: objective scales span many decades (a product of
    // near-zero tail masses is still worth ascending), so an absolute
    // threshold would stall tiny-but-improvable scores.
    if (step < 1e-6 || gain < 1e-8 * std::abs(f)) {
      res.converged = true;
      break;
    }
  }

  res.contacts = contacts_of(pb, pts);
  res.objective_value = raw_objective(pb, res.contacts);
  res.separation_ok = separation_met(pb, pts);
  return res;
}

/* ---- batch sweeps ---- */

struct SweepRow {
  std::uint64_t seed = 0;
  SynthResult synth;
  GraspMetrics metrics;
  double l_fc = 0;
  McEstimate mc;
  bool failed = false;
  std::string error;
};

/* Independent seeded synthesis runs with the full metric panel per grasp.
 * Individual failures are recorded on their row; the sweep continues. */
inline std::vector<SweepRow> sweep(const SynthProblem& pb, int n_grasps,
                                   std::uint64_t seed, int max_iters = 200,
                                   long mc_samples = 2000) {
  pb.validate();
  if (n_grasps < 1) throw Error("need at least one grasp");
  std::vector<SweepRow> rows(static_cast<std::size_t>(n_grasps));
  parallel_for(static_cast<std::size_t>(n_grasps), [&](std::size_t g) {
    SweepRow& row = rows[g];
    row.seed = CounterRng::mix(seed, static_cast<std::uint64_t>(g));
    try {
      row.synth = synthesize(pb, row.seed, max_iters);
      WrenchSet ws = basis_wrenches(row.synth.contacts, pb.model);
      row.metrics = compute_metrics(ws);
      row.l_fc = l_fc(row.synth.contacts, pb.model, pb.pong).l_fc;
      row.mc = mc_force_closure(row.synth.contacts, pb.model, mc_samples,
                                CounterRng::mix(row.seed, 1));
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
  });
  return rows;
}

} // namespace wrenchlab
