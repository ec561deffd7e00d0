/* wrenchlab — command-line surface for the grasp-robustness library.
 *
 *   wrenchlab metrics --in grasp.json [--pong] [--mc N] [--seed S]
 *   wrenchlab verify THEOREM --trials N [--seed S] [--mc N]
 *   wrenchlab pong --in grasp.json [--mc N] [--seed S] [--dirs K] [--quad Q]
 *   wrenchlab synth --in problem.json [--sweep N] [--seed S] [--out FILE]
 *
 * stdout carries exactly one machine-readable document (JSON, or CSV for
 * synth); diagnostics go to stderr.  Every command is deterministic given
 * its flags and seed.  Exit codes: 0 success (metrics: force closure;
 * verify: zero failures), 2 metrics-not-closure / verify-failures, 1 error.
 */

#include <wrenchlab/wrenchlab.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace wrenchlab;

Json summary_header(const char* command) {
  Json j;
  j["schema"] = schema_version;
  j["command"] = command;
  return j;
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

/* ---- metrics ---- */

struct MetricsOpts {
  std::string in;
  bool pong = false;
  long mc = 0;
  std::uint64_t seed = 0;
};

bool looks_like_json(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{';
  }
  return false;
}

int run_metrics(const MetricsOpts& o) {
  std::string text = read_text_file(o.in);
  GraspReport rep;
  if (looks_like_json(text)) {
    GraspInput in = grasp_input_from_json(Json::parse(text));
    WrenchSet ws = basis_wrenches(in.contacts, in.model);
    rep.fingerprint = grasp_fingerprint(in.contacts, in.model);
    rep.metrics = compute_metrics(ws);
    if (o.pong) {
      // The closure lower bound is 0 (trivially sound) without closure.
      rep.l_fc = rep.metrics.force_closure
                     ? l_fc(in.contacts, in.model).l_fc
                     : 0.0;
    }
    if (o.mc > 0) rep.mc = mc_force_closure(in.contacts, in.model, o.mc, o.seed);
  } else {
    if (o.pong || o.mc > 0)
      throw Error("--pong/--mc need a contact-spec JSON input, not raw wrenches");
    MatX W = wrenches_from_csv(text);
    rep.fingerprint = fnv1a_hex(wrenches_to_csv(W));
    rep.metrics = compute_metrics(W);
  }
  emit(grasp_report_to_json(rep));
  return rep.metrics.force_closure ? 0 : 2;
}

/* ---- verify ---- */

struct VerifyOpts {
  std::string theorem;
  long trials = 0;
  std::uint64_t seed = 1;
  long mc = 10000;
};

constexpr int nw_menu[4] = {8, 12, 16, 24};

Json wrench_cols_json(const MatX& W) {
  Json arr = Json::array();
  for (int j = 0; j < W.cols(); ++j) {
    Json col = Json::array();
    for (int r = 0; r < W.rows(); ++r) col.push_back(W(r, j));
    arr.push_back(col);
  }
  return arr;
}

/* Perturb each wrench by a random point of the negated mean hull (random
 * convex weights), the exact hypothesis of the containment certificate. */
MatX perturb_convex(const MatX& Wbar, CounterRng& rng) {
  MatX W = Wbar;
  const int n = int(Wbar.cols());
  for (int l = 0; l < n; ++l) {
    VecX beta(n);
    for (int k = 0; k < n; ++k)
      beta[k] = -std::log(1.0 - rng.uniform() + 1e-300);
    beta /= beta.sum();
    W.col(l) -= Wbar * beta;
  }
  return W;
}

/* Perturb each wrench by a vector drawn uniformly from the ball of radius
 * eps (direction uniform on the sphere, norm scaled by u^(1/6)). */
MatX perturb_ball(const MatX& Wbar, double eps, CounterRng& rng) {
  MatX W = Wbar;
  for (int l = 0; l < Wbar.cols(); ++l) {
    Vec6 g;
    for (int r = 0; r < 6; ++r) g[r] = rng.gaussian();
    double n = g.norm();
    if (n < 1e-300) continue;
    W.col(l) += (eps * std::pow(rng.uniform(), 1.0 / 6.0) / n) * g;
  }
  return W;
}

int run_verify(const VerifyOpts& o) {
  if (o.trials < 1) throw Error("--trials must be at least 1");
  const std::string& th = o.theorem;
  if (th != "containment" && th != "ball" && th != "bound" &&
      th != "duality" && th != "pong")
    throw Error("unknown theorem '" + th +
                "' (expected containment, ball, bound, duality, or pong)");

  long passes = 0;
  Json counterexample;
  bool have_cx = false;
  auto record = [&](long trial, bool pass, const Json& detail) {
    if (pass) {
      ++passes;
    } else if (!have_cx) {
      counterexample = detail;
      counterexample["trial"] = trial;
      have_cx = true;
    }
  };

  for (long t = 0; t < o.trials; ++t) {
    std::uint64_t seed_t = CounterRng::mix(o.seed, std::uint64_t(t));
    if (th == "pong") {
      FrictionModel model{0.5, 4};
      auto contacts = random_sphere_grasp(3, model, seed_t);
      CounterRng rng(CounterRng::mix(seed_t, 0x51a7ull), 0);
      for (auto& c : contacts) {
        c.sigma1_sq = 1e-4 + rng.uniform() * 4.9e-3;
        c.sigma2_sq = 1e-4 + rng.uniform() * 4.9e-3;
      }
      double L = l_fc(contacts, model).l_fc;
      McEstimate mc =
          mc_force_closure(contacts, model, o.mc, CounterRng::mix(seed_t, 1));
      bool pass = L <= mc.p_hat + 3.0 * mc.std_err() + 1e-12;
      record(t, pass,
             Json{{"seed", seed_t},
                  {"l_fc", L},
                  {"p_hat", mc.p_hat},
                  {"std_err", mc.std_err()}});
      continue;
    }

    int n_w = nw_menu[t % 4];
    MatX Wbar = random_force_closure_set(n_w, seed_t);
    if (th == "containment") {
      CounterRng rng(CounterRng::mix(seed_t, 0xc0deull), 0);
      MatX W = perturb_convex(Wbar, rng);
      auto cert = certify_containment(Wbar, W);
      bool pass = cert.certified && cert.closure_confirmed;
      record(t, pass,
             Json{{"seed", seed_t},
                  {"n_w", n_w},
                  {"certified", cert.certified},
                  {"closure_confirmed", cert.closure_confirmed},
                  {"wbar", wrench_cols_json(Wbar)},
                  {"perturbed", wrench_cols_json(W)}});
    } else if (th == "ball") {
      double eps = ferrari_canny(Wbar).epsilon;
      CounterRng rng(CounterRng::mix(seed_t, 0xba11ull), 0);
      MatX W = perturb_ball(Wbar, eps, rng);
      auto cert = certify_ball(Wbar, W);
      bool pass = cert.certified && cert.closure_confirmed;
      record(t, pass,
             Json{{"seed", seed_t},
                  {"n_w", n_w},
                  {"epsilon", eps},
                  {"certified", cert.certified},
                  {"closure_confirmed", cert.closure_confirmed},
                  {"wbar", wrench_cols_json(Wbar)},
                  {"perturbed", wrench_cols_json(W)}});
    } else if (th == "bound") {
      auto bc = bound_check(Wbar);
      record(t, bc.holds,
             Json{{"seed", seed_t},
                  {"n_w", n_w},
                  {"lhs", bc.lhs},
                  {"epsilon", bc.epsilon},
                  {"delta", bc.delta},
                  {"l_star", bc.l_star},
                  {"wbar", wrench_cols_json(Wbar)}});
    } else { // duality
      auto mw = min_weight(Wbar);
      auto dual = min_weight_dual(Wbar);
      double gap = std::abs(mw.l_star - dual.phi);
      bool pass = mw.feasible && dual.feasible && gap <= 1e-8;
      record(t, pass,
             Json{{"seed", seed_t},
                  {"n_w", n_w},
                  {"l_star", mw.l_star},
                  {"phi", dual.phi},
                  {"gap", gap},
                  {"wbar", wrench_cols_json(Wbar)}});
    }
  }

  Json out = summary_header("verify");
  out["theorem"] = th;
  out["trials"] = o.trials;
  out["passes"] = passes;
  out["failures"] = o.trials - passes;
  if (have_cx) out["first_counterexample"] = counterexample;
  emit(out);
  return passes == o.trials ? 0 : 2;
}

/* ---- pong ---- */

struct PongOpts {
  std::string in;
  long mc = 4000;
  std::uint64_t seed = 0;
  int dirs = 8;
  int quad = 32;
};

/* Admissibility of one loaded polygon vertex: with tangent offset v the
 * tilted wrench of every pyramid side must remain expressible as minus a
 * convex combination of the mean wrenches (the membership behind the
 * boundary trace). */
bool vertex_admissible(const MatX& Wbar, const std::vector<Mat63>& maps_i,
                       const ContactSpec& c, const Vec2& v) {
  double theta = v.norm();
  if (theta <= 1e-15) return true;
  Vec3 d3 = (v.x() * c.t1 + v.y() * c.t2) / theta;
  const int nw = int(Wbar.cols());
  for (const Mat63& T : maps_i) {
    Vec6 u = T * d3;
    LinearProgram lp = LinearProgram::maximize(VecX::Zero(nw));
    lp.A_eq.resize(7, nw);
    lp.A_eq.topRows(6) = Wbar;
    lp.A_eq.row(6).setOnes();
    lp.b_eq.resize(7);
    lp.b_eq.head(6) = -theta * u;
    lp.b_eq[6] = 1.0;
    if (solve(lp).status != LpStatus::Optimal) return false;
  }
  return true;
}

int run_pong(const PongOpts& o) {
  GraspInput in = grasp_input_from_json(Json::parse(read_text_file(o.in)));
  PongConfig cfg;
  cfg.n_dirs = o.dirs;
  cfg.quad_nodes = o.quad;
  PongResult res = l_fc(in.contacts, in.model, cfg);

  Json out = summary_header("pong");
  out["fingerprint"] = grasp_fingerprint(in.contacts, in.model);
  out["l_fc"] = res.l_fc;
  out["clamped"] = res.clamped;
  Json fingers = Json::array();
  for (std::size_t i = 0; i < res.fingers.size(); ++i) {
    const FingerPong& f = res.fingers[i];
    const ContactSpec& c = in.contacts[i];
    Json fj;
    fj["probability"] = f.probability;
    fj["clamped"] = f.clamped;
    fj["sigma_sq"] = Json::array({c.sigma1_sq, c.sigma2_sq});
    fj["theta"] = f.theta;
    Json poly = Json::array();
    for (const Vec2& v : f.polygon.v)
      poly.push_back(Json::array({v.x(), v.y()}));
    fj["polygon"] = poly;
    if (o.mc > 0) {
      McEstimate m =
          mc_gauss_polygon(f.polygon, Vec2::Zero(), pongdetail::sigma_of(c),
                           o.mc, CounterRng::mix(o.seed, 100 + i));
      fj["mc_mass"] = Json{{"p_hat", m.p_hat},
                           {"n_samples", m.n_samples},
                           {"std_err", m.std_err()}};
    }
    fingers.push_back(fj);
  }
  out["fingers"] = fingers;
  if (o.mc > 0) {
    McEstimate m = mc_force_closure(in.contacts, in.model, o.mc, o.seed);
    out["mc"] = Json{{"p_hat", m.p_hat},
                     {"n_samples", m.n_samples},
                     {"std_err", m.std_err()}};
  }

  // Round-trip audit: parse the exact document we are about to print and
  // re-check every polygon vertex by the membership program.
  Json loaded = Json::parse(out.dump(2));
  auto maps = wrench_maps(in.contacts, in.model);
  MatX Wbar = basis_wrenches(in.contacts, in.model).as_matrix();
  for (std::size_t i = 0; i < in.contacts.size(); ++i) {
    for (const Json& vj : loaded["fingers"][i]["polygon"]) {
      Vec2 v(vj[0].get<double>(), vj[1].get<double>());
      if (!vertex_admissible(Wbar, maps[i], in.contacts[i], v))
        throw Error("polygon vertex failed the membership re-check");
    }
  }
  emit(out);
  return 0;
}

/* ---- synth ---- */

struct SynthOpts {
  std::string in;
  long sweep_n = 1;
  std::uint64_t seed = 0;
  std::string out_path;
  int iters = 200;
  long mc = 2000;
};

int run_synth(const SynthOpts& o) {
  if (o.sweep_n < 1) throw Error("--sweep must be at least 1");
  ProblemSpec spec = problem_from_json(Json::parse(read_text_file(o.in)));
  std::vector<SweepRow> rows =
      sweep(spec.problem, int(o.sweep_n), o.seed, o.iters, o.mc);
  std::string csv = sweep_to_csv(rows);
  std::cout << csv;
  if (!o.out_path.empty()) write_text_file(o.out_path, csv);
  for (const auto& row : rows)
    if (row.failed)
      std::cerr << "grasp seed " << row.seed << " failed: " << row.error
                << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp robustness toolkit"};
  app.require_subcommand(1);

  MetricsOpts mo;
  auto* m = app.add_subcommand(
      "metrics", "certify a grasp and report its quality metrics");
  m->add_option("--in", mo.in, "contact-spec JSON or raw wrench CSV")
      ->required();
  m->add_flag("--pong", mo.pong, "include the closure probability bound");
  m->add_option("--mc", mo.mc, "Monte Carlo cross-check samples (0 = off)");
  m->add_option("--seed", mo.seed, "Monte Carlo seed");

  VerifyOpts vo;
  auto* v = app.add_subcommand(
      "verify", "check a guarantee on a random corpus");
  v->add_option("theorem", vo.theorem,
                "containment | ball | bound | duality | pong")
      ->required();
  v->add_option("--trials", vo.trials, "number of random instances")
      ->required();
  v->add_option("--seed", vo.seed, "corpus seed");
  v->add_option("--mc", vo.mc, "Monte Carlo samples per pong trial");

  PongOpts po;
  auto* p = app.add_subcommand(
      "pong", "closure probability bound with per-finger detail");
  p->add_option("--in", po.in, "contact-spec JSON")->required();
  p->add_option("--mc", po.mc, "Monte Carlo samples (0 omits MC fields)");
  p->add_option("--seed", po.seed, "Monte Carlo seed");
  p->add_option("--dirs", po.dirs, "boundary directions per finger");
  p->add_option("--quad", po.quad, "quadrature nodes per polygon edge");

  SynthOpts so;
  auto* s = app.add_subcommand("synth", "synthesize grasps on a surface");
  s->add_option("--in", so.in, "problem JSON")->required();
  s->add_option("--sweep", so.sweep_n, "number of grasps");
  s->add_option("--seed", so.seed, "sweep seed");
  s->add_option("--out", so.out_path, "also write the CSV here");
  s->add_option("--iters", so.iters, "ascent iteration budget");
  s->add_option("--mc", so.mc, "Monte Carlo samples per grasp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (m->parsed()) return run_metrics(mo);
    if (v->parsed()) return run_verify(vo);
    if (p->parsed()) return run_pong(po);
    return run_synth(so);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
