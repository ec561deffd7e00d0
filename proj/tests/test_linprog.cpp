#include <catch2/catch_amalgamated.hpp>

#include <wrenchlab/linprog.hpp>
#include <wrenchlab/rng.hpp>

using namespace wrenchlab;

namespace {

/* Random LP with a mix of statuses.  When `anchored`, a feasible point is
 * planted so the instance is feasible by construction. */
LinearProgram random_lp(CounterRng& rng, int max_dim, bool anchored) {
  int n = 1 + rng.uniform_int(max_dim);
  int m_eq = rng.uniform_int(std::min(n, 6) + 1);
  int m_ub = rng.uniform_int(max_dim + 1);

  LinearProgram lp = LinearProgram::maximize(rng.gaussian_vec(n));
  lp.A_eq.resize(m_eq, n);
  lp.b_eq.resize(m_eq);
  lp.A_ub.resize(m_ub, n);
  lp.b_ub.resize(m_ub);
  for (int i = 0; i < m_eq; ++i)
    for (int j = 0; j < n; ++j) lp.A_eq(i, j) = rng.gaussian();
  for (int i = 0; i < m_ub; ++i)
    for (int j = 0; j < n; ++j) lp.A_ub(i, j) = rng.gaussian();

  VecX x0(n);
  for (int k = 0; k < n; ++k) {
    double r = rng.uniform();
    if (r < 0.4) {
      lp.lower[k] = 0;
    } else if (r < 0.6) {
      lp.set_free(k);
    } else {
      lp.lower[k] = -1 - rng.uniform();
      lp.upper[k] = 1 + rng.uniform();
    }
    double lo = std::isfinite(lp.lower[k]) ? lp.lower[k] : -1.0;
    double hi = std::isfinite(lp.upper[k]) ? lp.upper[k] : lo + 2.0;
    x0[k] = rng.uniform(lo, hi);
  }

  if (anchored) {
    if (m_eq) lp.b_eq = lp.A_eq * x0;
    if (m_ub) {
      lp.b_ub = lp.A_ub * x0;
      for (int i = 0; i < m_ub; ++i) lp.b_ub[i] += rng.uniform(0.0, 2.0);
    }
  } else {
    for (int i = 0; i < m_eq; ++i) lp.b_eq[i] = rng.gaussian();
    for (int i = 0; i < m_ub; ++i) lp.b_ub[i] = rng.gaussian();
  }
  return lp;
}

double primal_infeasibility(const LinearProgram& lp, const VecX& z) {
  double v = 0;
  if (lp.b_eq.size()) v = (lp.A_eq * z - lp.b_eq).cwiseAbs().maxCoeff();
  if (lp.b_ub.size())
    v = std::max(v, (lp.A_ub * z - lp.b_ub).cwiseMax(0.0).maxCoeff());
  for (int k = 0; k < lp.n_vars(); ++k) {
    if (std::isfinite(lp.lower[k])) v = std::max(v, lp.lower[k] - z[k]);
    if (std::isfinite(lp.upper[k])) v = std::max(v, z[k] - lp.upper[k]);
  }
  return v;
}

} // namespace

TEST_CASE("single bounded variable", "[linprog]") {
  LinearProgram lp = LinearProgram::maximize(VecX::Ones(1));
  lp.A_ub.resize(1, 1);
  lp.A_ub << 1.0;
  lp.b_ub.resize(1);
  lp.b_ub << 3.0;
  auto sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == Catch::Approx(3.0).margin(1e-12));
  CHECK(sol.z[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(sol.dual_ub[0] == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::abs(sol.value - sol.dual_value) <= tol::gap * (1 + std::abs(sol.value)));
}

TEST_CASE("infeasible and unbounded detection", "[linprog]") {
  LinearProgram bad = LinearProgram::maximize(VecX::Ones(1));
  bad.A_ub.resize(1, 1);
  bad.A_ub << 1.0;
  bad.b_ub.resize(1);
  bad.b_ub << -1.0;
  CHECK(solve(bad).status == LpStatus::Infeasible);

  LinearProgram unb = LinearProgram::maximize(VecX::Ones(1));
  CHECK(solve(unb).status == LpStatus::Unbounded);
}

TEST_CASE("uniform-weight program on the signed basis set", "[linprog]") {
  // Columns +-e_i in R^6; the equal-weight combination is the unique optimum
  // of: maximize L s.t. W a = 0, sum(a) = 1, a_l >= L.
  int nw = 12;
  MatX W = MatX::Zero(6, nw);
  for (int i = 0; i < 6; ++i) {
    W(i, 2 * i) = 1.0;
    W(i, 2 * i + 1) = -1.0;
  }
  VecX c = VecX::Zero(nw + 1);
  c[nw] = 1.0;
  LinearProgram lp = LinearProgram::maximize(c);
  lp.A_eq = MatX::Zero(7, nw + 1);
  lp.A_eq.topLeftCorner(6, nw) = W;
  lp.A_eq.row(6).head(nw).setOnes();
  lp.b_eq = VecX::Zero(7);
  lp.b_eq[6] = 1.0;
  lp.A_ub = MatX::Zero(nw, nw + 1);
  for (int l = 0; l < nw; ++l) {
    lp.A_ub(l, l) = -1.0;
    lp.A_ub(l, nw) = 1.0;
  }
  lp.b_ub = VecX::Zero(nw);
  for (int k = 0; k < nw + 1; ++k) lp.set_free(k);

  auto sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == Catch::Approx(1.0 / 12.0).margin(1e-9));
  for (int l = 0; l < nw; ++l)
    CHECK(sol.z[l] == Catch::Approx(1.0 / 12.0).margin(1e-8));
}

TEST_CASE("determinism and batch equivalence", "[linprog]") {
  CounterRng rng(42);
  std::vector<LinearProgram> lps;
  for (int t = 0; t < 24; ++t) lps.push_back(random_lp(rng, 20, t % 2 == 0));

  auto batch = solve_batch(lps);
  for (std::size_t i = 0; i < lps.size(); ++i) {
    auto s1 = solve(lps[i]);
    auto s2 = solve(lps[i]);
    REQUIRE(s1.status == s2.status);
    REQUIRE(batch[i].status == s1.status);
    if (s1.status == LpStatus::Optimal) {
      CHECK(s1.value == s2.value); // bitwise
      CHECK(batch[i].value == s1.value);
      REQUIRE(s1.z.size() == s2.z.size());
      for (int k = 0; k < s1.z.size(); ++k) {
        CHECK(s1.z[k] == s2.z[k]);
        CHECK(batch[i].z[k] == s1.z[k]);
      }
    }
  }
}

TEST_CASE("optimal solutions satisfy feasibility, duality gap, slackness",
          "[linprog]") {
  CounterRng rng(7);
  int optimal_seen = 0;
  for (int t = 0; t < 400; ++t) {
    auto lp = random_lp(rng, 20, true);
    auto sol = solve(lp);
    REQUIRE(sol.status != LpStatus::IterationLimit);
    REQUIRE(sol.status != LpStatus::Failed);
    if (sol.status != LpStatus::Optimal) continue;
    ++optimal_seen;
    double scale = 1.0;
    if (lp.b_eq.size()) scale += lp.b_eq.cwiseAbs().maxCoeff();
    if (lp.b_ub.size()) scale = std::max(scale, 1.0 + lp.b_ub.cwiseAbs().maxCoeff());
    CHECK(primal_infeasibility(lp, sol.z) <= 1e-7 * scale);
    CHECK(std::abs(sol.value - sol.dual_value) <=
          tol::gap * (1.0 + std::abs(sol.value)));
    for (int i = 0; i < sol.dual_ub.size(); ++i) {
      CHECK(sol.dual_ub[i] >= -1e-7);
      double slack = lp.b_ub[i] - lp.A_ub.row(i) * sol.z;
      CHECK(std::abs(sol.dual_ub[i] * slack) <= 1e-6 * scale);
    }
  }
  CHECK(optimal_seen >= 200);
}

TEST_CASE("termination on a large random corpus", "[linprog]") {
  CounterRng rng(2026);
  int counts[5] = {0, 0, 0, 0, 0};
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto lp = random_lp(rng, 40, t % 3 != 0);
    auto sol = solve(lp);
    REQUIRE(sol.status != LpStatus::IterationLimit);
    REQUIRE(sol.status != LpStatus::Failed);
    counts[static_cast<int>(sol.status)]++;
  }
  // The corpus must exercise all three terminal statuses.
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
  CHECK(counts[2] > 0);
}

TEST_CASE("sensitivity: envelope identities", "[linprog]") {
  // maximize x + 2y s.t. x + y <= 4, y <= 1, x,y >= 0 -> (3, 1), value 5.
  VecX c(2);
  c << 1.0, 2.0;
  LinearProgram lp = LinearProgram::maximize(c);
  lp.A_ub.resize(2, 2);
  lp.A_ub << 1, 1, 0, 1;
  lp.b_ub.resize(2);
  lp.b_ub << 4, 1;
  auto sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE(sol.value == Catch::Approx(5.0).margin(1e-10));

  LpPerturbation d;
  d.dc = VecX::Zero(2);
  d.dc[0] = 1.0; // dvalue = z_x = 3
  CHECK(sensitivity(lp, sol, d) == Catch::Approx(3.0).margin(1e-9));

  // Pad with an inactive row; its multiplier must contribute nothing.
  LinearProgram lp2 = lp;
  lp2.A_ub.conservativeResize(3, 2);
  lp2.A_ub.row(2) << 1, 0;
  lp2.b_ub.conservativeResize(3);
  lp2.b_ub[2] = 100.0;
  auto sol2 = solve(lp2);
  REQUIRE(sol2.status == LpStatus::Optimal);
  LpPerturbation d2;
  d2.db_ub = VecX::Zero(3);
  d2.db_ub[2] = 1.0;
  CHECK(sensitivity(lp2, sol2, d2) == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("sensitivity matches central finite differences", "[linprog]") {
  CounterRng rng(555);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 25; ++t) {
    int n = 3 + rng.uniform_int(8);
    LinearProgram lp = LinearProgram::maximize(rng.gaussian_vec(n));
    for (int k = 0; k < n; ++k) {
      lp.lower[k] = -1.0 - rng.uniform();
      lp.upper[k] = 1.0 + rng.uniform();
    }
    int m_ub = 1 + rng.uniform_int(6);
    lp.A_ub.resize(m_ub, n);
    lp.b_ub.resize(m_ub);
    for (int i = 0; i < m_ub; ++i) {
      for (int j = 0; j < n; ++j) lp.A_ub(i, j) = rng.gaussian();
      lp.b_ub[i] = rng.uniform(0.5, 3.0);
    }
    auto sol = solve(lp);
    if (sol.status != LpStatus::Optimal || sol.primal_degenerate ||
        sol.dual_degenerate)
      continue;

    LpPerturbation d;
    d.dc = rng.gaussian_vec(n);
    d.dA_ub.resize(m_ub, n);
    for (int i = 0; i < m_ub; ++i)
      for (int j = 0; j < n; ++j) d.dA_ub(i, j) = rng.gaussian();
    d.db_ub = rng.gaussian_vec(m_ub);

    const double h = 1e-6;
    LinearProgram lp_p = lp, lp_m = lp;
    lp_p.c += h * d.dc;
    lp_p.A_ub += h * d.dA_ub;
    lp_p.b_ub += h * d.db_ub;
    lp_m.c -= h * d.dc;
    lp_m.A_ub -= h * d.dA_ub;
    lp_m.b_ub -= h * d.db_ub;
    auto sp = solve(lp_p), sm = solve(lp_m);
    if (sp.status != LpStatus::Optimal || sm.status != LpStatus::Optimal)
      continue;

    double fd = (sp.value - sm.value) / (2 * h);
    double an = sensitivity(lp, sol, d);
    CHECK(std::abs(an - fd) <= 1e-4 * (1.0 + std::abs(fd)));
    ++checked;
  }
  CHECK(checked >= 25);
}

TEST_CASE("sensitivity refuses degenerate bases", "[linprog]") {
  // maximize x + y s.t. x + y <= 1, x <= 1, y <= 1: optimum face, dual
  // degenerate by construction.
  VecX c(2);
  c << 1.0, 1.0;
  LinearProgram lp = LinearProgram::maximize(c);
  lp.A_ub.resize(3, 2);
  lp.A_ub << 1, 1, 1, 0, 0, 1;
  lp.b_ub.resize(3);
  lp.b_ub << 1, 1, 1;
  auto sol = solve(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE((sol.primal_degenerate || sol.dual_degenerate));
  LpPerturbation d;
  d.dc = VecX::Ones(2);
  CHECK_THROWS_AS(sensitivity(lp, sol, d), Error);
}
