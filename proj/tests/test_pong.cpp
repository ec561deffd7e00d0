#include <catch2/catch_amalgamated.hpp>

#include <wrenchlab/oracle.hpp>
#include <wrenchlab/pong.hpp>
#include <wrenchlab/rng.hpp>

#include <cmath>
#include <cstdlib>

using namespace wrenchlab;

namespace {

std::vector<ContactSpec> ring_grasp(int n_fingers, double sigma_sq) {
  std::vector<ContactSpec> contacts;
  for (int i = 0; i < n_fingers; ++i) {
    double psi = 2.0 * pi * i / n_fingers;
    Vec3 x(std::cos(psi), std::sin(psi), 0);
    contacts.push_back(ContactSpec::from_normal(x, -x, sigma_sq, sigma_sq));
  }
  return contacts;
}

Polygon2 radial_polygon(const std::vector<double>& radii) {
  Polygon2 p;
  int n = static_cast<int>(radii.size());
  for (int k = 0; k < n; ++k) {
    double phi = 2.0 * pi * k / n;
    p.v.push_back(radii[static_cast<std::size_t>(k)] *
                  Vec2(std::cos(phi), std::sin(phi)));
  }
  return p;
}

} // namespace

TEST_CASE("quadrature rule: polynomial exactness", "[pong]") {
  for (int n : {5, 8, 32}) {
    const auto& q = pongdetail::rule(n);
    REQUIRE(static_cast<int>(q.x.size()) == n);
    double wsum = 0;
    for (double w : q.w) wsum += w;
    CHECK(std::abs(wsum - 1.0) < 1e-14); // measure of [0, 1]
    // Exact for polynomials up to degree 2n - 1.
    for (int k = 1; k <= 2 * n - 1; k += 4) {
      double acc = 0;
      for (int i = 0; i < n; ++i)
        acc += q.w[static_cast<std::size_t>(i)] *
               std::pow(q.x[static_cast<std::size_t>(i)], k);
      CHECK(std::abs(acc - 1.0 / (k + 1)) < 1e-13);
    }
  }
  // Spot-check the five-point nodes against their closed-form values.
  const auto& q5 = pongdetail::rule(5);
  CHECK(std::abs(q5.x[0] - 0.5 * (1.0 - 0.906179845938664)) < 1e-12);
  CHECK(std::abs(q5.x[2] - 0.5) < 1e-12);
  CHECK(std::abs(q5.w[2] - 0.5 * 0.568888888888889) < 1e-12);
}

TEST_CASE("polygon Gaussian mass: rectangles in closed form", "[pong]") {
  Polygon2 sq;
  sq.v = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  double p = gauss_polygon(sq, Vec2::Zero(), Vec2(1, 1));
  double expect = std::pow(std::erf(1.0 / std::sqrt(2.0)), 2);
  CHECK(std::abs(p - expect) < 1e-12);

  Polygon2 rect;
  rect.v = {Vec2(0.2, -0.4), Vec2(1.7, -0.4), Vec2(1.7, 0.9), Vec2(0.2, 0.9)};
  Vec2 mu(0.3, -0.1), s(0.7, 1.3);
  auto phi = [](double a, double sig) { return std::erf(a / (sig * std::sqrt(2.0))); };
  double expect2 = 0.25 * (phi(1.7 - mu.x(), s.x()) - phi(0.2 - mu.x(), s.x())) *
                   (phi(0.9 - mu.y(), s.y()) - phi(-0.4 - mu.y(), s.y()));
  CHECK(std::abs(gauss_polygon(rect, mu, s) - expect2) < 1e-12);

  // Reversing the orientation negates the boundary integral.
  Polygon2 cw = sq;
  std::reverse(cw.v.begin(), cw.v.end());
  CHECK(std::abs(gauss_polygon(cw, Vec2::Zero(), Vec2(1, 1)) + expect) < 1e-12);

  // Shifting polygon and mean together changes nothing.
  Vec2 t(3.7, -2.2);
  Polygon2 moved = sq;
  for (auto& v : moved.v) v += t;
  CHECK(std::abs(gauss_polygon(moved, t, Vec2(1, 1)) - expect) < 1e-12);
}

TEST_CASE("polygon Gaussian mass: triangle against Monte Carlo", "[pong]") {
  Polygon2 tri;
  tri.v = {Vec2(0.1, 0.2), Vec2(2.1, 0.35), Vec2(0.4, 1.7)};
  REQUIRE(tri.signed_area() > 0);
  Vec2 mu(0.3, 0.2), s(0.8, 0.5);
  double p = gauss_polygon(tri, mu, s);
  auto mc = mc_gauss_polygon(tri, mu, s, 300000, 424242);
  CHECK(std::abs(p - mc.p_hat) < 4 * mc.std_err() + 1e-3);
}

TEST_CASE("polygon Gaussian mass: narrow distributions", "[pong]") {
  // Mean deep inside: all the mass is captured.
  Polygon2 sq;
  sq.v = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  CHECK(std::abs(gauss_polygon(sq, Vec2::Zero(), Vec2(1e-4, 1e-4)) - 1.0) < 1e-9);

  // Mean far outside: nothing is captured.
  Polygon2 far = sq;
  for (auto& v : far.v) v.x() += 10.0;
  CHECK(std::abs(gauss_polygon(far, Vec2::Zero(), Vec2(1e-4, 1e-4))) < 1e-12);

  // Mean on an edge: half-plane limit.
  Polygon2 half;
  half.v = {Vec2(0, -1), Vec2(2, -1), Vec2(2, 1), Vec2(0, 1)};
  CHECK(std::abs(gauss_polygon(half, Vec2::Zero(), Vec2(1e-4, 1e-4)) - 0.5) < 1e-3);
}

TEST_CASE("polygon mass gradient matches finite differences", "[pong]") {
  CounterRng rng(51, 0);
  std::vector<double> radii;
  for (int k = 0; k < 8; ++k) radii.push_back(0.5 + 0.3 * rng.uniform());
  Polygon2 poly = radial_polygon(radii);
  Vec2 mu(0.1, -0.2), s(0.6, 0.9);
  auto grad = gauss_polygon_gradient(poly, mu, s);
  REQUIRE(grad.size() == poly.v.size());
  const double h = 1e-6;
  for (std::size_t k = 0; k < poly.v.size(); ++k)
    for (int c = 0; c < 2; ++c) {
      Polygon2 pp = poly, pm = poly;
      pp.v[k][c] += h;
      pm.v[k][c] -= h;
      double fd = (gauss_polygon(pp, mu, s) - gauss_polygon(pm, mu, s)) / (2 * h);
      CHECK(std::abs(grad[k][c] - fd) < 1e-7 + 1e-6 * std::abs(fd));
    }
}

TEST_CASE("three-finger ring grasp: symmetry and closure probability", "[pong]") {
  FrictionModel model{0.5, 4};
  auto contacts = ring_grasp(3, 1e-4);
  REQUIRE(contains_origin(basis_wrenches(contacts, model)));

  auto res = l_fc(contacts, model);
  REQUIRE(res.fingers.size() == 3);
  CHECK_FALSE(res.clamped);
  CHECK(res.l_fc > 0.0);
  CHECK(res.l_fc <= 1.0);
  // Threefold symmetry: congruent polygons, equal probabilities.
  CHECK(std::abs(res.fingers[0].probability - res.fingers[1].probability) < 1e-9);
  CHECK(std::abs(res.fingers[1].probability - res.fingers[2].probability) < 1e-9);
  for (const auto& f : res.fingers) {
    CHECK(f.polygon.convex_ccw(1e-9));
    CHECK(f.polygon.signed_area() > 0);
    for (double th : f.theta) CHECK(th > 1e-6);
  }
  double prod = res.fingers[0].probability * res.fingers[1].probability *
                res.fingers[2].probability;
  CHECK(std::abs(res.l_fc - prod) < 1e-15);

  // The single-finger entry point reproduces the joint result.
  auto f1 = fc_polygon(contacts, model, 1);
  CHECK(f1.probability == res.fingers[1].probability);

  // Tighter normals mean higher closure probability; tiny noise means ~1.
  auto wide = l_fc(ring_grasp(3, 1e-2), model);
  CHECK(wide.l_fc < res.l_fc);
  auto tight = l_fc(ring_grasp(3, 1e-6), model);
  CHECK(tight.l_fc > 1.0 - 1e-6);
}

TEST_CASE("product bound holds against direct sampling", "[pong]") {
  FrictionModel model{0.5, 4};
  auto contacts = ring_grasp(3, 4e-2);
  auto res = l_fc(contacts, model);
  CHECK(res.l_fc > 0.01);
  CHECK(res.l_fc < 1.0);
  auto mc = mc_force_closure(contacts, model, 1200, 37);
  CHECK(res.l_fc <= mc.p_hat + 4 * mc.std_err() + 2e-3);
}

TEST_CASE("grasps without closure have zero probability", "[pong]") {
  FrictionModel model{0.5, 4};
  std::vector<ContactSpec> bad = {
      ContactSpec::from_normal(Vec3(1, 0, 0), Vec3(-1, 0, 0), 1e-3, 1e-3),
      ContactSpec::from_normal(Vec3(0.9, 0.1, 0), Vec3(-1, 0, 0), 1e-3, 1e-3)};
  REQUIRE_FALSE(contains_origin(basis_wrenches(bad, model)));
  auto res = l_fc(bad, model);
  CHECK(res.l_fc == 0.0);
  for (const auto& f : res.fingers)
    for (double th : f.theta) CHECK(th == 0.0);

  auto g = l_fc_gradient(bad, model);
  CHECK(g.fallback);
  CHECK(g.value == 0.0);
  CHECK(g.grad.norm() == 0.0);
}

TEST_CASE("radius cap: clamping is reported and capped", "[pong]") {
  FrictionModel model{0.5, 4};
  std::vector<ContactSpec> contacts = {
      ContactSpec::from_normal(Vec3::Zero(), Vec3(0, 0, 1), 1e-4, 1e-4),
      ContactSpec::from_normal(Vec3::Zero(), Vec3(0, 0, -1), 1e-4, 1e-4)};
  REQUIRE(contains_origin(basis_wrenches(contacts, model)));

  PongConfig tiny_cap;
  tiny_cap.theta_max = 0.01;
  auto res = l_fc(contacts, model, tiny_cap);
  CHECK(res.clamped);
  for (const auto& f : res.fingers) {
    CHECK(f.clamped);
    for (double th : f.theta) CHECK(th <= 0.01 + 1e-12);
  }
  // The default cap is far beyond any reachable tilt for this grasp.
  auto free_res = l_fc(contacts, model);
  CHECK_FALSE(free_res.clamped);
  for (const auto& f : free_res.fingers)
    for (double th : f.theta) CHECK(th < tol::theta_max * (1 - 1e-9));

  // Clamped traces route the gradient through finite differences.
  auto g = l_fc_gradient(contacts, model, tiny_cap);
  CHECK(g.fallback);
}

TEST_CASE("evaluation is deterministic and thread-count independent", "[pong]") {
  FrictionModel model{0.6, 5};
  auto contacts = random_sphere_grasp(3, model, 777, 1.0, 5e-3);
  auto a = l_fc(contacts, model);
  auto b = l_fc(contacts, model);
  CHECK(a.l_fc == b.l_fc);
  setenv("WRENCHLAB_THREADS", "3", 1);
  auto c = l_fc(contacts, model);
  setenv("WRENCHLAB_THREADS", "1", 1);
  CHECK(a.l_fc == c.l_fc);
  for (std::size_t i = 0; i < a.fingers.size(); ++i)
    for (int k = 0; k < 8; ++k)
      CHECK(a.fingers[i].theta[static_cast<std::size_t>(k)] ==
            c.fingers[i].theta[static_cast<std::size_t>(k)]);
}

TEST_CASE("parameter map reproduces and smoothly extends the contacts", "[pong]") {
  FrictionModel model{0.5, 4};
  auto contacts = random_sphere_grasp(3, model, 901, 1.0, 2e-2);
  VecX p0 = pack_params(contacts);
  auto same = apply_params(contacts, p0);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    CHECK((same[i].x - contacts[i].x).norm() < 1e-15);
    CHECK((same[i].n_bar - contacts[i].n_bar).norm() < 1e-15);
    CHECK((same[i].t1 - contacts[i].t1).norm() < 1e-12);
    CHECK((same[i].t2 - contacts[i].t2).norm() < 1e-12);
  }
  CHECK(l_fc(same, model).l_fc == l_fc(contacts, model).l_fc);

  // A perturbed parameter vector yields valid contacts with carried frames.
  VecX p1 = p0;
  p1[3] += 0.05;
  p1[10] -= 0.03;
  auto moved = apply_params(contacts, p1);
  for (const auto& c : moved) CHECK_NOTHROW(c.validate());
}

TEST_CASE("closure-probability gradient agrees with finite differences", "[pong]") {
  FrictionModel model{0.5, 4};
  // Seeds chosen so every boundary LP is clean: no primal degeneracy, no
  // distinct-ray ties, no caps.  (Dual degeneracy alone is tolerated by the
  // analytic path — the supporting facet stays unique — and both seeds
  // exercise it.)
  for (std::uint64_t seed : {311u, 312u}) {
    auto contacts = random_sphere_grasp(4, model, seed, 1.0, 2e-2);
    auto kkt = l_fc_gradient(contacts, model);
    REQUIRE_FALSE(kkt.fallback);
    PongConfig fd_cfg;
    fd_cfg.grad_mode = GradMode::FiniteDifference;
    auto fd = l_fc_gradient(contacts, model, fd_cfg);
    CHECK(fd.fallback);
    CHECK(kkt.value == fd.value);
    REQUIRE(kkt.grad.size() == fd.grad.size());
    CHECK((kkt.grad - fd.grad).norm() <= 1e-5 * (1.0 + fd.grad.norm()));
    CHECK(kkt.grad.norm() > 0.0);
    // Per-finger accessors slice the same vector.
    CHECK((kkt.d_x(2) - kkt.grad.segment<3>(12)).norm() == 0.0);
    CHECK((kkt.d_n(2) - kkt.grad.segment<3>(15)).norm() == 0.0);
  }
}
