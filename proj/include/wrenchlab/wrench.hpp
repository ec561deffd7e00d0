#pragma once

#include <wrenchlab/common.hpp>

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace wrenchlab {

inline constexpr double pi = 3.14159265358979323846;

/* Pyramidal Coulomb friction approximation: mu >= 0, n_sides >= 3. */
struct FrictionModel {
  double mu = 0.5;
  int n_sides = 4;

  void validate() const {
    if (!(mu >= 0)) throw Error("friction coefficient must be >= 0");
    if (n_sides < 3) throw Error("friction pyramid needs at least 3 sides");
  }
};

/* One contact: position, unit mean inward normal, and a right-handed
 * orthonormal tangent frame (t1, t2, n_bar) carrying the tangent-plane
 * noise covariance diag(sigma1_sq, sigma2_sq) expressed in (t1, t2). */
struct ContactSpec {
  Vec3 x = Vec3::Zero();
  Vec3 n_bar = Vec3::UnitZ();
  Vec3 t1 = Vec3::UnitX();
  Vec3 t2 = Vec3::UnitY();
  double sigma1_sq = 0;
  double sigma2_sq = 0;

  void validate() const {
    auto unit = [](const Vec3& v) { return std::abs(v.norm() - 1.0) < 1e-9; };
    if (!unit(n_bar) || !unit(t1) || !unit(t2))
      throw Error("contact frame vectors must be unit length");
    if (std::abs(n_bar.dot(t1)) > 1e-9 || std::abs(n_bar.dot(t2)) > 1e-9 ||
        std::abs(t1.dot(t2)) > 1e-9)
      throw Error("contact frame must be orthonormal");
    if (t1.cross(t2).dot(n_bar) < 0)
      throw Error("contact frame must be right-handed");
    if (sigma1_sq < 0 || sigma2_sq < 0)
      throw Error("tangent variances must be >= 0");
  }

  static ContactSpec from_normal(const Vec3& x, const Vec3& n_bar,
                                 double s1sq = 0, double s2sq = 0);
};

/* Deterministic completion of a unit normal to a right-handed orthonormal
 * frame.  Rule: cross the normal against +z, or against +y when the normal
 * is within ~26 degrees of +-z; then t2 = n x t1.  For n = +z this yields
 * t1 = +x, t2 = +y. */
inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& n_bar) {
  double nn = n_bar.norm();
  if (nn < 1e-12) throw Error("degenerate normal");
  Vec3 n = n_bar / nn;
  Vec3 ref = std::abs(n.z()) > 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
  Vec3 u = ref.cross(n);
  Vec3 t1 = u / u.norm();
  Vec3 t2 = n.cross(t1);
  return {t1, t2};
}

inline ContactSpec ContactSpec::from_normal(const Vec3& x, const Vec3& n_bar,
                                            double s1sq, double s2sq) {
  double nn = n_bar.norm();
  if (nn < 1e-12) throw Error("degenerate normal");
  ContactSpec c;
  c.x = x;
  c.n_bar = n_bar / nn;
  std::tie(c.t1, c.t2) = tangent_basis(c.n_bar);
  c.sigma1_sq = s1sq;
  c.sigma2_sq = s2sq;
  return c;
}

/* Unit generator directions of the n_sides-gon in the tangent plane of n,
 * equally spaced, with the first generator aligned with tangent_basis(n).t1. */
inline std::vector<Vec3> generators(const Vec3& n, int n_sides) {
  if (n_sides < 3) throw Error("friction pyramid needs at least 3 sides");
  auto [t1, t2] = tangent_basis(n);
  std::vector<Vec3> g(n_sides);
  for (int j = 0; j < n_sides; ++j) {
    double a = 2.0 * pi * j / n_sides;
    g[j] = std::cos(a) * t1 + std::sin(a) * t2;
  }
  return g;
}

/* Linear map from a contact normal to the basis wrench of generator g:
 *   T = [ I + mu*[g]x ; [x]x (I + mu*[g]x) ],
 * so T n = (n + mu (g x n); x x (n + mu (g x n))). */
inline Mat63 wrench_map(const Vec3& x, const Vec3& g, double mu) {
  Mat3 F = Mat3::Identity() + mu * wedge(g);
  Mat63 T;
  T.topRows<3>() = F;
  T.bottomRows<3>() = wedge(x) * F;
  return T;
}

/* Basis wrenches of a grasp, laid out finger-major: wrench (i, j) lives at
 * flat index i*n_sides + j. */
struct WrenchSet {
  std::vector<Vec6> w;
  int n_sides = 1;

  int size() const { return static_cast<int>(w.size()); }
  int n_fingers() const { return n_sides ? size() / n_sides : 0; }
  int index(int finger, int side) const { return finger * n_sides + side; }

  MatX as_matrix() const {
    MatX W(6, size());
    for (int l = 0; l < size(); ++l) W.col(l) = w[l];
    return W;
  }

  static WrenchSet from_points(const MatX& pts) {
    if (pts.rows() != 6) throw Error("wrench points must be 6-dimensional");
    WrenchSet ws;
    ws.n_sides = 1;
    ws.w.resize(pts.cols());
    for (int l = 0; l < pts.cols(); ++l) ws.w[l] = pts.col(l);
    return ws;
  }
};

/* Wrench maps of every (finger, side) pair, from the mean normals. */
inline std::vector<std::vector<Mat63>> wrench_maps(
    const std::vector<ContactSpec>& contacts, const FrictionModel& model) {
  model.validate();
  std::vector<std::vector<Mat63>> maps(contacts.size());
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    contacts[i].validate();
    auto g = generators(contacts[i].n_bar, model.n_sides);
    maps[i].reserve(model.n_sides);
    for (int j = 0; j < model.n_sides; ++j)
      maps[i].push_back(wrench_map(contacts[i].x, g[j], model.mu));
  }
  return maps;
}

/* Basis wrenches w_{i,j} = T_{i,j} n_i.  With `normals` empty the mean
 * normals are used; otherwise normals[i] is the sampled normal of finger i
 * (the maps always come from the mean normals). */
inline WrenchSet basis_wrenches(const std::vector<ContactSpec>& contacts,
                                const FrictionModel& model,
                                const std::vector<Vec3>& normals = {}) {
  if (!normals.empty() && normals.size() != contacts.size())
    throw Error("one sampled normal per contact required");
  auto maps = wrench_maps(contacts, model);
  WrenchSet ws;
  ws.n_sides = model.n_sides;
  ws.w.resize(contacts.size() * model.n_sides);
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const Vec3& n = normals.empty() ? contacts[i].n_bar : normals[i];
    for (int j = 0; j < model.n_sides; ++j)
      ws.w[ws.index(static_cast<int>(i), j)] = maps[i][j] * n;
  }
  return ws;
}

} // namespace wrenchlab
