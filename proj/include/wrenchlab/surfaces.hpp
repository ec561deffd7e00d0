#pragma once

/* Analytic implicit surfaces with normal-uncertainty fields.  A surface is
 * the zero level set of a smooth scalar field s (negative inside); contacts
 * carry the inward normal -grad s / |grad s| and per-axis tangent variances
 * drawn from a selectable field.  The curvature-sensitive field reads the
 * shape operator of the surface and uses the principal directions as the
 * contact's tangent basis. */

#include <wrenchlab/common.hpp>
#include <wrenchlab/wrench.hpp>

#include <cmath>
#include <memory>
#include <utility>

namespace wrenchlab {

inline constexpr double euler_e = 2.718281828459045235360287471;

/* ---- implicit surfaces ---- */

struct ImplicitSurface {
  virtual ~ImplicitSurface() = default;
  virtual double s(const Vec3& x) const = 0;
  virtual Vec3 grad_s(const Vec3& x) const = 0;
  virtual Mat3 hess_s(const Vec3& x) const = 0;
  /* Length scale of the object, used to size finite-difference and line-search
   * steps when optimizing over the surface. */
  virtual double bounding_radius() const { return 1.0; }
};

/* s(x) = |x| - r: the sphere of radius r, negative inside. */
struct Sphere final : ImplicitSurface {
  double r;

  explicit Sphere(double radius) : r(radius) {
    if (!(radius > 0)) throw Error("sphere radius must be positive");
  }

  double s(const Vec3& x) const override { return x.norm() - r; }

  Vec3 grad_s(const Vec3& x) const override {
    double n = x.norm();
    if (n < 1e-14) throw Error("singular point");
    return x / n;
  }

  Mat3 hess_s(const Vec3& x) const override {
    double n = x.norm();
    if (n < 1e-14) throw Error("singular point");
    Vec3 u = x / n;
    return (Mat3::Identity() - u * u.transpose()) / n;
  }

  double bounding_radius() const override { return r; }
};

/* s(x) = n.x - d for a unit normal n; the half-space n.x < d is "inside". */
struct Plane final : ImplicitSurface {
  Vec3 n;
  double d;

  Plane(const Vec3& normal, double offset) : n(normal), d(offset) {
    if (normal.norm() < 1e-14) throw Error("plane normal must be nonzero");
    n = normal / normal.norm();
  }

  double s(const Vec3& x) const override { return n.dot(x) - d; }
  Vec3 grad_s(const Vec3&) const override { return n; }
  Mat3 hess_s(const Vec3&) const override { return Mat3::Zero(); }
};

/* General quadric s(x) = x'Ax + b.x + c (A symmetrized internally). */
struct Quadric final : ImplicitSurface {
  Mat3 A;
  Vec3 b;
  double c;
  double radius_hint;

  Quadric(const Mat3& a_in, const Vec3& b_in, double c_in,
          double radius_hint_in = 1.0)
      : A(0.5 * (a_in + a_in.transpose())), b(b_in), c(c_in),
        radius_hint(radius_hint_in) {
    if (!(radius_hint_in > 0)) throw Error("radius hint must be positive");
  }

  double s(const Vec3& x) const override {
    return x.dot(A * x) + b.dot(x) + c;
  }
  Vec3 grad_s(const Vec3& x) const override { return 2.0 * A * x + b; }
  Mat3 hess_s(const Vec3&) const override { return 2.0 * A; }

  double bounding_radius() const override { return radius_hint; }
};

/* Nearest-surface projection: damped Newton steps along the gradient,
 * |s| <= 1e-10 in at most 50 iterations.  Already-on-surface points are
 * returned unchanged. */
inline Vec3 project_to_surface(const ImplicitSurface& surf, Vec3 x,
                               double tol = 1e-10, int max_iters = 50) {
  double v = surf.s(x);
  for (int it = 0; it < max_iters; ++it) {
    if (std::abs(v) <= tol) return x;
    Vec3 g = surf.grad_s(x);
    double g2 = g.squaredNorm();
    if (g2 < 1e-24) throw Error("singular point");
    Vec3 step = -(v / g2) * g;
    double lambda = 1.0;
    for (int halvings = 0; halvings < 30; ++halvings) {
      double v_new = surf.s(x + lambda * step);
      if (std::abs(v_new) < std::abs(v)) {
        x += lambda * step;
        v = v_new;
        break;
      }
      lambda *= 0.5;
      if (halvings == 29) throw Error("projection stalled");
    }
  }
  if (std::abs(v) <= tol) return x;
  throw Error("projection failed to converge");
}

/* Inward unit normal -grad s / |grad s|. */
inline Vec3 inward_normal(const ImplicitSurface& surf, const Vec3& x) {
  Vec3 g = surf.grad_s(x);
  double n = g.norm();
  if (n < 1e-12) throw Error("singular point");
  return -g / n;
}

/* ---- shape operator ---- */

struct ShapeOperator {
  double kappa1 = 0, kappa2 = 0; // |kappa1| >= |kappa2|
  Vec3 v1 = Vec3::Zero(), v2 = Vec3::Zero(); // unit principal directions
};

/* Principal curvatures and directions at a surface point: eigenpairs of the
 * tangent restriction of -(I - nn') Hess(s) / |grad s|.  On the sphere
 * |x| - r this yields kappa1 = kappa2 = -1/r. */
inline ShapeOperator shape_operator(const ImplicitSurface& surf,
                                    const Vec3& x) {
  Vec3 g = surf.grad_s(x);
  double gn = g.norm();
  if (gn < 1e-12) throw Error("singular point");
  Vec3 nb = -g / gn; // inward normal; the projector is sign-agnostic
  auto [t1, t2] = tangent_basis(nb);
  Eigen::Matrix<double, 3, 2> B;
  B.col(0) = t1;
  B.col(1) = t2;
  Eigen::Matrix2d S = -(B.transpose() * surf.hess_s(x) * B) / gn;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(S);
  double l0 = eig.eigenvalues()[0], l1 = eig.eigenvalues()[1];
  Vec3 w0 = B * eig.eigenvectors().col(0);
  Vec3 w1 = B * eig.eigenvectors().col(1);
  ShapeOperator out;
  if (std::abs(l0) >= std::abs(l1)) {
    out.kappa1 = l0;
    out.kappa2 = l1;
    out.v1 = w0;
    out.v2 = w1;
  } else {
    out.kappa1 = l1;
    out.kappa2 = l0;
    out.v1 = w1;
    out.v2 = w0;
  }
  return out;
}

/* ---- uncertainty fields ---- */

/* Variance floor applied after every field evaluation: the polar toy field
 * vanishes exactly at the equator, which would make the tilt integrals
 * undefined; the floor keeps distributions proper without visibly changing
 * the fields. */
inline constexpr double sigma_min_sq = 1e-8;

struct UncertaintyField {
  enum class Kind { Constant, Polar, SphericalHarmonic, Curvature };

  Kind kind = Kind::Constant;
  double sigma1_sq = 1e-3, sigma2_sq = 1e-3; // Constant parameters
  double sphere_radius = 1.0;                // SphericalHarmonic parameter
  double k_curv = 0.01, h = euler_e;         // Curvature parameters
};

inline UncertaintyField constant_field(double sigma1_sq, double sigma2_sq) {
  if (sigma1_sq < 0 || sigma2_sq < 0) throw Error("variances must be >= 0");
  UncertaintyField f;
  f.kind = UncertaintyField::Kind::Constant;
  f.sigma1_sq = sigma1_sq;
  f.sigma2_sq = sigma2_sq;
  return f;
}

/* Toy distribution #1: isotropic variance 100 x3^2 — quiet equator, loud
 * poles. */
inline UncertaintyField polar_field() {
  UncertaintyField f;
  f.kind = UncertaintyField::Kind::Polar;
  return f;
}

/* Toy distribution #2 on a sphere of radius r: isotropic variance
 * 0.01 exp(Y), with Y the real orthonormalized (l=4, m=2) spherical
 * harmonic. */
inline UncertaintyField harmonic_field(double r) {
  if (!(r > 0)) throw Error("sphere radius must be positive");
  UncertaintyField f;
  f.kind = UncertaintyField::Kind::SphericalHarmonic;
  f.sphere_radius = r;
  return f;
}

/* Curvature-regularized distribution: per-axis variance
 * log(K_curv |kappa_m| + h) along the principal directions. */
inline UncertaintyField curvature_field(double k_curv, double h) {
  if (!(k_curv > 0)) throw Error("curvature gain must be positive");
  if (!(h > 1)) throw Error("prior offset must exceed 1 for variances >= 0");
  UncertaintyField f;
  f.kind = UncertaintyField::Kind::Curvature;
  f.k_curv = k_curv;
  f.h = h;
  return f;
}

namespace surfdetail {

/* Real orthonormalized spherical harmonic (l=4, m=2), evaluated in Cartesian
 * form (pole-safe):
 *   sqrt(1/(80 pi)) * (15/2) * (7 z^2/rho^2 - 1) * (x^2 - y^2) / rho^2. */
inline double real_y42(const Vec3& p) {
  double rho2 = p.squaredNorm();
  if (rho2 < 1e-24) throw Error("singular point");
  double zz = p.z() * p.z() / rho2;
  return 7.5 / std::sqrt(80.0 * pi) * (7.0 * zz - 1.0) *
         (p.x() * p.x() - p.y() * p.y()) / rho2;
}

} // namespace surfdetail

/* Contact at (the projection of) x: inward mean normal, field-defined tangent
 * basis and variances.  The curvature field supplies principal directions as
 * the basis; the others use the deterministic tangent completion. */
inline ContactSpec contact_at(const ImplicitSurface& surf,
                              const UncertaintyField& field, const Vec3& x) {
  Vec3 p = project_to_surface(surf, x);
  Vec3 nb = inward_normal(surf, p);

  ContactSpec c;
  c.x = p;
  c.n_bar = nb;
  std::tie(c.t1, c.t2) = tangent_basis(nb);

  switch (field.kind) {
    case UncertaintyField::Kind::Constant: {
      c.sigma1_sq = field.sigma1_sq;
      c.sigma2_sq = field.sigma2_sq;
      break;
    }
    case UncertaintyField::Kind::Polar: {
      double v = 100.0 * p.z() * p.z();
      c.sigma1_sq = v;
      c.sigma2_sq = v;
      break;
    }
    case UncertaintyField::Kind::SphericalHarmonic: {
      double v = 0.01 * std::exp(surfdetail::real_y42(p));
      c.sigma1_sq = v;
      c.sigma2_sq = v;
      break;
    }
    case UncertaintyField::Kind::Curvature: {
      ShapeOperator so = shape_operator(surf, p);
      double a1 = field.k_curv * std::abs(so.kappa1) + field.h;
      double a2 = field.k_curv * std::abs(so.kappa2) + field.h;
      if (a1 <= 1.0 || a2 <= 1.0)
        throw Error("curvature field parameters give negative variance");
      c.sigma1_sq = std::log(a1);
      c.sigma2_sq = std::log(a2);
      // Principal directions as the tangent frame, re-orthogonalized
      // right-handed around the inward normal.
      c.t1 = (so.v1 - nb.dot(so.v1) * nb).normalized();
      c.t2 = nb.cross(c.t1);
      break;
    }
  }
  c.sigma1_sq = std::max(c.sigma1_sq, sigma_min_sq);
  c.sigma2_sq = std::max(c.sigma2_sq, sigma_min_sq);
  c.validate();
  return c;
}

} // namespace wrenchlab
