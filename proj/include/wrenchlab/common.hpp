#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wrenchlab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/* Domain error.  Expected outcomes (infeasible LP, non-closure grasp) are
 * statuses, not exceptions; Error is for contract violations and inputs the
 * algorithms cannot meaningfully process. */
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace tol {
inline constexpr double feas = 1e-9;        // LP feasibility
inline constexpr double gap = 1e-8;         // strong-duality gap
inline constexpr double marginal = 1e-6;    // near-boundary verdict warning
inline constexpr double sigma_floor = 1e-8; // variance floor for tangent noise
inline constexpr double theta_max = 10.0;   // ray-length clamp in vertex programs
} // namespace tol

inline Mat3 wedge(const Vec3& a) {
  Mat3 m;
  m << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return m;
}

/* Thread cap: WRENCHLAB_THREADS if set (>=1), else hardware concurrency. */
inline int max_threads() {
  if (const char* env = std::getenv("WRENCHLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/* Runs fn(i) for i in [0, n).  Work is split into contiguous chunks; every
 * fn(i) must write only to slot i of preallocated storage so the result is
 * identical for any thread count. */
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  int nt = max_threads();
  if (nt <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(nt, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

} // namespace wrenchlab
