#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dualarm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Violated input/shape/configuration contract.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values where finite ones are required (losses, gradients, states).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Simulation left its validity envelope (deep penetration, exploding state).
struct DivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// 2-D unit vector at angle a.
inline Vec2 unit_vec(double a) { return {std::cos(a), std::sin(a)}; }

/// 90-degree counter-clockwise rotation of v (z x v for planar vectors).
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

/// Planar cross product r x f (returns the z component).
inline double cross2(const Vec2& r, const Vec2& f) { return r.x() * f.y() - r.y() * f.x(); }

/// Deterministic stream splitting: hash a (seed, stream, index) triple into a
/// fresh seed so parallel or reordered consumers never share RNG state.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

}  // namespace dualarm
