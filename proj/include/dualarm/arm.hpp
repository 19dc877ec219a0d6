#pragma once

#include "dualarm/types.hpp"

namespace dualarm::dyn {

/// Planar serial-chain arm. Joint i rotates link i; angles accumulate from
/// base_heading. com_offsets are measured from joint i along link i.
struct ArmModel {
  Vec lengths;      // link lengths [m]
  Vec masses;       // link masses [kg]
  Vec inertias;     // link rotational inertia about the link COM [kg m^2]
  Vec com_offsets;  // COM distance from the proximal joint [m]
  Vec friction;     // viscous joint friction [N m s/rad]
  Vec q_lower, q_upper;  // joint limits [rad]
  Vec tau_limit;         // symmetric torque limits [N m]
  Vec2 base_pos{0.0, 0.0};
  double base_heading = 0.0;
  Vec2 gravity{0.0, 0.0};  // in-plane gravity [m/s^2]

  int dof() const { return static_cast<int>(lengths.size()); }
  double reach() const { return lengths.sum(); }

  /// Throws ContractError on inconsistent sizes or non-physical values.
  void validate() const;

  /// Three-link bench model used across tests: lengths (0.4, 0.4, 0.2) m,
  /// masses (2.0, 1.5, 0.5) kg, slender-rod inertias, COM at mid-link,
  /// viscous friction 0.1, limits +-2*pi rad, no gravity.
  static ArmModel default_planar(int dof = 3);
};

struct ArmState {
  Vec q, qdot;
  Vec last_tau;  // most recent commanded torque after clamping (zeros initially)

  static ArmState at_rest(const Vec& q);
};

/// End-effector position and heading in world coordinates.
struct EePose {
  Vec2 pos{0.0, 0.0};
  double theta = 0.0;
};

/// Planar wrench: in-plane force plus torque about z.
struct Wrench2D {
  Vec2 force{0.0, 0.0};
  double torque = 0.0;

  Wrench2D& operator+=(const Wrench2D& o) {
    force += o.force;
    torque += o.torque;
    return *this;
  }
  Wrench2D operator-() const { return {-force, -torque}; }
};

}  // namespace dualarm::dyn
