#include "dualarm/arm.hpp"

namespace dualarm::dyn {

void ArmModel::validate() const {
  const int n = dof();
  require(n >= 1, "arm: at least one joint required");
  auto sized = [&](const Vec& v, const char* what) {
    require(static_cast<int>(v.size()) == n, std::string("arm: ") + what + " size mismatch");
  };
  sized(masses, "masses");
  sized(inertias, "inertias");
  sized(com_offsets, "com_offsets");
  sized(friction, "friction");
  sized(q_lower, "q_lower");
  sized(q_upper, "q_upper");
  sized(tau_limit, "tau_limit");
  for (int i = 0; i < n; ++i) {
    require(lengths[i] > 0, "arm: link length must be positive");
    require(masses[i] > 0, "arm: link mass must be positive");
    require(inertias[i] > 0, "arm: link inertia must be positive");
    require(com_offsets[i] >= 0 && com_offsets[i] <= lengths[i],
            "arm: COM offset outside the link");
    require(friction[i] >= 0, "arm: negative friction");
    require(q_lower[i] < q_upper[i], "arm: empty joint range");
    require(tau_limit[i] > 0, "arm: torque limit must be positive");
  }
  require(gravity.allFinite() && base_pos.allFinite() && std::isfinite(base_heading),
          "arm: non-finite base/gravity");
}

ArmModel ArmModel::default_planar(int dof) {
  require(dof >= 1, "default_planar: dof must be positive");
  ArmModel m;
  m.lengths.resize(dof);
  m.masses.resize(dof);
  // Three-link profile (0.4, 0.4, 0.2) m / (2.0, 1.5, 0.5) kg; longer chains
  // extend it with distal links matching the last entry.
  for (int i = 0; i < dof; ++i) {
    m.lengths[i] = i == 0 ? 0.4 : (i == 1 ? 0.4 : 0.2);
    m.masses[i] = i == 0 ? 2.0 : (i == 1 ? 1.5 : 0.5);
  }
  m.com_offsets = 0.5 * m.lengths;
  m.inertias.resize(dof);
  for (int i = 0; i < dof; ++i)
    m.inertias[i] = m.masses[i] * m.lengths[i] * m.lengths[i] / 12.0;  // slender rod
  m.friction = Vec::Constant(dof, 0.1);
  m.q_lower = Vec::Constant(dof, -2.0 * M_PI);
  m.q_upper = Vec::Constant(dof, 2.0 * M_PI);
  m.tau_limit.resize(dof);
  for (int i = 0; i < dof; ++i) {
    double carried = 0;  // weight-length scale of everything this joint moves
    for (int j = i; j < dof; ++j) carried += m.masses[j] * m.lengths[j];
    m.tau_limit[i] = std::max(10.0, 50.0 * carried);
  }
  return m;
}

ArmState ArmState::at_rest(const Vec& q) {
  ArmState s;
  s.q = q;
  s.qdot = Vec::Zero(q.size());
  s.last_tau = Vec::Zero(q.size());
  return s;
}

}  // namespace dualarm::dyn
