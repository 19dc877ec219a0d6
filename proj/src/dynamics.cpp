#include "dualarm/dynamics.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace dualarm::dyn {
namespace {

void check_q(const ArmModel& m, const Vec& q, const char* where) {
  require(static_cast<int>(q.size()) == m.dof(), std::string(where) + ": q size mismatch");
  require(all_finite(q), std::string(where) + ": non-finite q");
}

}  // namespace

LinkFrames link_frames(const ArmModel& m, const Vec& q) {
  check_q(m, q, "link_frames");
  const int n = m.dof();
  LinkFrames f;
  f.theta.resize(n);
  f.joints.resize(n + 1);
  f.coms.resize(n);
  f.joints[0] = m.base_pos;
  double th = m.base_heading;
  for (int i = 0; i < n; ++i) {
    th += q[i];
    f.theta[i] = th;
    const Vec2 u = unit_vec(th);
    f.coms[i] = f.joints[i] + m.com_offsets[i] * u;
    f.joints[i + 1] = f.joints[i] + m.lengths[i] * u;
  }
  return f;
}

EePose forward_kinematics(const ArmModel& m, const Vec& q) {
  const LinkFrames f = link_frames(m, q);
  return {f.joints.back(), wrap_angle(f.theta[m.dof() - 1])};
}

Mat jacobian(const ArmModel& m, const Vec& q) {
  const LinkFrames f = link_frames(m, q);
  const int n = m.dof();
  Mat J(3, n);
  for (int j = 0; j < n; ++j) {
    const Vec2 col = perp(f.joints[n] - f.joints[j]);
    J(0, j) = col.x();
    J(1, j) = col.y();
    J(2, j) = 1.0;
  }
  return J;
}

Vec3 ee_twist(const ArmModel& m, const Vec& q, const Vec& qdot) {
  require(qdot.size() == q.size(), "ee_twist: qdot size mismatch");
  return jacobian(m, q) * qdot;
}

Mat mass_matrix(const ArmModel& m, const Vec& q) {
  const LinkFrames f = link_frames(m, q);
  const int n = m.dof();
  Mat M = Mat::Zero(n, n);
  Mat Jv(2, n);
  for (int i = 0; i < n; ++i) {
    Jv.setZero();
    for (int j = 0; j <= i; ++j) {
      const Vec2 col = perp(f.coms[i] - f.joints[j]);
      Jv(0, j) = col.x();
      Jv(1, j) = col.y();
    }
    M.noalias() += m.masses[i] * Jv.transpose() * Jv;
    // Jw row for link i is (1, ..., 1, 0, ..., 0) with i+1 ones.
    M.topLeftCorner(i + 1, i + 1).array() += m.inertias[i];
  }
  return M;
}

Vec inverse_dynamics(const ArmModel& m, const Vec& q, const Vec& qdot, const Vec& qddot) {
  check_q(m, q, "inverse_dynamics");
  require(qdot.size() == q.size() && qddot.size() == q.size(),
          "inverse_dynamics: velocity/acceleration size mismatch");
  const int n = m.dof();
  const LinkFrames f = link_frames(m, q);

  // Forward sweep: angular rates/accelerations and linear accelerations.
  // Seeding the base acceleration with -g folds gravity into the recursion.
  Vec omega(n), alpha(n);
  std::vector<Vec2> a_joint(n + 1), a_com(n);
  double w = 0, al = 0;
  a_joint[0] = -m.gravity;
  for (int i = 0; i < n; ++i) {
    w += qdot[i];
    al += qddot[i];
    omega[i] = w;
    alpha[i] = al;
    const Vec2 u = unit_vec(f.theta[i]);
    const Vec2 up = perp(u);
    a_com[i] = a_joint[i] + m.com_offsets[i] * (al * up - w * w * u);
    a_joint[i + 1] = a_joint[i] + m.lengths[i] * (al * up - w * w * u);
  }

  // Backward sweep: joint forces/moments from the tip inward.
  Vec tau(n);
  Vec2 f_next(0.0, 0.0);  // force link i exerts on link i+1 at joint i+1
  double n_next = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    const Vec2 F = m.masses[i] * a_com[i];
    const double N = m.inertias[i] * alpha[i];
    const Vec2 f_i = F + f_next;
    const double n_i = N + n_next - cross2(f.joints[i] - f.coms[i], f_i) +
                       cross2(f.joints[i + 1] - f.coms[i], f_next);
    tau[i] = n_i;
    f_next = f_i;
    n_next = n_i;
  }
  return tau;
}

Vec bias_forces(const ArmModel& m, const Vec& q, const Vec& qdot) {
  return inverse_dynamics(m, q, qdot, Vec::Zero(q.size())) + m.friction.cwiseProduct(qdot);
}

Vec gravity_torque(const ArmModel& m, const Vec& q) {
  return inverse_dynamics(m, q, Vec::Zero(q.size()), Vec::Zero(q.size()));
}

Vec forward_dynamics(const ArmModel& m, const Vec& q, const Vec& qdot, const Vec& tau,
                     const Vec& tau_ext) {
  require(tau.size() == q.size() && tau_ext.size() == q.size(),
          "forward_dynamics: torque size mismatch");
  require(all_finite(tau) && all_finite(tau_ext), "forward_dynamics: non-finite torque");
  const Mat M = mass_matrix(m, q);
  const Vec rhs = tau - tau_ext - bias_forces(m, q, qdot);
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw NumericError("forward_dynamics: mass matrix not SPD");
  return llt.solve(rhs);
}

ArmState integrate_step(const ArmModel& m, const ArmState& s, const Vec& tau, const Vec& tau_ext,
                        double dt) {
  require(dt > 0, "integrate_step: dt must be positive");
  const Vec tau_c = tau.cwiseMax(-m.tau_limit).cwiseMin(m.tau_limit);
  const Vec qdd = forward_dynamics(m, s.q, s.qdot, tau_c, tau_ext);

  ArmState out;
  out.qdot = s.qdot + dt * qdd;
  out.q = s.q + dt * out.qdot;
  out.last_tau = tau_c;
  for (int i = 0; i < m.dof(); ++i) {
    if (out.q[i] < m.q_lower[i]) {
      out.q[i] = m.q_lower[i];
      out.qdot[i] = 0.0;
    } else if (out.q[i] > m.q_upper[i]) {
      out.q[i] = m.q_upper[i];
      out.qdot[i] = 0.0;
    }
  }
  if (!all_finite(out.q) || !all_finite(out.qdot) || out.qdot.cwiseAbs().maxCoeff() > 1e3)
    throw DivergedError("integrate_step: state left the validity envelope");
  return out;
}

Mat task_inertia(const ArmModel& m, const Vec& q, double damping) {
  const Mat J = jacobian(m, q);
  const Mat M = mass_matrix(m, q);
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw NumericError("task_inertia: mass matrix not SPD");
  Mat A = J * llt.solve(J.transpose());
  A.diagonal().array() += damping * damping;
  return A.inverse();
}

double kinetic_energy(const ArmModel& m, const Vec& q, const Vec& qdot) {
  return 0.5 * qdot.dot(mass_matrix(m, q) * qdot);
}

double potential_energy(const ArmModel& m, const Vec& q) {
  const LinkFrames f = link_frames(m, q);
  double pe = 0.0;
  for (int i = 0; i < m.dof(); ++i) pe -= m.masses[i] * m.gravity.dot(f.coms[i]);
  return pe;
}

}  // namespace dualarm::dyn
