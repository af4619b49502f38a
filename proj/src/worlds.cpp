// Copyright 2026 The GeMuCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gemuco/worlds.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "gemuco/parallel.hpp"

namespace gemuco {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGravity = 9.81;  // m/s^2

void check_limits(const Vector& cmd, const Vector& lo, const Vector& hi,
                  const char* who) {
  for (Eigen::Index i = 0; i < cmd.size(); ++i) {
    if (cmd[i] < lo[i] - 1e-12 || cmd[i] > hi[i] + 1e-12) {
      throw std::invalid_argument(std::string(who) +
                                  ": command outside joint limits");
    }
  }
}

Sample finalize_sample(const ModalityLayout& layout, const Vector& clean,
                       const std::vector<double>& noise_std,
                       const std::vector<std::uint8_t>& availability,
                       const std::string& state_id, bool with_noise,
                       Rng& rng) {
  if (static_cast<int>(availability.size()) != layout.group_count()) {
    throw std::invalid_argument("observe: availability length mismatch");
  }
  Sample s;
  s.state_id = state_id;
  s.available = availability;
  s.values = clean;
  if (with_noise) {
    for (int g = 0; g < layout.group_count(); ++g) {
      for (int c = 0; c < layout.dim(g); ++c) {
        s.values[layout.offset(g) + c] += rng.gaussian(0.0, noise_std[g]);
      }
    }
  }
  for (int g = 0; g < layout.group_count(); ++g) {
    if (!availability[g]) {
      s.values.segment(layout.offset(g), layout.dim(g)).setZero();
    }
  }
  return s;
}

Episode parallel_rollout(int n, std::uint64_t seed, const std::string& state_id,
                         int command_dim,
                         const std::function<Vector(Rng&)>& draw_command,
                         const std::function<Sample(const Vector&, Rng&)>& obs) {
  if (n < 1) throw std::invalid_argument("random_rollout: n < 1");
  Episode e;
  e.state_id = state_id;
  e.samples.resize(n);
  const int nthreads = std::max(1, std::min(thread_count(), n));
#pragma omp parallel for num_threads(nthreads) schedule(static)
  for (int i = 0; i < n; ++i) {
    // Per-sample stream keyed by (seed, i): identical results for any
    // thread count.
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
    const Vector cmd = draw_command(rng);
    (void)command_dim;
    e.samples[i] = obs(cmd, rng);
  }
  return e;
}

}  // namespace

double oracle_error(const Vector& claimed, const Vector& actual) {
  if (claimed.size() != actual.size()) {
    throw std::invalid_argument("oracle_error: size mismatch");
  }
  return (claimed - actual).norm();
}

// ---------------------------------------------------------------------------
// ArmToolWorld

ModalityLayout ArmToolWorld::layout() {
  return ModalityLayout({{"theta", 4}, {"x_tool", 2}});
}

std::string ArmToolWorld::state_id() const {
  std::ostringstream os;
  os << "A_l" << static_cast<int>(p_.l_tool_mm) << "_phi"
     << static_cast<int>(p_.phi_tool_deg);
  return os.str();
}

Vector ArmToolWorld::tool_tip(const Vector& theta) const {
  if (theta.size() != 4) throw std::invalid_argument("tool_tip: theta dim");
  double x = 0.0, y = 0.0, angle = 0.0;
  for (int i = 0; i < 4; ++i) {
    angle += theta[i];
    x += p_.link_lengths_mm[i] * std::cos(angle);
    y += p_.link_lengths_mm[i] * std::sin(angle);
  }
  const double stick = angle + p_.phi_tool_deg * kPi / 180.0;
  x += p_.l_tool_mm * std::cos(stick);
  y += p_.l_tool_mm * std::sin(stick);
  Vector tip(2);
  tip << x, y - p_.droop_mm;
  return tip;
}

Sample ArmToolWorld::observe(const Vector& command,
                             const std::vector<std::uint8_t>& availability,
                             Rng& rng) const {
  const Vector lo = Vector::Constant(4, -p_.joint_limit_rad);
  const Vector hi = Vector::Constant(4, p_.joint_limit_rad);
  check_limits(command, lo, hi, "ArmToolWorld");
  Vector clean(6);
  clean.head(4) = command;
  clean.tail(2) = tool_tip(command);
  return finalize_sample(layout(), clean,
                         {p_.noise_theta_rad, p_.noise_tool_mm}, availability,
                         state_id(), p_.noise, rng);
}

Episode ArmToolWorld::random_rollout(int n_samples, std::uint64_t seed) const {
  const std::vector<std::uint8_t> all(2, 1);
  return parallel_rollout(
      n_samples, seed, state_id(), 4,
      [this](Rng& rng) {
        Vector cmd(4);
        for (int i = 0; i < 4; ++i) {
          cmd[i] = rng.uniform(-p_.joint_limit_rad, p_.joint_limit_rad);
        }
        return cmd;
      },
      [this, &all](const Vector& cmd, Rng& rng) {
        return observe(cmd, all, rng);
      });
}

// ---------------------------------------------------------------------------
// TendonArmWorld

TendonArmWorld::Params TendonArmWorld::Params::defaults() {
  Params p;
  p.moment_arm_mm = Matrix(4, 2);
  p.moment_arm_mm << 12.0, -6.0,
                    -10.0,  8.0,
                      7.0, 11.0,
                     -9.0, -13.0;
  p.rest_length_mm = Vector(4);
  p.rest_length_mm << 200.0, 210.0, 190.0, 205.0;
  p.gravity_amp_nmm = Vector(2);
  p.gravity_amp_nmm << 150.0, 80.0;
  return p;
}

TendonArmWorld::Params TendonArmWorld::Params::perturbed(
    double scale, std::uint64_t seed) const {
  Params p = *this;
  Rng rng(Rng::mix(seed, 0x676d6f64));
  for (int r = 0; r < p.moment_arm_mm.rows(); ++r) {
    for (int c = 0; c < p.moment_arm_mm.cols(); ++c) {
      p.moment_arm_mm(r, c) *= 1.0 + scale * rng.uniform(-1.0, 1.0);
    }
  }
  for (int i = 0; i < p.rest_length_mm.size(); ++i) {
    p.rest_length_mm[i] += 20.0 * scale * rng.uniform(-1.0, 1.0);
  }
  p.compliance_mm_per_n *= 1.0 + scale * rng.uniform(-1.0, 1.0);
  for (int i = 0; i < p.gravity_amp_nmm.size(); ++i) {
    p.gravity_amp_nmm[i] *= 1.0 + scale * rng.uniform(-1.0, 1.0);
  }
  return p;
}

TendonArmWorld::TendonArmWorld(Params p) : p_(std::move(p)) {
  if (p_.moment_arm_mm.rows() != 4 || p_.moment_arm_mm.cols() != 2 ||
      p_.rest_length_mm.size() != 4 || p_.gravity_amp_nmm.size() != 2) {
    throw std::invalid_argument("TendonArmWorld: bad parameter shapes");
  }
  const Matrix& r = p_.moment_arm_mm;
  Eigen::FullPivLU<Matrix> lu(r);
  if (lu.rank() < 2) {
    throw std::invalid_argument("TendonArmWorld: moment arm matrix rank < 2");
  }
  pinv_ = (r.transpose() * r).inverse() * r.transpose();  // 2x4
}

ModalityLayout TendonArmWorld::layout() {
  return ModalityLayout({{"theta", 2}, {"f", 4}, {"l", 4}});
}

Vector TendonArmWorld::muscle_length(const Vector& theta,
                                     const Vector& tension) const {
  return p_.rest_length_mm - p_.moment_arm_mm * theta +
         p_.compliance_mm_per_n * tension;
}

Vector TendonArmWorld::gravity_torque(const Vector& theta) const {
  Vector tau(2);
  tau[0] = p_.gravity_amp_nmm[0] * std::cos(theta[0]) +
           p_.gravity_amp_nmm[1] * std::cos(theta[0] + theta[1]);
  tau[1] = p_.gravity_amp_nmm[1] * std::cos(theta[0] + theta[1]);
  return tau;
}

Vector TendonArmWorld::equilibrium_tension(const Vector& theta) const {
  // Minimum-norm solution of R^T f = tau.
  return pinv_.transpose() * gravity_torque(theta);
}

Vector TendonArmWorld::sample_tension(const Vector& theta, Rng& rng) const {
  Vector f0(4);
  for (int i = 0; i < 4; ++i) {
    f0[i] = rng.uniform(p_.tension_min_n, p_.tension_max_n);
  }
  const Vector tau = gravity_torque(theta);
  Vector f = f0 + pinv_.transpose() * (tau - p_.moment_arm_mm.transpose() * f0);
  for (int i = 0; i < 4; ++i) f[i] = std::clamp(f[i], 0.5, 80.0);
  return f;
}

Vector TendonArmWorld::realize_command(const Vector& l_cmd) const {
  if (l_cmd.size() != 4) throw std::invalid_argument("realize_command: dim");
  // Length-servo settling point: solve l(theta, f_eq(theta)) ~= l_cmd in the
  // least-squares sense; the compliance term is small so a few fixed-point
  // sweeps converge.
  Vector theta = pinv_ * (p_.rest_length_mm - l_cmd);
  for (int it = 0; it < 10; ++it) {
    const Vector f = equilibrium_tension(theta);
    theta = pinv_ * (p_.rest_length_mm + p_.compliance_mm_per_n * f - l_cmd);
  }
  for (int i = 0; i < 2; ++i) {
    theta[i] = std::clamp(theta[i], -p_.joint_limit_rad, p_.joint_limit_rad);
  }
  return theta;
}

Sample TendonArmWorld::observe(const Vector& command,
                               const std::vector<std::uint8_t>& availability,
                               Rng& rng) const {
  if (command.size() != 6) {
    throw std::invalid_argument("TendonArmWorld: command is [theta(2), f(4)]");
  }
  const Vector theta = command.head(2);
  const Vector f = command.tail(4);
  const Vector lo = Vector::Constant(2, -p_.joint_limit_rad);
  const Vector hi = Vector::Constant(2, p_.joint_limit_rad);
  check_limits(theta, lo, hi, "TendonArmWorld");
  Vector clean(10);
  clean.head(2) = theta;
  clean.segment(2, 4) = f;
  clean.tail(4) = muscle_length(theta, f);
  if (p_.frozen_muscle >= 0 && p_.frozen_muscle < 4) {
    clean[2 + p_.frozen_muscle] = 0.0;  // dead tension reading
  }
  return finalize_sample(
      layout(), clean,
      {p_.noise_theta_rad, p_.noise_tension_n, p_.noise_length_mm},
      availability, "B", p_.noise, rng);
}

Episode TendonArmWorld::random_rollout(int n_samples, std::uint64_t seed) const {
  const std::vector<std::uint8_t> all(3, 1);
  return parallel_rollout(
      n_samples, seed, "B", 6,
      [this](Rng& rng) {
        Vector cmd(6);
        for (int i = 0; i < 2; ++i) {
          cmd[i] = rng.uniform(-p_.joint_limit_rad, p_.joint_limit_rad);
        }
        cmd.tail(4) = sample_tension(cmd.head(2), rng);
        return cmd;
      },
      [this, &all](const Vector& cmd, Rng& rng) {
        return observe(cmd, all, rng);
      });
}

// ---------------------------------------------------------------------------
// DeflectingBipedWorld

ModalityLayout DeflectingBipedWorld::layout() {
  return ModalityLayout(
      {{"theta", 4}, {"x_cog", 2}, {"x_tool", 2}, {"s_tool", 2}});
}

std::string DeflectingBipedWorld::state_id() const {
  std::ostringstream os;
  os << "C_m" << static_cast<int>(p_.tool_mass_g) << "_l"
     << static_cast<int>(p_.tool_length_mm);
  return os.str();
}

struct DeflectingBipedWorld::BodyState {
  Vector realized;          // 4 joint angles after deflection
  Eigen::Vector3d tip;      // tool tip, mm
  Eigen::Vector3d com;      // whole-body centre of mass, mm
};

namespace {

Eigen::Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

}  // namespace

DeflectingBipedWorld::BodyState DeflectingBipedWorld::solve(
    const Vector& command, bool with_deflection) const {
  struct Snapshot {
    Eigen::Vector3d tip, com;
    Vector tau_nm;  // per joint: S-p, S-y, E-p, A-p
  };
  auto evaluate = [&](const Vector& q) -> Snapshot {
    const double sp = q[0], sy = q[1], ep = q[2], ap = q[3];
    const Eigen::Matrix3d r_ankle = rot_y(ap);
    const Eigen::Vector3d shoulder = r_ankle * Eigen::Vector3d(0, 0, p_.torso_mm);
    const Eigen::Matrix3d r_arm1 = r_ankle * rot_z(sy) * rot_y(sp);
    const Eigen::Vector3d d1 = r_arm1 * Eigen::Vector3d::UnitX();
    const Eigen::Vector3d elbow = shoulder + p_.upper_arm_mm * d1;
    const Eigen::Matrix3d r_arm2 = r_arm1 * rot_y(ep);
    const Eigen::Vector3d d2 = r_arm2 * Eigen::Vector3d::UnitX();
    const Eigen::Vector3d hand = elbow + p_.forearm_mm * d2;
    const Eigen::Vector3d tip = hand + p_.tool_length_mm * d2;

    struct MassPoint {
      Eigen::Vector3d r;
      double m;
    };
    const std::vector<MassPoint> masses = {
        {Eigen::Vector3d::Zero(), p_.base_mass_g},
        {r_ankle * Eigen::Vector3d(0, 0, 0.5 * p_.torso_mm), p_.torso_mass_g},
        {shoulder + 0.5 * p_.upper_arm_mm * d1, p_.limb_mass_g},
        {elbow + 0.5 * p_.forearm_mm * d2, p_.limb_mass_g},
        {hand + 0.6 * p_.tool_length_mm * d2, p_.tool_mass_g},
    };

    Snapshot snap;
    snap.tip = tip;
    Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
    double total = 0.0;
    for (const auto& mp : masses) {
      weighted += mp.m * mp.r;
      total += mp.m;
    }
    snap.com = weighted / total;

    // Gravitational torque about each joint axis from the distal masses.
    // Units: grams and millimetres in, N*m out.
    auto torque_about = [&](const Eigen::Vector3d& axis,
                            const Eigen::Vector3d& point,
                            std::size_t first_mass) {
      double tau = 0.0;
      for (std::size_t i = first_mass; i < masses.size(); ++i) {
        const Eigen::Vector3d r = masses[i].r - point;
        const Eigen::Vector3d force(0, 0, -masses[i].m * 1e-3 * kGravity);  // N
        tau += axis.dot((r * 1e-3).cross(force));
      }
      return tau;
    };
    snap.tau_nm = Vector(4);
    snap.tau_nm[0] = torque_about(r_ankle * rot_z(sy) * Eigen::Vector3d::UnitY(),
                                  shoulder, 2);  // shoulder pitch
    snap.tau_nm[1] =
        torque_about(r_ankle * Eigen::Vector3d::UnitZ(), shoulder, 2);  // yaw
    snap.tau_nm[2] = torque_about(r_arm1 * Eigen::Vector3d::UnitY(), elbow, 3);
    snap.tau_nm[3] = torque_about(Eigen::Vector3d::UnitY(),
                                  Eigen::Vector3d::Zero(), 1);  // ankle
    return snap;
  };

  BodyState state;
  Vector q = command;
  if (with_deflection) {
    // Fixed point of q = command + k * tau(q), iterated substitution.
    for (int it = 0; it < 100; ++it) {
      const Snapshot snap = evaluate(q);
      Vector next = command + p_.deflection_rad_per_nm * snap.tau_nm;
      const double delta = (next - q).lpNorm<Eigen::Infinity>();
      q = next;
      if (delta <= 1e-9) break;
    }
  }
  const Snapshot snap = evaluate(q);
  state.realized = q;
  state.tip = snap.tip;
  state.com = snap.com;
  return state;
}

Vector DeflectingBipedWorld::realized_angles(const Vector& command) const {
  return solve(command, true).realized;
}

Vector DeflectingBipedWorld::tool_tip(const Vector& command) const {
  const BodyState s = solve(command, true);
  Vector tip(2);
  tip << s.tip.x(), s.tip.z();
  return tip;
}

Vector DeflectingBipedWorld::rigid_tool_tip(const Vector& command) const {
  const BodyState s = solve(command, false);
  Vector tip(2);
  tip << s.tip.x(), s.tip.z();
  return tip;
}

Vector DeflectingBipedWorld::cog(const Vector& command) const {
  const BodyState s = solve(command, true);
  Vector c(2);
  c << s.com.x(), s.com.y();
  return c;
}

Vector DeflectingBipedWorld::screen_point(const Vector& command) const {
  const BodyState s = solve(command, true);
  const double depth = p_.camera_x_mm - s.tip.x();
  if (depth <= 1.0) {
    throw std::runtime_error("DeflectingBipedWorld: tool tip behind camera");
  }
  Vector uv(2);
  uv << p_.camera_focal_px * s.tip.y() / depth,
      p_.camera_focal_px * (s.tip.z() - p_.camera_z_mm) / depth;
  return uv;
}

Sample DeflectingBipedWorld::observe(const Vector& command,
                                     const std::vector<std::uint8_t>& availability,
                                     Rng& rng) const {
  if (command.size() != 4) {
    throw std::invalid_argument("DeflectingBipedWorld: command dim");
  }
  Vector lo(4), hi(4);
  lo << -p_.shoulder_pitch_limit_rad, -p_.shoulder_yaw_limit_rad,
      p_.elbow_min_rad, -p_.ankle_limit_rad;
  hi << p_.shoulder_pitch_limit_rad, p_.shoulder_yaw_limit_rad,
      p_.elbow_max_rad, p_.ankle_limit_rad;
  check_limits(command, lo, hi, "DeflectingBipedWorld");
  const BodyState s = solve(command, true);
  Vector clean(10);
  clean.head(4) = command;  // commanded angles are the sensed actuation state
  clean.segment(4, 2) << s.com.x(), s.com.y();
  clean.segment(6, 2) << s.tip.x(), s.tip.z();
  const double depth = p_.camera_x_mm - s.tip.x();
  clean.segment(8, 2) << p_.camera_focal_px * s.tip.y() / depth,
      p_.camera_focal_px * (s.tip.z() - p_.camera_z_mm) / depth;
  return finalize_sample(layout(), clean,
                         {p_.noise_theta_rad, p_.noise_cog_mm, p_.noise_tool_mm,
                          p_.noise_screen_px},
                         availability, state_id(), p_.noise, rng);
}

Episode DeflectingBipedWorld::random_rollout(int n_samples,
                                             std::uint64_t seed) const {
  const std::vector<std::uint8_t> all(4, 1);
  return parallel_rollout(
      n_samples, seed, state_id(), 4,
      [this](Rng& rng) {
        Vector cmd(4);
        cmd[0] = rng.uniform(-p_.shoulder_pitch_limit_rad, p_.shoulder_pitch_limit_rad);
        cmd[1] = rng.uniform(-p_.shoulder_yaw_limit_rad, p_.shoulder_yaw_limit_rad);
        cmd[2] = rng.uniform(p_.elbow_min_rad, p_.elbow_max_rad);
        cmd[3] = rng.uniform(-p_.ankle_limit_rad, p_.ankle_limit_rad);
        return cmd;
      },
      [this, &all](const Vector& cmd, Rng& rng) {
        return observe(cmd, all, rng);
      });
}

}  // namespace gemuco
