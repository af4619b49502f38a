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

#ifndef GEMUCO_WORLDS_HPP_
#define GEMUCO_WORLDS_HPP_

#include <array>
#include <string>

#include "gemuco/dataset.hpp"
#include "gemuco/rng.hpp"

namespace gemuco {

enum class OracleQuantity { kToolTip, kCog, kJoint, kTension };

// Euclidean error in world units; claimed/actual must agree in size.
double oracle_error(const Vector& claimed, const Vector& actual);

// Planar 4-joint arm holding a straight stick; the sensed tool tip hangs a
// fixed droop below the stick tip. Hidden state: grasp length and angle.
class ArmToolWorld {
 public:
  struct Params {
    std::array<double, 4> link_lengths_mm{300.0, 300.0, 200.0, 100.0};
    double droop_mm = 100.0;
    double joint_limit_rad = 1.2;
    double l_tool_mm = 500.0;
    double phi_tool_deg = 30.0;
    double noise_theta_rad = 0.002;
    double noise_tool_mm = 2.0;
    bool noise = true;
  };

  explicit ArmToolWorld(Params p) : p_(p) {}
  static ModalityLayout layout();  // theta(4), x_tool(2)

  const Params& params() const { return p_; }
  std::string state_id() const;

  // Noiseless tool-tip position (mm) for a joint command.
  Vector tool_tip(const Vector& theta) const;

  Sample observe(const Vector& command,
                 const std::vector<std::uint8_t>& availability, Rng& rng) const;
  Episode random_rollout(int n_samples, std::uint64_t seed) const;

 private:
  Params p_;
};

// Two-joint, four-muscle tendon arm. Lengths follow
// l = l0 - R theta + c f; rollouts sample tensions in a band and project
// them onto the static-equilibrium manifold for the gravity torque.
class TendonArmWorld {
 public:
  struct Params {
    Matrix moment_arm_mm;  // 4x2, full column rank
    Vector rest_length_mm;  // 4
    double compliance_mm_per_n = 0.013;
    double joint_limit_rad = 1.0;
    double tension_min_n = 5.0;
    double tension_max_n = 50.0;
    Vector gravity_amp_nmm;  // 2 amplitudes of the gravity torque model
    double noise_theta_rad = 0.002;
    double noise_tension_n = 3.4;
    double noise_length_mm = 0.055;
    bool noise = true;
    int frozen_muscle = -1;  // tension sensor of this muscle reads zero

    static Params defaults();
    // Mismatched twin standing in for an imprecise geometric model.
    Params perturbed(double scale, std::uint64_t seed) const;
  };

  explicit TendonArmWorld(Params p);
  static ModalityLayout layout();  // theta(2), f(4), l(4)

  const Params& params() const { return p_; }

  Vector muscle_length(const Vector& theta, const Vector& tension) const;
  Vector gravity_torque(const Vector& theta) const;  // N*mm
  // Minimum-norm tension balancing the gravity torque at theta.
  Vector equilibrium_tension(const Vector& theta) const;
  // Random tension projected onto the equilibrium manifold.
  Vector sample_tension(const Vector& theta, Rng& rng) const;
  // Realized joint angle for a commanded muscle length (length-servo model).
  Vector realize_command(const Vector& l_cmd) const;

  // command = [theta(2), f(4)]
  Sample observe(const Vector& command,
                 const std::vector<std::uint8_t>& availability, Rng& rng) const;
  Episode random_rollout(int n_samples, std::uint64_t seed) const;

 private:
  Params p_;
  Matrix pinv_;  // left pseudo-inverse of the moment arm matrix
};

// Four commanded joints (shoulder pitch/yaw, elbow pitch, ankle pitch) on a
// small humanoid whose joints deflect in proportion to gravitational torque.
// Hidden state: tool mass and length.
class DeflectingBipedWorld {
 public:
  struct Params {
    double torso_mm = 80.0;
    double upper_arm_mm = 100.0;
    double forearm_mm = 60.0;
    double tool_length_mm = 176.0;  // {176, 236}
    double tool_mass_g = 40.0;      // {40, 80, 120}
    double torso_mass_g = 300.0;
    double limb_mass_g = 30.0;
    double base_mass_g = 200.0;
    double deflection_rad_per_nm = 0.5236;  // 30 deg per N*m
    double shoulder_pitch_limit_rad = 0.5;
    double shoulder_yaw_limit_rad = 0.5;
    // One-sided range: the elbow always bends the same way, which keeps the
    // tip-to-joint inverse single-valued.
    double elbow_min_rad = 0.1;
    double elbow_max_rad = 0.9;
    double ankle_limit_rad = 0.2;
    double camera_x_mm = 600.0;
    double camera_z_mm = 100.0;
    double camera_focal_px = 500.0;
    double noise_theta_rad = 0.002;
    double noise_cog_mm = 0.5;
    double noise_tool_mm = 1.0;
    double noise_screen_px = 1.0;
    bool noise = true;
  };

  explicit DeflectingBipedWorld(Params p) : p_(p) {}
  static ModalityLayout layout();  // theta(4), x_cog(2), x_tool(2), s_tool(2)

  const Params& params() const { return p_; }
  std::string state_id() const;

  // Commanded -> realized angles through the deflection fixed point,
  // iterated substitution to 1e-9 residual.
  Vector realized_angles(const Vector& command) const;

  // Noiseless observations at a command. Entries: tip (x,z) in mm, ground
  // CoG (x,y) in mm, screen point (u,v) in px.
  Vector tool_tip(const Vector& command) const;
  Vector cog(const Vector& command) const;
  Vector screen_point(const Vector& command) const;

  Sample observe(const Vector& command,
                 const std::vector<std::uint8_t>& availability, Rng& rng) const;
  Episode random_rollout(int n_samples, std::uint64_t seed) const;

  // Deflection disabled; used by tests.
  Vector rigid_tool_tip(const Vector& command) const;

 private:
  struct BodyState;
  BodyState solve(const Vector& command, bool with_deflection) const;
  Params p_;
};

}  // namespace gemuco

#endif  // GEMUCO_WORLDS_HPP_
