#pragma once

#include "pi2cma/dmp.hpp"

#include <Eigen/Core>

#include <iosfwd>

namespace pi2cma {

struct ArmModel {
    Eigen::VectorXd link_lengths;  ///< meters

    /// D equal links summing to total_length.
    static ArmModel uniform(int dofs, double total_length = 1.0);

    [[nodiscard]] Eigen::Index dofs() const { return link_lengths.size(); }
    void validate() const;
};

struct ArmPose {
    Eigen::Vector2d end_effector;
    Eigen::Matrix2Xd joints;  ///< 2 x D, position of the distal end of each link
};

/// Planar chain: joint d sits at sum_{e<=d} l_e (cos g_e, sin g_e), g_e = sum_{f<=e} a_f.
ArmPose forward_kinematics(const ArmModel& arm, const Eigen::VectorXd& joint_angles);

/// Uniform joint angle phi in (0, pi/2) that puts the end-effector on the y-axis.
/// Throws ConfigError when the root is not bracketed.
Eigen::VectorXd final_posture(const ArmModel& arm);

struct ViapointTask {
    Eigen::Vector2d viapoint{0.5, 0.5};
    double viapoint_time = 0.3;
    double duration = 0.5;
    Eigen::VectorXd dof_weights;  ///< w_d = D + 1 - d
    /// Multiplier on the squared viapoint distance; 1 leaves the two terms unscaled.
    double viapoint_weight = 1.0;

    static ViapointTask standard(int dofs);
    void validate() const;
};

/// Per-timestep cost: weighted mean squared joint acceleration at every step,
/// plus the squared distance to the viapoint at the step nearest viapoint_time.
Eigen::VectorXd viapoint_cost(const ViapointTask& task, const ArmModel& arm, const Trajectory& traj);

/// Index of the timestep that receives the viapoint term.
Eigen::Index viapoint_step(const ViapointTask& task, const Trajectory& traj);

/// CSV: t,x,y of the end-effector per step.
void write_end_effector_csv(std::ostream& out, const ArmModel& arm, const Trajectory& traj);

} // namespace pi2cma
