#include "pi2cma/arm_task.hpp"

#include "pi2cma/errors.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

namespace pi2cma {

ArmModel ArmModel::uniform(int dofs, double total_length)
{
    if (dofs < 1)
        throw ArgumentError("arm needs at least one link");
    return {Eigen::VectorXd::Constant(dofs, total_length / dofs)};
}

void ArmModel::validate() const
{
    if (link_lengths.size() < 1 || !(link_lengths.minCoeff() > 0.0))
        throw ArgumentError("link lengths must be positive");
}

ArmPose forward_kinematics(const ArmModel& arm, const Eigen::VectorXd& joint_angles)
{
    if (joint_angles.size() != arm.dofs())
        throw ArgumentError("got " + std::to_string(joint_angles.size()) + " joint angles for a " +
                            std::to_string(arm.dofs()) + "-link arm");
    ArmPose pose;
    pose.joints.resize(2, arm.dofs());
    double angle = 0.0;
    Eigen::Vector2d p = Eigen::Vector2d::Zero();
    for (Eigen::Index d = 0; d < arm.dofs(); ++d) {
        angle += joint_angles(d);
        p += arm.link_lengths(d) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
        pose.joints.col(d) = p;
    }
    pose.end_effector = p;
    return pose;
}

Eigen::VectorXd final_posture(const ArmModel& arm)
{
    arm.validate();
    const Eigen::Index dofs = arm.dofs();
    auto x_end = [&](double phi) {
        return forward_kinematics(arm, Eigen::VectorXd::Constant(dofs, phi)).end_effector.x();
    };

    // Scan for the first sign change so the root closest to the stretched pose is chosen.
    constexpr int kScan = 2000;
    const double upper = std::numbers::pi / 2.0;
    double lo = 0.0;
    double f_lo = x_end(lo);
    double hi = -1.0;
    for (int s = 1; s <= kScan; ++s) {
        const double phi = upper * s / kScan;
        const double f = x_end(phi);
        if (std::abs(f) < 1e-12)
            return Eigen::VectorXd::Constant(dofs, phi);
        if ((f < 0.0) != (f_lo < 0.0)) {
            hi = phi;
            break;
        }
        lo = phi;
        f_lo = f;
    }
    if (hi < 0.0)
        throw ConfigError("no uniform joint angle in (0, pi/2] puts the end-effector on the y-axis");

    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double f = x_end(mid);
        if ((f < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    const double phi = std::abs(x_end(lo)) <= std::abs(x_end(hi)) ? lo : hi;
    return Eigen::VectorXd::Constant(dofs, phi);
}

ViapointTask ViapointTask::standard(int dofs)
{
    ViapointTask task;
    task.dof_weights.resize(dofs);
    for (int d = 0; d < dofs; ++d)
        task.dof_weights(d) = static_cast<double>(dofs - d);
    return task;
}

void ViapointTask::validate() const
{
    if (!(viapoint_time > 0.0 && viapoint_time < duration))
        throw ArgumentError("viapoint time must lie strictly inside (0, T)");
    if (!(viapoint_weight >= 0.0) || !std::isfinite(viapoint_weight))
        throw ArgumentError("viapoint weight must be non-negative");
    if (dof_weights.size() < 1 || !(dof_weights.minCoeff() > 0.0))
        throw ArgumentError("DOF weights must be positive");
    for (Eigen::Index d = 1; d < dof_weights.size(); ++d)
        if (!(dof_weights(d) < dof_weights(d - 1)))
            throw ArgumentError("DOF weights must be strictly decreasing");
}

Eigen::Index viapoint_step(const ViapointTask& task, const Trajectory& traj)
{
    const Eigen::Index n = traj.steps();
    if (n < 2 || traj.times(n - 1) + 0.5 * traj.dt() < task.viapoint_time)
        throw ArgumentError("trajectory ends before the viapoint time");
    Eigen::Index best = 0;
    (traj.times.array() - task.viapoint_time).abs().minCoeff(&best);
    return best;
}

Eigen::VectorXd viapoint_cost(const ViapointTask& task, const ArmModel& arm, const Trajectory& traj)
{
    if (traj.dofs() != arm.dofs() || task.dof_weights.size() != arm.dofs())
        throw ArgumentError("trajectory, arm and task disagree on the number of DOFs");
    const Eigen::Index at = viapoint_step(task, traj);

    const double weight_sum = task.dof_weights.sum();
    Eigen::VectorXd cost =
        (traj.accelerations.array().square().matrix() * task.dof_weights) / weight_sum;

    const Eigen::Vector2d ee = forward_kinematics(arm, traj.positions.row(at).transpose()).end_effector;
    cost(at) += task.viapoint_weight * (ee - task.viapoint).squaredNorm();
    return cost;
}

void write_end_effector_csv(std::ostream& out, const ArmModel& arm, const Trajectory& traj)
{
    out << "t,x,y\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < traj.steps(); ++i) {
        const Eigen::Vector2d ee = forward_kinematics(arm, traj.positions.row(i).transpose()).end_effector;
        out << traj.times(i) << ',' << ee.x() << ',' << ee.y() << '\n';
    }
}

} // namespace pi2cma
