#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace pi2cma {

/// Attractor and canonical-system constants. Critical damping requires alpha_z = 4 beta_z.
struct DmpConstants {
    double alpha_z = 25.0;
    double beta_z = 6.25;
    double alpha_x = 2.0;
};

/// Discrete DMP: one critically damped spring per DOF driven by a
/// phase-dependent forcing term with B normalized Gaussian basis functions.
struct DmpPolicy {
    Eigen::MatrixXd theta;       ///< D x B basis weights
    Eigen::VectorXd start;       ///< y0, rad
    Eigen::VectorXd goal;        ///< g, rad
    double duration = 0.5;       ///< T, s
    Eigen::VectorXd centers;     ///< basis centers in phase
    Eigen::VectorXd widths;      ///< basis widths in phase
    DmpConstants constants;

    /// Zero weights; centers equally spaced in time over [0, T], widths such
    /// that neighbouring kernels cross at half their peak.
    static DmpPolicy make(const Eigen::VectorXd& start, const Eigen::VectorXd& goal, double duration,
                          int basis_count, const DmpConstants& constants = {});

    [[nodiscard]] Eigen::Index dofs() const { return theta.rows(); }
    [[nodiscard]] Eigen::Index basis_count() const { return theta.cols(); }

    /// Canonical phase x(t) = exp(-alpha_x t / T).
    [[nodiscard]] double phase_at(double t) const;

    /// Throws ArgumentError when an invariant is violated.
    void validate() const;
};

struct Trajectory {
    Eigen::VectorXd times;          ///< N
    Eigen::MatrixXd positions;      ///< N x D
    Eigen::MatrixXd velocities;     ///< N x D
    Eigen::MatrixXd accelerations;  ///< N x D

    [[nodiscard]] Eigen::Index steps() const { return times.size(); }
    [[nodiscard]] Eigen::Index dofs() const { return positions.cols(); }
    [[nodiscard]] double dt() const { return steps() > 1 ? times(1) - times(0) : 0.0; }
};

/// Number of samples on [0, T] at spacing dt: round(T / dt) + 1.
Eigen::Index step_count(double duration, double dt);

/// Normalized kernel activations psi_b(x) / sum psi.
Eigen::VectorXd basis_activations(const DmpPolicy& policy, double phase);

/// Activations at every timestep of an integration with spacing dt (N x B).
Eigen::MatrixXd activations_over_time(const DmpPolicy& policy, double dt);

/// Per-timestep weight offsets: entry i is a D x B matrix added to theta at step i.
using WeightOffsets = std::vector<Eigen::MatrixXd>;

/// Explicit Euler integration from rest at start. Accelerations are the
/// analytic right-hand side at each step, so velocity(i+1) = velocity(i) + dt * acc(i).
Trajectory integrate(const DmpPolicy& policy, double dt, const WeightOffsets* exploration = nullptr);

/// Forcing term at every timestep (N x D) for the given effective weights.
Eigen::MatrixXd forcing_terms(const DmpPolicy& policy, double dt, const WeightOffsets* exploration = nullptr);

/// Least-squares fit of the forcing weights to a demonstration. Start, goal,
/// duration, basis layout and constants come from the template.
DmpPolicy train_from_trajectory(const Trajectory& demo, const DmpPolicy& policy_template);

/// y0 + (g - y0)(10 s^3 - 15 s^4 + 6 s^5) with analytic derivatives, s = t / T.
Trajectory min_jerk(const Eigen::VectorXd& start, const Eigen::VectorXd& goal, double duration, double dt);

/// CSV: header t,pos_1..pos_D,vel_1..vel_D,acc_1..acc_D; one row per step.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

} // namespace pi2cma
