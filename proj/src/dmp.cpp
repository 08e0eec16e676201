#include "pi2cma/dmp.hpp"

#include "pi2cma/errors.hpp"

#include <Eigen/QR>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace pi2cma {

namespace {

constexpr double kZeroAmplitude = 1e-12;

double forcing_gain(const DmpPolicy& policy, Eigen::Index d)
{
    const double amplitude = policy.goal(d) - policy.start(d);
    return std::abs(amplitude) < kZeroAmplitude ? 1.0 : amplitude;
}

void check_dt(const DmpPolicy& policy, double dt)
{
    if (!(dt > 0.0) || dt > policy.duration / 10.0 + 1e-15)
        throw ArgumentError("dt must lie in (0, T/10], got " + std::to_string(dt));
}

void check_offsets(const DmpPolicy& policy, Eigen::Index steps, const WeightOffsets* exploration)
{
    if (exploration == nullptr)
        return;
    if (static_cast<Eigen::Index>(exploration->size()) != steps)
        throw ArgumentError("exploration has " + std::to_string(exploration->size()) + " steps, expected " +
                            std::to_string(steps));
    for (const auto& m : *exploration)
        if (m.rows() != policy.dofs() || m.cols() != policy.basis_count())
            throw ArgumentError("exploration offset shape does not match theta");
}

} // namespace

DmpPolicy DmpPolicy::make(const Eigen::VectorXd& start, const Eigen::VectorXd& goal, double duration,
                          int basis_count, const DmpConstants& constants)
{
    if (start.size() != goal.size())
        throw ArgumentError("start and goal differ in length");
    if (basis_count < 2)
        throw ArgumentError("a DMP needs at least 2 basis functions");

    DmpPolicy p;
    p.theta = Eigen::MatrixXd::Zero(start.size(), basis_count);
    p.start = start;
    p.goal = goal;
    p.duration = duration;
    p.constants = constants;
    p.centers.resize(basis_count);
    p.widths.resize(basis_count);
    for (int b = 0; b < basis_count; ++b)
        p.centers(b) = p.phase_at(duration * b / (basis_count - 1));

    // Neighbouring kernels cross at half their maximum.
    const double half_height = std::sqrt(2.0 * std::log(2.0));
    for (int b = 0; b < basis_count; ++b) {
        const int other = b + 1 < basis_count ? b + 1 : b - 1;
        p.widths(b) = 0.5 * std::abs(p.centers(b) - p.centers(other)) / half_height;
    }
    p.validate();
    return p;
}

double DmpPolicy::phase_at(double t) const
{
    return std::exp(-constants.alpha_x * t / duration);
}

void DmpPolicy::validate() const
{
    if (theta.cols() < 2)
        throw ArgumentError("a DMP needs at least 2 basis functions");
    if (start.size() != theta.rows() || goal.size() != theta.rows())
        throw ArgumentError("start/goal length does not match theta rows");
    if (centers.size() != theta.cols() || widths.size() != theta.cols())
        throw ArgumentError("basis centers/widths do not match theta columns");
    if (!(duration > 0.0))
        throw ArgumentError("duration must be positive");
    if (widths.size() > 0 && !(widths.minCoeff() > 0.0))
        throw ArgumentError("basis widths must be positive");
    if (!(constants.alpha_z > 0.0 && constants.beta_z > 0.0 && constants.alpha_x > 0.0))
        throw ArgumentError("DMP constants must be positive");
    if (std::abs(constants.alpha_z - 4.0 * constants.beta_z) > 1e-12 * constants.alpha_z)
        throw ArgumentError("alpha_z must equal 4 beta_z (critical damping)");
}

Eigen::Index step_count(double duration, double dt)
{
    return static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
}

Eigen::VectorXd basis_activations(const DmpPolicy& policy, double phase)
{
    const Eigen::ArrayXd diff = phase - policy.centers.array();
    Eigen::VectorXd psi = (-0.5 * diff.square() / policy.widths.array().square()).exp().matrix();
    const double total = psi.sum();
    if (!(total > 0.0)) {
        // Far outside every kernel: fall back to the nearest center.
        Eigen::Index nearest = 0;
        diff.abs().minCoeff(&nearest);
        psi.setZero();
        psi(nearest) = 1.0;
        return psi;
    }
    return psi / total;
}

Eigen::MatrixXd activations_over_time(const DmpPolicy& policy, double dt)
{
    const Eigen::Index n = step_count(policy.duration, dt);
    Eigen::MatrixXd out(n, policy.basis_count());
    for (Eigen::Index i = 0; i < n; ++i)
        out.row(i) = basis_activations(policy, policy.phase_at(static_cast<double>(i) * dt)).transpose();
    return out;
}

Eigen::MatrixXd forcing_terms(const DmpPolicy& policy, double dt, const WeightOffsets* exploration)
{
    check_dt(policy, dt);
    const Eigen::Index n = step_count(policy.duration, dt);
    check_offsets(policy, n, exploration);

    Eigen::MatrixXd f(n, policy.dofs());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = policy.phase_at(static_cast<double>(i) * dt);
        const Eigen::VectorXd act = basis_activations(policy, x);
        const Eigen::VectorXd shaped =
            exploration ? Eigen::VectorXd((policy.theta + (*exploration)[static_cast<std::size_t>(i)]) * act)
                        : Eigen::VectorXd(policy.theta * act);
        for (Eigen::Index d = 0; d < policy.dofs(); ++d)
            f(i, d) = x * forcing_gain(policy, d) * shaped(d);
    }
    return f;
}

Trajectory integrate(const DmpPolicy& policy, double dt, const WeightOffsets* exploration)
{
    policy.validate();
    const Eigen::MatrixXd f = forcing_terms(policy, dt, exploration);
    const Eigen::Index n = f.rows();
    const Eigen::Index dofs = policy.dofs();
    const double tau = policy.duration;
    const auto& c = policy.constants;

    Trajectory traj;
    traj.times.resize(n);
    traj.positions.resize(n, dofs);
    traj.velocities.resize(n, dofs);
    traj.accelerations.resize(n, dofs);

    Eigen::VectorXd y = policy.start;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(dofs);
    for (Eigen::Index i = 0; i < n; ++i) {
        traj.times(i) = static_cast<double>(i) * dt;
        const Eigen::VectorXd z_dot =
            (c.alpha_z * (c.beta_z * (policy.goal - y) - z) + f.row(i).transpose()) / tau;
        traj.positions.row(i) = y.transpose();
        traj.velocities.row(i) = (z / tau).transpose();
        traj.accelerations.row(i) = (z_dot / tau).transpose();
        y += dt * z / tau;
        z += dt * z_dot;
    }
    return traj;
}

DmpPolicy train_from_trajectory(const Trajectory& demo, const DmpPolicy& policy_template)
{
    const Eigen::Index n = demo.steps();
    const Eigen::Index dofs = demo.dofs();
    const Eigen::Index basis = policy_template.basis_count();
    if (n < 2)
        throw FittingError("demonstration needs at least two samples");
    if (demo.velocities.rows() != n || demo.accelerations.rows() != n || demo.velocities.cols() != dofs ||
        demo.accelerations.cols() != dofs)
        throw ArgumentError("demonstration columns are inconsistent");

    if (policy_template.start.size() != dofs || policy_template.goal.size() != dofs)
        throw ArgumentError("template has " + std::to_string(policy_template.start.size()) +
                            " DOFs, demonstration has " + std::to_string(dofs));

    // Start and goal come from the template: a DMP has not reached its goal at T,
    // so the last demo sample is not a usable goal for refitting integrated output.
    DmpPolicy policy = policy_template;
    policy.theta = Eigen::MatrixXd::Zero(dofs, basis);

    const double tau = policy.duration;
    const auto& c = policy.constants;

    Eigen::MatrixXd design(n, basis);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = policy.phase_at(demo.times(i) - demo.times(0));
        design.row(i) = x * basis_activations(policy, x).transpose();
    }

    for (Eigen::Index d = 0; d < dofs; ++d) {
        const double gain = forcing_gain(policy, d);
        Eigen::VectorXd target(n);
        for (Eigen::Index i = 0; i < n; ++i)
            target(i) = tau * tau * demo.accelerations(i, d) -
                        c.alpha_z * (c.beta_z * (policy.goal(d) - demo.positions(i, d)) - tau * demo.velocities(i, d));
        const Eigen::MatrixXd a = gain * design;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < basis)
            throw FittingError("regression for DOF " + std::to_string(d + 1) + " is rank deficient (rank " +
                               std::to_string(qr.rank()) + " < " + std::to_string(basis) + ")");
        policy.theta.row(d) = qr.solve(target).transpose();
    }
    return policy;
}

Trajectory min_jerk(const Eigen::VectorXd& start, const Eigen::VectorXd& goal, double duration, double dt)
{
    if (start.size() != goal.size())
        throw ArgumentError("start and goal differ in length");
    if (!(duration > 0.0) || !(dt > 0.0) || dt > duration / 10.0 + 1e-15)
        throw ArgumentError("min_jerk needs 0 < dt <= T/10");

    const Eigen::Index n = step_count(duration, dt);
    const Eigen::VectorXd amplitude = goal - start;
    Trajectory traj;
    traj.times.resize(n);
    traj.positions.resize(n, start.size());
    traj.velocities.resize(n, start.size());
    traj.accelerations.resize(n, start.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double s = t / duration;
        const double s2 = s * s;
        const double s3 = s2 * s;
        traj.times(i) = t;
        traj.positions.row(i) = (start + amplitude * (10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2)).transpose();
        traj.velocities.row(i) = (amplitude * ((30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / duration)).transpose();
        traj.accelerations.row(i) =
            (amplitude * ((60.0 * s - 180.0 * s2 + 120.0 * s3) / (duration * duration))).transpose();
    }
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
    const Eigen::Index dofs = traj.dofs();
    out << "t";
    for (const char* prefix : {"pos_", "vel_", "acc_"})
        for (Eigen::Index d = 1; d <= dofs; ++d)
            out << ',' << prefix << d;
    out << '\n';
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < traj.steps(); ++i) {
        out << traj.times(i);
        for (const Eigen::MatrixXd* m : {&traj.positions, &traj.velocities, &traj.accelerations})
            for (Eigen::Index d = 0; d < dofs; ++d)
                out << ',' << (*m)(i, d);
        out << '\n';
    }
}

} // namespace pi2cma
