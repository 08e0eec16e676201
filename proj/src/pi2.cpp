#include "pi2cma/pi2.hpp"

#include "pi2cma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pi2cma {

std::string_view to_string(ExplorationMode mode)
{
    switch (mode) {
    case ExplorationMode::TimeVarying: return "time_varying";
    case ExplorationMode::PerBasis: return "per_basis";
    case ExplorationMode::Constant: return "constant";
    }
    return "?";
}

std::string_view to_string(CovarianceUpdate update)
{
    switch (update) {
    case CovarianceUpdate::None: return "none";
    case CovarianceUpdate::CemStyle: return "cem";
    case CovarianceUpdate::CmaesStyle: return "cmaes";
    }
    return "?";
}

ProbabilityWeights eliteness_weights(const Eliteness& eliteness, std::span<const double> costs)
{
    switch (eliteness.kind) {
    case Eliteness::Kind::Pi2: return pi2_weights(costs, eliteness.h);
    case Eliteness::Kind::Cem: return cem_weights(costs, eliteness.elite_count);
    case Eliteness::Kind::Cmaes: return cmaes_weights_for_costs(costs, eliteness.elite_count);
    }
    throw ArgumentError("unknown eliteness kind");
}

void Pi2Config::validate() const
{
    if (trials_per_update < 2)
        throw ArgumentError("need at least 2 trials per update");
    if (eliteness.kind == Eliteness::Kind::Pi2 && !(eliteness.h > 0.0))
        throw ArgumentError("eliteness h must be positive");
    if (eliteness.kind != Eliteness::Kind::Pi2 &&
        (eliteness.elite_count < 1 || eliteness.elite_count > trials_per_update))
        throw ArgumentError("elite count must lie in [1, K]");
    if (!(base_noise_level >= 0.0))
        throw ArgumentError("base noise level must be non-negative");
    if (cmaes)
        cmaes->validate();
}

Eigen::MatrixXd generate_exploration(ExplorationMode mode, const GaussianSearchDistribution& dist,
                                     Eigen::Index steps, const Eigen::MatrixXd& activations, Rng& rng)
{
    const Eigen::Index n = dist.dim();
    const Eigen::MatrixXd root = dist.step_size * psd_square_root(dist.covariance);
    Eigen::MatrixXd out(steps, n);

    switch (mode) {
    case ExplorationMode::Constant: {
        const Eigen::VectorXd eps = root * standard_normal(n, rng);
        out.rowwise() = eps.transpose();
        break;
    }
    case ExplorationMode::TimeVarying:
        for (Eigen::Index i = 0; i < steps; ++i)
            out.row(i) = (root * standard_normal(n, rng)).transpose();
        break;
    case ExplorationMode::PerBasis: {
        if (activations.rows() != steps || activations.cols() != n)
            throw ArgumentError("per-basis exploration needs an N x n activation matrix");
        const Eigen::VectorXd eps = root * standard_normal(n, rng);
        out.setZero();
        for (Eigen::Index i = 0; i < steps; ++i) {
            Eigen::Index active = 0;
            // maxCoeff reports the first maximum, i.e. ties go to the lower index.
            activations.row(i).maxCoeff(&active);
            out(i, active) = eps(active);
        }
        break;
    }
    }
    return out;
}

WeightOffsets generate_rollout_offsets(ExplorationMode mode, const std::vector<GaussianSearchDistribution>& dists,
                                       Eigen::Index steps, const Eigen::MatrixXd& activations, Rng& rng)
{
    const auto dofs = static_cast<Eigen::Index>(dists.size());
    const Eigen::Index basis = dofs > 0 ? dists.front().dim() : 0;
    WeightOffsets offsets(static_cast<std::size_t>(steps), Eigen::MatrixXd::Zero(dofs, basis));
    for (Eigen::Index d = 0; d < dofs; ++d) {
        const auto& dist = dists[static_cast<std::size_t>(d)];
        if (dist.dim() != basis)
            throw ArgumentError("all DOF distributions must have the same dimension");
        const Eigen::MatrixXd eps = generate_exploration(mode, dist, steps, activations, rng);
        for (Eigen::Index i = 0; i < steps; ++i)
            offsets[static_cast<std::size_t>(i)].row(d) = eps.row(i);
    }
    return offsets;
}

Eigen::MatrixXd cost_to_go(const Eigen::MatrixXd& step_costs)
{
    Eigen::MatrixXd s = step_costs;
    for (Eigen::Index i = s.cols() - 2; i >= 0; --i)
        s.col(i) += s.col(i + 1);
    return s;
}

PerTimestepUpdates per_timestep_updates(const std::vector<Eigen::MatrixXd>& samples,
                                        const Eigen::MatrixXd& cost_to_go, const Eliteness& eliteness,
                                        const Eigen::VectorXd& old_mean)
{
    const auto trials = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index steps = cost_to_go.cols();
    const Eigen::Index n = old_mean.size();
    if (cost_to_go.rows() != trials)
        throw ArgumentError("cost-to-go has " + std::to_string(cost_to_go.rows()) + " rows for " +
                            std::to_string(trials) + " trials");
    for (const auto& m : samples)
        if (m.rows() != steps || m.cols() != n)
            throw ArgumentError("sample parameter matrix has the wrong shape");

    PerTimestepUpdates out;
    out.means.resize(steps, n);
    out.covariances.assign(static_cast<std::size_t>(steps), Eigen::MatrixXd::Zero(n, n));
    out.weights.resize(trials, steps);

    for (Eigen::Index i = 0; i < steps; ++i) {
        const Eigen::VectorXd column = cost_to_go.col(i);
        const ProbabilityWeights p = eliteness_weights(eliteness, as_span(column));
        out.weights.col(i) = p.values();

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd& cov = out.covariances[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < trials; ++k) {
            const Eigen::VectorXd theta = samples[static_cast<std::size_t>(k)].row(i).transpose();
            const Eigen::VectorXd d = theta - old_mean;
            mean += p[k] * theta;
            cov.noalias() += p[k] * d * d.transpose();
        }
        cov = 0.5 * (cov + cov.transpose()).eval();
        out.means.row(i) = mean.transpose();
    }
    return out;
}

Eigen::VectorXd temporal_weights(Eigen::Index steps)
{
    if (steps < 1)
        throw ArgumentError("temporal averaging needs at least one step");
    Eigen::VectorXd w(steps);
    for (Eigen::Index i = 0; i < steps; ++i)
        w(i) = static_cast<double>(steps - i);
    return w / w.sum();
}

Eigen::VectorXd temporal_average(const Eigen::MatrixXd& means)
{
    return means.transpose() * temporal_weights(means.rows());
}

Eigen::MatrixXd temporal_average(const std::vector<Eigen::MatrixXd>& covariances)
{
    const Eigen::VectorXd w = temporal_weights(static_cast<Eigen::Index>(covariances.size()));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(covariances.front().rows(), covariances.front().cols());
    for (std::size_t i = 0; i < covariances.size(); ++i)
        out += w(static_cast<Eigen::Index>(i)) * covariances[i];
    return out;
}

double exploration_magnitude(const Eigen::MatrixXd& covariance)
{
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0)
        throw ArgumentError("exploration magnitude needs a non-empty square matrix");
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw ArgumentError("exploration magnitude needs a symmetric matrix");
    return covariance.trace() / static_cast<double>(covariance.rows());
}

UpdateReport pi2_update(const RolloutBatch& batch, const Pi2Config& config,
                        const std::vector<GaussianSearchDistribution>& dists,
                        const std::vector<CmaesState>& cmaes_states)
{
    config.validate();
    const int trials = batch.trials();
    const Eigen::Index steps = batch.steps();
    const auto dofs = static_cast<Eigen::Index>(dists.size());
    if (trials < 2 || batch.step_costs.rows() != trials)
        throw ArgumentError("batch needs at least 2 trials with one cost row each");
    if (dofs == 0)
        throw ArgumentError("no DOF distributions given");
    const Eigen::Index basis = dists.front().dim();
    for (const auto& offsets : batch.offsets) {
        if (static_cast<Eigen::Index>(offsets.size()) != steps)
            throw ArgumentError("offsets and step costs disagree on the number of steps");
        for (const auto& m : offsets)
            if (m.rows() != dofs || m.cols() != basis)
                throw ArgumentError("offset matrix does not match the DOF distributions");
    }
    if (config.covariance_update == CovarianceUpdate::CmaesStyle &&
        static_cast<Eigen::Index>(cmaes_states.size()) != dofs)
        throw ArgumentError("CMA-ES covariance updating needs one state per DOF");

    const Eigen::MatrixXd s = cost_to_go(batch.step_costs);

    UpdateReport report;
    report.noise_free_cost = batch.evaluation_cost.value_or(std::nan(""));
    report.mean_batch_cost = s.col(0).mean();
    report.exploration_magnitudes.resize(dofs);
    report.distributions.reserve(static_cast<std::size_t>(dofs));
    if (config.covariance_update == CovarianceUpdate::CmaesStyle)
        report.cmaes_states.reserve(static_cast<std::size_t>(dofs));

    for (Eigen::Index d = 0; d < dofs; ++d) {
        const auto& dist = dists[static_cast<std::size_t>(d)];
        if (dist.dim() != basis)
            throw ArgumentError("all DOF distributions must have the same dimension");

        Eigen::VectorXd new_mean;
        Eigen::MatrixXd scatter;
        double mu_eff = 0.0;
        if (config.per_timestep) {
            std::vector<Eigen::MatrixXd> samples(static_cast<std::size_t>(trials), Eigen::MatrixXd(steps, basis));
            for (int k = 0; k < trials; ++k)
                for (Eigen::Index i = 0; i < steps; ++i)
                    samples[k].row(i) = dist.mean.transpose() + batch.offsets[k][i].row(d);
            const PerTimestepUpdates upd = per_timestep_updates(samples, s, config.eliteness, dist.mean);
            new_mean = temporal_average(upd.means);
            scatter = temporal_average(upd.covariances);
            const Eigen::VectorXd tw = temporal_weights(steps);
            for (Eigen::Index i = 0; i < steps; ++i)
                mu_eff += tw(i) / upd.weights.col(i).squaredNorm();
        } else {
            std::vector<Eigen::VectorXd> samples;
            samples.reserve(static_cast<std::size_t>(trials));
            for (int k = 0; k < trials; ++k)
                samples.emplace_back(dist.mean + batch.offsets[k][0].row(d).transpose());
            const Eigen::VectorXd total = s.col(0);
            const ProbabilityWeights p = eliteness_weights(config.eliteness, as_span(total));
            new_mean = weighted_mean(samples, p);
            scatter = weighted_scatter(samples, p, dist.mean);
            mu_eff = effective_selection_mass(p);
        }

        GaussianSearchDistribution next = dist;
        next.mean = new_mean;
        switch (config.covariance_update) {
        case CovarianceUpdate::None:
            break;
        case CovarianceUpdate::CemStyle:
            next.covariance = scatter / (dist.step_size * dist.step_size);
            break;
        case CovarianceUpdate::CmaesStyle: {
            const CmaesConfig cfg = config.cmaes.value_or(
                CmaesConfig::defaults(basis, mu_eff, std::max(1, static_cast<int>(std::lround(mu_eff)))));
            CmaesUpdateResult r = cmaes_update_from_moments(cmaes_states[static_cast<std::size_t>(d)], cfg, dist,
                                                            new_mean, scatter, mu_eff);
            next = std::move(r.dist);
            report.cmaes_states.push_back(std::move(r.state));
            break;
        }
        }
        if (config.base_noise_level > 0.0)
            next.covariance += (config.base_noise_level / (next.step_size * next.step_size)) *
                               Eigen::MatrixXd::Identity(basis, basis);

        report.exploration_magnitudes(d) = exploration_magnitude(next.effective_covariance());
        report.distributions.push_back(std::move(next));
    }
    return report;
}

} // namespace pi2cma
