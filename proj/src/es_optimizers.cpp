#include "pi2cma/es_optimizers.hpp"

#include "pi2cma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace pi2cma {

namespace {

constexpr double kSingularEigenvalue = 1e-300;
constexpr double kEigenvalueFloor = 1e-20;

void check_samples(const GaussianSearchDistribution& dist, const std::vector<Eigen::VectorXd>& samples,
                   const ProbabilityWeights& weights)
{
    if (samples.empty())
        throw ArgumentError("update needs at least one sample");
    if (static_cast<Eigen::Index>(samples.size()) != weights.size())
        throw ArgumentError("got " + std::to_string(samples.size()) + " samples but " +
                            std::to_string(weights.size()) + " weights");
    for (std::size_t k = 0; k < samples.size(); ++k)
        if (samples[k].size() != dist.dim())
            throw ArgumentError("sample " + std::to_string(k) + " has dimension " +
                                std::to_string(samples[k].size()) + ", distribution has " +
                                std::to_string(dist.dim()));
}

} // namespace

CmaesState CmaesState::initial(Eigen::Index n, double step_size)
{
    CmaesState s;
    s.sigma_path = Eigen::VectorXd::Zero(n);
    s.covariance_path = Eigen::VectorXd::Zero(n);
    s.step_size = step_size;
    s.generation = 0;
    return s;
}

CmaesConfig CmaesConfig::defaults(Eigen::Index n, double mu_eff, int elite_count)
{
    const double d = static_cast<double>(n);
    CmaesConfig c;
    c.elite_count = elite_count;
    c.c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0);
    c.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c.c_sigma;
    c.c_cov = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d);
    c.c_1 = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff);
    c.c_mu = std::min(1.0 - c.c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) * (d + 2.0) + mu_eff));
    return c;
}

CmaesConfig CmaesConfig::defaults(Eigen::Index n, int sample_count, int elite_count)
{
    return defaults(n, effective_selection_mass(cmaes_weights(sample_count, elite_count)), elite_count);
}

CmaesConfig CmaesConfig::cem_equivalent(int elite_count)
{
    CmaesConfig c;
    c.c_sigma = 0.0;
    c.d_sigma = 1.0;
    c.c_cov = 0.0;
    c.c_1 = 0.0;
    c.c_mu = 1.0;
    c.elite_count = elite_count;
    return c;
}

void CmaesConfig::validate() const
{
    if (!(c_sigma >= 0.0 && c_sigma <= 1.0))
        throw ArgumentError("c_sigma must lie in [0, 1]");
    if (!(c_cov >= 0.0 && c_cov <= 1.0))
        throw ArgumentError("c_cov must lie in [0, 1]");
    if (!(c_1 >= 0.0) || !(c_mu >= 0.0) || c_1 + c_mu > 1.0 + 1e-15)
        throw ArgumentError("need c_1 >= 0, c_mu >= 0 and c_1 + c_mu <= 1");
    if (!(d_sigma > 0.0))
        throw ArgumentError("d_sigma must be positive");
    if (elite_count < 1)
        throw ArgumentError("elite_count must be positive");
}

double expected_gaussian_norm(Eigen::Index n)
{
    const double d = static_cast<double>(n);
    return std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
}

Eigen::VectorXd weighted_mean(const std::vector<Eigen::VectorXd>& samples, const ProbabilityWeights& weights)
{
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(samples.front().size());
    for (std::size_t k = 0; k < samples.size(); ++k)
        mean += weights[static_cast<Eigen::Index>(k)] * samples[k];
    return mean;
}

Eigen::MatrixXd weighted_scatter(const std::vector<Eigen::VectorXd>& samples, const ProbabilityWeights& weights,
                                 const Eigen::VectorXd& center)
{
    const Eigen::Index n = center.size();
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Eigen::VectorXd d = samples[k] - center;
        scatter.noalias() += weights[static_cast<Eigen::Index>(k)] * d * d.transpose();
    }
    // Outer products accumulate rounding differently above and below the diagonal.
    return 0.5 * (scatter + scatter.transpose());
}

GaussianSearchDistribution cem_update(const GaussianSearchDistribution& dist,
                                      const std::vector<Eigen::VectorXd>& samples, const ProbabilityWeights& weights)
{
    check_samples(dist, samples, weights);
    // Scatter is taken about the old mean: it is the known center of the samples.
    return {weighted_mean(samples, weights), weighted_scatter(samples, weights, dist.mean), dist.step_size};
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& covariance)
{
    const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw ConditioningError("eigen-decomposition of covariance did not converge");
    Eigen::VectorXd values = eig.eigenvalues();
    if (values.minCoeff() < kSingularEigenvalue)
        throw ConditioningError("covariance is singular (smallest eigenvalue " +
                                std::to_string(values.minCoeff()) + ")");
    for (Eigen::Index i = 0; i < values.size(); ++i)
        values(i) = 1.0 / std::sqrt(std::max(values(i), kEigenvalueFloor));
    const Eigen::MatrixXd& vectors = eig.eigenvectors();
    return vectors * values.asDiagonal() * vectors.transpose();
}

CmaesUpdateResult cmaes_update_from_moments(const CmaesState& state, const CmaesConfig& config,
                                            const GaussianSearchDistribution& dist,
                                            const Eigen::VectorXd& new_mean, const Eigen::MatrixXd& scatter,
                                            double mu_eff)
{
    config.validate();
    const Eigen::Index n = dist.dim();
    if (new_mean.size() != n || scatter.rows() != n || scatter.cols() != n)
        throw ArgumentError("mean/scatter shape does not match the distribution");
    if (state.sigma_path.size() != n || state.covariance_path.size() != n)
        throw ArgumentError("evolution paths do not match the distribution dimension");
    if (!(state.step_size > 0.0))
        throw ArgumentError("step_size must be positive");

    const double sigma = state.step_size;
    const double expected_norm = expected_gaussian_norm(n);
    const Eigen::VectorXd displacement = (new_mean - dist.mean) / sigma;
    const Eigen::MatrixXd c_inv_sqrt = inverse_sqrt(dist.covariance);

    CmaesState next = state;
    next.sigma_path = (1.0 - config.c_sigma) * state.sigma_path +
                      std::sqrt(config.c_sigma * (2.0 - config.c_sigma) * mu_eff) * (c_inv_sqrt * displacement);

    const double path_norm = next.sigma_path.norm();
    next.step_size = sigma * std::exp(config.c_sigma / config.d_sigma * (path_norm / expected_norm - 1.0));

    // Stall indicator: suppress the covariance path while the step-size path is long.
    const double bias = 1.0 - std::pow(1.0 - config.c_sigma, 2.0 * (state.generation + 1));
    const double corrected_norm = bias > 0.0 ? path_norm / std::sqrt(bias) : path_norm;
    const double h_sigma = corrected_norm < (1.4 + 2.0 / (static_cast<double>(n) + 1.0)) * expected_norm ? 1.0 : 0.0;
    const double delta_h = (1.0 - h_sigma) * config.c_cov * (2.0 - config.c_cov);

    next.covariance_path = (1.0 - config.c_cov) * state.covariance_path +
                           h_sigma * std::sqrt(config.c_cov * (2.0 - config.c_cov) * mu_eff) * displacement;

    Eigen::MatrixXd cov = (1.0 - config.c_1 - config.c_mu) * dist.covariance +
                          config.c_1 * (next.covariance_path * next.covariance_path.transpose() +
                                        delta_h * dist.covariance) +
                          config.c_mu * scatter / (sigma * sigma);
    cov = 0.5 * (cov + cov.transpose());
    next.generation = state.generation + 1;

    return {next, GaussianSearchDistribution(new_mean, std::move(cov), next.step_size)};
}

CmaesUpdateResult cmaes_update(const CmaesState& state, const CmaesConfig& config,
                               const GaussianSearchDistribution& dist, const std::vector<Eigen::VectorXd>& samples,
                               const ProbabilityWeights& weights)
{
    check_samples(dist, samples, weights);
    return cmaes_update_from_moments(state, config, dist, weighted_mean(samples, weights),
                                     weighted_scatter(samples, weights, dist.mean),
                                     effective_selection_mass(weights));
}

MinimizeResult minimize(const CostFunction& cost, const GaussianSearchDistribution& initial,
                        const MinimizeOptions& options)
{
    if (options.samples_per_iteration < 2)
        throw ArgumentError("need at least 2 samples per iteration");
    if (options.iterations < 1)
        throw ArgumentError("need at least 1 iteration");
    initial.validate();

    const int k_total = options.samples_per_iteration;
    const ProbabilityWeights ranked = options.algorithm == EsAlgorithm::Cmaes
                                          ? cmaes_weights(k_total, options.elite_count)
                                          : [&] {
                                                Eigen::VectorXd w = Eigen::VectorXd::Zero(k_total);
                                                if (options.elite_count < 1 || options.elite_count > k_total)
                                                    throw ArgumentError("elite count out of range");
                                                w.head(options.elite_count).setConstant(1.0 / options.elite_count);
                                                return ProbabilityWeights(std::move(w));
                                            }();
    const CmaesConfig cmaes_config = options.cmaes.value_or(
        CmaesConfig::defaults(initial.dim(), effective_selection_mass(ranked), options.elite_count));

    MinimizeResult result;
    result.dist = initial;
    result.cmaes_state = CmaesState::initial(initial.dim(), initial.step_size);
    result.curve.reserve(static_cast<std::size_t>(options.iterations));

    for (int it = 0; it < options.iterations; ++it) {
        const Eigen::MatrixXd root = psd_square_root(result.dist.covariance);
        std::vector<Eigen::VectorXd> samples(static_cast<std::size_t>(k_total));
        std::vector<double> costs(static_cast<std::size_t>(k_total));
        for (int k = 0; k < k_total; ++k) {
            Rng rng = make_rng(options.seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(k));
            samples[k] = result.dist.mean + result.dist.step_size * (root * standard_normal(initial.dim(), rng));
            costs[k] = cost(samples[k]);
            if (!std::isfinite(costs[k]))
                throw NonFiniteCostError("cost function returned a non-finite value at iteration " +
                                         std::to_string(it) + ", sample " + std::to_string(k));
        }

        const std::vector<int> order = rank_order(costs);
        std::vector<Eigen::VectorXd> sorted;
        sorted.reserve(samples.size());
        double sum = 0.0;
        for (int idx : order) {
            sorted.push_back(samples[idx]);
            sum += costs[idx];
        }

        IterationRecord rec;
        rec.iteration = it;
        rec.best_cost = costs[order.front()];
        rec.mean_cost = sum / k_total;
        rec.step_size = result.dist.step_size;
        rec.exploration = result.dist.effective_covariance().trace() / static_cast<double>(initial.dim());
        result.curve.push_back(rec);

        if (options.algorithm == EsAlgorithm::Cem) {
            result.dist = cem_update(result.dist, sorted, ranked);
        } else {
            CmaesUpdateResult next = cmaes_update(result.cmaes_state, cmaes_config, result.dist, sorted, ranked);
            result.cmaes_state = std::move(next.state);
            result.dist = std::move(next.dist);
        }
    }
    return result;
}

} // namespace pi2cma
