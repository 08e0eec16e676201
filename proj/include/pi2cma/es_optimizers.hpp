#pragma once

#include "pi2cma/weighting.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pi2cma {

/// Evolution paths and step-size of CMA-ES.
struct CmaesState {
    Eigen::VectorXd sigma_path;
    Eigen::VectorXd covariance_path;
    double step_size = 1.0;
    int generation = 0;

    static CmaesState initial(Eigen::Index n, double step_size = 1.0);
};

struct CmaesConfig {
    double c_sigma = 0.0;
    double d_sigma = 1.0;
    double c_cov = 0.0;
    double c_1 = 0.0;
    double c_mu = 1.0;
    int elite_count = 1;

    /// Hansen & Ostermeier defaults for dimension n and selection mass mu_eff.
    static CmaesConfig defaults(Eigen::Index n, double mu_eff, int elite_count);

    /// Defaults for dimension n with log-rank weights over elite_count of sample_count.
    static CmaesConfig defaults(Eigen::Index n, int sample_count, int elite_count);

    /// Learning rates that turn cmaes_update into cem_update.
    static CmaesConfig cem_equivalent(int elite_count);

    void validate() const;
};

/// E||N(0, I)|| ~ sqrt(n) (1 - 1/(4n) + 1/(21 n^2)).
double expected_gaussian_norm(Eigen::Index n);

/// sum_k P_k theta_k
Eigen::VectorXd weighted_mean(const std::vector<Eigen::VectorXd>& samples, const ProbabilityWeights& weights);

/// sum_k P_k (theta_k - center)(theta_k - center)^T
Eigen::MatrixXd weighted_scatter(const std::vector<Eigen::VectorXd>& samples, const ProbabilityWeights& weights,
                                 const Eigen::VectorXd& center);

/// Probability-weighted mean, and covariance about the old mean.
/// Step size is carried over unchanged.
GaussianSearchDistribution cem_update(const GaussianSearchDistribution& dist,
                                      const std::vector<Eigen::VectorXd>& samples,
                                      const ProbabilityWeights& weights);

struct CmaesUpdateResult {
    CmaesState state;
    GaussianSearchDistribution dist;
};

/// One CMA-ES generation: evolution paths, step size and covariance.
/// `samples` and `weights` are paired index by index (callers pass them in
/// rank order when using log-rank weights).
CmaesUpdateResult cmaes_update(const CmaesState& state, const CmaesConfig& config,
                               const GaussianSearchDistribution& dist,
                               const std::vector<Eigen::VectorXd>& samples, const ProbabilityWeights& weights);

/// Same as cmaes_update, but with the displacement and the weighted scatter
/// (about the old mean, unscaled by step size) supplied directly. This is the
/// entry point used when the mean and scatter come from temporal averaging.
CmaesUpdateResult cmaes_update_from_moments(const CmaesState& state, const CmaesConfig& config,
                                            const GaussianSearchDistribution& dist,
                                            const Eigen::VectorXd& new_mean, const Eigen::MatrixXd& scatter,
                                            double mu_eff);

/// Inverse symmetric square root with eigenvalues clamped below at 1e-20.
/// Throws ConditioningError for eigenvalues below 1e-300.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& covariance);

enum class EsAlgorithm { Cem, Cmaes };

struct MinimizeOptions {
    EsAlgorithm algorithm = EsAlgorithm::Cem;
    int iterations = 100;
    int samples_per_iteration = 10;
    int elite_count = 5;
    std::uint64_t seed = 0;
    /// Defaults to CmaesConfig::defaults when unset.
    std::optional<CmaesConfig> cmaes;
};

struct IterationRecord {
    int iteration = 0;
    double best_cost = 0.0;
    double mean_cost = 0.0;
    double step_size = 1.0;
    /// Mean eigenvalue of the effective sampling covariance before the update.
    double exploration = 0.0;
};

struct MinimizeResult {
    std::vector<IterationRecord> curve;
    GaussianSearchDistribution dist;
    CmaesState cmaes_state;
};

using CostFunction = std::function<double(const Eigen::VectorXd&)>;

/// Sample / sort / update loop. Sample k of iteration t is drawn from a
/// generator keyed by (seed, t, k). Throws NonFiniteCostError naming the
/// iteration when the cost function returns NaN or infinity.
MinimizeResult minimize(const CostFunction& cost, const GaussianSearchDistribution& initial,
                        const MinimizeOptions& options);

} // namespace pi2cma
