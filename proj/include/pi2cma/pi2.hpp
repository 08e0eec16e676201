#pragma once

#include "pi2cma/dmp.hpp"
#include "pi2cma/es_optimizers.hpp"
#include "pi2cma/weighting.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pi2cma {

enum class ExplorationMode { TimeVarying, PerBasis, Constant };
enum class CovarianceUpdate { None, CemStyle, CmaesStyle };

std::string_view to_string(ExplorationMode mode);
std::string_view to_string(CovarianceUpdate update);

/// Cost-to-probability mapping used at each timestep.
struct Eliteness {
    enum class Kind { Pi2, Cem, Cmaes };
    Kind kind = Kind::Pi2;
    double h = 10.0;
    int elite_count = 5;

    static Eliteness pi2(double h) { return {Kind::Pi2, h, 0}; }
    static Eliteness cem(int elite_count) { return {Kind::Cem, 0.0, elite_count}; }
    static Eliteness cmaes(int elite_count) { return {Kind::Cmaes, 0.0, elite_count}; }
};

ProbabilityWeights eliteness_weights(const Eliteness& eliteness, std::span<const double> costs);

struct Pi2Config {
    Eliteness eliteness = Eliteness::pi2(10.0);
    int trials_per_update = 10;
    ExplorationMode exploration_mode = ExplorationMode::Constant;
    CovarianceUpdate covariance_update = CovarianceUpdate::None;
    /// Added as base_noise_level * I to each DOF's sampling covariance after every update.
    double base_noise_level = 0.0;
    bool evaluation_rollout = true;
    /// When false, weights come from the total trial cost only and no temporal
    /// averaging takes place (episodic CEM / CMA-ES on the policy parameters).
    bool per_timestep = true;
    /// Explicit CMA-ES learning rates for CmaesStyle; defaults are derived per update otherwise.
    std::optional<CmaesConfig> cmaes;

    void validate() const;
};

/// Exploration offsets for one DOF (N x n). Constant: one draw repeated;
/// TimeVarying: a fresh draw per step; PerBasis: one draw per trial of which
/// only the entry of the most active basis is kept at each step.
Eigen::MatrixXd generate_exploration(ExplorationMode mode, const GaussianSearchDistribution& dist,
                                     Eigen::Index steps, const Eigen::MatrixXd& activations, Rng& rng);

/// Offsets for all DOFs of one rollout, in the layout integrate() consumes.
WeightOffsets generate_rollout_offsets(ExplorationMode mode, const std::vector<GaussianSearchDistribution>& dists,
                                       Eigen::Index steps, const Eigen::MatrixXd& activations, Rng& rng);

struct RolloutBatch {
    std::vector<WeightOffsets> offsets;     ///< K rollouts, each N steps of D x B offsets
    std::vector<Trajectory> trajectories;   ///< K
    Eigen::MatrixXd step_costs;             ///< K x N
    std::optional<double> evaluation_cost;  ///< noise-free trial, not learned from

    [[nodiscard]] int trials() const { return static_cast<int>(offsets.size()); }
    [[nodiscard]] Eigen::Index steps() const { return step_costs.cols(); }
};

/// S[k][i] = sum_{j >= i} J[k][j].
Eigen::MatrixXd cost_to_go(const Eigen::MatrixXd& step_costs);

struct PerTimestepUpdates {
    Eigen::MatrixXd means;                     ///< N x n
    std::vector<Eigen::MatrixXd> covariances;  ///< N of n x n, scatter about the old mean
    Eigen::MatrixXd weights;                   ///< K x N
};

/// `samples[k]` is the N x n matrix of parameters used by trial k at each step.
PerTimestepUpdates per_timestep_updates(const std::vector<Eigen::MatrixXd>& samples,
                                        const Eigen::MatrixXd& cost_to_go, const Eliteness& eliteness,
                                        const Eigen::VectorXd& old_mean);

/// Normalized weights N - i + 1 for steps i = 1..N.
Eigen::VectorXd temporal_weights(Eigen::Index steps);

Eigen::VectorXd temporal_average(const Eigen::MatrixXd& means);
Eigen::MatrixXd temporal_average(const std::vector<Eigen::MatrixXd>& covariances);

/// Mean eigenvalue (trace / n). Throws ArgumentError for asymmetric input.
double exploration_magnitude(const Eigen::MatrixXd& covariance);

struct UpdateReport {
    double noise_free_cost = 0.0;
    double mean_batch_cost = 0.0;
    Eigen::VectorXd exploration_magnitudes;  ///< lambda per DOF of the updated distributions
    std::vector<GaussianSearchDistribution> distributions;
    std::vector<CmaesState> cmaes_states;
};

/// Full parameter-update phase for all DOFs. `cmaes_states` is required
/// (one per DOF) for CmaesStyle and ignored otherwise.
UpdateReport pi2_update(const RolloutBatch& batch, const Pi2Config& config,
                        const std::vector<GaussianSearchDistribution>& dists,
                        const std::vector<CmaesState>& cmaes_states = {});

} // namespace pi2cma
