#pragma once

#include "pi2cma/arm_task.hpp"
#include "pi2cma/dmp.hpp"
#include "pi2cma/pi2.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pi2cma {

enum class Algorithm { Cem, Cmaes, Pi2, Pi2Cma, Pi2Cmaes };

std::string_view to_string(Algorithm algorithm);

/// One experiment: task, policy, optimizer and run protocol.
struct ExperimentConfig {
    std::string name = "experiment";
    Algorithm algorithm = Algorithm::Pi2;
    int trials_per_update = 10;
    /// Pi2 uses h; Cem/Cmaes use elite_count. PI2* algorithms may also run
    /// with CEM or CMA-ES weights to compare eliteness mappings.
    Eliteness eliteness = Eliteness::pi2(10.0);
    ExplorationMode exploration_mode = ExplorationMode::Constant;
    double lambda_init = 1e4;
    double base_noise_level = 0.0;
    int updates = 100;
    int replications = 1;
    std::uint64_t seed = 0;

    double dt = 0.01;
    double duration = 0.5;
    Eigen::Vector2d viapoint{0.5, 0.5};
    double viapoint_time = 0.3;
    double viapoint_weight = 3e8;
    int dofs = 10;
    int basis_count = 5;
    DmpConstants dmp;
    /// Overrides the uniform-angle final posture when set.
    std::optional<Eigen::VectorXd> goal_angles;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    [[nodiscard]] Pi2Config optimizer_config() const;
};

/// Flat "key = value" text, '#' starts a comment. Unknown keys and malformed
/// values raise ConfigError with the line number.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

/// Applies "key = value" to a config; used by the parser and CLI overrides.
void set_config_field(ExperimentConfig& config, std::string_view key, std::string_view value);

struct LearningCurveRow {
    int update = 0;
    double noise_free_cost = 0.0;
    double mean_batch_cost = 0.0;
    double lambda_mean = 0.0;
    Eigen::VectorXd lambda_dof;
};

struct LearningCurve {
    std::vector<LearningCurveRow> rows;
    /// Set when the replication stopped early.
    std::optional<std::string> error;
};

/// Header update,noise_free_cost,mean_batch_cost,lambda_mean,lambda_dof_1..D,
/// values printed with 17 significant digits. An aborted run ends with a
/// "# error: ..." line.
void write_learning_curve_csv(std::ostream& out, const LearningCurve& curve);
LearningCurve read_learning_curve_csv(std::istream& in);

/// Task objects built from a config: arm, viapoint task, and the initial
/// policy trained on a minimum-jerk movement to the final posture.
struct TaskSetup {
    ArmModel arm;
    ViapointTask task;
    DmpPolicy policy;
};

TaskSetup make_task(const ExperimentConfig& config);

/// Per-step costs of executing the policy with optional weight offsets.
Eigen::VectorXd rollout_costs(const TaskSetup& setup, double dt, const WeightOffsets* offsets = nullptr);

/// Runs one replication with the given seed. Rows cover updates 0..updates:
/// row u evaluates the policy after u updates.
LearningCurve run_replication(const ExperimentConfig& config, std::uint64_t seed);

/// All replications, seed = config.seed + r. Replications run on up to `jobs` threads.
std::vector<LearningCurve> run(const ExperimentConfig& config, int jobs = 1);

/// Named experiment matrices: "fig3", "fig5", "fig6".
std::vector<ExperimentConfig> preset(std::string_view name);

struct AggregateRow {
    int update = 0;
    double cost_mean = 0.0;
    double cost_std = 0.0;
    double lambda_mean = 0.0;
    double lambda_std = 0.0;
};

/// Mean and sample standard deviation across replications per update index.
/// Only update indices present in every curve are aggregated.
std::vector<AggregateRow> aggregate(const std::vector<LearningCurve>& curves);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

} // namespace pi2cma
