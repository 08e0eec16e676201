#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pi2cma {

using Rng = std::mt19937_64;

/// Builds a generator whose stream depends only on the given key parts, e.g.
/// (seed, iteration, sample index). Used wherever reproducibility must not
/// depend on evaluation order.
Rng make_rng(std::uint64_t seed, std::uint64_t stream_a = 0, std::uint64_t stream_b = 0);

/// Gaussian N(mean, step_size^2 * covariance).
struct GaussianSearchDistribution {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double step_size = 1.0;

    GaussianSearchDistribution() = default;
    GaussianSearchDistribution(Eigen::VectorXd mean_, Eigen::MatrixXd covariance_, double step_size_ = 1.0);

    static GaussianSearchDistribution isotropic(const Eigen::VectorXd& mean, double variance);

    [[nodiscard]] Eigen::Index dim() const { return mean.size(); }

    /// step_size^2 * covariance, the covariance samples are actually drawn from.
    [[nodiscard]] Eigen::MatrixXd effective_covariance() const;

    /// Throws ArgumentError when shapes disagree, the covariance is asymmetric
    /// beyond 1e-9, has an eigenvalue below -1e-9, or step_size <= 0.
    void validate() const;
};

/// Non-negative per-sample weights summing to one.
class ProbabilityWeights {
public:
    ProbabilityWeights() = default;

    /// Checks non-negativity and unit sum (1e-12); throws ArgumentError otherwise.
    explicit ProbabilityWeights(Eigen::VectorXd values);

    [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
    [[nodiscard]] Eigen::Index size() const { return values_.size(); }
    double operator[](Eigen::Index k) const { return values_(k); }

private:
    Eigen::VectorXd values_;
};

/// Symmetric square root A (A * A^T = S) of a PSD matrix. The input is
/// symmetrized first; eigenvalues in [-1e-9, 0) are clamped to zero and
/// anything lower raises DecompositionError.
Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& covariance);

std::vector<Eigen::VectorXd> sample(const GaussianSearchDistribution& dist, int count, Rng& rng);

/// Vector of standard normal draws.
Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng);

/// Indices of costs in ascending order; ties keep their original order.
std::vector<int> rank_order(std::span<const double> costs);

/// Hard cutoff: the elite_count cheapest samples get 1/elite_count.
ProbabilityWeights cem_weights(std::span<const double> costs, int elite_count);

/// Rank-indexed log weights ln(0.5(K+1)) - ln(k) for k <= elite_count,
/// normalized over the elite set. Entry k is the weight of the k-th best sample.
ProbabilityWeights cmaes_weights(int sample_count, int elite_count);

/// Same mapping as cmaes_weights, but scattered back to sample order.
ProbabilityWeights cmaes_weights_for_costs(std::span<const double> costs, int elite_count);

/// exp(-h (S - min S) / (max S - min S)), normalized. Uniform when all costs are equal.
ProbabilityWeights pi2_weights(std::span<const double> costs, double eliteness_h);

/// 1 / sum(P_k^2).
double effective_selection_mass(const ProbabilityWeights& weights);

inline std::span<const double> as_span(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

} // namespace pi2cma
