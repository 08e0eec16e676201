#include "pi2cma/weighting.hpp"

#include "pi2cma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pi2cma {

namespace {

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kNegativeEigenTolerance = 1e-9;
constexpr double kWeightSumTolerance = 1e-12;

} // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b)
{
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(stream_a), hi(stream_a), lo(stream_b), hi(stream_b)};
    return Rng(seq);
}

GaussianSearchDistribution::GaussianSearchDistribution(Eigen::VectorXd mean_, Eigen::MatrixXd covariance_,
                                                       double step_size_)
    : mean(std::move(mean_)), covariance(std::move(covariance_)), step_size(step_size_)
{
}

GaussianSearchDistribution GaussianSearchDistribution::isotropic(const Eigen::VectorXd& mean, double variance)
{
    return {mean, variance * Eigen::MatrixXd::Identity(mean.size(), mean.size()), 1.0};
}

Eigen::MatrixXd GaussianSearchDistribution::effective_covariance() const
{
    return step_size * step_size * covariance;
}

void GaussianSearchDistribution::validate() const
{
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
        throw ArgumentError("covariance is " + std::to_string(covariance.rows()) + "x" +
                            std::to_string(covariance.cols()) + " but mean has length " +
                            std::to_string(mean.size()));
    if (!(step_size > 0.0))
        throw ArgumentError("step_size must be positive");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance)
        throw ArgumentError("covariance is not symmetric");
    if (mean.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -kNegativeEigenTolerance)
            throw ArgumentError("covariance is not positive semi-definite");
    }
}

ProbabilityWeights::ProbabilityWeights(Eigen::VectorXd values) : values_(std::move(values))
{
    if (values_.size() == 0)
        throw ArgumentError("probability weights must not be empty");
    if (values_.minCoeff() < 0.0 || !values_.allFinite())
        throw ArgumentError("probability weights must be finite and non-negative");
    if (std::abs(values_.sum() - 1.0) > kWeightSumTolerance)
        throw ArgumentError("probability weights must sum to 1");
}

Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& covariance)
{
    const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw DecompositionError("eigen-decomposition of covariance did not converge");
    Eigen::VectorXd values = eig.eigenvalues();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < -kNegativeEigenTolerance)
            throw DecompositionError("covariance has eigenvalue " + std::to_string(values(i)) +
                                     " below -1e-9");
        values(i) = std::sqrt(std::max(values(i), 0.0));
    }
    const Eigen::MatrixXd& vectors = eig.eigenvectors();
    return vectors * values.asDiagonal() * vectors.transpose();
}

Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
        z(i) = normal(rng);
    return z;
}

std::vector<Eigen::VectorXd> sample(const GaussianSearchDistribution& dist, int count, Rng& rng)
{
    if (count < 1)
        throw ArgumentError("sample count must be positive");
    if (dist.covariance.rows() != dist.dim() || dist.covariance.cols() != dist.dim())
        throw ArgumentError("covariance shape does not match mean");
    if (!(dist.step_size > 0.0))
        throw ArgumentError("step_size must be positive");

    const Eigen::MatrixXd root = psd_square_root(dist.covariance);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const Eigen::VectorXd z = standard_normal(dist.dim(), rng);
        out.emplace_back(dist.mean + dist.step_size * (root * z));
    }
    return out;
}

std::vector<int> rank_order(std::span<const double> costs)
{
    std::vector<int> order(costs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return costs[a] < costs[b]; });
    return order;
}

ProbabilityWeights cem_weights(std::span<const double> costs, int elite_count)
{
    const int k = static_cast<int>(costs.size());
    if (elite_count < 1 || elite_count > k)
        throw ArgumentError("elite count " + std::to_string(elite_count) + " outside [1, " +
                            std::to_string(k) + "]");
    const std::vector<int> order = rank_order(costs);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    for (int r = 0; r < elite_count; ++r)
        w(order[r]) = 1.0 / elite_count;
    return ProbabilityWeights(std::move(w));
}

ProbabilityWeights cmaes_weights(int sample_count, int elite_count)
{
    if (elite_count < 1 || elite_count > sample_count)
        throw ArgumentError("elite count " + std::to_string(elite_count) + " outside [1, " +
                            std::to_string(sample_count) + "]");
    const double offset = std::log(0.5 * (sample_count + 1));
    if (offset - std::log(static_cast<double>(elite_count)) <= 0.0)
        throw ArgumentError("log-rank weight of rank " + std::to_string(elite_count) +
                            " is not positive for K = " + std::to_string(sample_count));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(sample_count);
    for (int r = 0; r < elite_count; ++r)
        w(r) = offset - std::log(static_cast<double>(r + 1));
    w /= w.sum();
    return ProbabilityWeights(std::move(w));
}

ProbabilityWeights cmaes_weights_for_costs(std::span<const double> costs, int elite_count)
{
    const ProbabilityWeights ranked = cmaes_weights(static_cast<int>(costs.size()), elite_count);
    const std::vector<int> order = rank_order(costs);
    Eigen::VectorXd w(ranked.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        w(order[r]) = ranked[static_cast<Eigen::Index>(r)];
    return ProbabilityWeights(std::move(w));
}

ProbabilityWeights pi2_weights(std::span<const double> costs, double eliteness_h)
{
    if (costs.empty())
        throw ArgumentError("pi2_weights needs at least one cost");
    if (!(eliteness_h > 0.0) || !std::isfinite(eliteness_h))
        throw ArgumentError("eliteness h must be positive");
    for (std::size_t k = 0; k < costs.size(); ++k)
        if (!std::isfinite(costs[k]))
            throw ArgumentError("cost " + std::to_string(k) + " is not finite");

    const auto [lo, hi] = std::minmax_element(costs.begin(), costs.end());
    const double range = *hi - *lo;
    const auto n = static_cast<Eigen::Index>(costs.size());
    if (!(range > 0.0))
        return ProbabilityWeights(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));

    Eigen::VectorXd w(n);
    for (Eigen::Index k = 0; k < n; ++k)
        w(k) = std::exp(-eliteness_h * (costs[static_cast<std::size_t>(k)] - *lo) / range);
    w /= w.sum();
    return ProbabilityWeights(std::move(w));
}

double effective_selection_mass(const ProbabilityWeights& weights)
{
    return 1.0 / weights.values().squaredNorm();
}

} // namespace pi2cma
