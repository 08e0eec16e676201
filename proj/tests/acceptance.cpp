// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. The experiment criteria (4-8) run the
// shipped presets with their default seeds.

#include "oracles.hpp"

#include "pi2cma/dmp.hpp"
#include "pi2cma/es_optimizers.hpp"
#include "pi2cma/harness.hpp"
#include "pi2cma/pi2.hpp"
#include "pi2cma/weighting.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

using namespace pi2cma;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_jobs = 1;
int g_failures = 0;

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void report(int id, const char* title, const std::function<Outcome()>& check)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = check();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.pass)
        ++g_failures;
    std::printf("%s  %2d  %-34s %s  [%.1fs]\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.c_str(), secs);
    std::fflush(stdout);
}

double mean(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v)
{
    const double m = mean(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

const ExperimentConfig& find(const std::vector<ExperimentConfig>& configs, const std::string& name)
{
    for (const auto& c : configs)
        if (c.name == name)
            return c;
    throw std::runtime_error("preset has no config named " + name);
}

Outcome cmaes_reduces_to_cem()
{
    Rng rng = make_rng(1);
    auto normal = [&] { return standard_normal(1, rng)(0); };
    double worst = 0.0;
    bool sigma_fixed = true;
    int count = 0;
    for (int rep = 0; count < 200; ++rep)
        for (int n : {2, 5, 10})
            for (int k : {6, 10, 20}) {
                if (count == 200)
                    break;
                ++count;
                const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, normal);
                GaussianSearchDistribution dist(Eigen::VectorXd::NullaryExpr(n, normal),
                                                a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n));
                Rng srng = make_rng(2, static_cast<std::uint64_t>(count));
                const auto samples = sample(dist, k, srng);
                std::vector<double> costs;
                for (const auto& x : samples)
                    costs.push_back(x.squaredNorm());
                const int ke = 1 + rep % (k / 2);
                const ProbabilityWeights w =
                    rep % 2 ? cmaes_weights_for_costs(costs, ke) : cem_weights(costs, ke);

                const auto cem = cem_update(dist, samples, w);
                const auto cma =
                    cmaes_update(CmaesState::initial(n, 1.0), CmaesConfig::cem_equivalent(ke), dist, samples, w);
                worst = std::max({worst, (cma.dist.mean - cem.mean).cwiseAbs().maxCoeff(),
                                  (cma.dist.covariance - cem.covariance).cwiseAbs().maxCoeff()});
                sigma_fixed = sigma_fixed && cma.dist.step_size == 1.0;
            }
    return {worst <= 1e-10 && sigma_fixed, fmt("200 instances, max |diff| = %.2e, sigma fixed: %s", worst,
                                               sigma_fixed ? "yes" : "no")};
}

Outcome weighting_oracles()
{
    double worst = 0.0;
    auto compare = [&](const ProbabilityWeights& got, const std::vector<double>& want) {
        for (std::size_t i = 0; i < want.size(); ++i)
            worst = std::max(worst, std::abs(got[static_cast<Eigen::Index>(i)] - want[i]));
    };
    const std::vector<double> c1{3, 1, 2}, c2{1, 2, 3, 4}, c3{4, 3, 2, 1};
    compare(cem_weights(c1, 1), {0, 1, 0});
    compare(cem_weights(c2, 2), {0.5, 0.5, 0, 0});
    compare(cem_weights(c3, 4), {0.25, 0.25, 0.25, 0.25});
    // ln(5.5) - ln(k), normalized over k = 1..5.
    double z = 0.0;
    std::vector<double> lr(10, 0.0);
    for (int k = 1; k <= 5; ++k)
        z += lr[k - 1] = std::log(5.5) - std::log(k);
    for (int k = 0; k < 5; ++k)
        lr[k] /= z;
    compare(cmaes_weights(10, 5), lr);
    compare(cmaes_weights(3, 1), {1, 0, 0});
    const std::vector<double> eq{2, 2, 2, 2}, two{0, 1}, three{0, 0.5, 1};
    compare(pi2_weights(eq, 10), {0.25, 0.25, 0.25, 0.25});
    compare(pi2_weights(two, 10), {1 / (1 + std::exp(-10.0)), std::exp(-10.0) / (1 + std::exp(-10.0))});
    compare(pi2_weights(three, 10), {1 / (1 + std::exp(-5.0) + std::exp(-10.0))});
    double lr2 = 0.0;
    for (int k = 0; k < 5; ++k)
        lr2 += lr[k] * lr[k];
    Eigen::VectorXd five = Eigen::VectorXd::Zero(8);
    five.head(5).setConstant(0.2);
    worst = std::max({worst, std::abs(effective_selection_mass(ProbabilityWeights(five)) - 5.0),
                      std::abs(effective_selection_mass(cmaes_weights(10, 5)) - 1.0 / lr2)});

    // Property tests.
    Rng rng = make_rng(3);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = std::uniform_int_distribution<int>(2, 30)(rng);
        const int ke = std::uniform_int_distribution<int>(1, std::max(1, k / 2))(rng);
        const double h = std::uniform_real_distribution<double>(1.0, 20.0)(rng);
        std::vector<double> costs(static_cast<std::size_t>(k)), warped(costs.size()), affine(costs.size());
        for (auto& c : costs)
            c = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
        const double a = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
        const double b = std::uniform_real_distribution<double>(-100.0, 100.0)(rng);
        for (std::size_t i = 0; i < costs.size(); ++i) {
            warped[i] = std::exp(costs[i]);
            affine[i] = a * costs[i] + b;
        }
        const ProbabilityWeights ws[] = {cem_weights(costs, ke), cmaes_weights_for_costs(costs, ke),
                                         pi2_weights(costs, h)};
        for (const auto& w : ws)
            violations += std::abs(w.values().sum() - 1.0) > 1e-12 || w.values().minCoeff() < 0.0;
        violations += cem_weights(warped, ke).values() != ws[0].values();
        violations += cmaes_weights_for_costs(warped, ke).values() != ws[1].values();
        violations += (pi2_weights(affine, h).values() - ws[2].values()).cwiseAbs().maxCoeff() > 1e-9;
    }
    return {worst <= 1e-9 && violations == 0,
            fmt("max oracle error %.2e, %d property violations in 1000 cases", worst, violations)};
}

Outcome pipeline_oracle()
{
    constexpr int K = 3, N = 4, B = 2;
    Rng rng = make_rng(4);
    auto normal = [&] { return standard_normal(1, rng)(0); };
    double worst = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
        const oracle::Vec theta{normal(), normal()};
        std::vector<oracle::Mat> eps(K, oracle::Mat(N, oracle::Vec(B)));
        oracle::Mat cost(K, oracle::Vec(N));
        RolloutBatch batch;
        batch.step_costs.resize(K, N);
        for (int k = 0; k < K; ++k) {
            WeightOffsets offs;
            for (int i = 0; i < N; ++i) {
                for (int b = 0; b < B; ++b)
                    eps[k][i][b] = normal();
                cost[k][i] = std::abs(normal());
                batch.step_costs(k, i) = cost[k][i];
                offs.push_back(Eigen::RowVector2d(eps[k][i][0], eps[k][i][1]));
            }
            batch.offsets.push_back(offs);
        }
        const double base = instance % 2 ? 0.0 : 0.3;
        const oracle::UpdatePhase ref = oracle::table1_update(theta, eps, cost, 10.0, base);

        Pi2Config cfg;
        cfg.trials_per_update = K;
        cfg.covariance_update = CovarianceUpdate::CemStyle;
        cfg.base_noise_level = base;
        const UpdateReport r = pi2_update(
            batch, cfg, {GaussianSearchDistribution(Eigen::Vector2d(theta[0], theta[1]), Eigen::Matrix2d::Identity())});
        for (int b = 0; b < B; ++b) {
            worst = std::max(worst, std::abs(r.distributions[0].mean(b) - ref.mean[b]));
            for (int c = 0; c < B; ++c)
                worst = std::max(worst, std::abs(r.distributions[0].covariance(b, c) - ref.covariance[b][c]));
        }
    }
    return {worst <= 1e-10, fmt("D=1 B=2 K=3 N=4, 50 instances, max |diff| = %.2e", worst)};
}

double final_cost(const LearningCurve& c)
{
    return c.rows.back().noise_free_cost;
}

int updates_to_reach(const LearningCurve& c, double fraction)
{
    const double target = fraction * c.rows.front().noise_free_cost;
    for (const auto& row : c.rows)
        if (row.noise_free_cost <= target)
            return row.update;
    return static_cast<int>(c.rows.size());
}

std::vector<LearningCurve> run_checked(const ExperimentConfig& c)
{
    auto curves = run(c, g_jobs);
    for (const auto& curve : curves)
        if (curve.error)
            throw std::runtime_error(c.name + ": " + *curve.error);
    return curves;
}

Outcome viapoint_convergence(const std::vector<ExperimentConfig>& fig3)
{
    const auto curves = run_checked(find(fig3, "fig3_constant"));
    int ok = 0;
    std::string ratios;
    for (const auto& c : curves) {
        const double ratio = final_cost(c) / c.rows.front().noise_free_cost;
        ok += ratio <= 0.1;
        ratios += fmt("%s%.3f", ratios.empty() ? "" : " ", ratio);
    }
    return {ok >= 4 && curves.size() == 5, fmt("%d/%zu seeds at <= 10%% (final/initial: %s)", ok, curves.size(),
                                               ratios.c_str())};
}

Outcome exploration_ordering(const std::vector<ExperimentConfig>& fig3)
{
    double reach[3];
    const char* names[] = {"fig3_constant", "fig3_per_basis", "fig3_time_varying"};
    for (int m = 0; m < 3; ++m) {
        std::vector<double> u;
        for (const auto& c : run_checked(find(fig3, names[m])))
            u.push_back(updates_to_reach(c, 0.25));
        reach[m] = mean(u);
    }
    return {reach[0] <= reach[1] && reach[1] < reach[2],
            fmt("updates to 25%%: constant %.1f, per-basis %.1f, time-varying %.1f", reach[0], reach[1], reach[2])};
}

struct Fig6Results {
    std::vector<double> log_lambda;  // PI2-CMA, per start
    std::vector<double> fixed_costs, adapted_costs;
};

Fig6Results run_fig6()
{
    Fig6Results r;
    for (const auto& c : preset("fig6")) {
        const auto curves = run_checked(c);
        std::vector<double> lambdas;
        for (const auto& curve : curves) {
            (c.algorithm == Algorithm::Pi2 ? r.fixed_costs : r.adapted_costs).push_back(final_cost(curve));
            lambdas.push_back(curve.rows.back().lambda_mean);
        }
        if (c.algorithm == Algorithm::Pi2Cma)
            r.log_lambda.push_back(std::log10(mean(lambdas)));
    }
    return r;
}

Outcome lambda_self_tuning(const Fig6Results& r)
{
    bool in_band = r.log_lambda.size() == 3;
    for (double l : r.log_lambda)
        in_band = in_band && l >= 2.3 && l <= 3.3;
    const auto [lo, hi] = std::minmax_element(r.log_lambda.begin(), r.log_lambda.end());
    const bool close = *hi - *lo <= 1.0;
    return {in_band && close, fmt("final log10(lambda) from 1e2/1e4/1e6: %.2f %.2f %.2f (spread %.2f)",
                                  r.log_lambda[0], r.log_lambda[1], r.log_lambda[2], *hi - *lo)};
}

Outcome spread_reduction(const Fig6Results& r)
{
    const double fixed = sample_std(r.fixed_costs);
    const double adapted = sample_std(r.adapted_costs);
    return {adapted <= 0.5 * fixed,
            fmt("final-cost std: fixed %.4g, adapted %.4g (ratio %.3f)", fixed, adapted, adapted / fixed)};
}

Outcome weighting_insensitivity()
{
    const auto fig5 = preset("fig5");
    const char* names[] = {"fig5_pi2_h5", "fig5_pi2_h10", "fig5_cmaes_ke5"};
    std::vector<double> finals;
    for (const char* name : names) {
        std::vector<double> f;
        for (const auto& c : run_checked(find(fig5, name)))
            f.push_back(final_cost(c));
        finals.push_back(mean(f));
    }
    const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
    return {*hi / *lo < 2.0, fmt("mean final cost h5 %.4g, h10 %.4g, cmaes K_e=5 %.4g (max/min %.2f)", finals[0],
                                 finals[1], finals[2], *hi / *lo)};
}

Outcome dmp_fidelity()
{
    // The task's own demonstration: 10 joints from rest to the final posture.
    const TaskSetup setup = make_task(preset("fig3").front());
    const Trajectory demo =
        min_jerk(setup.policy.start, setup.policy.goal, setup.policy.duration, 0.01);
    const Trajectory out = integrate(setup.policy, 0.01);
    double worst_rms = 0.0;
    for (Eigen::Index d = 0; d < demo.dofs(); ++d) {
        const double amp = std::abs(setup.policy.goal(d) - setup.policy.start(d));
        const double rms = std::sqrt((out.positions.col(d) - demo.positions.col(d)).squaredNorm() /
                                     static_cast<double>(demo.steps()));
        worst_rms = std::max(worst_rms, rms / amp);
    }

    Rng rng = make_rng(5);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        DmpPolicy p = setup.policy;
        p.theta = 30.0 * Eigen::MatrixXd::NullaryExpr(p.dofs(), p.basis_count(),
                                                      [&] { return standard_normal(1, rng)(0); });
        const DmpPolicy fit = train_from_trajectory(integrate(p, 0.01), p);
        worst_rel = std::max(worst_rel, (fit.theta - p.theta).norm() / p.theta.norm());
    }
    return {worst_rms < 0.02 && worst_rel <= 1e-3,
            fmt("min-jerk RMS %.3f%% of amplitude, round-trip weight error %.2e", 100.0 * worst_rms, worst_rel)};
}

Outcome psd_preservation()
{
    Rng rng = make_rng(6);
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 1000; ++s) {
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        const int steps = std::uniform_int_distribution<int>(1, 60)(rng);
        std::vector<Eigen::MatrixXd> seq;
        for (int i = 0; i < steps; ++i) {
            // Rank-deficient factors make many inputs singular. Squared scales span
            // 1e-6..1e4; for exactly singular inputs the eigensolver itself resolves
            // eigenvalues only to about norm * n * eps, which reaches 1e-9 near 1e6.
            const int r = std::uniform_int_distribution<int>(1, n)(rng);
            const Eigen::MatrixXd a =
                Eigen::MatrixXd::NullaryExpr(n, r, [&] { return standard_normal(1, rng)(0); }) *
                std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 2.0)(rng));
            seq.push_back(a * a.transpose());
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(temporal_average(seq));
        worst = std::min(worst, eig.eigenvalues().minCoeff());
    }
    return {worst >= -1e-9, fmt("1000 sequences, smallest eigenvalue %.2e", worst)};
}

} // namespace

int main(int argc, char** argv)
{
    g_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool quick = false;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--quick")
            quick = true;

    report(1, "CMA-ES to CEM reduction", cmaes_reduces_to_cem);
    report(2, "weighting oracles and properties", weighting_oracles);
    report(3, "PI2 update-phase oracle", pipeline_oracle);
    if (!quick) {
        const auto fig3 = preset("fig3");
        report(4, "viapoint convergence", [&] { return viapoint_convergence(fig3); });
        report(5, "exploration-mode ordering", [&] { return exploration_ordering(fig3); });
        Fig6Results fig6;
        bool fig6_ran = false;
        auto fig6_once = [&]() -> const Fig6Results& {
            if (!fig6_ran) {
                fig6 = run_fig6();
                fig6_ran = true;
            }
            return fig6;
        };
        report(6, "lambda self-tuning", [&] { return lambda_self_tuning(fig6_once()); });
        report(7, "spread reduction", [&] { return spread_reduction(fig6_once()); });
        report(8, "weighting-scheme insensitivity", weighting_insensitivity);
    }
    report(9, "DMP fidelity", dmp_fidelity);
    report(10, "PSD preservation", psd_preservation);
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
