#include "doctest.h"

#include "pi2cma/errors.hpp"
#include "pi2cma/harness.hpp"

#include <cmath>
#include <sstream>
#include <string>

using namespace pi2cma;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.dofs = 3;
    c.trials_per_update = 4;
    c.updates = 3;
    c.replications = 2;
    c.seed = 17;
    return c;
}

std::string csv(const LearningCurve& curve)
{
    std::ostringstream out;
    write_learning_curve_csv(out, curve);
    return out.str();
}

std::string config_error(const std::string& text)
{
    std::istringstream in(text);
    try {
        parse_config(in);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("config text round trip")
{
    for (const auto& name : {"fig3", "fig5", "fig6"})
        for (const ExperimentConfig& c : preset(name)) {
            std::ostringstream out;
            write_config(out, c);
            std::istringstream in(out.str());
            const ExperimentConfig back = parse_config(in);
            std::ostringstream again;
            write_config(again, back);
            CHECK(again.str() == out.str());
        }

    ExperimentConfig c = small_config();
    c.goal_angles = Eigen::Vector3d(0.1, 0.2, 0.3);
    std::ostringstream out;
    write_config(out, c);
    std::istringstream in(out.str());
    const ExperimentConfig back = parse_config(in);
    REQUIRE(back.goal_angles.has_value());
    CHECK(*back.goal_angles == *c.goal_angles);
}

TEST_CASE("parse_config: defaults, comments and algorithm weighting")
{
    std::istringstream in("# comment\nalgorithm = CMAES  # trailing\nelite_count = 3\n");
    const ExperimentConfig c = parse_config(in);
    CHECK(c.algorithm == Algorithm::Cmaes);
    CHECK(c.eliteness.kind == Eliteness::Kind::Cmaes);
    CHECK(c.eliteness.elite_count == 3);
    CHECK(c.trials_per_update == 10);
    CHECK(c.lambda_init == 1e4);
}

TEST_CASE("parse_config: errors name the field")
{
    CHECK(config_error("bogus = 1\n").find("bogus") != std::string::npos);
    CHECK(config_error("K = 3\nK = 4\n").find("duplicate") != std::string::npos);
    CHECK(config_error("K = 1\n").find("K") != std::string::npos);
    CHECK(config_error("h = -2\n").find("h") != std::string::npos);
    CHECK(config_error("lambda_init = 0\n").find("lambda_init") != std::string::npos);
    CHECK(config_error("K = ten\n").find("line 1") != std::string::npos);
    CHECK(config_error("just words\n").find("line 1") != std::string::npos);
    CHECK(config_error("viapoint_time = 0.7\n").find("viapoint_time") != std::string::npos);
    CHECK(config_error("beta_z = 5\n").find("beta_z") != std::string::npos);
    CHECK(config_error("algorithm = CEM\nweighting = pi2\n").find("weighting") != std::string::npos);
    CHECK(config_error("exploration = sideways\n").find("exploration") != std::string::npos);
    CHECK(config_error("D = 3\ngoal_angles = 0.1,0.2\n").find("goal_angles") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), ConfigError);
}

TEST_CASE("set_config_field")
{
    ExperimentConfig c;
    set_config_field(c, "seed", "42");
    set_config_field(c, "exploration", "per_basis");
    CHECK(c.seed == 42);
    CHECK(c.exploration_mode == ExplorationMode::PerBasis);
    CHECK_THROWS_AS(set_config_field(c, "replications", "2.5"), ConfigError);
}

TEST_CASE("learning curve CSV round trip")
{
    LearningCurve curve;
    for (int u = 0; u < 3; ++u) {
        LearningCurveRow r;
        r.update = u;
        r.noise_free_cost = 1.0 / 3.0 + u;
        r.mean_batch_cost = std::sqrt(2.0) * 1e7;
        r.lambda_dof = Eigen::Vector2d(M_PI * 1e3, 1e-5 / 7.0);
        r.lambda_mean = r.lambda_dof.mean();
        curve.rows.push_back(r);
    }
    curve.error = "non-finite cost at update 3";
    const std::string text = csv(curve);
    CHECK(text.rfind("update,noise_free_cost,mean_batch_cost,lambda_mean,lambda_dof_1,lambda_dof_2\n", 0) == 0);

    std::istringstream in(text);
    const LearningCurve back = read_learning_curve_csv(in);
    REQUIRE(back.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.rows[i].update == curve.rows[i].update);
        CHECK(back.rows[i].noise_free_cost == curve.rows[i].noise_free_cost);
        CHECK(back.rows[i].mean_batch_cost == curve.rows[i].mean_batch_cost);
        CHECK(back.rows[i].lambda_mean == curve.rows[i].lambda_mean);
        CHECK(back.rows[i].lambda_dof == curve.rows[i].lambda_dof);
    }
    CHECK(back.error == curve.error);

    std::istringstream bad("time,cost\n1,2\n");
    CHECK_THROWS_AS(read_learning_curve_csv(bad), ArgumentError);
}

TEST_CASE("make_task: initial policy follows a minimum-jerk movement to the final posture")
{
    const TaskSetup s = make_task(small_config());
    const Trajectory t = integrate(s.policy, 0.01);
    const Eigen::VectorXd goal = final_posture(s.arm);
    CHECK((t.positions.row(t.steps() - 1).transpose() - goal).cwiseAbs().maxCoeff() < 0.02 * goal.maxCoeff());
}

TEST_CASE("run")
{
    SUBCASE("no updates gives the initial cost only")
    {
        ExperimentConfig c = small_config();
        c.updates = 0;
        c.replications = 1;
        const auto curves = run(c);
        REQUIRE(curves.size() == 1);
        REQUIRE(curves[0].rows.size() == 1);
        CHECK(curves[0].rows[0].update == 0);
        CHECK(curves[0].rows[0].noise_free_cost > 0.0);
        CHECK(curves[0].rows[0].lambda_mean == doctest::Approx(1e4));
    }
    SUBCASE("deterministic per seed, and seed changes the curve but not the schema")
    {
        const ExperimentConfig c = small_config();
        const auto a = run(c);
        const auto b = run(c, 2);
        REQUIRE(a.size() == 2);
        for (std::size_t r = 0; r < a.size(); ++r) {
            CHECK(a[r].rows.size() == 4);
            CHECK(csv(a[r]) == csv(b[r]));
        }
        CHECK(csv(a[0]) != csv(a[1]));
        const std::string head0 = csv(a[0]).substr(0, csv(a[0]).find('\n'));
        const std::string head1 = csv(a[1]).substr(0, csv(a[1]).find('\n'));
        CHECK(head0 == head1);
        // Replication r uses seed + r.
        CHECK(csv(run_replication(c, c.seed + 1)) == csv(a[1]));
    }
    SUBCASE("every algorithm runs")
    {
        for (Algorithm algo :
             {Algorithm::Cem, Algorithm::Cmaes, Algorithm::Pi2, Algorithm::Pi2Cma, Algorithm::Pi2Cmaes}) {
            ExperimentConfig c = small_config();
            c.replications = 1;
            c.algorithm = algo;
            c.base_noise_level = algo == Algorithm::Pi2 ? 0.0 : 100.0;
            if (algo == Algorithm::Cem)
                c.eliteness = Eliteness::cem(2);
            if (algo == Algorithm::Cmaes)
                c.eliteness = Eliteness::cmaes(2);
            const auto curves = run(c);
            CHECK_MESSAGE(!curves[0].error.has_value(), to_string(algo));
            CHECK(curves[0].rows.size() == 4);
            for (const auto& row : curves[0].rows)
                CHECK(std::isfinite(row.noise_free_cost));
        }
    }
    SUBCASE("fixed covariance keeps lambda constant")
    {
        const auto curves = run(small_config());
        for (const auto& row : curves[0].rows)
            CHECK(row.lambda_mean == 1e4);
    }
    SUBCASE("non-finite costs abort the replication with a message")
    {
        ExperimentConfig c = small_config();
        c.replications = 1;
        c.lambda_init = 1e307;
        const auto curves = run(c);
        REQUIRE(curves[0].error.has_value());
        CHECK(curves[0].error->find("non-finite") != std::string::npos);
        CHECK(csv(curves[0]).find("# error: ") != std::string::npos);
    }
    SUBCASE("invalid config")
    {
        ExperimentConfig c = small_config();
        c.replications = 0;
        CHECK_THROWS_AS(run(c), ConfigError);
    }
}

TEST_CASE("preset")
{
    const auto fig3 = preset("fig3");
    REQUIRE(fig3.size() == 3);
    for (const auto& c : fig3) {
        CHECK(c.trials_per_update == 10);
        CHECK(c.eliteness.h == 10.0);
        CHECK(c.lambda_init == 1e4);
        CHECK(c.replications >= 3);
        CHECK(c.algorithm == Algorithm::Pi2);
    }
    CHECK(fig3[0].exploration_mode != fig3[1].exploration_mode);
    CHECK(fig3[1].exploration_mode != fig3[2].exploration_mode);
    CHECK(fig3[0].exploration_mode != fig3[2].exploration_mode);

    const auto fig5 = preset("fig5");
    int pi2 = 0, cem = 0, cmaes = 0;
    for (const auto& c : fig5) {
        CHECK(c.replications >= 3);
        switch (c.eliteness.kind) {
        case Eliteness::Kind::Pi2: ++pi2; CHECK((c.eliteness.h == 5.0 || c.eliteness.h == 10.0)); break;
        case Eliteness::Kind::Cem: ++cem; CHECK((c.eliteness.elite_count == 3 || c.eliteness.elite_count == 5)); break;
        case Eliteness::Kind::Cmaes: ++cmaes; CHECK((c.eliteness.elite_count == 3 || c.eliteness.elite_count == 5)); break;
        }
    }
    CHECK(pi2 == 2);
    CHECK(cem == 2);
    CHECK(cmaes == 2);

    const auto fig6 = preset("fig6");
    REQUIRE(fig6.size() == 6);
    int fixed = 0;
    for (const auto& c : fig6) {
        CHECK(c.updates == 200);
        CHECK(c.trials_per_update == 20);
        CHECK(c.replications == 5);
        fixed += c.algorithm == Algorithm::Pi2;
        CHECK((c.lambda_init == 1e2 || c.lambda_init == 1e4 || c.lambda_init == 1e6));
    }
    CHECK(fixed == 3);
    CHECK_THROWS_AS(preset("fig4"), ConfigError);
}

TEST_CASE("aggregate")
{
    auto curve = [](std::vector<double> costs, double lambda) {
        LearningCurve c;
        for (std::size_t u = 0; u < costs.size(); ++u) {
            LearningCurveRow r;
            r.update = static_cast<int>(u);
            r.noise_free_cost = costs[u];
            r.lambda_mean = lambda;
            r.lambda_dof = Eigen::VectorXd::Constant(1, lambda);
            c.rows.push_back(r);
        }
        return c;
    };
    const auto rows = aggregate({curve({1.0, 2.0, 3.0}, 10.0), curve({3.0, 4.0}, 20.0)});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].cost_mean == 2.0);
    CHECK(rows[0].cost_std == doctest::Approx(std::sqrt(2.0)));
    CHECK(rows[1].cost_mean == 3.0);
    CHECK(rows[1].lambda_mean == 15.0);
    CHECK(rows[1].lambda_std == doctest::Approx(std::sqrt(50.0)));

    const auto single = aggregate({curve({5.0}, 1.0)});
    CHECK(single[0].cost_std == 0.0);

    std::ostringstream out;
    write_aggregate_csv(out, rows);
    CHECK(out.str().rfind("update,cost_mean,cost_std,lambda_mean,lambda_std\n", 0) == 0);
    CHECK_THROWS_AS(aggregate({}), ArgumentError);
}
