#include "pi2cma/harness.hpp"

#include "pi2cma/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace pi2cma {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

// Enum values are matched case-insensitively, so "PI2CMA" and "pi2cma" both parse.
std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected)
{
    throw ConfigError("field '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                      std::string(expected));
}

double parse_double(std::string_view key, std::string_view value)
{
    const std::string s(value);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            bad_value(key, value, "a number");
        return v;
    } catch (const std::logic_error&) {
        bad_value(key, value, "a number");
    }
}

long long parse_int(std::string_view key, std::string_view value)
{
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        bad_value(key, value, "an integer");
    return v;
}

int parse_small_int(std::string_view key, std::string_view value)
{
    const long long v = parse_int(key, value);
    if (v < -1'000'000'000LL || v > 1'000'000'000LL)
        bad_value(key, value, "an integer of reasonable size");
    return static_cast<int>(v);
}

Algorithm parse_algorithm(std::string_view raw)
{
    const std::string value = lower(raw);
    if (value == "cem") return Algorithm::Cem;
    if (value == "cmaes") return Algorithm::Cmaes;
    if (value == "pi2") return Algorithm::Pi2;
    if (value == "pi2cma") return Algorithm::Pi2Cma;
    if (value == "pi2cmaes") return Algorithm::Pi2Cmaes;
    bad_value("algorithm", raw, "one of cem, cmaes, pi2, pi2cma, pi2cmaes");
}

ExplorationMode parse_exploration(std::string_view raw)
{
    const std::string value = lower(raw);
    if (value == "constant") return ExplorationMode::Constant;
    if (value == "time_varying") return ExplorationMode::TimeVarying;
    if (value == "per_basis") return ExplorationMode::PerBasis;
    bad_value("exploration", raw, "one of constant, time_varying, per_basis");
}

std::string_view weighting_name(Eliteness::Kind kind)
{
    switch (kind) {
    case Eliteness::Kind::Pi2: return "pi2";
    case Eliteness::Kind::Cem: return "cem";
    case Eliteness::Kind::Cmaes: return "cmaes";
    }
    return "?";
}

std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

std::string_view to_string(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::Cem: return "cem";
    case Algorithm::Cmaes: return "cmaes";
    case Algorithm::Pi2: return "pi2";
    case Algorithm::Pi2Cma: return "pi2cma";
    case Algorithm::Pi2Cmaes: return "pi2cmaes";
    }
    return "?";
}

void ExperimentConfig::validate() const
{
    auto fail = [](const std::string& field, const std::string& msg) {
        throw ConfigError("field '" + field + "': " + msg);
    };
    if (name.empty() || name.find_first_of(" \t/\\") != std::string::npos)
        fail("name", "must be non-empty without whitespace or slashes");
    if (trials_per_update < 2)
        fail("K", "must be at least 2");
    switch (eliteness.kind) {
    case Eliteness::Kind::Pi2:
        if (!(eliteness.h > 0.0) || !std::isfinite(eliteness.h))
            fail("h", "must be positive");
        break;
    case Eliteness::Kind::Cmaes:
        if (eliteness.elite_count >= 1 && eliteness.elite_count <= trials_per_update &&
            std::log(0.5 * (trials_per_update + 1)) - std::log(eliteness.elite_count) <= 0.0)
            fail("elite_count", "log-rank weight at rank elite_count must be positive");
        [[fallthrough]];
    case Eliteness::Kind::Cem:
        if (eliteness.elite_count < 1 || eliteness.elite_count > trials_per_update)
            fail("elite_count", "must lie in [1, K]");
        break;
    }
    if (algorithm == Algorithm::Cem || algorithm == Algorithm::Cmaes) {
        const auto native = algorithm == Algorithm::Cem ? Eliteness::Kind::Cem : Eliteness::Kind::Cmaes;
        if (eliteness.kind != native)
            fail("weighting", "algorithm " + std::string(to_string(algorithm)) + " requires weighting = " +
                                  std::string(weighting_name(native)));
        if (exploration_mode != ExplorationMode::Constant)
            fail("exploration", "episodic algorithms need constant exploration");
    }
    if (!(lambda_init > 0.0) || !std::isfinite(lambda_init))
        fail("lambda_init", "must be positive");
    if (!(base_noise_level >= 0.0) || !std::isfinite(base_noise_level))
        fail("base_noise_level", "must be non-negative");
    if (updates < 0)
        fail("updates", "must be non-negative");
    if (replications < 1)
        fail("replications", "must be at least 1");
    if (!(duration > 0.0))
        fail("duration", "must be positive");
    if (!(dt > 0.0) || dt > duration / 10.0 + 1e-15)
        fail("dt", "must lie in (0, duration/10]");
    if (!(viapoint_time > 0.0 && viapoint_time < duration))
        fail("viapoint_time", "must lie strictly inside (0, duration)");
    if (!viapoint.allFinite())
        fail("viapoint_x", "viapoint must be finite");
    if (!(viapoint_weight >= 0.0) || !std::isfinite(viapoint_weight))
        fail("viapoint_weight", "must be non-negative");
    if (dofs < 1)
        fail("D", "must be at least 1");
    if (basis_count < 2)
        fail("B", "must be at least 2");
    if (!(dmp.alpha_z > 0.0 && dmp.beta_z > 0.0 && dmp.alpha_x > 0.0))
        fail("alpha_z", "DMP constants must be positive");
    if (std::abs(dmp.alpha_z - 4.0 * dmp.beta_z) > 1e-12 * dmp.alpha_z)
        fail("beta_z", "alpha_z must equal 4 beta_z");
    if (goal_angles && goal_angles->size() != dofs)
        fail("goal_angles", "needs exactly D values");
}

Pi2Config ExperimentConfig::optimizer_config() const
{
    Pi2Config c;
    c.eliteness = eliteness;
    c.trials_per_update = trials_per_update;
    c.exploration_mode = exploration_mode;
    c.base_noise_level = base_noise_level;
    c.evaluation_rollout = true;
    switch (algorithm) {
    case Algorithm::Pi2: c.covariance_update = CovarianceUpdate::None; break;
    case Algorithm::Pi2Cma: c.covariance_update = CovarianceUpdate::CemStyle; break;
    case Algorithm::Pi2Cmaes: c.covariance_update = CovarianceUpdate::CmaesStyle; break;
    case Algorithm::Cem:
        c.covariance_update = CovarianceUpdate::CemStyle;
        c.per_timestep = false;
        break;
    case Algorithm::Cmaes:
        c.covariance_update = CovarianceUpdate::CmaesStyle;
        c.per_timestep = false;
        break;
    }
    return c;
}

void set_config_field(ExperimentConfig& c, std::string_view key, std::string_view value)
{
    if (key == "name") {
        c.name = std::string(value);
    } else if (key == "algorithm") {
        c.algorithm = parse_algorithm(value);
    } else if (key == "weighting") {
        const std::string kind = lower(value);
        if (kind == "pi2") c.eliteness.kind = Eliteness::Kind::Pi2;
        else if (kind == "cem") c.eliteness.kind = Eliteness::Kind::Cem;
        else if (kind == "cmaes") c.eliteness.kind = Eliteness::Kind::Cmaes;
        else bad_value(key, value, "one of pi2, cem, cmaes");
    } else if (key == "K") {
        c.trials_per_update = parse_small_int(key, value);
    } else if (key == "h") {
        c.eliteness.h = parse_double(key, value);
    } else if (key == "elite_count") {
        c.eliteness.elite_count = parse_small_int(key, value);
    } else if (key == "exploration") {
        c.exploration_mode = parse_exploration(value);
    } else if (key == "lambda_init") {
        c.lambda_init = parse_double(key, value);
    } else if (key == "base_noise_level") {
        c.base_noise_level = parse_double(key, value);
    } else if (key == "updates") {
        c.updates = parse_small_int(key, value);
    } else if (key == "replications") {
        c.replications = parse_small_int(key, value);
    } else if (key == "seed") {
        const long long s = parse_int(key, value);
        if (s < 0)
            bad_value(key, value, "a non-negative integer");
        c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "dt") {
        c.dt = parse_double(key, value);
    } else if (key == "duration") {
        c.duration = parse_double(key, value);
    } else if (key == "viapoint_x") {
        c.viapoint.x() = parse_double(key, value);
    } else if (key == "viapoint_y") {
        c.viapoint.y() = parse_double(key, value);
    } else if (key == "viapoint_time") {
        c.viapoint_time = parse_double(key, value);
    } else if (key == "viapoint_weight") {
        c.viapoint_weight = parse_double(key, value);
    } else if (key == "D") {
        c.dofs = parse_small_int(key, value);
    } else if (key == "B") {
        c.basis_count = parse_small_int(key, value);
    } else if (key == "alpha_z") {
        c.dmp.alpha_z = parse_double(key, value);
    } else if (key == "beta_z") {
        c.dmp.beta_z = parse_double(key, value);
    } else if (key == "alpha_x") {
        c.dmp.alpha_x = parse_double(key, value);
    } else if (key == "goal_angles") {
        std::vector<double> values;
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            values.push_back(parse_double(key, trim(rest.substr(0, comma))));
            if (comma == std::string_view::npos)
                break;
            rest = rest.substr(comma + 1);
        }
        c.goal_angles = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    } else {
        throw ConfigError("unknown field '" + std::string(key) + "'");
    }
}

ExperimentConfig parse_config(std::istream& in)
{
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<int> lines;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        for (const auto& [k, v] : entries)
            if (k == key)
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate field '" + key + "'");
        entries.emplace_back(std::move(key), std::move(value));
        lines.push_back(line_no);
    }

    ExperimentConfig config;
    // The algorithm picks the default weighting, so it is applied before any explicit override.
    for (const auto& [k, v] : entries) {
        if (k != "algorithm")
            continue;
        set_config_field(config, k, v);
        if (config.algorithm == Algorithm::Cem) config.eliteness.kind = Eliteness::Kind::Cem;
        if (config.algorithm == Algorithm::Cmaes) config.eliteness.kind = Eliteness::Kind::Cmaes;
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first == "algorithm")
            continue;
        try {
            set_config_field(config, entries[i].first, entries[i].second);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lines[i]) + ": " + e.what());
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_config(std::ostream& out, const ExperimentConfig& c)
{
    out << "name = " << c.name << '\n'
        << "algorithm = " << to_string(c.algorithm) << '\n'
        << "weighting = " << weighting_name(c.eliteness.kind) << '\n'
        << "K = " << c.trials_per_update << '\n';
    if (c.eliteness.kind == Eliteness::Kind::Pi2)
        out << "h = " << format_double(c.eliteness.h) << '\n';
    else
        out << "elite_count = " << c.eliteness.elite_count << '\n';
    out << "exploration = " << to_string(c.exploration_mode) << '\n'
        << "lambda_init = " << format_double(c.lambda_init) << '\n'
        << "base_noise_level = " << format_double(c.base_noise_level) << '\n'
        << "updates = " << c.updates << '\n'
        << "replications = " << c.replications << '\n'
        << "seed = " << c.seed << '\n'
        << "dt = " << format_double(c.dt) << '\n'
        << "duration = " << format_double(c.duration) << '\n'
        << "viapoint_x = " << format_double(c.viapoint.x()) << '\n'
        << "viapoint_y = " << format_double(c.viapoint.y()) << '\n'
        << "viapoint_time = " << format_double(c.viapoint_time) << '\n'
        << "viapoint_weight = " << format_double(c.viapoint_weight) << '\n'
        << "D = " << c.dofs << '\n'
        << "B = " << c.basis_count << '\n'
        << "alpha_z = " << format_double(c.dmp.alpha_z) << '\n'
        << "beta_z = " << format_double(c.dmp.beta_z) << '\n'
        << "alpha_x = " << format_double(c.dmp.alpha_x) << '\n';
    if (c.goal_angles) {
        out << "goal_angles = ";
        for (Eigen::Index d = 0; d < c.goal_angles->size(); ++d)
            out << (d ? "," : "") << format_double((*c.goal_angles)(d));
        out << '\n';
    }
}

void write_learning_curve_csv(std::ostream& out, const LearningCurve& curve)
{
    const Eigen::Index dofs = curve.rows.empty() ? 0 : curve.rows.front().lambda_dof.size();
    out << "update,noise_free_cost,mean_batch_cost,lambda_mean";
    for (Eigen::Index d = 1; d <= dofs; ++d)
        out << ",lambda_dof_" << d;
    out << '\n' << std::setprecision(17);
    for (const auto& row : curve.rows) {
        out << row.update << ',' << row.noise_free_cost << ',' << row.mean_batch_cost << ',' << row.lambda_mean;
        for (Eigen::Index d = 0; d < row.lambda_dof.size(); ++d)
            out << ',' << row.lambda_dof(d);
        out << '\n';
    }
    if (curve.error)
        out << "# error: " << *curve.error << '\n';
}

LearningCurve read_learning_curve_csv(std::istream& in)
{
    LearningCurve curve;
    std::string line;
    if (!std::getline(in, line) || line.rfind("update,noise_free_cost,mean_batch_cost,lambda_mean", 0) != 0)
        throw ArgumentError("not a learning-curve CSV (bad header)");
    const auto dofs = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) - 3;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        if (line.rfind("# error: ", 0) == 0) {
            curve.error = line.substr(9);
            continue;
        }
        std::vector<double> fields;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            fields.push_back(parse_double("csv line " + std::to_string(line_no), cell));
        if (static_cast<Eigen::Index>(fields.size()) != 4 + dofs)
            throw ArgumentError("learning-curve line " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields");
        LearningCurveRow row;
        row.update = static_cast<int>(fields[0]);
        row.noise_free_cost = fields[1];
        row.mean_batch_cost = fields[2];
        row.lambda_mean = fields[3];
        row.lambda_dof = Eigen::Map<const Eigen::VectorXd>(fields.data() + 4, dofs);
        curve.rows.push_back(std::move(row));
    }
    return curve;
}

TaskSetup make_task(const ExperimentConfig& config)
{
    config.validate();
    TaskSetup s;
    s.arm = ArmModel::uniform(config.dofs, 1.0);
    s.task = ViapointTask::standard(config.dofs);
    s.task.viapoint = config.viapoint;
    s.task.viapoint_time = config.viapoint_time;
    s.task.viapoint_weight = config.viapoint_weight;
    s.task.duration = config.duration;
    s.task.validate();

    const Eigen::VectorXd start = Eigen::VectorXd::Zero(config.dofs);
    const Eigen::VectorXd goal = config.goal_angles ? *config.goal_angles : final_posture(s.arm);
    const DmpPolicy templ = DmpPolicy::make(start, goal, config.duration, config.basis_count, config.dmp);
    s.policy = train_from_trajectory(min_jerk(start, goal, config.duration, config.dt), templ);
    return s;
}

Eigen::VectorXd rollout_costs(const TaskSetup& setup, double dt, const WeightOffsets* offsets)
{
    return viapoint_cost(setup.task, setup.arm, integrate(setup.policy, dt, offsets));
}

LearningCurve run_replication(const ExperimentConfig& config, std::uint64_t seed)
{
    TaskSetup setup = make_task(config);
    const Pi2Config opt = config.optimizer_config();
    const Eigen::Index dofs = config.dofs;
    const Eigen::Index basis = config.basis_count;
    const Eigen::Index steps = step_count(config.duration, config.dt);
    const Eigen::MatrixXd activations = activations_over_time(setup.policy, config.dt);

    std::vector<GaussianSearchDistribution> dists;
    std::vector<CmaesState> cmaes_states;
    for (Eigen::Index d = 0; d < dofs; ++d) {
        dists.push_back(GaussianSearchDistribution::isotropic(setup.policy.theta.row(d).transpose(),
                                                              config.lambda_init));
        cmaes_states.push_back(CmaesState::initial(basis));
    }

    LearningCurve curve;
    curve.rows.reserve(static_cast<std::size_t>(config.updates) + 1);
    for (int u = 0; u <= config.updates; ++u) {
        for (Eigen::Index d = 0; d < dofs; ++d)
            setup.policy.theta.row(d) = dists[static_cast<std::size_t>(d)].mean.transpose();

        RolloutBatch batch;
        batch.evaluation_cost = rollout_costs(setup, config.dt).sum();
        batch.step_costs.resize(config.trials_per_update, steps);
        try {
            for (int k = 0; k < config.trials_per_update; ++k) {
                Rng rng = make_rng(seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(k));
                WeightOffsets offsets = generate_rollout_offsets(opt.exploration_mode, dists, steps, activations, rng);
                batch.step_costs.row(k) = rollout_costs(setup, config.dt, &offsets).transpose();
                batch.offsets.push_back(std::move(offsets));
            }
        } catch (const std::runtime_error& e) {
            curve.error = "sampling at update " + std::to_string(u) + " failed: " + e.what();
            break;
        }

        LearningCurveRow row;
        row.update = u;
        row.noise_free_cost = *batch.evaluation_cost;
        row.mean_batch_cost = batch.step_costs.rowwise().sum().mean();
        row.lambda_dof.resize(dofs);
        for (Eigen::Index d = 0; d < dofs; ++d)
            row.lambda_dof(d) = exploration_magnitude(dists[static_cast<std::size_t>(d)].effective_covariance());
        row.lambda_mean = row.lambda_dof.mean();

        if (!std::isfinite(row.noise_free_cost) || !std::isfinite(row.mean_batch_cost)) {
            curve.error = "non-finite cost at update " + std::to_string(u);
            break;
        }
        curve.rows.push_back(row);
        if (u == config.updates)
            break;

        try {
            UpdateReport report = pi2_update(batch, opt, dists, cmaes_states);
            dists = std::move(report.distributions);
            if (!report.cmaes_states.empty())
                cmaes_states = std::move(report.cmaes_states);
        } catch (const std::runtime_error& e) {
            curve.error = "update " + std::to_string(u) + " failed: " + e.what();
            break;
        }
    }
    return curve;
}

std::vector<LearningCurve> run(const ExperimentConfig& config, int jobs)
{
    config.validate();
    const int reps = config.replications;
    std::vector<LearningCurve> curves(static_cast<std::size_t>(reps));
    jobs = std::clamp(jobs, 1, reps);
    if (jobs == 1) {
        for (int r = 0; r < reps; ++r)
            curves[r] = run_replication(config, config.seed + static_cast<std::uint64_t>(r));
        return curves;
    }
    for (int first = 0; first < reps; first += jobs) {
        std::vector<std::future<LearningCurve>> pending;
        for (int r = first; r < std::min(reps, first + jobs); ++r)
            pending.push_back(std::async(std::launch::async, run_replication, std::cref(config),
                                         config.seed + static_cast<std::uint64_t>(r)));
        for (std::size_t i = 0; i < pending.size(); ++i)
            curves[first + i] = pending[i].get();
    }
    return curves;
}

std::vector<ExperimentConfig> preset(std::string_view name)
{
    std::vector<ExperimentConfig> out;
    if (name == "fig3") {
        for (ExplorationMode mode :
             {ExplorationMode::TimeVarying, ExplorationMode::PerBasis, ExplorationMode::Constant}) {
            ExperimentConfig c;
            c.name = "fig3_" + std::string(to_string(mode));
            c.algorithm = Algorithm::Pi2;
            c.trials_per_update = 10;
            c.eliteness = Eliteness::pi2(10.0);
            c.exploration_mode = mode;
            c.lambda_init = 1e4;
            c.updates = 100;
            c.replications = 5;
            out.push_back(c);
        }
    } else if (name == "fig5") {
        auto base = [] {
            ExperimentConfig c;
            c.algorithm = Algorithm::Pi2;
            c.trials_per_update = 10;
            c.lambda_init = 1e4;
            c.updates = 100;
            c.replications = 3;
            return c;
        };
        for (double h : {10.0, 5.0}) {
            ExperimentConfig c = base();
            c.eliteness = Eliteness::pi2(h);
            c.name = "fig5_pi2_h" + std::to_string(static_cast<int>(h));
            out.push_back(c);
        }
        for (int ke : {3, 5}) {
            for (auto kind : {Eliteness::Kind::Cem, Eliteness::Kind::Cmaes}) {
                ExperimentConfig c = base();
                c.eliteness = {kind, 10.0, ke};
                c.name = "fig5_" + std::string(weighting_name(kind)) + "_ke" + std::to_string(ke);
                out.push_back(c);
            }
        }
    } else if (name == "fig6") {
        for (Algorithm algo : {Algorithm::Pi2, Algorithm::Pi2Cma}) {
            for (int exponent : {2, 4, 6}) {
                ExperimentConfig c;
                c.algorithm = algo;
                c.name = std::string(algo == Algorithm::Pi2 ? "fig6_pi2_fixed" : "fig6_pi2cma") + "_lambda1e" +
                         std::to_string(exponent);
                c.trials_per_update = 20;
                c.eliteness = Eliteness::pi2(10.0);
                c.lambda_init = std::pow(10.0, exponent);
                c.base_noise_level = algo == Algorithm::Pi2 ? 0.0 : 100.0;
                c.updates = 200;
                c.replications = 5;
                out.push_back(c);
            }
        }
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig3, fig5 or fig6)");
    }
    for (const auto& c : out)
        c.validate();
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<LearningCurve>& curves)
{
    if (curves.empty())
        throw ArgumentError("aggregate needs at least one learning curve");
    std::size_t rows = curves.front().rows.size();
    for (const auto& c : curves)
        rows = std::min(rows, c.rows.size());

    const auto n = static_cast<double>(curves.size());
    std::vector<AggregateRow> out;
    out.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        AggregateRow row;
        row.update = curves.front().rows[i].update;
        for (const auto& c : curves) {
            if (c.rows[i].update != row.update)
                throw ArgumentError("learning curves disagree on update indices");
            row.cost_mean += c.rows[i].noise_free_cost / n;
            row.lambda_mean += c.rows[i].lambda_mean / n;
        }
        if (curves.size() > 1) {
            double cost_ss = 0.0;
            double lambda_ss = 0.0;
            for (const auto& c : curves) {
                cost_ss += std::pow(c.rows[i].noise_free_cost - row.cost_mean, 2);
                lambda_ss += std::pow(c.rows[i].lambda_mean - row.lambda_mean, 2);
            }
            row.cost_std = std::sqrt(cost_ss / (n - 1.0));
            row.lambda_std = std::sqrt(lambda_ss / (n - 1.0));
        }
        out.push_back(row);
    }
    return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows)
{
    out << "update,cost_mean,cost_std,lambda_mean,lambda_std\n" << std::setprecision(17);
    for (const auto& r : rows)
        out << r.update << ',' << r.cost_mean << ',' << r.cost_std << ',' << r.lambda_mean << ','
            << r.lambda_std << '\n';
}

} // namespace pi2cma
