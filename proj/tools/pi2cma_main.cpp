#include "pi2cma/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace pi2cma;

namespace {

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

fs::path replication_file(const fs::path& dir, int r)
{
    char name[32];
    std::snprintf(name, sizeof name, "rep_%03d.csv", r);
    return dir / name;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, const fs::path& out_root,
            int jobs)
{
    ExperimentConfig config = load_config(config_path);
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        set_config_field(config, o.substr(0, eq), o.substr(eq + 1));
    }
    config.validate();

    const fs::path dir = out_root / config.name;
    fs::create_directories(dir);
    {
        auto cfg = open_out(dir / "config.txt");
        write_config(cfg, config);
    }

    std::cerr << "running " << config.name << ": " << config.replications << " replication(s), " << config.updates
              << " updates\n";
    const auto curves = run(config, jobs);

    int aborted = 0;
    for (std::size_t r = 0; r < curves.size(); ++r) {
        auto out = open_out(replication_file(dir, static_cast<int>(r)));
        write_learning_curve_csv(out, curves[r]);
        const auto& c = curves[r];
        std::cout << "seed " << config.seed + r << ": ";
        if (!c.rows.empty())
            std::cout << "cost " << c.rows.front().noise_free_cost << " -> " << c.rows.back().noise_free_cost
                      << ", lambda " << c.rows.back().lambda_mean;
        if (c.error) {
            ++aborted;
            std::cout << " (aborted: " << *c.error << ")";
        }
        std::cout << '\n';
    }
    std::cout << "wrote " << curves.size() << " learning curve(s) to " << dir.string() << '\n';
    if (aborted > 0) {
        std::cerr << "error: " << aborted << " replication(s) aborted\n";
        return 3;
    }
    return 0;
}

int cmd_preset(const std::string& name, const fs::path& out_dir)
{
    const auto configs = preset(name);
    fs::create_directories(out_dir);
    for (const auto& c : configs) {
        const fs::path path = out_dir / (c.name + ".cfg");
        auto out = open_out(path);
        write_config(out, c);
        std::cout << path.string() << '\n';
    }
    return 0;
}

// Aggregates rep_*.csv in `dir`, or in each immediate subdirectory that has them.
int cmd_aggregate(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw std::runtime_error(dir.string() + " is not a directory");

    auto replications = [](const fs::path& d) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(d)) {
            const std::string name = e.path().filename().string();
            if (e.is_regular_file() && name.rfind("rep_", 0) == 0 && e.path().extension() == ".csv")
                files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        return files;
    };

    std::vector<fs::path> targets;
    if (!replications(dir).empty()) {
        targets.push_back(dir);
    } else {
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && !replications(e.path()).empty())
                targets.push_back(e.path());
        std::sort(targets.begin(), targets.end());
    }
    if (targets.empty())
        throw std::runtime_error("no rep_*.csv learning curves under " + dir.string());

    for (const auto& t : targets) {
        std::vector<LearningCurve> curves;
        for (const auto& f : replications(t)) {
            std::ifstream in(f);
            curves.push_back(read_learning_curve_csv(in));
        }
        const fs::path out_path = t / "aggregate.csv";
        auto out = open_out(out_path);
        write_aggregate_csv(out, aggregate(curves));
        std::cout << out_path.string() << " (" << curves.size() << " replications)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"PI2 / PI2-CMA / CEM / CMA-ES experiments on the planar-arm viapoint task"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::string out_root = "results";
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto* run_cmd = app.add_subcommand("run", "Run one experiment config and write per-replication CSVs");
    run_cmd->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed, "Override the base seed");
    run_cmd->add_option("--replications", replications, "Override the replication count")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", out_root, "Output root; files go to <out>/<name>/")->capture_default_str();
    run_cmd->add_option("--jobs", jobs, "Replications run concurrently")->check(CLI::PositiveNumber);

    std::string preset_name;
    std::string preset_out;
    auto* preset_cmd = app.add_subcommand("preset", "Write the config files of a figure's experiment matrix");
    preset_cmd->add_option("name", preset_name, "fig3, fig5 or fig6")->required();
    preset_cmd->add_option("--out", preset_out, "Directory for the .cfg files")->required();

    std::string aggregate_dir;
    auto* aggregate_cmd = app.add_subcommand("aggregate", "Mean and std over replications per update");
    aggregate_cmd->add_option("dir", aggregate_dir, "Run directory, or a root holding run directories")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            std::vector<std::string> overrides;
            if (seed)
                overrides.push_back("seed=" + std::to_string(*seed));
            if (replications)
                overrides.push_back("replications=" + std::to_string(*replications));
            return cmd_run(config_path, overrides, out_root, jobs);
        }
        if (*preset_cmd)
            return cmd_preset(preset_name, preset_out);
        return cmd_aggregate(aggregate_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
