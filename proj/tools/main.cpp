#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dsservo/config.hpp"
#include "dsservo/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

dsservo::cli::ScenarioConfig load_target(const std::string& target) {
    const auto preset_map = dsservo::cli::presets();
    if (auto it = preset_map.find(target); it != preset_map.end()) return it->second;

    std::ifstream in(target, std::ios::binary);
    if (!in) throw dsservo::ConfigError("no such preset or config file: " + target);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    const bool is_json = std::filesystem::path(target).extension() == ".json";
    auto cfg = is_json ? dsservo::cli::parse_config_json(text)
                       : dsservo::cli::parse_config(text);
    if (cfg.name == "scenario")
        cfg.name = std::filesystem::path(target).stem().string();
    return cfg;
}

std::vector<std::string> split_targets(const std::string& spec) {
    std::vector<std::string> out;
    if (spec == "all") {
        for (const auto& [name, cfg] : dsservo::cli::presets()) out.push_back(name);
        return out;
    }
    std::string item;
    std::istringstream ss(spec);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-stage disk servo simulator with adaptive disturbance rejection"};
    app.require_subcommand(1);

    std::string target;
    std::string out_dir;
    std::string format = "csv";
    std::optional<std::uint32_t> seed;
    int jobs = 1;

    auto* run = app.add_subcommand(
        "run", "run a scenario config file or preset (fig2, fig4, fig5, fig6, fig7, "
               "table1-vcm, table1-ma, all, or a comma-separated list)");
    run->add_option("target", target, "config path, preset name, list, or 'all'")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--jobs", jobs, "run independent scenarios in parallel")
        ->check(CLI::PositiveNumber);
    run->add_option("--format", format, "csv or csv+svg")
        ->check(CLI::IsMember({"csv", "csv+svg"}));

    CLI11_PARSE(app, argc, argv);

    dsservo::cli::RunOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.format = format == "csv+svg" ? dsservo::cli::OutputFormat::csv_svg
                                      : dsservo::cli::OutputFormat::csv;

    std::vector<dsservo::cli::ScenarioConfig> configs;
    try {
        for (const auto& t : split_targets(target)) configs.push_back(load_target(t));
    } catch (const dsservo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    std::mutex log_mutex;
    int exit_code = kExitOk;
    auto execute = [&](const dsservo::cli::ScenarioConfig& cfg) {
        try {
            dsservo::cli::run_scenario(cfg, opts);
        } catch (const dsservo::ConfigError& e) {
            std::scoped_lock lk(log_mutex);
            std::cerr << "[" << cfg.name << "] config error: " << e.what() << "\n";
            if (exit_code == kExitOk) exit_code = kExitConfigError;
        } catch (const dsservo::NonFinite& e) {
            std::scoped_lock lk(log_mutex);
            std::cerr << "[" << cfg.name << "] numerical blow-up: " << e.what() << "\n";
            if (exit_code == kExitOk) exit_code = kExitNumericalError;
        } catch (const std::exception& e) {
            std::scoped_lock lk(log_mutex);
            std::cerr << "[" << cfg.name << "] error: " << e.what() << "\n";
            if (exit_code == kExitOk) exit_code = kExitNumericalError;
        }
    };

    if (jobs <= 1 || configs.size() <= 1) {
        for (const auto& cfg : configs) execute(cfg);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex next_mutex;
        const int workers = std::min<int>(jobs, static_cast<int>(configs.size()));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::scoped_lock lk(next_mutex);
                        if (next >= configs.size()) return;
                        i = next++;
                    }
                    execute(configs[i]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return exit_code;
}
