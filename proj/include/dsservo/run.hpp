#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsservo/config.hpp"
#include "dsservo/errors.hpp"
#include "dsservo/metrics.hpp"
#include "dsservo/servo.hpp"
#include "dsservo/svg_plot.hpp"
#include "dsservo/trace_io.hpp"

namespace dsservo::cli {

struct RunSummary {
    std::string name;
    std::optional<double> fitness_nrmse;
    std::optional<double> fitness_vaf;
    std::vector<double> identified_a;
    std::vector<double> identified_b;
    std::optional<long> convergence_iterations;
    std::optional<double> overshoot_pct;
    std::optional<double> settling_time_s;
    std::optional<double> rise_time_s;
    std::optional<double> peak_ff_off;
    std::optional<double> peak_ff_on;
    std::optional<double> rms_ratio;
    double wall_seconds = 0.0;
    std::vector<std::string> files;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        auto set = [&](const char* key, const auto& opt) {
            if (opt) j[key] = *opt;
        };
        set("fitness_nrmse_pct", fitness_nrmse);
        set("fitness_vaf_pct", fitness_vaf);
        if (!identified_a.empty()) {
            j["identified_a"] = identified_a;
            j["identified_b"] = identified_b;
        }
        set("convergence_iterations", convergence_iterations);
        set("overshoot_pct", overshoot_pct);
        set("settling_time_s", settling_time_s);
        set("rise_time_s", rise_time_s);
        set("steady_state_peak_ff_off", peak_ff_off);
        set("steady_state_peak_ff_on", peak_ff_on);
        set("rms_ratio_ff_on_over_off", rms_ratio);
        j["wall_seconds"] = wall_seconds;
        j["files"] = files;
        return j;
    }
};

struct RunOptions {
    std::string out_dir;  // overrides config.output_dir when non-empty
    std::optional<std::uint32_t> seed;
    OutputFormat format = OutputFormat::csv;
    bool quiet = false;
};

namespace detail {

/// First update index after which the parameter trajectory stays within 1%
/// of its final value.
inline std::optional<long> convergence_iterations(const servo::SimulationTrace& trace) {
    if (trace.records.empty() || trace.theta_dim == 0) return std::nullopt;
    const auto& final_theta = trace.records.back().theta;
    double final_norm = 0.0;
    for (double v : final_theta) final_norm += v * v;
    final_norm = std::sqrt(final_norm);
    if (final_norm == 0.0) return std::nullopt;

    long converged_at = static_cast<long>(trace.records.size());
    for (long i = static_cast<long>(trace.records.size()) - 1; i >= 0; --i) {
        const auto& th = trace.records[static_cast<std::size_t>(i)].theta;
        double dist = 0.0;
        for (std::size_t j = 0; j < th.size(); ++j)
            dist += (th[j] - final_theta[j]) * (th[j] - final_theta[j]);
        if (std::sqrt(dist) > 0.01 * final_norm) break;
        converged_at = i;
    }
    return converged_at + 1;  // 1-based count of updates spent
}

inline double rms(const std::vector<double>& v, double t_from,
                  const std::vector<double>& t) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (t[i] >= t_from) {
            acc += v[i] * v[i];
            ++n;
        }
    return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
}

}  // namespace detail

inline void fill_step_metrics(RunSummary& summary, const servo::SimulationTrace& trace,
                              double y_ss) {
    const auto t = trace.column_t();
    const auto y = trace.column_y();
    summary.overshoot_pct = metrics::overshoot(y, y_ss);
    try {
        summary.settling_time_s = metrics::settling_time(y, t, y_ss);
    } catch (const NeverSettles&) {
        summary.settling_time_s = std::nullopt;
    }
    try {
        summary.rise_time_s = metrics::rise_time(y, t, y_ss);
    } catch (const NoCrossing&) {
        summary.rise_time_s = std::nullopt;
    }
}

/// Execute one scenario: optional identification phase, then the configured
/// tracking phase(s); write trace CSVs, plots, and a JSON summary.
inline RunSummary run_scenario(ScenarioConfig config, const RunOptions& opts) {
    const auto t_start = std::chrono::steady_clock::now();
    validate(config);
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    if (opts.seed) {
        config.seed = *opts.seed;
        config.disturbance.seed = *opts.seed;
    }

    std::filesystem::create_directories(config.output_dir);
    RunSummary summary;
    summary.name = config.name;

    auto file_path = [&](const std::string& suffix) {
        return (std::filesystem::path(config.output_dir) / (config.name + suffix)).string();
    };
    auto emit = [&](const servo::SimulationTrace& trace, const std::string& stem,
                    std::initializer_list<PlotKind> plots) {
        const std::string csv = file_path(stem + ".csv");
        write_trace_csv(trace, csv);
        summary.files.push_back(csv);
        if (opts.format == OutputFormat::csv_svg && !trace.records.empty()) {
            for (PlotKind kind : plots) {
                const char* tag = kind == PlotKind::head_position     ? "_head_position"
                                  : kind == PlotKind::theta_convergence ? "_theta_convergence"
                                                                        : "_d_vs_dhat";
                const std::string svg = file_path(stem + tag + ".svg");
                emit_plot(trace, svg, kind);
                summary.files.push_back(svg);
            }
        }
    };

    servo::DualStageLoop loop(config.loop_setup());

    // identification phase
    if (config.feedforward == FeedforwardMode::identified) {
        auto [model, id_trace] =
            servo::run_identification(loop, config.disturbance, config.identification_duration);
        const auto d = id_trace.column_d_hat();  // predictions
        std::vector<double> d_meas;
        d_meas.reserve(id_trace.records.size());
        const bool direct =
            config.identification_signal == servo::IdentificationSignal::direct;
        for (const auto& rec : id_trace.records) d_meas.push_back(direct ? rec.d : -rec.y);
        if (d_meas.size() >= 2) {
            summary.fitness_nrmse = metrics::fitness(d_meas, d);
            summary.fitness_vaf = metrics::fitness_vaf(d_meas, d);
            model.fitness = summary.fitness_nrmse;
        }
        summary.identified_a = model.a;
        summary.identified_b = model.b;
        summary.convergence_iterations = detail::convergence_iterations(id_trace);
        loop.install_feedforward(model);
        emit(id_trace, "_identify", {PlotKind::d_vs_dhat, PlotKind::theta_convergence});
    } else if (config.feedforward == FeedforwardMode::oracle) {
        loop.install_oracle_feedforward();
        summary.identified_a = config.true_g_a;
        summary.identified_b = config.true_g_b;
    }

    // tracking phase(s)
    if (config.feedforward == FeedforwardMode::off) {
        servo::SimulationTrace trace =
            servo::run_tracking(loop, config.reference, config.disturbance, config.duration,
                                /*feedforward_on=*/false);
        if (!trace.records.empty()) {
            const auto t = trace.column_t();
            const auto y = trace.column_y();
            summary.peak_ff_off = metrics::steady_state_peak(y, t, config.steady_state_window);
        }
        if (config.reference.kind == servo::ReferenceProfile::Kind::step &&
            !trace.records.empty())
            fill_step_metrics(summary, trace, config.reference.amplitude);
        emit(trace, "_track", {PlotKind::head_position});
    } else {
        servo::SimulationTrace off_trace =
            servo::run_tracking(loop, config.reference, config.disturbance, config.duration,
                                /*feedforward_on=*/false);
        servo::SimulationTrace on_trace =
            servo::run_tracking(loop, config.reference, config.disturbance, config.duration,
                                /*feedforward_on=*/true);
        if (!off_trace.records.empty()) {
            const auto t_off = off_trace.column_t();
            const auto y_off = off_trace.column_y();
            const auto t_on = on_trace.column_t();
            const auto y_on = on_trace.column_y();
            summary.peak_ff_off =
                metrics::steady_state_peak(y_off, t_off, config.steady_state_window);
            summary.peak_ff_on =
                metrics::steady_state_peak(y_on, t_on, config.steady_state_window);
            const double from = t_off.back() - config.steady_state_window;
            const double rms_off = detail::rms(y_off, from, t_off);
            const double rms_on = detail::rms(y_on, from, t_on);
            if (rms_off > 0.0) summary.rms_ratio = rms_on / rms_off;
        }
        emit(off_trace, "_track_ff_off", {PlotKind::head_position});
        emit(on_trace, "_track_ff_on", {PlotKind::head_position});
    }

    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    const std::string summary_path = file_path("_summary.json");
    std::ofstream js(summary_path, std::ios::binary);
    if (!js) throw IoError("cannot open for writing: " + summary_path);
    js << summary.to_json().dump(2) << '\n';
    summary.files.push_back(summary_path);

    if (!opts.quiet) {
        std::cout << "[" << summary.name << "] wrote " << summary.files.size() << " files to "
                  << config.output_dir << "\n";
        if (summary.fitness_nrmse)
            std::cout << "[" << summary.name << "] fitness " << *summary.fitness_nrmse
                      << " % (nrmse)\n";
        if (summary.rms_ratio)
            std::cout << "[" << summary.name << "] steady-state rms ratio ff on/off "
                      << *summary.rms_ratio << "\n";
        if (summary.overshoot_pct)
            std::cout << "[" << summary.name << "] overshoot " << *summary.overshoot_pct
                      << " %\n";
    }
    return summary;
}

}  // namespace dsservo::cli
