#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsservo/errors.hpp"
#include "dsservo/models.hpp"
#include "dsservo/servo.hpp"

namespace dsservo::cli {

enum class FeedforwardMode { off, identified, oracle };
enum class OutputFormat { csv, csv_svg };

/// Complete description of one simulation scenario. Field defaults reproduce
/// the stock experiment setup: 0.2 ms sampling, n = m = 2, P(1) = 1e4 I,
/// zero initial parameters, 1e4-amplitude sine disturbance.
struct ScenarioConfig {
    std::string name = "scenario";
    double sample_interval = servo::kDefaultSampleInterval;
    int oversample = servo::kDefaultOversample;
    double duration = 0.0;  // tracking phase, required
    servo::ReferenceProfile reference;
    servo::DisturbanceSource disturbance{servo::DisturbanceKind::sine,
                                         servo::kDefaultSineAmplitude, 100.0, 1};
    std::vector<double> true_g_a = servo::default_disturbance_a();
    std::vector<double> true_g_b = servo::default_disturbance_b();
    int est_n = 2;
    int est_m = 2;
    double p_init_scale = servo::kDefaultCovarianceScale;
    std::vector<double> theta_init;  // empty = zeros
    sysid::LambdaPolicy lambda_policy = sysid::LambdaPolicy::fixed(1.0);
    sysid::PredictionConvention convention = sysid::PredictionConvention::current_regressor;
    servo::IdentificationSignal identification_signal = servo::IdentificationSignal::direct;
    double identification_duration = 0.8;
    FeedforwardMode feedforward = FeedforwardMode::off;
    control::PidGains pid_v = servo::vcm_pid_gains();
    control::PidGains pid_m = servo::micro_actuator_pid_gains();
    double sat_lower = -1.0;
    double sat_upper = 1.0;
    servo::LoopStructure loop = servo::LoopStructure::dual;
    double steady_state_window = 0.2;
    std::string output_dir = "out";
    std::uint32_t seed = 1;

    servo::DualStageLoop::Setup loop_setup() const {
        servo::DualStageLoop::Setup s;
        s.ts = sample_interval;
        s.oversample = oversample;
        s.structure = loop;
        s.pid_v = pid_v;
        s.pid_m = pid_m;
        s.sat_lower = sat_lower;
        s.sat_upper = sat_upper;
        s.true_g_a = true_g_a;
        s.true_g_b = true_g_b;
        s.est_n = est_n;
        s.est_m = est_m;
        s.p_init_scale = p_init_scale;
        s.theta_init = theta_init;
        s.lambda_policy = lambda_policy;
        s.convention = convention;
        s.identification_signal = identification_signal;
        return s;
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value for '" + key + "': " + v);
    }
}

inline long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer value for '" + key + "': " + v);
    }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace detail

/// Canonical flat key=value rendering; reparsing it reproduces the config
/// exactly (doubles are written with 17 significant digits).
inline std::string serialize(const ScenarioConfig& c) {
    using detail::format_double;
    std::ostringstream out;
    out << "name=" << c.name << '\n';
    out << "duration=" << format_double(c.duration) << '\n';
    out << "sample_interval=" << format_double(c.sample_interval) << '\n';
    out << "oversample=" << c.oversample << '\n';
    out << "loop=" << (c.loop == servo::LoopStructure::dual      ? "dual"
                       : c.loop == servo::LoopStructure::vcm_only ? "vcm_only"
                                                                  : "ma_only")
        << '\n';
    if (c.reference.kind == servo::ReferenceProfile::Kind::zero)
        out << "reference=zero\n";
    else
        out << "reference=step:" << format_double(c.reference.amplitude) << '\n';
    out << "disturbance.kind="
        << (c.disturbance.kind == servo::DisturbanceKind::none      ? "none"
            : c.disturbance.kind == servo::DisturbanceKind::sine ? "sine"
                                                                 : "uniform_random")
        << '\n';
    out << "disturbance.amplitude=" << format_double(c.disturbance.amplitude) << '\n';
    out << "disturbance.frequency=" << format_double(c.disturbance.frequency) << '\n';
    out << "disturbance.seed=" << c.disturbance.seed << '\n';
    out << "true_g.a=" << detail::format_list(c.true_g_a) << '\n';
    out << "true_g.b=" << detail::format_list(c.true_g_b) << '\n';
    out << "estimator.n=" << c.est_n << '\n';
    out << "estimator.m=" << c.est_m << '\n';
    out << "estimator.p_init_scale=" << format_double(c.p_init_scale) << '\n';
    out << "estimator.theta_init=" << detail::format_list(c.theta_init) << '\n';
    if (c.lambda_policy.kind == sysid::LambdaPolicy::Kind::fixed)
        out << "estimator.lambda=fixed:" << format_double(c.lambda_policy.value) << '\n';
    else
        out << "estimator.lambda=fixed_trace\n";
    out << "estimator.convention="
        << (c.convention == sysid::PredictionConvention::current_regressor ? "current"
                                                                           : "delayed")
        << '\n';
    out << "identification.signal="
        << (c.identification_signal == servo::IdentificationSignal::direct ? "direct"
                                                                           : "closed_loop")
        << '\n';
    out << "identification.duration=" << format_double(c.identification_duration) << '\n';
    out << "feedforward="
        << (c.feedforward == FeedforwardMode::off          ? "off"
            : c.feedforward == FeedforwardMode::identified ? "identified"
                                                           : "oracle")
        << '\n';
    out << "pid_v.p=" << format_double(c.pid_v.p) << '\n';
    out << "pid_v.i=" << format_double(c.pid_v.i) << '\n';
    out << "pid_v.d=" << format_double(c.pid_v.d) << '\n';
    out << "pid_v.n=" << format_double(c.pid_v.n) << '\n';
    out << "pid_m.p=" << format_double(c.pid_m.p) << '\n';
    out << "pid_m.i=" << format_double(c.pid_m.i) << '\n';
    out << "pid_m.d=" << format_double(c.pid_m.d) << '\n';
    out << "pid_m.n=" << format_double(c.pid_m.n) << '\n';
    out << "saturation.lower=" << format_double(c.sat_lower) << '\n';
    out << "saturation.upper=" << format_double(c.sat_upper) << '\n';
    out << "steady_state_window=" << format_double(c.steady_state_window) << '\n';
    out << "output_dir=" << c.output_dir << '\n';
    out << "seed=" << c.seed << '\n';
    return out.str();
}

namespace detail {

inline void apply_key(ScenarioConfig& c, const std::string& key, const std::string& value,
                      int line) {
    auto bad_value = [&](const std::string& allowed) {
        throw ConfigError("line " + std::to_string(line) + ": invalid value '" + value +
                          "' for " + key + " (expected " + allowed + ")");
    };
    if (key == "name") {
        c.name = value;
    } else if (key == "duration") {
        c.duration = parse_double(key, value);
    } else if (key == "sample_interval") {
        c.sample_interval = parse_double(key, value);
    } else if (key == "oversample") {
        c.oversample = static_cast<int>(parse_int(key, value));
    } else if (key == "loop") {
        if (value == "dual") c.loop = servo::LoopStructure::dual;
        else if (value == "vcm_only") c.loop = servo::LoopStructure::vcm_only;
        else if (value == "ma_only") c.loop = servo::LoopStructure::ma_only;
        else bad_value("dual|vcm_only|ma_only");
    } else if (key == "reference") {
        if (value == "zero") c.reference = servo::ReferenceProfile::zero();
        else if (value.rfind("step:", 0) == 0)
            c.reference = servo::ReferenceProfile::step(parse_double(key, value.substr(5)));
        else bad_value("zero|step:<amplitude>");
    } else if (key == "disturbance.kind") {
        if (value == "none") c.disturbance.kind = servo::DisturbanceKind::none;
        else if (value == "sine") c.disturbance.kind = servo::DisturbanceKind::sine;
        else if (value == "uniform_random")
            c.disturbance.kind = servo::DisturbanceKind::uniform_random;
        else bad_value("none|sine|uniform_random");
    } else if (key == "disturbance.amplitude") {
        c.disturbance.amplitude = parse_double(key, value);
    } else if (key == "disturbance.frequency") {
        c.disturbance.frequency = parse_double(key, value);
    } else if (key == "disturbance.seed") {
        c.disturbance.seed = static_cast<std::uint32_t>(parse_int(key, value));
    } else if (key == "true_g.a") {
        c.true_g_a = parse_list(key, value);
    } else if (key == "true_g.b") {
        c.true_g_b = parse_list(key, value);
    } else if (key == "estimator.n") {
        c.est_n = static_cast<int>(parse_int(key, value));
    } else if (key == "estimator.m") {
        c.est_m = static_cast<int>(parse_int(key, value));
    } else if (key == "estimator.p_init_scale") {
        c.p_init_scale = parse_double(key, value);
    } else if (key == "estimator.theta_init") {
        c.theta_init = value.empty() ? std::vector<double>{} : parse_list(key, value);
    } else if (key == "estimator.lambda") {
        if (value == "fixed_trace") c.lambda_policy = sysid::LambdaPolicy::fixed_trace();
        else if (value.rfind("fixed:", 0) == 0)
            c.lambda_policy = sysid::LambdaPolicy::fixed(parse_double(key, value.substr(6)));
        else bad_value("fixed:<lambda>|fixed_trace");
    } else if (key == "estimator.convention") {
        if (value == "current") c.convention = sysid::PredictionConvention::current_regressor;
        else if (value == "delayed") c.convention = sysid::PredictionConvention::delayed_regressor;
        else bad_value("current|delayed");
    } else if (key == "identification.signal") {
        if (value == "direct") c.identification_signal = servo::IdentificationSignal::direct;
        else if (value == "closed_loop")
            c.identification_signal = servo::IdentificationSignal::closed_loop;
        else bad_value("direct|closed_loop");
    } else if (key == "identification.duration") {
        c.identification_duration = parse_double(key, value);
    } else if (key == "feedforward") {
        if (value == "off") c.feedforward = FeedforwardMode::off;
        else if (value == "identified") c.feedforward = FeedforwardMode::identified;
        else if (value == "oracle") c.feedforward = FeedforwardMode::oracle;
        else bad_value("off|identified|oracle");
    } else if (key == "pid_v.p") c.pid_v.p = parse_double(key, value);
    else if (key == "pid_v.i") c.pid_v.i = parse_double(key, value);
    else if (key == "pid_v.d") c.pid_v.d = parse_double(key, value);
    else if (key == "pid_v.n") c.pid_v.n = parse_double(key, value);
    else if (key == "pid_m.p") c.pid_m.p = parse_double(key, value);
    else if (key == "pid_m.i") c.pid_m.i = parse_double(key, value);
    else if (key == "pid_m.d") c.pid_m.d = parse_double(key, value);
    else if (key == "pid_m.n") c.pid_m.n = parse_double(key, value);
    else if (key == "saturation.lower") c.sat_lower = parse_double(key, value);
    else if (key == "saturation.upper") c.sat_upper = parse_double(key, value);
    else if (key == "steady_state_window") c.steady_state_window = parse_double(key, value);
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "seed") c.seed = static_cast<std::uint32_t>(parse_int(key, value));
    else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
}

}  // namespace detail

inline void validate(const ScenarioConfig& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(c.duration > 0.0, "missing required field: duration");
    require(c.disturbance.kind != servo::DisturbanceKind::sine || c.disturbance.frequency > 0.0,
            "sine disturbance needs disturbance.frequency > 0");
    require(c.sample_interval > 0.0, "sample_interval must be positive");
    require(c.oversample >= 1, "oversample must be >= 1");
    require(c.disturbance.amplitude >= 0.0, "disturbance.amplitude must be >= 0");
    require(c.est_n >= 0 && c.est_m >= 0 && c.est_n + c.est_m >= 1,
            "estimator orders must satisfy n, m >= 0 and n + m >= 1");
    require(c.p_init_scale > 0.0, "estimator.p_init_scale must be positive");
    require(c.theta_init.empty() ||
                c.theta_init.size() == static_cast<std::size_t>(c.est_n + c.est_m),
            "estimator.theta_init length must equal n + m");
    require(c.sat_lower <= c.sat_upper, "saturation bounds are inverted");
    require(c.identification_duration >= 0.0, "identification.duration must be >= 0");
    require(c.feedforward != FeedforwardMode::identified || c.identification_duration > 0.0,
            "identified feedforward needs identification.duration > 0");
    require(c.steady_state_window >= 0.0 && c.steady_state_window <= c.duration,
            "steady_state_window must lie within the run duration");
    require(!c.true_g_b.empty() || !c.true_g_a.empty(), "true_g must have coefficients");
}

/// The required keys a parsed config must provide explicitly.
inline const std::vector<std::string>& required_keys() {
    static const std::vector<std::string> keys{"duration", "reference", "disturbance.kind"};
    return keys;
}

inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig c;
    std::map<std::string, bool> seen;
    std::istringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        std::string s = detail::trim(raw);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected key=value, got '" +
                              s + "'");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        detail::apply_key(c, key, value, line);
        seen[key] = true;
    }
    for (const auto& key : required_keys())
        if (!seen.count(key)) throw ConfigError("missing required field: " + key);
    validate(c);
    return c;
}

/// JSON front-end: nested objects map to the dotted key space of the flat
/// format ({"estimator": {"n": 2}} == estimator.n=2).
inline ScenarioConfig parse_config_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("JSON config must be an object");

    ScenarioConfig c;
    std::map<std::string, bool> seen;
    auto to_string = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number_float()) return detail::format_double(v.get<double>());
        if (v.is_array()) {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ',';
                out += v[i].is_number_integer() ? std::to_string(v[i].get<long long>())
                                                : detail::format_double(v[i].get<double>());
            }
            return out;
        }
        throw ConfigError("unsupported JSON value type");
    };
    std::function<void(const nlohmann::json&, const std::string&)> walk =
        [&](const nlohmann::json& node, const std::string& prefix) {
            for (const auto& [k, v] : node.items()) {
                const std::string key = prefix.empty() ? k : prefix + "." + k;
                if (v.is_object())
                    walk(v, key);
                else {
                    detail::apply_key(c, key, to_string(v), 0);
                    seen[key] = true;
                }
            }
        };
    walk(doc, "");
    for (const auto& key : required_keys())
        if (!seen.count(key)) throw ConfigError("missing required field: " + key);
    validate(c);
    return c;
}

/// Built-in scenarios, one per stock experiment. The step-response presets
/// run at a fine sample interval so the measured metrics reflect the loop
/// dynamics rather than the sampling grid.
inline std::map<std::string, ScenarioConfig> presets() {
    std::map<std::string, ScenarioConfig> out;

    ScenarioConfig fig2;
    fig2.name = "fig2";
    fig2.sample_interval = 2e-6;
    fig2.oversample = 1;
    fig2.duration = 0.02;
    fig2.reference = servo::ReferenceProfile::step(1.0);
    fig2.disturbance = {servo::DisturbanceKind::none, 0.0, 0.0, 1};
    fig2.steady_state_window = 0.002;
    out["fig2"] = fig2;

    ScenarioConfig fig4;
    fig4.name = "fig4";
    fig4.duration = 0.5;
    fig4.reference = servo::ReferenceProfile::zero();
    fig4.disturbance = {servo::DisturbanceKind::sine, servo::kDefaultSineAmplitude, 100.0, 1};
    fig4.feedforward = FeedforwardMode::off;
    out["fig4"] = fig4;

    ScenarioConfig fig5 = fig4;
    fig5.name = "fig5";
    fig5.feedforward = FeedforwardMode::identified;
    out["fig5"] = fig5;

    ScenarioConfig fig6 = fig4;
    fig6.name = "fig6";
    fig6.disturbance.frequency = 200.0;
    out["fig6"] = fig6;

    ScenarioConfig fig7 = fig5;
    fig7.name = "fig7";
    fig7.disturbance.frequency = 200.0;
    out["fig7"] = fig7;

    ScenarioConfig t1v = fig2;
    t1v.name = "table1-vcm";
    t1v.loop = servo::LoopStructure::vcm_only;
    out["table1-vcm"] = t1v;

    ScenarioConfig t1m = fig2;
    t1m.name = "table1-ma";
    t1m.loop = servo::LoopStructure::ma_only;
    t1m.duration = 0.05;
    out["table1-ma"] = t1m;

    return out;
}

}  // namespace dsservo::cli
