#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dsservo/control.hpp"
#include "dsservo/errors.hpp"
#include "dsservo/lti.hpp"
#include "dsservo/models.hpp"
#include "dsservo/sysid.hpp"

namespace dsservo::servo {

enum class DisturbanceKind { none, sine, uniform_random };

struct DisturbanceSource {
    DisturbanceKind kind = DisturbanceKind::none;
    double amplitude = 0.0;
    double frequency = 0.0;  // Hz, sine only
    std::uint32_t seed = 0;  // random only
};

inline void validate(const DisturbanceSource& s) {
    if (s.amplitude < 0.0) throw std::invalid_argument("disturbance amplitude must be >= 0");
    if (s.kind == DisturbanceKind::sine && !(s.frequency > 0.0))
        throw std::invalid_argument("sine disturbance needs a positive frequency");
}

/// Sampled disturbance-source sequence. The random generator maps mt19937
/// draws to [-A, A) directly so sequences are identical on every platform.
inline std::vector<double> make_disturbance(const DisturbanceSource& src, double ts,
                                            std::size_t count) {
    validate(src);
    std::vector<double> out(count, 0.0);
    switch (src.kind) {
        case DisturbanceKind::none:
            break;
        case DisturbanceKind::sine:
            for (std::size_t k = 0; k < count; ++k)
                out[k] = src.amplitude *
                         std::sin(2.0 * std::numbers::pi * src.frequency * static_cast<double>(k) * ts);
            break;
        case DisturbanceKind::uniform_random: {
            std::mt19937 rng(src.seed);
            for (std::size_t k = 0; k < count; ++k) {
                const double u01 = static_cast<double>(rng()) * (1.0 / 4294967296.0);
                out[k] = src.amplitude * (2.0 * u01 - 1.0);
            }
            break;
        }
    }
    return out;
}

struct ReferenceProfile {
    enum class Kind { zero, step };
    Kind kind = Kind::zero;
    double amplitude = 0.0;  // micrometers, step only

    double at(std::size_t) const { return kind == Kind::step ? amplitude : 0.0; }
    static ReferenceProfile zero() { return {Kind::zero, 0.0}; }
    static ReferenceProfile step(double amplitude) { return {Kind::step, amplitude}; }
};

struct TraceRecord {
    std::size_t k = 0;
    double t = 0.0;
    double r = 0.0;
    double y = 0.0;
    double y_vcm = 0.0;
    double y_ma = 0.0;
    double e = 0.0;
    double u_acc = 0.0;
    double d = 0.0;
    double d_hat = 0.0;
    double ff = 0.0;
    double lambda = 1.0;
    double trace_p = 0.0;
    std::vector<double> theta;
};

/// Per-sample record of every loop signal plus estimator internals.
struct SimulationTrace {
    double ts = 0.0;
    int theta_dim = 0;
    std::vector<TraceRecord> records;

    std::vector<double> column_t() const { return column(&TraceRecord::t); }
    std::vector<double> column_y() const { return column(&TraceRecord::y); }
    std::vector<double> column_d() const { return column(&TraceRecord::d); }
    std::vector<double> column_d_hat() const { return column(&TraceRecord::d_hat); }
    std::vector<double> column_ff() const { return column(&TraceRecord::ff); }

    std::vector<double> column(double TraceRecord::* field) const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const auto& rec : records) out.push_back(rec.*field);
        return out;
    }
};

enum class LoopStructure { dual, vcm_only, ma_only };
enum class IdentificationSignal { direct, closed_loop };

/// Closed-loop dual-stage plant: both PID controllers consume the same
/// position error, the micro-actuator command is saturated, and the external
/// disturbance (and the feedforward correction, negated) enter at the
/// micro-actuator plant input. Head position is the sum of both stages.
/// Plants run zero-order-hold at ts/oversample; everything else at ts.
class DualStageLoop {
public:
    struct Setup {
        double ts = kDefaultSampleInterval;
        int oversample = kDefaultOversample;
        LoopStructure structure = LoopStructure::dual;
        control::PidGains pid_v = vcm_pid_gains();
        control::PidGains pid_m = micro_actuator_pid_gains();
        double sat_lower = -1.0;
        double sat_upper = 1.0;
        std::vector<double> true_g_a = default_disturbance_a();
        std::vector<double> true_g_b = default_disturbance_b();
        lti::RationalTransferFunction vcm = vcm_transfer_function();
        lti::RationalTransferFunction ma = micro_actuator_transfer_function();

        int est_n = 2;
        int est_m = 2;
        double p_init_scale = kDefaultCovarianceScale;
        std::vector<double> theta_init;  // empty = zeros
        sysid::LambdaPolicy lambda_policy = sysid::LambdaPolicy::fixed(1.0);
        sysid::PredictionConvention convention = sysid::PredictionConvention::current_regressor;
        IdentificationSignal identification_signal = IdentificationSignal::direct;
    };

    explicit DualStageLoop(const Setup& setup)
        : setup_(setup),
          pid_v_(setup.pid_v, setup.ts),
          pid_m_(setup.pid_m, setup.ts),
          sat_(setup.sat_lower, setup.sat_upper),
          estimator_(make_estimator(setup)) {
        if (!(setup.ts > 0.0)) throw std::invalid_argument("sample interval must be positive");
        if (setup.oversample < 1) throw std::invalid_argument("oversample must be >= 1");
        const double plant_ts = setup.ts / setup.oversample;
        vcm_ = lti::discretize(setup.vcm, plant_ts, lti::DiscretizeMethod::zero_order_hold);
        ma_ = lti::discretize(setup.ma, plant_ts, lti::DiscretizeMethod::zero_order_hold);
        disturbance_filter_ =
            lti::DiscreteLinearFilter(setup.true_g_a, setup.true_g_b, setup.ts, 0.0);
    }

    /// One control period. Estimator bookkeeping is left to the run_* drivers.
    TraceRecord step(double r, double u_acc) {
        TraceRecord rec;
        rec.k = k_;
        rec.t = static_cast<double>(k_) * setup_.ts;
        rec.r = r;
        rec.u_acc = u_acc;
        rec.e = r - y_prev_;

        const bool use_vcm = setup_.structure != LoopStructure::ma_only;
        const bool use_ma = setup_.structure != LoopStructure::vcm_only;

        const double u_v = use_vcm ? pid_v_.step(rec.e) : 0.0;
        const double u_m = use_ma ? sat_.clamp(pid_m_.step(rec.e)) : 0.0;
        rec.d = disturbance_filter_.step(u_acc);
        rec.ff = (feedforward_enabled_ && feedforward_) ? feedforward_->step(u_acc) : 0.0;

        const double ma_in = u_m + rec.d - rec.ff;
        for (int i = 0; i < setup_.oversample; ++i) {
            if (use_vcm) y_vcm_ = vcm_.step(u_v);
            if (use_ma) y_ma_ = ma_.step(ma_in);
        }
        rec.y_vcm = y_vcm_;
        rec.y_ma = y_ma_;
        rec.y = y_vcm_ + y_ma_;
        if (!std::isfinite(rec.y)) throw NonFinite("head position is not finite");

        y_prev_ = rec.y;
        ++k_;
        return rec;
    }

    void install_feedforward(const sysid::IdentifiedModel& model) {
        feedforward_ = model.to_filter();
        feedforward_enabled_ = true;
    }

    /// Feedforward from the simulation's own disturbance dynamics (perfect
    /// model, used as a cancellation oracle).
    void install_oracle_feedforward() {
        feedforward_ =
            lti::DiscreteLinearFilter(setup_.true_g_a, setup_.true_g_b, setup_.ts, 0.0);
        feedforward_enabled_ = true;
    }

    void disable_feedforward() { feedforward_enabled_ = false; }
    void enable_feedforward() { feedforward_enabled_ = feedforward_.has_value(); }
    bool feedforward_enabled() const { return feedforward_enabled_ && feedforward_.has_value(); }

    /// Zero every dynamic state (plants, controllers, filters, sample index).
    /// The estimator and any installed feedforward model are left intact.
    void reset() {
        pid_v_.reset();
        pid_m_.reset();
        vcm_.reset();
        ma_.reset();
        disturbance_filter_.reset();
        if (feedforward_) feedforward_->reset();
        y_prev_ = y_vcm_ = y_ma_ = 0.0;
        k_ = 0;
    }

    const Setup& setup() const { return setup_; }
    double ts() const { return setup_.ts; }
    sysid::RlsEstimator& estimator() { return estimator_; }
    const sysid::RlsEstimator& estimator() const { return estimator_; }
    void reset_estimator() { estimator_ = make_estimator(setup_); }

private:
    static sysid::RlsEstimator make_estimator(const Setup& setup) {
        sysid::RlsEstimator est(setup.est_n, setup.est_m, setup.p_init_scale,
                                setup.lambda_policy, setup.convention);
        if (!setup.theta_init.empty()) {
            Eigen::VectorXd theta0(static_cast<Eigen::Index>(setup.theta_init.size()));
            for (std::size_t i = 0; i < setup.theta_init.size(); ++i)
                theta0(static_cast<Eigen::Index>(i)) = setup.theta_init[i];
            est.set_initial_theta(theta0);
        }
        return est;
    }

    Setup setup_;
    control::PidController pid_v_;
    control::PidController pid_m_;
    control::Saturation sat_;
    lti::DiscreteLinearFilter vcm_;
    lti::DiscreteLinearFilter ma_;
    lti::DiscreteLinearFilter disturbance_filter_;
    std::optional<lti::DiscreteLinearFilter> feedforward_;
    bool feedforward_enabled_ = false;
    sysid::RlsEstimator estimator_;
    double y_prev_ = 0.0;
    double y_vcm_ = 0.0;
    double y_ma_ = 0.0;
    std::size_t k_ = 0;
};

inline void fill_estimator_fields(TraceRecord& rec, const sysid::RlsEstimator& est,
                                  double d_hat, double lambda) {
    rec.d_hat = d_hat;
    rec.lambda = lambda;
    rec.trace_p = est.covariance().trace();
    rec.theta.assign(est.theta().data(), est.theta().data() + est.theta().size());
}

/// Track-following identification: reference forced to zero, feedforward
/// disabled, and the estimator updated each sample with the configured
/// identification signal (the raw disturbance-filter output, or the negated
/// head position, which is all a real drive can measure).
inline std::pair<sysid::IdentifiedModel, SimulationTrace> run_identification(
    DualStageLoop& loop, const DisturbanceSource& source, double duration) {
    loop.reset();
    loop.reset_estimator();
    loop.disable_feedforward();

    const std::size_t count = static_cast<std::size_t>(std::llround(duration / loop.ts()));
    const std::vector<double> u_acc = make_disturbance(source, loop.ts(), count);

    SimulationTrace trace;
    trace.ts = loop.ts();
    trace.theta_dim = static_cast<int>(loop.estimator().theta().size());
    trace.records.reserve(count);

    const bool direct =
        loop.setup().identification_signal == IdentificationSignal::direct;
    for (std::size_t k = 0; k < count; ++k) {
        TraceRecord rec = loop.step(0.0, u_acc[k]);
        const double d_meas = direct ? rec.d : -rec.y;
        const auto upd = loop.estimator().update(d_meas, u_acc[k]);
        fill_estimator_fields(rec, loop.estimator(), upd.prediction, upd.lambda);
        trace.records.push_back(std::move(rec));
    }
    return {loop.estimator().to_model(loop.ts()), std::move(trace)};
}

/// Closed-loop run with a frozen feedforward model (if enabled). Loop state
/// starts from zero; the estimator is not updated.
inline SimulationTrace run_tracking(DualStageLoop& loop, const ReferenceProfile& reference,
                                    const DisturbanceSource& source, double duration,
                                    bool feedforward_on) {
    if (feedforward_on && !loop.feedforward_enabled())
        throw std::logic_error("tracking with feedforward requires an installed model");
    loop.reset();
    const bool had_ff = loop.feedforward_enabled();
    if (!feedforward_on) loop.disable_feedforward();

    const std::size_t count = static_cast<std::size_t>(std::llround(duration / loop.ts()));
    const std::vector<double> u_acc = make_disturbance(source, loop.ts(), count);

    SimulationTrace trace;
    trace.ts = loop.ts();
    trace.theta_dim = static_cast<int>(loop.estimator().theta().size());
    trace.records.reserve(count);

    for (std::size_t k = 0; k < count; ++k) {
        TraceRecord rec = loop.step(reference.at(k), u_acc[k]);
        fill_estimator_fields(rec, loop.estimator(), rec.ff, 1.0);
        trace.records.push_back(std::move(rec));
    }
    if (!feedforward_on && had_ff) loop.enable_feedforward();
    return trace;
}

}  // namespace dsservo::servo
