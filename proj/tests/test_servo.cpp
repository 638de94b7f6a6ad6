#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "dsservo/metrics.hpp"
#include "dsservo/servo.hpp"

using namespace dsservo;
using servo::DisturbanceKind;
using servo::DisturbanceSource;
using servo::DualStageLoop;
using servo::ReferenceProfile;

namespace {

double rms(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc / static_cast<double>(v.size()));
}

DualStageLoop::Setup fine_step_setup(servo::LoopStructure structure) {
    DualStageLoop::Setup s;
    s.ts = 2e-6;
    s.oversample = 1;
    s.structure = structure;
    return s;
}

}  // namespace

TEST_CASE("make_disturbance", "[servo]") {
    SECTION("sine samples evaluate the formula") {
        DisturbanceSource src{DisturbanceKind::sine, 1e4, 100.0, 0};
        const auto u = servo::make_disturbance(src, 2e-4, 20);
        CHECK(u[0] == 0.0);
        const double expect = 1e4 * std::sin(2.0 * std::numbers::pi * 100.0 * 12.0 * 2e-4);
        CHECK_THAT(u[12], Catch::Matchers::WithinRel(expect, 1e-15));
        CHECK_THAT(u[12], Catch::Matchers::WithinRel(9980.27, 1e-4));
    }
    SECTION("zero amplitude is all zeros") {
        DisturbanceSource src{DisturbanceKind::uniform_random, 0.0, 0.0, 42};
        for (double v : servo::make_disturbance(src, 2e-4, 100)) CHECK(v == 0.0);
    }
    SECTION("same seed reproduces the sequence, different seed does not") {
        DisturbanceSource src{DisturbanceKind::uniform_random, 2.5, 0.0, 42};
        const auto a = servo::make_disturbance(src, 2e-4, 256);
        const auto b = servo::make_disturbance(src, 2e-4, 256);
        CHECK(a == b);
        src.seed = 43;
        CHECK(servo::make_disturbance(src, 2e-4, 256) != a);
        for (double v : a) CHECK(std::abs(v) <= 2.5);
    }
    SECTION("sine needs a positive frequency") {
        DisturbanceSource src{DisturbanceKind::sine, 1.0, 0.0, 0};
        CHECK_THROWS_AS(servo::make_disturbance(src, 2e-4, 10), std::invalid_argument);
    }
}

TEST_CASE("loop step", "[servo]") {
    SECTION("zero input keeps the loop at equilibrium") {
        DualStageLoop loop{DualStageLoop::Setup{}};
        for (int k = 0; k < 500; ++k) {
            const auto rec = loop.step(0.0, 0.0);
            CHECK(rec.y == 0.0);
            CHECK(rec.e == 0.0);
        }
    }

    SECTION("unit step settles to the reference at a fine sample interval") {
        DualStageLoop loop{fine_step_setup(servo::LoopStructure::dual)};
        std::vector<double> y, t;
        for (int k = 0; k < 10000; ++k) {  // 20 ms
            const auto rec = loop.step(1.0, 0.0);
            y.push_back(rec.y);
            t.push_back(rec.t);
        }
        CHECK_THAT(y.back(), Catch::Matchers::WithinAbs(1.0, 0.02));
        const double settle = metrics::settling_time(y, t, 1.0);
        CHECK(settle < 0.015);
    }

    SECTION("head position is the sum of the stages") {
        DualStageLoop loop{DualStageLoop::Setup{}};
        for (int k = 0; k < 50; ++k) {
            const auto rec = loop.step(0.5, 100.0 * std::sin(0.05 * k));
            CHECK(rec.y == rec.y_vcm + rec.y_ma);
        }
    }

    SECTION("oracle feedforward cancels the disturbance exactly") {
        DualStageLoop::Setup setup;  // stock scenario rates
        DualStageLoop with_ff{setup};
        with_ff.install_oracle_feedforward();
        DualStageLoop no_dist{setup};

        DisturbanceSource src{DisturbanceKind::sine, 1e4, 100.0, 0};
        const auto u = servo::make_disturbance(src, setup.ts, 1000);
        for (std::size_t k = 0; k < u.size(); ++k) {
            const auto a = with_ff.step(0.0, u[k]);
            const auto b = no_dist.step(0.0, 0.0);
            CHECK(a.d == a.ff);
            CHECK(a.y == b.y);  // bitwise: d - ff is exactly zero
        }
    }
}

TEST_CASE("run_identification", "[servo]") {
    SECTION("no excitation leaves the initial parameters") {
        DualStageLoop loop{DualStageLoop::Setup{}};
        auto [model, trace] = servo::run_identification(
            loop, DisturbanceSource{DisturbanceKind::none, 0.0, 0.0, 0}, 0.05);
        CHECK(model.a == std::vector<double>{0.0, 0.0});
        CHECK(model.b == std::vector<double>{0.0, 0.0});
        CHECK(trace.records.size() == 250);
    }

    SECTION("sine excitation reaches 99% fit on the training signal") {
        DualStageLoop loop{DualStageLoop::Setup{}};
        DisturbanceSource src{DisturbanceKind::sine, 1e4, 100.0, 0};
        auto [model, trace] = servo::run_identification(loop, src, 0.2);
        const auto d = trace.column_d();
        const auto d_hat = trace.column_d_hat();
        CHECK(metrics::fitness(d, d_hat) >= 99.0);
    }

    SECTION("random excitation recovers the true parameters") {
        DualStageLoop loop{DualStageLoop::Setup{}};
        DisturbanceSource src{DisturbanceKind::uniform_random, 1e4, 0.0, 7};
        auto [model, trace] = servo::run_identification(loop, src, 200.0 * 2e-4);
        CHECK_THAT(model.a[0], Catch::Matchers::WithinAbs(1.0, 1e-6));
        CHECK_THAT(model.a[1], Catch::Matchers::WithinAbs(0.5, 1e-6));
        CHECK_THAT(model.b[0], Catch::Matchers::WithinAbs(1.0, 1e-6));
        CHECK_THAT(model.b[1], Catch::Matchers::WithinAbs(1.0, 1e-6));
    }

    SECTION("closed-loop signal mode feeds the estimator the negated head position") {
        DualStageLoop::Setup setup;
        setup.identification_signal = servo::IdentificationSignal::closed_loop;
        DualStageLoop loop{setup};
        DisturbanceSource src{DisturbanceKind::sine, 1e4, 100.0, 0};
        auto [model, trace] = servo::run_identification(loop, src, 0.1);
        // the d column still holds the raw disturbance; the estimator's
        // prediction tracks -y instead, so d_hat should not track d
        const auto d = trace.column_d();
        const auto d_hat = trace.column_d_hat();
        CHECK(metrics::fitness(d, d_hat) < 50.0);
        std::vector<double> neg_y;
        for (const auto& rec : trace.records) neg_y.push_back(-rec.y);
        CHECK(metrics::fitness(neg_y, d_hat) > 50.0);
    }
}

TEST_CASE("run_tracking", "[servo]") {
    SECTION("sustained oscillation without feedforward, suppressed with it") {
        DualStageLoop::Setup setup;
        DualStageLoop loop{setup};
        DisturbanceSource src{DisturbanceKind::sine, 1e4, 100.0, 0};

        auto [model, id_trace] = servo::run_identification(loop, src, 0.8);
        loop.install_feedforward(model);

        const auto off = servo::run_tracking(loop, ReferenceProfile::zero(), src, 0.5, false);
        const auto on = servo::run_tracking(loop, ReferenceProfile::zero(), src, 0.5, true);

        const auto y_off = off.column_y();
        const auto y_on = on.column_y();
        const std::vector<double> tail_off(y_off.end() - 1000, y_off.end());
        const std::vector<double> tail_on(y_on.end() - 1000, y_on.end());
        CHECK(rms(tail_off) > 100.0);           // hundreds of micrometers
        CHECK(rms(tail_on) < 0.05 * rms(tail_off));
    }

    SECTION("feedforward with no disturbance changes nothing") {
        DualStageLoop::Setup setup;
        DualStageLoop loop{setup};
        sysid::IdentifiedModel model{{0.3, -0.1}, {2.0, 1.0}, setup.ts, std::nullopt};
        loop.install_feedforward(model);
        DisturbanceSource none{DisturbanceKind::none, 0.0, 0.0, 0};
        const auto off =
            servo::run_tracking(loop, ReferenceProfile::step(1.0), none, 0.05, false);
        const auto on =
            servo::run_tracking(loop, ReferenceProfile::step(1.0), none, 0.05, true);
        for (std::size_t k = 0; k < off.records.size(); ++k)
            CHECK(off.records[k].y == on.records[k].y);
    }

    SECTION("tracking without an installed model rejects feedforward-on") {
        DualStageLoop loop{DualStageLoop::Setup{}};
        DisturbanceSource none{DisturbanceKind::none, 0.0, 0.0, 0};
        CHECK_THROWS_AS(
            servo::run_tracking(loop, ReferenceProfile::zero(), none, 0.01, true),
            std::logic_error);
    }
}

TEST_CASE("loop properties", "[servo]") {
    SECTION("superposition while the saturation never clips") {
        // Bounds far above any signal in the window; the run is short enough
        // that the micro-actuator branch stays well below them.
        DualStageLoop::Setup setup;
        setup.sat_lower = -1e12;
        setup.sat_upper = 1e12;
        DualStageLoop lr{setup}, lu{setup}, lb{setup};
        DisturbanceSource src{DisturbanceKind::sine, 1.0, 100.0, 0};
        const auto u = servo::make_disturbance(src, setup.ts, 150);

        double worst = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const auto a = lr.step(1.0, 0.0);
            const auto b = lu.step(0.0, u[k]);
            const auto c = lb.step(1.0, u[k]);
            worst = std::max(worst, std::abs(a.y + b.y - c.y));
            scale = std::max(scale, std::abs(c.y));
        }
        CHECK(worst <= 1e-6 * std::max(1.0, scale));
    }

    SECTION("oversampling is converged for the linear single-stage loop") {
        // The dual-stage scenarios saturate the micro-actuator command and a
        // clipped loop has no discretization limit; the linear VCM-only step
        // is where halving the plant step must stop mattering.
        auto run = [&](int oversample) {
            DualStageLoop::Setup setup;
            setup.structure = servo::LoopStructure::vcm_only;
            setup.oversample = oversample;
            DualStageLoop loop{setup};
            std::vector<double> y;
            for (int k = 0; k < 250; ++k) y.push_back(loop.step(1.0, 0.0).y);
            return y;
        };
        const auto y16 = run(16);
        const auto y32 = run(32);
        double diff = 0.0, base = 0.0;
        for (std::size_t k = 0; k < y16.size(); ++k) {
            diff += (y32[k] - y16[k]) * (y32[k] - y16[k]);
            base += y16[k] * y16[k];
        }
        CHECK(std::sqrt(diff / base) < 0.01);
    }

    SECTION("identical configuration gives bit-identical traces") {
        auto run = [] {
            DualStageLoop loop{DualStageLoop::Setup{}};
            DisturbanceSource src{DisturbanceKind::uniform_random, 1e4, 0.0, 11};
            return servo::run_tracking(loop, ReferenceProfile::zero(), src, 0.1, false);
        };
        const auto a = run();
        const auto b = run();
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t k = 0; k < a.records.size(); ++k) {
            CHECK(a.records[k].y == b.records[k].y);
            CHECK(a.records[k].u_acc == b.records[k].u_acc);
        }
    }
}
