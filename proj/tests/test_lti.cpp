#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dsservo/lti.hpp"
#include "dsservo/models.hpp"
#include "support/oracles.hpp"

using namespace dsservo;
using lti::DiscreteLinearFilter;
using lti::DiscretizeMethod;
using lti::RationalTransferFunction;

TEST_CASE("dc_gain", "[lti]") {
    SECTION("micro-actuator model has static gain 0.366") {
        CHECK_THAT(lti::dc_gain(servo::micro_actuator_transfer_function()),
                   Catch::Matchers::WithinRel(0.366, 1e-12));
    }
    SECTION("unit sections give the bare gain") {
        RationalTransferFunction tf;
        tf.gain = 1.0;
        tf.sections.push_back({{1.0}, {1.0}});
        tf.sections.push_back({{1.0}, {1.0}});
        CHECK(lti::dc_gain(tf) == 1.0);
    }
    SECTION("double integrator has a pole at s = 0") {
        CHECK_THROWS_AS(lti::dc_gain(servo::vcm_transfer_function()), PoleAtZero);
    }
}

TEST_CASE("discretize", "[lti]") {
    SECTION("static gain maps to a pure gain either way") {
        RationalTransferFunction tf;
        tf.gain = 0.366;
        tf.sections.push_back({{1.0}, {1.0}});
        for (auto method : {DiscretizeMethod::bilinear, DiscretizeMethod::zero_order_hold}) {
            auto f = lti::discretize(tf, 2e-4, method);
            for (double u : {1.0, -2.5, 0.125})
                CHECK_THAT(f.step(u), Catch::Matchers::WithinRel(0.366 * u, 1e-12));
            f.reset();
        }
    }
    SECTION("first-order bilinear preserves static gain") {
        RationalTransferFunction tf;
        tf.sections.push_back({{1.0}, {1.0, 1.0}});
        auto f = lti::discretize(tf, 1e-3, DiscretizeMethod::bilinear);
        CHECK_THAT(f.dc(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    SECTION("micro-actuator ZOH at 20 us is stable") {
        auto f = lti::discretize(servo::micro_actuator_transfer_function(), 2e-5,
                                 DiscretizeMethod::zero_order_hold);
        REQUIRE(f.poles().size() == 4);
        for (const auto& p : f.poles()) CHECK(std::abs(p) < 1.0);
        CHECK_FALSE(f.unstable_warning);
    }
    SECTION("ZOH matches the closed-form map of a first-order lag") {
        // 1/(s+a) discretized ZOH: pole e^(-aT), unit static gain
        const double a = 120.0, ts = 1e-3;
        RationalTransferFunction tf;
        tf.sections.push_back({{a}, {1.0, a}});
        auto f = lti::discretize(tf, ts, DiscretizeMethod::zero_order_hold);
        REQUIRE(f.a().size() == 1);
        CHECK_THAT(f.a()[0], Catch::Matchers::WithinRel(-std::exp(-a * ts), 1e-12));
        CHECK_THAT(f.b()[0], Catch::Matchers::WithinRel(1.0 - std::exp(-a * ts), 1e-12));
        CHECK(f.b0() == 0.0);
    }
    SECTION("unstable continuous pole does not raise the warning flag") {
        RationalTransferFunction tf;
        tf.sections.push_back({{1.0}, {1.0, -5.0}});  // pole at +5
        auto f = lti::discretize(tf, 1e-2, DiscretizeMethod::zero_order_hold);
        CHECK_FALSE(f.unstable_warning);  // instability was already there
        CHECK(std::abs(f.poles()[0]) > 1.0);
    }
}

TEST_CASE("filter_step follows the difference equation", "[lti]") {
    SECTION("stock disturbance model, unit step input") {
        DiscreteLinearFilter g({1.0, 0.5}, {1.0, 1.0}, 2e-4);
        CHECK(g.step(1.0) == 0.0);   // depends only on inputs before k
        CHECK(g.step(1.0) == 1.0);
        CHECK(g.step(1.0) == 1.0);
        CHECK(g.step(1.0) == 0.5);
    }
    SECTION("zero input keeps zero state") {
        DiscreteLinearFilter g({0.3, -0.1}, {2.0, 0.7}, 1e-3);
        for (int k = 0; k < 50; ++k) CHECK(g.step(0.0) == 0.0);
    }
    SECTION("b = [1] is a one-step delay") {
        DiscreteLinearFilter g({}, {1.0}, 1e-3);
        CHECK(g.step(3.5) == 0.0);
        CHECK(g.step(-1.0) == 3.5);
        CHECK(g.step(0.0) == -1.0);
    }
    SECTION("overflow raises NonFinite") {
        DiscreteLinearFilter g({-2.0}, {1.0}, 1e-3);  // pole at 2, doubles every step
        g.step(1e308);
        CHECK_THROWS_AS([&] { for (int k = 0; k < 100; ++k) g.step(1e308); }(), NonFinite);
    }
}

TEST_CASE("filter properties", "[lti]") {
    std::mt19937 rng(2024);

    SECTION("linearity against an independent reference simulation") {
        for (int trial = 0; trial < 20; ++trial) {
            auto rf = oracles::random_stable_filter(rng);
            std::vector<double> u(200), v(200);
            for (auto& x : u) x = oracles::uniform_pm1(rng);
            for (auto& x : v) x = oracles::uniform_pm1(rng);
            const double alpha = 2.0 * oracles::uniform_pm1(rng);
            const double beta = 2.0 * oracles::uniform_pm1(rng);

            DiscreteLinearFilter f(rf.a, rf.b, 1e-3);
            std::vector<double> mixed(u.size());
            for (std::size_t k = 0; k < u.size(); ++k)
                mixed[k] = f.step(alpha * u[k] + beta * v[k]);

            const auto yu = oracles::reference_arx_response(rf.a, rf.b, 0.0, u);
            const auto yv = oracles::reference_arx_response(rf.a, rf.b, 0.0, v);
            for (std::size_t k = 0; k < u.size(); ++k) {
                const double expect = alpha * yu[k] + beta * yv[k];
                CHECK_THAT(mixed[k],
                           Catch::Matchers::WithinAbs(expect, 1e-9 * (1.0 + std::abs(expect))));
            }
        }
    }

    SECTION("time invariance: delayed input gives exactly delayed output") {
        for (int trial = 0; trial < 10; ++trial) {
            auto rf = oracles::random_stable_filter(rng);
            std::vector<double> u(100);
            for (auto& x : u) x = oracles::uniform_pm1(rng);
            const std::size_t delay = 7;

            DiscreteLinearFilter f1(rf.a, rf.b, 1e-3), f2(rf.a, rf.b, 1e-3);
            std::vector<double> y1, y2;
            for (double x : u) y1.push_back(f1.step(x));
            for (std::size_t k = 0; k < delay; ++k) y2.push_back(f2.step(0.0));
            for (double x : u) y2.push_back(f2.step(x));
            for (std::size_t k = 0; k < y1.size(); ++k) CHECK(y2[k + delay] == y1[k]);
        }
    }

    SECTION("static gain survives discretization for random stable models") {
        auto unif = [&](double lo, double hi) {
            return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
        };
        for (int trial = 0; trial < 25; ++trial) {
            RationalTransferFunction tf;
            tf.gain = unif(0.2, 5.0);
            const int nsec = 1 + static_cast<int>(rng() % 2);
            for (int s = 0; s < nsec; ++s) {
                const double wn = unif(10.0, 2000.0);
                const double zeta = unif(0.05, 1.5);
                tf.sections.push_back({{unif(0.5, 2.0) * wn * wn},
                                       {1.0, 2.0 * zeta * wn, wn * wn}});
            }
            const double want = lti::dc_gain(tf);
            for (auto method :
                 {DiscretizeMethod::bilinear, DiscretizeMethod::zero_order_hold}) {
                auto f = lti::discretize(tf, 1e-4, method);
                CHECK_THAT(f.dc(), Catch::Matchers::WithinRel(want, 1e-9));
            }
        }
    }

    SECTION("stable discrete models stay bounded on bounded input") {
        auto f = lti::discretize(servo::micro_actuator_transfer_function(), 2e-5,
                                 DiscretizeMethod::zero_order_hold);
        double peak = 0.0;
        for (int k = 0; k < 10000; ++k)
            peak = std::max(peak, std::abs(f.step(oracles::uniform_pm1(rng))));
        CHECK(std::isfinite(peak));
        CHECK(peak < 100.0);
    }
}

TEST_CASE("transfer function validation", "[lti]") {
    RationalTransferFunction improper;
    improper.sections.push_back({{1.0, 0.0, 0.0}, {1.0, 1.0}});
    CHECK_THROWS_AS(lti::validate(improper), std::invalid_argument);

    RationalTransferFunction zero_lead;
    zero_lead.sections.push_back({{1.0}, {0.0, 1.0}});
    CHECK_THROWS_AS(lti::validate(zero_lead), std::invalid_argument);
}
