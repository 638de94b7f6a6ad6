#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "dsservo/control.hpp"
#include "dsservo/models.hpp"

using namespace dsservo;
using control::PidController;
using control::PidGains;
using control::Saturation;

TEST_CASE("pid_step basics", "[control]") {
    SECTION("pure proportional") {
        PidController c({1.0, 0.0, 0.0, 100.0}, 0.01);
        CHECK(c.step(0.5) == 0.5);
        CHECK(c.step(-2.0) == -2.0);
    }
    SECTION("trapezoid integral ramps at I * t") {
        PidController c({0.0, 2.0, 0.0, 100.0}, 0.1);
        double u = 0.0;
        for (int k = 1; k <= 20; ++k) {
            u = c.step(1.0);
            // one-step quadrature offset of the trapezoid rule
            CHECK_THAT(u, Catch::Matchers::WithinAbs(2.0 * 0.1 * (k - 0.5), 1e-12));
        }
    }
    SECTION("fresh controller with zero error outputs zero") {
        PidController c(servo::vcm_pid_gains(), 2e-4);
        CHECK(c.step(0.0) == 0.0);
    }
    SECTION("non-finite error is rejected") {
        PidController c(servo::vcm_pid_gains(), 2e-4);
        CHECK_THROWS_AS(c.step(std::numeric_limits<double>::quiet_NaN()), NonFinite);
        CHECK_THROWS_AS(c.step(std::numeric_limits<double>::infinity()), NonFinite);
    }
}

TEST_CASE("reset restores the initial state", "[control]") {
    PidController c(servo::micro_actuator_pid_gains(), 2e-4);
    std::vector<double> first;
    for (int k = 0; k < 10; ++k) first.push_back(c.step(0.3 * k));
    c.reset();
    for (int k = 0; k < 10; ++k) CHECK(c.step(0.3 * k) == first[static_cast<std::size_t>(k)]);

    c.reset();
    c.reset();  // idempotent
    CHECK(c.step(0.0) == 0.0);
}

TEST_CASE("pid properties", "[control]") {
    SECTION("with D = 0 the filter coefficient is inert, bitwise") {
        PidController a({0.4, 3.0, 0.0, 1.0}, 1e-3);
        PidController b({0.4, 3.0, 0.0, 1e6}, 1e-3);
        for (int k = 0; k < 200; ++k) {
            const double e = std::sin(0.13 * k) + 0.2;
            CHECK(a.step(e) == b.step(e));
        }
    }
    SECTION("output at step k ignores later errors") {
        PidController a(servo::vcm_pid_gains(), 2e-4);
        PidController b(servo::vcm_pid_gains(), 2e-4);
        std::vector<double> prefix{0.1, -0.4, 0.9, 0.2};
        double ya = 0.0, yb = 0.0;
        for (double e : prefix) {
            ya = a.step(e);
            yb = b.step(e);
        }
        CHECK(ya == yb);
        a.step(1e6);  // future divergence cannot affect already-produced outputs
        CHECK(ya == yb);
    }
    SECTION("linear in the error sequence") {
        PidController a(servo::vcm_pid_gains(), 2e-4);
        PidController b(servo::vcm_pid_gains(), 2e-4);
        const double alpha = -3.7;
        for (int k = 0; k < 300; ++k) {
            const double e = std::sin(0.21 * k) - 0.1 * k / 300.0;
            const double ua = a.step(e);
            const double ub = b.step(alpha * e);
            CHECK_THAT(ub, Catch::Matchers::WithinAbs(alpha * ua,
                                                      1e-9 * (1.0 + std::abs(alpha * ua))));
        }
    }
}

TEST_CASE("saturation", "[control]") {
    Saturation s(-1.0, 1.0);
    CHECK(s.clamp(2.0) == 1.0);
    CHECK(s.clamp(-3.0) == -1.0);
    CHECK(s.clamp(0.25) == 0.25);

    SECTION("idempotent") {
        for (double u : {-5.0, -1.0, -0.2, 0.0, 0.7, 1.0, 9.0})
            CHECK(s.clamp(s.clamp(u)) == s.clamp(u));
    }
    SECTION("inverted bounds are rejected") {
        CHECK_THROWS_AS(Saturation(1.0, -1.0), std::invalid_argument);
    }
}

TEST_CASE("gain validation", "[control]") {
    CHECK_THROWS_AS(control::validate(PidGains{1.0, 1.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(control::validate(PidGains{std::numeric_limits<double>::infinity(), 0, 0, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PidController(servo::vcm_pid_gains(), 0.0), std::invalid_argument);
}
