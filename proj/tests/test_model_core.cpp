#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dcmap/model_core.hpp"

using namespace dcmap;

namespace {

ConverterParams boost_stage() { return {5.0, 5e-6, 40e-6, 0.0, FixedPeriod{1e-5}}; }

}  // namespace

TEST_CASE("effective resistance: plain resistor") {
    auto [R, dRdv] = effective_resistance(Resistive{20.0}, 18.35);
    CHECK(R == 20.0);
    CHECK(dRdv == 0.0);
}

TEST_CASE("effective resistance: pure constant-current sink") {
    auto [R, dRdv] = effective_resistance(ResistiveParallelCCL{kInfiniteR, 0.9175}, 18.35);
    CHECK(R == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(dRdv == doctest::Approx(1.0 / 0.9175).epsilon(1e-12));  // = R^2 Io / v^2
}

TEST_CASE("effective resistance: sink in parallel with a resistor") {
    // 10 ohm in parallel with v/Io at Io = -0.9175 gives 20 ohm total.
    auto [R, dRdv] = effective_resistance(ResistiveParallelCCL{10.0, -0.9175}, 18.35);
    CHECK(R == doctest::Approx(20.0).epsilon(1e-12));
    double quotient_rule = 100.0 * (-0.9175) / ((10.0 * -0.9175 + 18.35) * (10.0 * -0.9175 + 18.35));
    CHECK(dRdv == doctest::Approx(quotient_rule).epsilon(1e-12));
}

TEST_CASE("effective resistance: constant-power algebra") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uv(2.0, 40.0), up(0.5, 50.0);
    for (int i = 0; i < 200; ++i) {
        double v = uv(rng), P = up(rng);
        auto [R, dRdv] = effective_resistance(ResistiveParallelCPL{kInfiniteR, P}, v);
        CHECK(R == doctest::Approx(v * v / P).epsilon(1e-12));
        CHECK(dRdv == doctest::Approx(2.0 * v / P).epsilon(1e-12));
    }
}

TEST_CASE("effective resistance: rejects non-positive results") {
    CHECK_THROWS_AS(effective_resistance(ResistiveParallelCCL{10.0, -2.0}, 18.0), Error);
    CHECK_THROWS_AS(effective_resistance(Resistive{20.0}, -1.0), Error);
}

TEST_CASE("conversion ratio: boost reference value") {
    CHECK(conversion_ratio(Topology::Boost, 0.7, 0.05) == doctest::Approx(3.6701).epsilon(1e-4));
    CHECK(conversion_ratio(Topology::Boost, 0.0, 0.05) == doctest::Approx(1.0));
}

TEST_CASE("conversion ratio: buck satisfies its steady-state relation") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ud(0.05, 0.9), uk(1e-3, 0.5);
    for (int i = 0; i < 500; ++i) {
        double D = ud(rng), K = uk(rng);
        double M = conversion_ratio(Topology::Buck, D, K);
        REQUIRE(M > 0.0);
        REQUIRE(M < 1.0);
        CHECK(D * D * (1.0 - M) - K * M * M == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("duty from ratio: boost reference values") {
    auto [D, D2] = duty_from_ratio(Topology::Boost, 3.6701, 0.05);
    CHECK(D == doctest::Approx(0.7000).epsilon(1e-4));
    CHECK(D2 == doctest::Approx(0.2621).epsilon(1e-3));
    CHECK(D + D2 < 1.0);

    // The voltage-mode reference point.
    auto [D_vmc, D2_vmc] = duty_from_ratio(Topology::Boost, 1.5625, 0.09984);
    CHECK(D_vmc == doctest::Approx(0.2962).epsilon(1e-3));
    CHECK(D2_vmc > 0.0);
}

TEST_CASE("duty/ratio round trip on random valid points") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uk(1e-3, 0.3), ud(0.05, 0.95);
    int boost_checked = 0, buck_checked = 0;
    for (int i = 0; i < 1000; ++i) {
        double K = uk(rng), D = ud(rng);
        {
            double M = conversion_ratio(Topology::Boost, D, K);
            auto [Dr, D2r] = duty_from_ratio(Topology::Boost, M, K);
            CHECK(Dr == doctest::Approx(D).epsilon(1e-12));
            CHECK(conversion_ratio(Topology::Boost, Dr, K) == doctest::Approx(M).epsilon(1e-12));
            (void)D2r;
            ++boost_checked;
        }
        {
            double M = conversion_ratio(Topology::Buck, D, K);
            auto [Dr, D2r] = duty_from_ratio(Topology::Buck, M, K);
            CHECK(Dr == doctest::Approx(D).epsilon(1e-12));
            (void)D2r;
            ++buck_checked;
        }
    }
    CHECK(boost_checked == 1000);
    CHECK(buck_checked == 1000);
}

TEST_CASE("boost conversion ratio is strictly increasing in duty") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uk(1e-3, 0.3);
    for (int i = 0; i < 100; ++i) {
        double K = uk(rng);
        double prev = conversion_ratio(Topology::Boost, 0.01, K);
        for (double D = 0.05; D < 0.95; D += 0.05) {
            double M = conversion_ratio(Topology::Boost, D, K);
            CHECK(M > prev);
            prev = M;
        }
    }
}

TEST_CASE("solve: open-loop boost with resistive load") {
    auto pts = solve_operating_point(boost_stage(), Topology::Boost, Resistive{20.0},
                                     OpenLoop{0.7}, GivenDuty{0.7});
    REQUIRE(pts.size() == 1);
    const auto& op = pts.front();
    CHECK(op.M == doctest::Approx(3.6701).epsilon(1e-4));
    CHECK(op.v == doctest::Approx(18.35).epsilon(1e-3));
    CHECK(op.rho == 1.0);
    CHECK(op.regime == Regime::Dcm);
    CHECK(std::abs(op.M * op.M - op.M - op.D * op.D / op.K) <= 1e-10);
}

TEST_CASE("solve: boost with a pure constant-current load is self-consistent") {
    LoadModel load = ResistiveParallelCCL{kInfiniteR, 0.9175};
    auto pts = solve_operating_point(boost_stage(), Topology::Boost, load, OpenLoop{0.7},
                                     GivenDuty{0.7});
    REQUIRE(pts.size() == 1);
    const auto& op = pts.front();
    CHECK(op.R == doctest::Approx(20.0).epsilon(1e-3));
    CHECK(op.M == doctest::Approx(3.67).epsilon(1e-3));
    // Load consistency 1/R = 1/R0 + Io/v holds exactly at the solved point.
    CHECK(std::abs(1.0 / op.R - 0.9175 / op.v) <= 1e-12);
    CHECK(std::abs(op.v - op.M * 5.0) <= 1e-10 * op.v);
}

TEST_CASE("solve: current-mode buck with pure constant-current load has two orbits") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedPeriod{5e-6}};
    LoadModel load = ResistiveParallelCCL{kInfiniteR, 0.4};
    auto pts = solve_operating_point(p, Topology::Buck, load, Cmc{0.9, 0.0}, GivenControl{});
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].M == doctest::Approx(0.282).epsilon(2e-3));
    CHECK(pts[1].M == doctest::Approx(0.718).epsilon(2e-3));
    for (const auto& op : pts) CHECK(op.regime == Regime::Dcm);
}

TEST_CASE("dcm validity") {
    OperatingPoint op{};
    op.topology = Topology::Boost;
    op.M = 3.67;
    CHECK(dcm_valid(op, 0.7));
    op.M = 1.9;
    CHECK_FALSE(dcm_valid(op, 0.5));
}

TEST_CASE("conduction boundary") {
    CHECK(bcm_boundary_from_duty(Topology::Boost, 0.5) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(bcm_boundary_from_ratio(Topology::Boost, 2.0) == doctest::Approx(0.125).epsilon(1e-12));
    // Both parameterizations agree through M = 1/(1-D).
    for (double D : {0.2, 0.35, 0.5, 0.65, 0.8}) {
        double M = 1.0 / (1.0 - D);
        CHECK(bcm_boundary_from_duty(Topology::Boost, D) ==
              doctest::Approx(bcm_boundary_from_ratio(Topology::Boost, M)).epsilon(1e-12));
    }
    CHECK(bcm_boundary_from_ratio(Topology::Buck, 0.4) == doctest::Approx(0.6).epsilon(1e-12));
    for (double D : {0.2, 0.5, 0.8})
        CHECK(bcm_boundary_from_duty(Topology::Buck, D) ==
              doctest::Approx(bcm_boundary_from_ratio(Topology::Buck, D)).epsilon(1e-12));
}

TEST_CASE("boundary-conduction points report the BCM regime") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    auto op = solve_operating_point(p, Topology::Boost, Resistive{20.0}, BcmCot{7e-6},
                                    GivenControl{})
                  .front();
    CHECK(op.regime == Regime::Bcm);
    CHECK(op.D + op.D2 == doctest::Approx(1.0).epsilon(1e-12));
    // The boundary identity K = D(1-D)^2 holds at the solved point.
    CHECK(op.K == doctest::Approx(bcm_boundary_from_duty(Topology::Boost, op.D)).epsilon(1e-12));
}

TEST_CASE("duty from ratio rejects out-of-range conversion ratios") {
    CHECK_THROWS_AS((void)duty_from_ratio(Topology::Boost, 0.8, 0.05), Error);
    CHECK_THROWS_AS((void)duty_from_ratio(Topology::Buck, 1.2, 0.05), Error);
}

TEST_CASE("solver reports invalid inputs") {
    CHECK_THROWS_AS(solve_operating_point(boost_stage(), Topology::Boost, Resistive{-5.0},
                                          OpenLoop{0.7}, GivenDuty{0.7}),
                    Error);
    // Deep conduction: high duty with low K leaves the discontinuous region.
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedPeriod{1e-4}};
    CHECK_THROWS_AS(
        solve_operating_point(p, Topology::Boost, Resistive{2.0}, OpenLoop{0.9}, GivenDuty{0.9}),
        Error);
}
