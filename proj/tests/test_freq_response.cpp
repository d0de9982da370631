#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dcmap/freq_response.hpp"

using namespace dcmap;

namespace {

ConverterParams boost_stage1() { return {5.0, 5e-6, 40e-6, 0.0, FixedPeriod{1e-5}}; }

OperatingPoint solve1(const ConverterParams& p, Topology t, const LoadModel& l, const Scheme& s,
                      const PointSpec& spec) {
    return solve_operating_point(p, t, l, s, spec).front();
}

}  // namespace

TEST_CASE("open-loop source transfer has DC gain rho M") {
    ConverterParams p = boost_stage1();
    LoadModel load = Resistive{20.0};
    Scheme sch = OpenLoop{0.7};
    auto op = solve1(p, Topology::Boost, load, sch, GivenDuty{0.7});
    SmallSignal ss = closed_loop_small_signal(sch, load, op, p);
    PulseTransfer tf = make_transfer(ss, op.rho, TransferKind::Source, op.T);
    CHECK(dc_gain(tf) == doctest::Approx(op.rho * op.M).epsilon(1e-10));
    CHECK(dc_gain(tf) ==
          doctest::Approx(dc_gain_formula(sch, op, p, TransferKind::Source)).epsilon(1e-10));
}

TEST_CASE("boundary-mode buck source transfer is identically zero") {
    ConverterParams p{10.0, 2e-5, 5e-5, 0.0, FixedOnTime{1e-6}};
    LoadModel load = Resistive{20.0};
    Scheme sch = Bcm{0.45};
    auto op = solve1(p, Topology::Buck, load, sch, GivenControl{});
    SmallSignal ss = closed_loop_small_signal(sch, load, op, p);
    PulseTransfer tf = make_transfer(ss, op.rho, TransferKind::Source, op.T);
    CHECK(tf.gain == 0.0);
    CHECK(std::abs(eval(tf, 1000.0)) == 0.0);
    CHECK(dc_gain_formula(sch, op, p, TransferKind::Source) == 0.0);
}

TEST_CASE("deadbeat transfer is a pure one-cycle delay") {
    PulseTransfer tf{0.8, 0.0, 1e-5};
    double omega_s = 2.0 * std::numbers::pi / tf.period;
    auto pts = bode(tf, {0.05 * omega_s, 0.15 * omega_s, 0.25 * omega_s, 0.4 * omega_s});
    for (const auto& bp : pts) CHECK(bp.mag_db == doctest::Approx(20.0 * std::log10(0.8)).epsilon(1e-12));
    // Phase falls linearly with frequency: -omega T.
    CHECK(pts[2].phase_deg == doctest::Approx(-90.0).epsilon(1e-9));
}

TEST_CASE("dc gain refuses a pole at unity") {
    PulseTransfer tf{1.0, 1.0, 1e-5};
    CHECK_THROWS_AS(dc_gain(tf), Error);
}

TEST_CASE("bode anchors at the DC gain and rejects out-of-range frequencies") {
    ConverterParams p = boost_stage1();
    LoadModel load = Resistive{20.0};
    Scheme sch = OpenLoop{0.7};
    auto op = solve1(p, Topology::Boost, load, sch, GivenDuty{0.7});
    SmallSignal ss = closed_loop_small_signal(sch, load, op, p);
    PulseTransfer tf = make_transfer(ss, op.rho, TransferKind::Control, op.T);

    double omega_s = 2.0 * std::numbers::pi / op.T;
    auto pts = bode(tf, {omega_s * 1e-5, omega_s * 0.01});
    CHECK(pts[0].mag_db == doctest::Approx(20.0 * std::log10(std::abs(dc_gain(tf)))).epsilon(1e-4));
    CHECK(std::abs(pts[0].phase_deg) < 0.5);

    CHECK_THROWS_AS(bode(tf, {0.0}), Error);
    CHECK_THROWS_AS(bode(tf, {0.6 * omega_s}), Error);
}

TEST_CASE("magnitude is non-increasing for a stable positive pole") {
    ConverterParams p = boost_stage1();
    LoadModel load = Resistive{20.0};
    Scheme sch = OpenLoop{0.7};
    auto op = solve1(p, Topology::Boost, load, sch, GivenDuty{0.7});
    SmallSignal ss = closed_loop_small_signal(sch, load, op, p);
    PulseTransfer tf = make_transfer(ss, op.rho, TransferKind::Control, op.T);
    REQUIRE(tf.pole > 0.0);
    REQUIRE(tf.pole < 1.0);

    auto pts = bode(tf, default_omega_grid(2.0 * std::numbers::pi / op.T));
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].mag_db <= pts[i - 1].mag_db + 1e-12);
    // A single discrete pole runs past -90 degrees near the band edge.
    CHECK(pts.back().phase_deg < -90.0);
}

TEST_CASE("ramp slope trades control gain against audio-susceptibility") {
    ConverterParams p{12.0, 1e-6, 125e-6, 0.0, FixedPeriod{1.0 / 700e3}};
    auto op = solve1(p, Topology::Boost, Resistive{24.0}, Cmc{1.0, 0.0}, GivenOutput{24.0});
    double m1 = p.vs / p.L;

    double prev_ctrl = 1e300, prev_audio = -1e300;
    for (double mc = 1.0; mc <= 5.0; mc += 0.5) {
        Cmc cm{op.D * op.T * m1 * mc, (mc - 1.0) * m1};
        double ctrl = dc_gain_formula(cm, op, p, TransferKind::Control);
        double audio = dc_gain_formula(cm, op, p, TransferKind::Source);
        CHECK(ctrl < prev_ctrl);
        CHECK(audio > prev_audio);
        prev_ctrl = ctrl;
        prev_audio = audio;
    }
}

TEST_CASE("negative pole anchors the phase baseline at -180 degrees") {
    PulseTransfer tf{-1.0, 0.5, 1e-5};  // inverting plant
    REQUIRE(dc_gain(tf) < 0.0);
    double omega_s = 2.0 * std::numbers::pi / tf.period;
    auto pts = bode(tf, {omega_s * 1e-4});
    CHECK(pts[0].phase_deg == doctest::Approx(-180.0).epsilon(0.1));
}

TEST_CASE("default grid spans three decades below half the switching frequency") {
    double omega_s = 2.0 * std::numbers::pi * 1e5;
    auto grid = default_omega_grid(omega_s);
    REQUIRE(grid.size() == 200);
    CHECK(grid.front() == doctest::Approx(omega_s / 1000.0));
    CHECK(grid.back() == doctest::Approx(0.499 * omega_s));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}
