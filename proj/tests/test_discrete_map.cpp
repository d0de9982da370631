#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dcmap/discrete_map.hpp"
#include "dcmap/small_signal.hpp"

using namespace dcmap;

namespace {

ConverterParams boost_stage() { return {5.0, 5e-6, 40e-6, 0.0, FixedPeriod{1e-5}}; }
ConverterParams buck_stage6() { return {5.0, 5e-6, 40e-6, 0.0, FixedPeriod{5e-6}}; }

}  // namespace

TEST_CASE("duty constraint: voltage mode") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedPeriod{1e-5}};
    Scheme vmc = Vmc{0.076, 1.0, 18.35};
    // Zero error commands zero duty.
    auto d = duty_constraint(vmc, Topology::Boost, p, 18.35, 5.0, 18.35);
    CHECK(d.Dn == 0.0);
    CHECK_FALSE(d.clamped);
    // Negative error clamps at zero with the flag raised.
    auto neg = duty_constraint(vmc, Topology::Boost, p, 20.0, 5.0, 18.35);
    CHECK(neg.Dn == 0.0);
    CHECK(neg.clamped);
    // Huge error clamps high.
    auto hi = duty_constraint(Vmc{10.0, 1.0, 40.0}, Topology::Boost, p, 5.5, 5.0, 40.0);
    CHECK(hi.Dn == doctest::Approx(0.999));
    CHECK(hi.clamped);
}

TEST_CASE("duty constraint: current mode without a ramp") {
    ConverterParams p{12.0, 1e-6, 125e-6, 0.0, FixedPeriod{1.0 / 700e3}};
    double T = 1.0 / 700e3;
    Scheme cmc = Cmc{5.0, 0.0};
    auto d = duty_constraint(cmc, Topology::Boost, p, 24.0, 12.0, 5.0);
    CHECK(d.Dn == doctest::Approx(5.0 * 1e-6 / (T * 12.0)).epsilon(1e-12));

    // The reference 700 kHz point: vc chosen for duty 0.3416.
    double D_target = 0.3416;
    double vc = D_target * T * 12.0 / 1e-6;
    auto d2 = duty_constraint(cmc, Topology::Boost, p, 24.0, 12.0, vc);
    CHECK(d2.Dn == doctest::Approx(D_target).epsilon(1e-12));
}

TEST_CASE("boost map: fixed point at the reference operating point") {
    ConverterParams p = boost_stage();
    auto op = solve_operating_point(p, Topology::Boost, Resistive{20.0}, OpenLoop{0.7},
                                    GivenDuty{0.7})
                  .front();
    double next = boost_map(op.v, 5.0, 0.7, 20.0, p);
    CHECK(next == doctest::Approx(op.v).epsilon(1e-9));
}

TEST_CASE("boost map: zero duty leaves pure RC decay") {
    ConverterParams p = boost_stage();
    double v = 18.0;
    double expected = v * (1.0 - 1e-5 / (20.0 * 40e-6));
    CHECK(boost_map(v, 5.0, 0.0, 20.0, p) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("boost map: denominator guard near v = vs") {
    ConverterParams p = boost_stage();
    CHECK_THROWS_AS(boost_map(5.0 + 1e-12, 5.0, 0.5, 20.0, p), Error);
}

TEST_CASE("iterate: constant-current load trajectory matches the scalar recurrence") {
    // Independent oracle: v' = v - T Io / C + beta vs^2 D^2/(v - vs) with the
    // load resistance folded in analytically.
    ConverterParams p = boost_stage();
    LoadModel load = ResistiveParallelCCL{kInfiniteR, 0.9175};
    auto traj = iterate(Topology::Boost, OpenLoop{0.7}, load, p, 19.0, 20);
    REQUIRE(traj.size() == 21);

    double beta = 1e-10 / (2.0 * 5e-6 * 40e-6);
    double v = 19.0;
    for (int n = 0; n < 20; ++n) v = v - 1e-5 * 0.9175 / 40e-6 + beta * 25.0 * 0.49 / (v - 5.0);
    CHECK(traj.back().v == doctest::Approx(v).epsilon(1e-14));
    CHECK(traj.back().v == doctest::Approx(18.8165102388).epsilon(1e-9));
    // The nominal 20-cycle landing reported for this case.
    CHECK(traj.back().v == doctest::Approx(18.83).epsilon(2e-3));
    // Load resistance is refreshed from the sample each cycle.
    CHECK(traj[0].Rn == doctest::Approx(19.0 / 0.9175).epsilon(1e-12));
    CHECK(traj[5].Rn == doctest::Approx(traj[5].v / 0.9175).epsilon(1e-12));
}

TEST_CASE("iterate: fixed point start stays put") {
    ConverterParams p = boost_stage();
    LoadModel load = Resistive{20.0};
    auto op = solve_operating_point(p, Topology::Boost, load, OpenLoop{0.7}, GivenDuty{0.7})
                  .front();
    auto traj = iterate(Topology::Boost, OpenLoop{0.7}, load, p, op.v, 50);
    for (const auto& s : traj) CHECK(s.v == doctest::Approx(op.v).epsilon(1e-9));
}

TEST_CASE("iterate: geometric decay near a stable fixed point") {
    ConverterParams p = boost_stage();
    LoadModel load = Resistive{20.0};
    Scheme sch = OpenLoop{0.7};
    auto op = solve_operating_point(p, Topology::Boost, load, sch, GivenDuty{0.7}).front();
    SmallSignal ss = closed_loop_small_signal(sch, load, op, p);

    double v0 = op.v * 1.02;  // 2% initial deviation
    auto traj = iterate(Topology::Boost, sch, load, p, v0, 20);
    double expected = std::abs(v0 - op.v) * std::pow(std::abs(ss.p), 20);
    double got = std::abs(traj.back().v - op.v);
    CHECK(got == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("iterate: growth rate near the unstable buck orbit") {
    ConverterParams p = buck_stage6();
    LoadModel load = ResistiveParallelCCL{kInfiniteR, 0.4};
    Scheme sch = Cmc{0.9, 0.0};
    auto pts = solve_operating_point(p, Topology::Buck, load, sch, GivenControl{});
    REQUIRE(pts.size() == 2);
    const auto& op = pts[1];
    SmallSignal ss = closed_loop_small_signal(sch, load, op, p);
    CHECK(ss.p == doctest::Approx(1.0215).epsilon(5e-4));

    auto traj = iterate(Topology::Buck, sch, load, p, op.v + 0.05, 10);
    double expected = 0.05 * std::pow(ss.p, 10);
    CHECK(traj.back().v - op.v == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("iterate: sign of the load shift flips with the sink direction") {
    // Same effective 20-ohm load three ways; trajectory decay rates order as
    // p(Io>0) > p(resistive) > p(Io<0).
    ConverterParams p = boost_stage();
    Scheme sch = OpenLoop{0.7};
    auto rate = [&](const LoadModel& load) {
        auto op = solve_operating_point(p, Topology::Boost, load, sch, GivenDuty{0.7}).front();
        auto traj = iterate(Topology::Boost, sch, load, p, op.v * 1.01, 12);
        double d0 = std::abs(traj[1].v - op.v);
        double d1 = std::abs(traj[11].v - op.v);
        return std::pow(d1 / d0, 1.0 / 10.0);
    };
    double p_pos = rate(ResistiveParallelCCL{kInfiniteR, 0.9175});
    double p_res = rate(Resistive{20.0});
    double p_neg = rate(ResistiveParallelCCL{10.0, -0.9175});
    CHECK(p_pos - p_res == doctest::Approx(0.0125).epsilon(0.10));
    CHECK(p_neg - p_res == doctest::Approx(-0.0125).epsilon(0.10));
}

TEST_CASE("vcotc step: no ramp forces the next sample to the command") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    Vcotc sch{7e-6, 18.0, 0.0};
    for (double vn : {18.0, 18.5, 19.5}) {
        auto r = vcotc_step(Topology::Boost, vn, 5.0, 18.0, 20.0, sch, p);
        CHECK(r.v_next == doctest::Approx(18.0).epsilon(1e-12));
        CHECK(r.Tn > 7e-6);
    }
}

TEST_CASE("vcotc step: steady state reproduces the solved period") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    double ma = 2e4;
    auto op = solve_operating_point(p, Topology::Boost, Resistive{20.0}, Vcotc{7e-6, 1.0, ma},
                                    GivenOutput{18.5})
                  .front();
    double vc = op.v - ma * op.T;
    auto r = vcotc_step(Topology::Boost, op.v, 5.0, vc, op.R, Vcotc{7e-6, vc, ma}, p);
    CHECK(r.v_next == doctest::Approx(op.v).epsilon(1e-10));
    CHECK(r.Tn == doctest::Approx(op.T).epsilon(1e-10));
}

TEST_CASE("vcotc step: unreachable command reports no valid period") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    CHECK_THROWS_AS(
        vcotc_step(Topology::Boost, 18.0, 5.0, 30.0, 20.0, Vcotc{7e-6, 30.0, 0.0}, p), Error);
}

TEST_CASE("bcm step: constant on-time boost fixed point") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    double v_expect = 5.0 * std::sqrt(7e-6 * 20.0 / (2.0 * 5e-6));  // 5 sqrt(14)
    auto r = bcm_step(Topology::Boost, v_expect, 5.0, 7e-6, true, 20.0, p);
    CHECK(r.v_next == doctest::Approx(v_expect).epsilon(1e-12));
    CHECK(r.Tn == doctest::Approx(7e-6 * v_expect / (v_expect - 5.0)).epsilon(1e-12));
}

TEST_CASE("bcm step: peak-current steady state ties on-time to the period") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{1e-6}};
    auto op =
        solve_operating_point(p, Topology::Boost, Resistive{20.0}, Bcm{7.0}, GivenControl{})
            .front();
    auto r = bcm_step(Topology::Boost, op.v, 5.0, 7.0, false, op.R, p);
    CHECK(r.v_next == doctest::Approx(op.v).epsilon(1e-10));
    CHECK(r.dn == doctest::Approx(7.0 * 5e-6 / 5.0).epsilon(1e-12));
    CHECK(r.Tn == doctest::Approx(r.dn * op.v / (op.v - 5.0)).epsilon(1e-12));
}

TEST_CASE("bcm step: buck at half the source doubles the on-time") {
    ConverterParams p{10.0, 2e-5, 5e-5, 0.0, FixedOnTime{1e-6}};
    auto r = bcm_step(Topology::Buck, 5.0, 10.0, 0.4, false, 20.0, p);
    CHECK(r.Tn == doctest::Approx(2.0 * r.dn).epsilon(1e-12));
}

TEST_CASE("buck map: stationarity at both coexisting orbits") {
    ConverterParams p = buck_stage6();
    LoadModel load = ResistiveParallelCCL{kInfiniteR, 0.4};
    Scheme sch = Cmc{0.9, 0.0};
    auto pts = solve_operating_point(p, Topology::Buck, load, sch, GivenControl{});
    REQUIRE(pts.size() == 2);
    for (const auto& op : pts) {
        double Dn = duty_constraint(sch, Topology::Buck, p, op.v, 5.0, 0.9).Dn;
        double next = buck_map(op.v, 5.0, Dn, op.R, p);
        CHECK(next == doctest::Approx(op.v).epsilon(1e-9));
    }
}

TEST_CASE("buck map: zero duty decays, near-zero voltage guarded") {
    ConverterParams p = buck_stage6();
    CHECK(buck_map(3.0, 5.0, 0.0, 20.0, p) ==
          doctest::Approx(3.0 * (1.0 - 5e-6 / (20.0 * 40e-6))).epsilon(1e-14));
    CHECK_THROWS_AS(buck_map(1e-12, 5.0, 0.3, 20.0, p), Error);
}

TEST_CASE("duty constraint rejects variable-frequency schemes") {
    ConverterParams p{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    try {
        duty_constraint(Vcotc{7e-6, 18.0, 0.0}, Topology::Boost, p, 18.0, 5.0, 18.0);
        FAIL("expected a scheme mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SchemeMismatch);
    }
}

TEST_CASE("cycle map wrapper exposes the scheme's control input") {
    ConverterParams p = boost_stage();
    LoadModel load = Resistive{20.0};
    CycleMap open_map = make_cycle_map(Topology::Boost, OpenLoop{0.7}, load, p);
    CHECK(open_map.has_control);
    CHECK(open_map.control0 == 0.7);
    CHECK(open_map.f(18.35, 5.0, 0.7) == doctest::Approx(boost_map(18.35, 5.0, 0.7, 20.0, p)));

    ConverterParams pc{5.0, 5e-6, 40e-6, 0.0, FixedOnTime{7e-6}};
    CycleMap cot = make_cycle_map(Topology::Boost, BcmCot{7e-6}, Resistive{20.0}, pc);
    CHECK_FALSE(cot.has_control);
}

TEST_CASE("vmc clamp is inactive at the solved operating point") {
    ConverterParams p = boost_stage();
    LoadModel load = Resistive{20.0};
    // Gain and reference chosen to regulate near M = 3.
    auto base = solve_operating_point(p, Topology::Boost, load, OpenLoop{0.55}, GivenDuty{0.55})
                    .front();
    Scheme vmc = Vmc{0.05, 1.0, base.v + base.D / 0.05};
    auto op = solve_operating_point(p, Topology::Boost, load, vmc, GivenControl{}).front();
    auto d = duty_constraint(vmc, Topology::Boost, p, op.v, 5.0, std::get<Vmc>(vmc).vc);
    CHECK_FALSE(d.clamped);
    CHECK(d.Dn == doctest::Approx(op.D).epsilon(1e-9));
}
