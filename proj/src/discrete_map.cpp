#include "dcmap/discrete_map.hpp"

#include <cmath>

namespace dcmap {

namespace {

constexpr double kDutyClampHi = 0.999;

DutyResult clamp_duty(double raw) {
    if (raw < 0.0) return {0.0, true};
    if (raw > kDutyClampHi) return {kDutyClampHi, true};
    return {raw, false};
}

double decay_fraction(double Rn, const ConverterParams& params, double T) {
    // T/((Rn+Rc)C) = rho_n K_n beta_n-style decay of the sampled voltage
    return T / ((Rn + params.Rc) * params.C);
}

}  // namespace

DutyResult duty_constraint(const Scheme& scheme, Topology topology, const ConverterParams& params,
                           double vn, double vsn, double vcn) {
    if (const auto* ol = std::get_if<OpenLoop>(&scheme)) {
        (void)ol;
        return clamp_duty(vcn);  // control input is the duty itself
    }
    if (const auto* vm = std::get_if<Vmc>(&scheme)) {
        return clamp_duty(vm->g * (vcn - vn) / vm->Vh);
    }
    if (const auto* cm = std::get_if<Cmc>(&scheme)) {
        double T = params.period();
        double m1 = topology == Topology::Boost ? vsn / params.L : (vsn - vn) / params.L;
        double denom = T * (m1 + cm->ma);
        if (!(denom > 0.0)) return {kDutyClampHi, true};
        return clamp_duty(vcn / denom);
    }
    fail(Errc::SchemeMismatch, "duty constraint is defined for fixed-frequency schemes only");
}

double boost_map(double vn, double vsn, double Dn, double Rn, const ConverterParams& params) {
    if (std::abs(vn - vsn) < 1e-9 * vsn)
        fail(Errc::DenominatorUnderflow, "boost map evaluated too close to vn = vs");
    double T = params.period();
    double rho = Rn / (Rn + params.Rc);
    double beta = rho * T * T / (2.0 * params.L * params.C);
    return vn - decay_fraction(Rn, params, T) * vn + beta * vsn * vsn * Dn * Dn / (vn - vsn);
}

double buck_map(double vn, double vsn, double Dn, double Rn, const ConverterParams& params) {
    if (std::abs(vn) < 1e-9 * vsn)
        fail(Errc::DenominatorUnderflow, "buck map evaluated too close to vn = 0");
    double T = params.period();
    double rho = Rn / (Rn + params.Rc);
    double beta = rho * T * T / (2.0 * params.L * params.C);
    return vn - decay_fraction(Rn, params, T) * vn - beta * vsn * Dn * Dn * (1.0 - vsn / vn);
}

VcotcResult vcotc_step(Topology topology, double vn, double vsn, double vcn, double Rn,
                       const Vcotc& scheme, const ConverterParams& params) {
    double d = scheme.d;
    double rho = Rn / (Rn + params.Rc);
    double twoLC = 2.0 * params.L * params.C;

    // The map is affine in Tn: v_{n+1} = a - b Tn, with the ripple charge a
    // fixed by the on-time alone.
    double a, d2_time;
    if (topology == Topology::Boost) {
        if (std::abs(vn - vsn) < 1e-9 * vsn)
            fail(Errc::DenominatorUnderflow, "step evaluated too close to vn = vs");
        a = vn + rho * d * d * vsn * vsn / (twoLC * (vn - vsn));
        d2_time = d * vsn / (vn - vsn);
    } else {
        if (std::abs(vn) < 1e-9 * vsn)
            fail(Errc::DenominatorUnderflow, "step evaluated too close to vn = 0");
        a = vn - rho * d * d * vsn * (1.0 - vsn / vn) / twoLC;
        d2_time = d * (vsn - vn) / vn;
    }
    double b = vn / ((Rn + params.Rc) * params.C);

    // Valley constraint a - b Tn = vcn + ma Tn, solved by safeguarded Newton
    // on g(Tn) (one step closes an affine residual; the bracket guards the
    // degenerate slopes).
    auto g = [&](double Tn) { return a - b * Tn - vcn - scheme.ma * Tn; };
    double lo = d, hi = 50.0 * d;
    int expand = 0;
    while (g(lo) * g(hi) > 0.0 && expand < 20) {
        hi *= 4.0;
        ++expand;
    }
    double g_lo = g(lo);
    if (g_lo * g(hi) > 0.0)
        fail(Errc::NoValidPeriod, "valley constraint has no solution with Tn > d");
    double Tn = 0.5 * (lo + hi);
    for (int i = 0; i < 100; ++i) {
        double gv = g(Tn);
        if (gv == 0.0) break;
        if (gv * g_lo > 0.0) {
            lo = Tn;
            g_lo = gv;
        } else {
            hi = Tn;
        }
        double slope = -b - scheme.ma;
        double next = Tn - gv / slope;
        if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - Tn) <= 1e-12 * std::max(next, d)) {
            Tn = next;
            break;
        }
        Tn = next;
    }
    if (!(Tn > d + d2_time))
        fail(Errc::NoValidPeriod, "solved period leaves no idle stage (control unreachable)");
    return {a - b * Tn, Tn};
}

BcmResult bcm_step(Topology topology, double vn, double vsn, double control, bool constant_on_time,
                   double Rn, const ConverterParams& params) {
    double rho = Rn / (Rn + params.Rc);
    double twoLC = 2.0 * params.L * params.C;

    double dn, Tn, v_next;
    if (topology == Topology::Boost) {
        if (std::abs(vn - vsn) < 1e-9 * vsn)
            fail(Errc::DenominatorUnderflow, "step evaluated too close to vn = vs");
        dn = constant_on_time ? control : control * params.L / vsn;
        Tn = dn * vn / (vn - vsn);
        v_next = vn - decay_fraction(Rn, params, Tn) * vn + rho * dn * dn * vsn * vsn / (twoLC * (vn - vsn));
    } else {
        if (std::abs(vn) < 1e-9 * vsn)
            fail(Errc::DenominatorUnderflow, "step evaluated too close to vn = 0");
        dn = constant_on_time ? control : control * params.L / (vsn - vn);
        Tn = dn * vsn / vn;
        v_next = vn - decay_fraction(Rn, params, Tn) * vn - rho * dn * dn * vsn * (1.0 - vsn / vn) / twoLC;
    }
    return {v_next, dn, Tn};
}

CycleMap make_cycle_map(Topology topology, const Scheme& scheme, const LoadModel& load,
                        const ConverterParams& params) {
    validate_scheme(params, scheme);
    CycleMap map;
    map.has_control = !std::holds_alternative<BcmCot>(scheme);

    struct Nominal {
        double operator()(const OpenLoop& s) const { return s.D; }
        double operator()(const Vmc& s) const { return s.vc; }
        double operator()(const Cmc& s) const { return s.vc; }
        double operator()(const Vcotc& s) const { return s.vc; }
        double operator()(const Bcm& s) const { return s.vc; }
        double operator()(const BcmCot&) const { return 0.0; }
    };
    map.control0 = std::visit(Nominal{}, scheme);

    map.f = [topology, scheme, load, params](double vn, double vsn, double control) {
        double Rn = effective_resistance(load, vn).R;
        if (fixed_frequency_scheme(scheme)) {
            double Dn = duty_constraint(scheme, topology, params, vn, vsn, control).Dn;
            return topology == Topology::Boost ? boost_map(vn, vsn, Dn, Rn, params)
                                               : buck_map(vn, vsn, Dn, Rn, params);
        }
        if (const auto* v = std::get_if<Vcotc>(&scheme))
            return vcotc_step(topology, vn, vsn, control, Rn, *v, params).v_next;
        if (std::holds_alternative<Bcm>(scheme))
            return bcm_step(topology, vn, vsn, control, false, Rn, params).v_next;
        return bcm_step(topology, vn, vsn, std::get<BcmCot>(scheme).d, true, Rn, params).v_next;
    };
    return map;
}

std::vector<CycleSample> iterate(Topology topology, const Scheme& scheme, const LoadModel& load,
                                 const ConverterParams& params, double v0, int n_cycles) {
    validate_scheme(params, scheme);
    std::vector<CycleSample> out;
    out.reserve(static_cast<std::size_t>(n_cycles) + 1);

    double v = v0;
    for (int n = 0; n <= n_cycles; ++n) {
        CycleSample s{};
        s.v = v;
        try {
            s.Rn = effective_resistance(load, v).R;
            if (fixed_frequency_scheme(scheme)) {
                Scheme sch = scheme;
                double control = std::visit(
                    [](const auto& x) -> double {
                        using T = std::decay_t<decltype(x)>;
                        if constexpr (std::is_same_v<T, OpenLoop>) return x.D;
                        else if constexpr (std::is_same_v<T, Vmc>) return x.vc;
                        else if constexpr (std::is_same_v<T, Cmc>) return x.vc;
                        else return 0.0;
                    },
                    sch);
                DutyResult dr = duty_constraint(scheme, topology, params, v, params.vs, control);
                s.duty_or_d = dr.Dn;
                s.clamped = dr.clamped;
                s.Tn = params.period();
                out.push_back(s);
                if (n == n_cycles) break;
                v = topology == Topology::Boost ? boost_map(v, params.vs, dr.Dn, s.Rn, params)
                                                : buck_map(v, params.vs, dr.Dn, s.Rn, params);
            } else if (const auto* vc = std::get_if<Vcotc>(&scheme)) {
                VcotcResult r = vcotc_step(topology, v, params.vs, vc->vc, s.Rn, *vc, params);
                s.duty_or_d = vc->d;
                s.Tn = r.Tn;
                out.push_back(s);
                if (n == n_cycles) break;
                v = r.v_next;
            } else {
                bool cot = std::holds_alternative<BcmCot>(scheme);
                double control = cot ? std::get<BcmCot>(scheme).d : std::get<Bcm>(scheme).vc;
                BcmResult r = bcm_step(topology, v, params.vs, control, cot, s.Rn, params);
                s.duty_or_d = r.dn;
                s.Tn = r.Tn;
                out.push_back(s);
                if (n == n_cycles) break;
                v = r.v_next;
            }
        } catch (const Error& e) {
            fail(e.code(), std::string(e.what()) + " (cycle " + std::to_string(n) + ")");
        }
    }
    return out;
}

}  // namespace dcmap
