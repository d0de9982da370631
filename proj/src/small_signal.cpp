#include "dcmap/small_signal.hpp"

#include <cmath>
#include <limits>

namespace dcmap {

namespace {

// rho T / (R C): the per-cycle decay fraction every pole formula is built on.
double tau_of(const OperatingPoint& op) { return op.beta * op.K; }

double gamma_s0_of(const OperatingPoint& op) {
    double tau = tau_of(op);
    if (op.topology == Topology::Boost) return tau * op.M * (2.0 * op.M - 1.0) / (op.M - 1.0);
    return tau * op.M * (2.0 - op.M) / (1.0 - op.M);
}

// Duty-to-output coefficient 2 rho T M vs / (R C D); the same expression
// covers both topologies.
double gamma_c0_of(const OperatingPoint& op) { return 2.0 * tau_of(op) * op.v / op.D; }

// Slope ratio m_c = 1 + ma/m1 with the topology's on-stage current slope.
double ramp_factor(Topology topology, const Cmc& cmc, const OperatingPoint& op,
                   const ConverterParams& params) {
    double m1 = topology == Topology::Boost ? params.vs / params.L
                                            : params.vs * (1.0 - op.M) / params.L;
    if (!(m1 + cmc.ma > 0.0))
        fail(Errc::InvalidParams, "compensating ramp cancels the on-stage current slope");
    return 1.0 + cmc.ma / m1;
}

// Fraction of the open-loop dynamics a valley-tracking ramp lets through;
// zero ramp gives the deadbeat sigma = 0.
double vcotc_sigma(const Vcotc& scheme, const OperatingPoint& op, const ConverterParams& params) {
    double feedback = op.rho * op.v / (op.R * params.C);
    return scheme.ma / (scheme.ma + feedback);
}

double scheme_pole_bcm(Topology topology, bool constant_on_time, const OperatingPoint& op,
                       const ConverterParams& params) {
    double tau = tau_of(op);
    if (topology == Topology::Boost) return 1.0 - 2.0 * tau;
    if (!constant_on_time) return 1.0 - tau;
    return 1.0 - op.rho * op.T * op.T / (2.0 * params.L * params.C);
}

}  // namespace

double open_loop_pole(const OperatingPoint& op) {
    double tau = op.beta * op.K;  // = rho T / (R C)
    if (op.topology == Topology::Boost) return 1.0 - tau * (2.0 * op.M - 1.0) / (op.M - 1.0);
    return 1.0 - tau * (2.0 - op.M) / (1.0 - op.M);
}

double exact_pole_closed_form(const OperatingPoint& op, const ConverterParams& params) {
    double T = op.T;
    double delta = op.D2 * T;  // diode-stage duration
    double wc = 1.0 / (op.R * params.C);
    double wl = params.Rc / params.L;
    double disc = 1.0 / (params.L * params.C) - 0.25 * (wc - wl) * (wc - wl);
    double rho = op.rho;

    double x = rho * delta;
    double a = rho * wc * (T - 0.5 * delta) + 0.5 * rho * wl * delta;

    // sin(w x)/w and cos(w x), continued through w^2 <= 0 (overdamped diode
    // stage) and the degenerate w -> 0 border. The hyperbolic branch is
    // evaluated with the decay envelope folded into each exponential so deep
    // overdamping cannot overflow.
    if (disc * x * x > 1e-12) {
        double w = std::sqrt(disc);
        double s = std::sin(w * x) / w;
        double c = std::cos(w * x);
        return std::exp(-a) * (0.5 * (wl - wc) * s + c);
    }
    if (disc * x * x < -1e-12) {
        double w = std::sqrt(-disc);
        double half_ratio = 0.5 * (wl - wc) / w;
        return 0.5 * (1.0 + half_ratio) * std::exp(w * x - a) +
               0.5 * (1.0 - half_ratio) * std::exp(-w * x - a);
    }
    double s = x * (1.0 + disc * x * x / 6.0);
    double c = 1.0 + 0.5 * disc * x * x;
    return std::exp(-a) * (0.5 * (wl - wc) * s + c);
}

double load_pole_shift(const LoadModel& load, const OperatingPoint& op,
                       const ConverterParams& params) {
    struct Visitor {
        const OperatingPoint& op;
        const ConverterParams& params;
        double operator()(const Resistive&) const { return 0.0; }
        double operator()(const ResistiveParallelCPL& l) const {
            return 2.0 * op.rho * op.T * l.P / (op.v * op.v * params.C);
        }
        double operator()(const ResistiveParallelCCL& l) const {
            return op.rho * op.T * l.Io / (op.v * params.C);
        }
    };
    return std::visit(Visitor{op, params}, load);
}

double control_pole_shift(const Scheme& scheme, const LoadModel& load, const OperatingPoint& op,
                          const ConverterParams& params) {
    if (std::holds_alternative<OpenLoop>(scheme)) return 0.0;
    if (const auto* vm = std::get_if<Vmc>(&scheme))
        return -vm->g * gamma_c0_of(op) / vm->Vh;
    if (const auto* cm = std::get_if<Cmc>(&scheme)) {
        // Peak-current control adds no voltage feedback on the boost (the
        // on-stage slope is set by the source alone), so the pole stays put.
        if (op.topology == Topology::Boost) return 0.0;
        double mc = ramp_factor(op.topology, *cm, op, params);
        return tau_of(op) * 2.0 * op.M / ((1.0 - op.M) * mc);
    }
    if (const auto* vo = std::get_if<Vcotc>(&scheme)) {
        // The valley constraint rescales the whole voltage dynamics, load
        // shift included; report the difference so the three-term sum stays
        // exact. With no ramp this cancels everything (deadbeat).
        double sigma = vcotc_sigma(*vo, op, params);
        double base = open_loop_pole(op) + load_pole_shift(load, op, params);
        return -(1.0 - sigma) * base;
    }
    bool cot = std::holds_alternative<BcmCot>(scheme);
    return scheme_pole_bcm(op.topology, cot, op, params) - open_loop_pole(op);
}

SmallSignal closed_loop_small_signal(const Scheme& scheme, const LoadModel& load,
                                     const OperatingPoint& op, const ConverterParams& params) {
    SmallSignal ss{};
    ss.p0 = open_loop_pole(op);
    ss.dpl = load_pole_shift(load, op, params);
    ss.dpc = control_pole_shift(scheme, load, op, params);
    ss.p = ss.p0 + ss.dpc + ss.dpl;
    ss.gamma_s0 = gamma_s0_of(op);
    ss.gamma_c0 = gamma_c0_of(op);
    ss.has_control = !std::holds_alternative<BcmCot>(scheme);

    double tau = tau_of(op);
    if (std::holds_alternative<OpenLoop>(scheme)) {
        ss.gamma_s = ss.gamma_s0;
        ss.gamma_c = ss.gamma_c0;
    } else if (const auto* vm = std::get_if<Vmc>(&scheme)) {
        ss.gamma_s = ss.gamma_s0;
        ss.gamma_c = vm->g * ss.gamma_c0 / vm->Vh;
    } else if (const auto* cm = std::get_if<Cmc>(&scheme)) {
        double mc = ramp_factor(op.topology, *cm, op, params);
        if (op.topology == Topology::Boost) {
            ss.gamma_s = tau * op.M * ((2.0 * op.M - 1.0) / (op.M - 1.0) - 2.0 / mc);
            ss.gamma_c = op.rho * op.T * op.D / (params.C * (op.M - 1.0) * mc);
        } else {
            ss.gamma_s = tau * op.M * (2.0 - op.M - 2.0 / mc) / (1.0 - op.M);
            ss.gamma_c = op.rho * op.T * op.D / (params.C * op.M * mc);
        }
    } else if (const auto* vo = std::get_if<Vcotc>(&scheme)) {
        double sigma = vcotc_sigma(*vo, op, params);
        ss.gamma_s = sigma * ss.gamma_s0;
        ss.gamma_c = 1.0 - sigma;
    } else if (std::holds_alternative<Bcm>(scheme)) {
        if (op.topology == Topology::Boost) {
            ss.gamma_s = tau * op.M;
            ss.gamma_c = op.rho * op.T / (2.0 * params.C * op.M);
        } else {
            ss.gamma_s = 0.0;
            ss.gamma_c = op.rho * op.T / (2.0 * params.C);
        }
    } else {  // BcmCot
        ss.gamma_s = op.topology == Topology::Boost ? 2.0 * tau * op.M
                                                    : tau * op.M / (1.0 - op.M);
        ss.gamma_c = 0.0;
    }
    return ss;
}

SmallSignal closed_loop_pole(const Scheme& scheme, const LoadModel& load, const OperatingPoint& op,
                             const ConverterParams& params) {
    SmallSignal ss = closed_loop_small_signal(scheme, load, op, params);

    // For the power stage and peak-current control, the shifted pole also has
    // a directly composed closed form; the two routes must agree exactly.
    bool composed = std::holds_alternative<OpenLoop>(scheme) || std::holds_alternative<Cmc>(scheme);
    if (composed && !std::holds_alternative<Resistive>(load)) {
        double tau = tau_of(op);
        double M = op.M;
        double direct = std::numeric_limits<double>::quiet_NaN();
        double mc = 1.0;
        if (const auto* cm = std::get_if<Cmc>(&scheme)) mc = ramp_factor(op.topology, *cm, op, params);
        if (const auto* cpl = std::get_if<ResistiveParallelCPL>(&load)) {
            double r0_term = 2.0 * op.rho * op.T / (cpl->R0 * params.C);
            if (op.topology == Topology::Boost) {
                direct = 1.0 - tau / (M - 1.0) - r0_term;
            } else {
                double num = std::holds_alternative<Cmc>(scheme) ? M - 2.0 * M / mc : M;
                direct = 1.0 - tau * num / (1.0 - M) - r0_term;
            }
        } else if (const auto* ccl = std::get_if<ResistiveParallelCCL>(&load)) {
            double r0_term = op.rho * op.T / (ccl->R0 * params.C);
            if (op.topology == Topology::Boost) {
                direct = 1.0 - tau * M / (M - 1.0) - r0_term;
            } else {
                double num = std::holds_alternative<Cmc>(scheme) ? 1.0 - 2.0 * M / mc : 1.0;
                direct = 1.0 - tau * num / (1.0 - M) - r0_term;
            }
        }
        if (std::isfinite(direct) && std::abs(direct - ss.p) > 1e-12)
            fail(Errc::InvalidParams, "composed pole form disagrees with the three-term sum");
    }
    return ss;
}

LinearizedNumeric linearize_numeric(const CycleMap& map, double v_star, double vs, double control) {
    double f0 = map.f(v_star, vs, control);
    if (std::abs(f0 - v_star) > 1e-9 * std::abs(v_star))
        fail(Errc::NotAFixedPoint, "linearization point is not a fixed point of the map");

    auto derivative = [](const std::function<double(double)>& g, double x) {
        double h = std::max(1e-6 * std::abs(x), 1e-9);
        auto central = [&](double step) { return (g(x + step) - g(x - step)) / (2.0 * step); };
        double dh = central(h);
        double dh2 = central(0.5 * h);
        return (4.0 * dh2 - dh) / 3.0;
    };

    LinearizedNumeric out{};
    out.p = derivative([&](double x) { return map.f(x, vs, control); }, v_star);
    out.gamma_s = derivative([&](double x) { return map.f(v_star, x, control); }, vs);
    out.gamma_c =
        map.has_control ? derivative([&](double x) { return map.f(v_star, vs, x); }, control) : 0.0;
    return out;
}

double vmc_critical_gain(const OperatingPoint& op, double Vh) {
    // p = p0 - g Gc0/Vh reaches -1 at this gain.
    return (open_loop_pole(op) + 1.0) * Vh / gamma_c0_of(op);
}

BuckCclOrbits buck_ccl_fixed_points(const ConverterParams& params, double vc, double Io) {
    double T = params.period();
    if (!(Io > 0.0) || !(vc > 0.0))
        fail(Errc::NoRealOrbit, "coexisting orbits require positive vc and Io");
    double q = vc * vc * params.L / (2.0 * T * Io * params.vs);
    double disc = 0.25 - q;
    if (disc < 0.0)
        fail(Errc::NoRealOrbit, "control value beyond the saddle-node; no periodic orbit");
    double root = std::sqrt(disc);
    return {0.5 - root, 0.5 + root, std::sqrt(T * Io * params.vs / (2.0 * params.L))};
}

BifurcationReport classify(double p) {
    if (p >= 1.0) return {BifurcationKind::SaddleNode, p - 1.0};
    if (p <= -1.0) return {BifurcationKind::Subharmonic, -p - 1.0};
    return {BifurcationKind::Stable, 1.0 - std::abs(p)};
}

}  // namespace dcmap
