#include "dcmap/exact_sim.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "dcmap/discrete_map.hpp"

namespace dcmap {

namespace {

constexpr double kEventTimeTol = 1e-13;  // relative to the search window
constexpr int kScanIntervals = 128;
constexpr int kRefreshSegments = 64;  // constant-power relinearization cadence per period

// Load current into the output node, linearized as i = G vo + I0. A
// constant-current branch is exact; a constant-power sink P/vo is the
// tangent companion at the linearization voltage.
struct LoadCompanion {
    double G;
    double I0;
};

LoadCompanion companion_at(const LoadModel& load, double vo) {
    struct Visitor {
        double vo;
        LoadCompanion operator()(const Resistive& r) const { return {1.0 / r.R0, 0.0}; }
        LoadCompanion operator()(const ResistiveParallelCCL& l) const {
            return {1.0 / l.R0, l.Io};
        }
        LoadCompanion operator()(const ResistiveParallelCPL& l) const {
            if (!(vo > 0.0))
                fail(Errc::NonPositiveResistance, "constant-power sink at non-positive voltage");
            return {1.0 / l.R0 - l.P / (vo * vo), 2.0 * l.P / vo};
        }
    };
    return std::visit(Visitor{vo}, load);
}

bool needs_relinearization(const LoadModel& load) {
    return std::holds_alternative<ResistiveParallelCPL>(load);
}

struct StageCtx {
    StageModel model;
    double rhoG;
    double I0;
    double Rc;
    bool node_fed;  // inductor current enters the output node in this stage
};

// Kirchhoff analysis of the three stages with the capacitor ESR:
//   output node: i_node = C v' + G vo + I0,  vo = v + Rc C v'
// which gives v' = rhoG (i_node - G v - I0)/C with rhoG = 1/(1 + Rc G),
// and vo = rhoG (v + Rc (i_node - I0)).
StageCtx make_stage(Topology topology, StageId stage, const ConverterParams& p,
                    const LoadCompanion& lc) {
    double G = lc.G, I0 = lc.I0;
    double denom = 1.0 + p.Rc * G;
    if (!(denom > 0.0)) fail(Errc::NonPositiveResistance, "ESR and load conductance incompatible");
    double rhoG = 1.0 / denom;

    StageCtx c;
    c.rhoG = rhoG;
    c.I0 = I0;
    c.Rc = p.Rc;
    c.model.id = stage;
    c.model.A.setZero();
    c.model.b.setZero();
    c.model.k.setZero();

    bool switch_on = stage == StageId::SwitchOn;
    bool diode_on = stage == StageId::DiodeOn;
    c.node_fed = (topology == Topology::Boost) ? diode_on : (switch_on || diode_on);

    // Capacitor row is common to all stages.
    c.model.A(1, 1) = -rhoG * G / p.C;
    c.model.k(1) = -rhoG * I0 / p.C;
    if (c.node_fed) c.model.A(1, 0) = rhoG / p.C;

    if (topology == Topology::Boost && switch_on) {
        c.model.b(0) = 1.0 / p.L;  // inductor across the source, node isolated
    } else if (c.node_fed) {
        c.model.A(0, 0) = -rhoG * p.Rc / p.L;
        c.model.A(0, 1) = -rhoG / p.L;
        c.model.k(0) = rhoG * p.Rc * I0 / p.L;
        if (topology == Topology::Boost || switch_on) c.model.b(0) = 1.0 / p.L;
    }
    // Idle: inductor current is identically zero; both A(0,*) rows stay zero.
    return c;
}

double output_voltage(const StageCtx& c, const CircuitState& s) {
    double node = c.node_fed ? s.iL : 0.0;
    return c.rhoG * (s.v + c.Rc * (node - c.I0));
}

CircuitState propagate_ctx(const CircuitState& s, const StageCtx& c, double vs, double dt) {
    return propagate(s, c.model, vs, dt);
}

// First root of fn along the stage trajectory in [0, t_max]; fn must start
// non-negative (fn(0) <= 0 fires immediately).
EventResult locate_event(const CircuitState& s0, const StageCtx& ctx, double vs, const EventFn& fn,
                         double t_max, int scan) {
    double f0 = fn(s0);
    if (f0 <= 0.0) return {true, 0.0, s0};

    double prev_t = 0.0;
    double prev_f = f0;
    for (int i = 1; i <= scan; ++i) {
        double t = t_max * static_cast<double>(i) / scan;
        CircuitState st = propagate_ctx(s0, ctx, vs, t);
        double f = fn(st);
        if (f <= 0.0) {
            double lo = prev_t, hi = t, flo = prev_f;
            while (hi - lo > kEventTimeTol * t_max) {
                double mid = 0.5 * (lo + hi);
                double fm = fn(propagate_ctx(s0, ctx, vs, mid));
                if (fm <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            (void)flo;
            CircuitState se = propagate_ctx(s0, ctx, vs, hi);
            se.t = s0.t + hi;
            return {true, hi, se};
        }
        prev_t = t;
        prev_f = f;
    }
    return {false, 0.0, s0};
}

class Simulator {
public:
    Simulator(Topology topology, const Scheme& scheme, const LoadModel& load,
              const ConverterParams& params)
        : topo_(topology), scheme_(scheme), load_(load), params_(params),
          relin_(needs_relinearization(load)) {
        validate_scheme(params, scheme);
    }

    // One switching cycle; state.t is reset to cycle-local time.
    CycleReport cycle(CircuitState& st, std::vector<DensePoint>* dense, double t_base) {
        st.t = 0.0;
        if (fixed_frequency_scheme(scheme_)) return cycle_fixed(st, dense, t_base);
        if (std::holds_alternative<Vcotc>(scheme_)) return cycle_vcotc(st, dense, t_base);
        return cycle_bcm(st, dense, t_base);
    }

private:
    Topology topo_;
    Scheme scheme_;
    LoadModel load_;
    ConverterParams params_;
    bool relin_;

    // Reference span for the relinearization cadence.
    double refresh_span() const {
        if (params_.fixed_frequency()) return params_.period();
        return 8.0 * params_.on_time();
    }

    void push_dense(std::vector<DensePoint>* dense, double t_base, const CircuitState& s,
                    StageId stage) const {
        if (dense) dense->push_back({t_base + s.t, s.iL, s.v, stage});
    }

    // Advance through one stage until the cycle-local time reaches t_limit or
    // the event fires (returns true). Relinearizes the constant-power sink on
    // segment boundaries.
    bool advance(CircuitState& st, StageId stage, double t_limit, const EventFn* ev,
                 std::vector<DensePoint>* dense, double t_base) {
        double h_seg = relin_ ? refresh_span() / kRefreshSegments
                              : std::numeric_limits<double>::infinity();
        int scan = relin_ ? 8 : kScanIntervals;

        push_dense(dense, t_base, st, stage);
        while (st.t < t_limit) {
            double seg_end = std::min(st.t + h_seg, t_limit);
            StageCtx ctx = make_stage(topo_, stage, params_, companion_at(load_, st.v));
            double span = seg_end - st.t;
            if (ev) {
                EventResult r = locate_event(st, ctx, params_.vs, *ev, span, scan);
                if (r.fired) {
                    st = r.state;
                    push_dense(dense, t_base, st, stage);
                    return true;
                }
            }
            if (dense && !relin_) {
                for (int i = 1; i < 16; ++i) {
                    CircuitState si = propagate_ctx(st, ctx, params_.vs, span * i / 16.0);
                    si.t = st.t + span * i / 16.0;
                    push_dense(dense, t_base, si, stage);
                }
            }
            CircuitState next = propagate_ctx(st, ctx, params_.vs, span);
            next.t = st.t + span;
            st = next;
            push_dense(dense, t_base, st, stage);
        }
        return false;
    }

    // Event search with a geometrically expanded window (variable-frequency
    // stages have no a-priori duration bound).
    bool advance_expanding(CircuitState& st, StageId stage, double cap0, const EventFn& ev,
                           std::vector<DensePoint>* dense, double t_base, int max_expand) {
        double cap = st.t + cap0;
        for (int i = 0; i <= max_expand; ++i) {
            if (advance(st, stage, cap, &ev, dense, t_base)) return true;
            cap += cap0 * std::pow(4.0, i + 1);
        }
        return false;
    }

    CycleReport cycle_fixed(CircuitState& st, std::vector<DensePoint>* dense, double t_base) {
        double T = params_.period();
        double v_n = st.v;  // latched feedback sample
        CycleReport rep{};

        if (const auto* cm = std::get_if<Cmc>(&scheme_)) {
            EventFn peak = [cm](const CircuitState& s) { return cm->vc - (s.iL + cm->ma * s.t); };
            if (!advance(st, StageId::SwitchOn, T, &peak, dense, t_base))
                fail(Errc::SchemeInfeasible, "peak-current command not reached within the period");
        } else {
            double Dn;
            if (const auto* ol = std::get_if<OpenLoop>(&scheme_)) {
                Dn = ol->D;
            } else {
                const auto& vm = std::get<Vmc>(scheme_);
                Dn = duty_constraint(scheme_, topo_, params_, v_n, params_.vs, vm.vc).Dn;
            }
            advance(st, StageId::SwitchOn, Dn * T, nullptr, dense, t_base);
        }
        rep.d1 = st.t;

        EventFn zero = [](const CircuitState& s) { return s.iL; };
        if (!advance(st, StageId::DiodeOn, T, &zero, dense, t_base))
            fail(Errc::LeftDcm, "inductor current still positive at the end of the period");
        rep.d2 = st.t;
        st.iL = 0.0;

        advance(st, StageId::Idle, T, nullptr, dense, t_base);
        rep.Tn = T;
        rep.v_end = st.v;
        return rep;
    }

    CycleReport cycle_vcotc(CircuitState& st, std::vector<DensePoint>* dense, double t_base) {
        const auto& sc = std::get<Vcotc>(scheme_);
        CycleReport rep{};

        advance(st, StageId::SwitchOn, sc.d, nullptr, dense, t_base);
        rep.d1 = st.t;

        EventFn zero = [](const CircuitState& s) { return s.iL; };
        if (!advance_expanding(st, StageId::DiodeOn, 8.0 * sc.d, zero, dense, t_base, 5))
            fail(Errc::LeftDcm, "inductor current never returned to zero");
        rep.d2 = st.t;
        st.iL = 0.0;

        // Turn back on when the physical output voltage meets the rising
        // valley ramp (referenced to the cycle start).
        StageCtx idle = make_stage(topo_, StageId::Idle, params_, companion_at(load_, st.v));
        EventFn valley = [&sc, idle](const CircuitState& s) {
            return output_voltage(idle, s) - (sc.vc + sc.ma * s.t);
        };
        if (!advance_expanding(st, StageId::Idle, 16.0 * sc.d, valley, dense, t_base, 6))
            fail(Errc::NoValidPeriod, "output never fell to the valley command");
        rep.Tn = st.t;
        rep.v_end = st.v;
        return rep;
    }

    CycleReport cycle_bcm(CircuitState& st, std::vector<DensePoint>* dense, double t_base) {
        CycleReport rep{};
        if (const auto* bc = std::get_if<BcmCot>(&scheme_)) {
            advance(st, StageId::SwitchOn, bc->d, nullptr, dense, t_base);
        } else {
            const auto& bm = std::get<Bcm>(scheme_);
            double slope = topo_ == Topology::Boost ? params_.vs / params_.L
                                                    : (params_.vs - st.v) / params_.L;
            if (!(slope > 0.0)) fail(Errc::SchemeInfeasible, "no positive on-stage current slope");
            double d_est = bm.vc / slope;
            EventFn peak = [&bm](const CircuitState& s) { return bm.vc - s.iL; };
            if (!advance_expanding(st, StageId::SwitchOn, 2.0 * d_est, peak, dense, t_base, 5))
                fail(Errc::SchemeInfeasible, "peak-current command never reached");
        }
        rep.d1 = st.t;

        EventFn zero = [](const CircuitState& s) { return s.iL; };
        if (!advance_expanding(st, StageId::DiodeOn, 4.0 * rep.d1, zero, dense, t_base, 6))
            fail(Errc::LeftDcm, "inductor current never returned to zero");
        st.iL = 0.0;
        rep.d2 = st.t;
        rep.Tn = st.t;  // boundary mode: the next cycle starts at the zero crossing
        rep.v_end = st.v;
        return rep;
    }
};

}  // namespace

StageModel stage_model(Topology topology, StageId stage, const ConverterParams& params,
                       double R_eff) {
    if (!(R_eff > 0.0)) fail(Errc::NonPositiveResistance, "stage model requires R > 0");
    return make_stage(topology, stage, params, LoadCompanion{1.0 / R_eff, 0.0}).model;
}

CircuitState propagate(const CircuitState& state, const StageModel& model, double vs, double dt) {
    if (dt < 0.0) fail(Errc::InvalidParams, "propagation time must be non-negative");
    if (dt == 0.0) return state;
    Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
    aug.topLeftCorner<2, 2>() = model.A;
    aug.topRightCorner<2, 1>() = model.b * vs + model.k;
    Eigen::Matrix3d phi = (aug * dt).exp();
    Eigen::Vector2d x{state.iL, state.v};
    Eigen::Vector2d y = phi.topLeftCorner<2, 2>() * x + phi.topRightCorner<2, 1>();
    return {y(0), y(1), state.t + dt};
}

EventResult detect_event(const CircuitState& state, const StageModel& model, double vs,
                         const EventFn& fn, double t_max) {
    StageCtx ctx;
    ctx.model = model;
    ctx.rhoG = 1.0;
    ctx.I0 = 0.0;
    ctx.Rc = 0.0;
    ctx.node_fed = false;
    return locate_event(state, ctx, vs, fn, t_max, kScanIntervals);
}

CycleReport cycle_map(Topology topology, const Scheme& scheme, const LoadModel& load,
                      const ConverterParams& params, double v_start, double iL_start) {
    Simulator sim(topology, scheme, load, params);
    CircuitState st{iL_start, v_start, 0.0};
    return sim.cycle(st, nullptr, 0.0);
}

double find_fixed_point(Topology topology, const Scheme& scheme, const LoadModel& load,
                        const ConverterParams& params, double v_guess) {
    Simulator sim(topology, scheme, load, params);
    auto f = [&](double v) {
        CircuitState st{0.0, v, 0.0};
        return sim.cycle(st, nullptr, 0.0).v_end;
    };

    double v = v_guess;
    for (int iter = 0; iter < 80; ++iter) {
        double g = f(v) - v;
        if (std::abs(g) <= 1e-10 * std::abs(v)) return v;
        double h = 1e-6 * std::abs(v);
        double slope = (f(v + h) - (v + h) - (f(v - h) - (v - h))) / (2.0 * h);
        if (!(std::abs(slope) > 1e-12))
            fail(Errc::NoConvergence, "degenerate slope while locating the fixed point");
        double dv = -g / slope;
        double cap = 0.1 * std::abs(v);
        if (std::abs(dv) > cap) dv = std::copysign(cap, dv);
        v += dv;
    }
    fail(Errc::NoConvergence, "fixed-point search did not converge");
}

double exact_pole_numeric(Topology topology, const Scheme& scheme, const LoadModel& load,
                          const ConverterParams& params, double v_star) {
    Simulator sim(topology, scheme, load, params);
    auto f = [&](double v) {
        CircuitState st{0.0, v, 0.0};
        return sim.cycle(st, nullptr, 0.0).v_end;
    };
    double h = 1e-5 * std::abs(v_star);
    auto central = [&](double step) { return (f(v_star + step) - f(v_star - step)) / (2.0 * step); };
    double dh = central(h);
    double dh2 = central(0.5 * h);
    return (4.0 * dh2 - dh) / 3.0;
}

Trajectory simulate(Topology topology, const Scheme& scheme, const LoadModel& load,
                    const ConverterParams& params, double iL0, double v0, int n_cycles,
                    bool dense) {
    Simulator sim(topology, scheme, load, params);
    Trajectory out;
    out.samples.reserve(static_cast<std::size_t>(n_cycles) + 1);

    CircuitState st{iL0, v0, 0.0};
    double t_base = 0.0;
    for (int n = 0; n < n_cycles; ++n) {
        double v_n = st.v;
        try {
            CycleReport rep = sim.cycle(st, dense ? &out.dense : nullptr, t_base);
            out.samples.push_back({n, v_n, rep.d1, rep.Tn});
            t_base += rep.Tn;
        } catch (const Error& e) {
            fail(e.code(), std::string(e.what()) + " (cycle " + std::to_string(n) + ")");
        }
    }
    out.samples.push_back({n_cycles, st.v, 0.0, 0.0});
    return out;
}

}  // namespace dcmap
