#include "dcmap/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace dcmap {

REval effective_resistance(const LoadModel& load, double v) {
    if (!(v > 0.0)) fail(Errc::NonPositiveResistance, "load evaluated at non-positive voltage");

    struct Visitor {
        double v;
        REval operator()(const Resistive& r) const {
            if (!(r.R0 > 0.0)) fail(Errc::NonPositiveResistance, "resistive load requires R0 > 0");
            return {r.R0, 0.0};
        }
        REval operator()(const ResistiveParallelCPL& l) const {
            // Conductances add: 1/R = 1/R0 + P/v^2. 1/inf is exactly zero.
            double g = 1.0 / l.R0 + l.P / (v * v);
            if (!(g > 0.0)) fail(Errc::NonPositiveResistance, "constant-power load yields R <= 0");
            double R = 1.0 / g;
            double dRdv = 2.0 * l.P * R * R / (v * v * v);
            return {R, dRdv};
        }
        REval operator()(const ResistiveParallelCCL& l) const {
            double g = 1.0 / l.R0 + l.Io / v;
            if (!(g > 0.0)) fail(Errc::NonPositiveResistance, "constant-current load yields R <= 0");
            double R = 1.0 / g;
            double dRdv = l.Io * R * R / (v * v);
            return {R, dRdv};
        }
    };
    return std::visit(Visitor{v}, load);
}

double conversion_ratio(Topology topology, double D, double K) {
    if (!(K > 0.0)) fail(Errc::InvalidParams, "K must be positive");
    if (!(D >= 0.0 && D < 1.0)) fail(Errc::InvalidParams, "duty must lie in [0, 1)");
    if (topology == Topology::Boost) {
        return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * D * D / K));
    }
    // Buck: K M^2 + D^2 M - D^2 = 0, root in (0,1), written to avoid
    // cancellation for K << D^2.
    if (D == 0.0) return 0.0;
    return 2.0 * D / (D + std::sqrt(D * D + 4.0 * K));
}

DutyPair duty_from_ratio(Topology topology, double M, double K) {
    if (!(K > 0.0)) fail(Errc::InvalidParams, "K must be positive");
    if (topology == Topology::Boost) {
        if (!(M > 1.0)) fail(Errc::RatioOutOfRange, "boost requires M > 1");
        double D = std::sqrt(K * M * (M - 1.0));
        return {D, K * M / D};
    }
    if (!(M > 0.0 && M < 1.0)) fail(Errc::RatioOutOfRange, "buck requires 0 < M < 1");
    double D = M * std::sqrt(K / (1.0 - M));
    return {D, D * (1.0 - M) / M};
}

bool dcm_valid(const OperatingPoint& op, double D) {
    if (op.topology == Topology::Boost) {
        // Equivalent forms: 1/(1-D) < M and D + D2 < 1.
        return 1.0 / (1.0 - D) < op.M;
    }
    double D2 = D * (1.0 - op.M) / op.M;
    return D + D2 < 1.0;
}

double bcm_boundary_from_duty(Topology topology, double D) {
    if (topology == Topology::Boost) return D * (1.0 - D) * (1.0 - D);
    return 1.0 - D;
}

double bcm_boundary_from_ratio(Topology topology, double M) {
    if (topology == Topology::Boost) return (M - 1.0) / (M * M * M);
    return 1.0 - M;
}

namespace {

constexpr double kResidualTol = 1e-13;  // relative, on v = M vs (headroom below the 1e-10 contract)
constexpr int kMaxIters = 200;
constexpr double kDutyClampHi = 0.999;
constexpr double kBcmTol = 1e-9;  // |D + D2 - 1| below this reports BCM

struct DutyLaw {
    double value;
    bool clamped;
};

// Duty implied by a fixed-frequency scheme at candidate steady voltage v.
DutyLaw steady_duty(const Scheme& scheme, Topology topology, const ConverterParams& params,
                    double v) {
    double T = params.period();
    double raw = 0.0;
    if (const auto* ol = std::get_if<OpenLoop>(&scheme)) {
        raw = ol->D;
    } else if (const auto* vm = std::get_if<Vmc>(&scheme)) {
        raw = vm->g * (vm->vc - v) / vm->Vh;
    } else if (const auto* cm = std::get_if<Cmc>(&scheme)) {
        double m1 = topology == Topology::Boost ? params.vs / params.L : (params.vs - v) / params.L;
        double denom = T * (m1 + cm->ma);
        if (!(denom > 0.0)) return {kDutyClampHi, true};
        raw = cm->vc / denom;
    } else {
        fail(Errc::SchemeMismatch, "steady duty is defined for fixed-frequency schemes only");
    }
    if (raw < 0.0) return {0.0, true};
    if (raw > kDutyClampHi) return {kDutyClampHi, true};
    return {raw, false};
}

// Scan [lo, hi] for sign changes of r and polish each bracket by bisection.
std::vector<double> scan_roots(const std::function<double(double)>& r, double lo, double hi,
                               int n_scan, double tol_abs) {
    std::vector<double> roots;
    auto safe = [&](double v) -> double {
        try {
            return r(v);
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    auto push = [&](double v) {
        if (roots.empty() || std::abs(v - roots.back()) > 16.0 * tol_abs) roots.push_back(v);
    };
    double prev_v = lo;
    double prev_r = safe(lo);
    if (prev_r == 0.0) push(lo);
    for (int i = 1; i <= n_scan; ++i) {
        double v = lo + (hi - lo) * static_cast<double>(i) / n_scan;
        double rv = safe(v);
        if (std::isfinite(rv) && rv == 0.0) {
            push(v);  // exact zero on a scan node
        } else if (std::isfinite(prev_r) && std::isfinite(rv) && prev_r * rv < 0.0) {
            double a = prev_v, b = v, ra = prev_r;
            while (b - a > tol_abs) {
                double m = 0.5 * (a + b);
                double rm = safe(m);
                if (!std::isfinite(rm)) break;
                if (ra * rm <= 0.0) {
                    b = m;
                } else {
                    a = m;
                    ra = rm;
                }
            }
            push(0.5 * (a + b));
        }
        prev_v = v;
        prev_r = rv;
    }
    return roots;
}

OperatingPoint assemble_point(Topology topology, const ConverterParams& params,
                              const LoadModel& load, double v, double D, double T) {
    REval re = effective_resistance(load, v);
    OperatingPoint op;
    op.topology = topology;
    op.v = v;
    op.M = v / params.vs;
    op.R = re.R;
    op.rho = re.R / (re.R + params.Rc);
    op.T = T;
    op.K = 2.0 * params.L / (re.R * T);
    op.beta = op.rho * T * T / (2.0 * params.L * params.C);
    op.D = D;
    if (D == 0.0) {
        op.D2 = 0.0;  // degenerate: switch never closes
    } else {
        op.D2 = topology == Topology::Boost ? op.K * op.M / D : D * (1.0 - op.M) / op.M;
    }
    double total = op.D + op.D2;
    if (std::abs(total - 1.0) <= kBcmTol) {
        op.regime = Regime::Bcm;
    } else if (total < 1.0) {
        op.regime = Regime::Dcm;
    } else {
        fail(Errc::NotInDcm, "operating point leaves discontinuous conduction (D + D2 >= 1)");
    }
    return op;
}

// Damped fixed-point iteration v <- v + 0.5 (target(v) - v); nan on failure.
double damped_iterate(const std::function<double(double)>& target, double v0) {
    double v = v0;
    for (int i = 0; i < kMaxIters; ++i) {
        double t;
        try {
            t = target(v);
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(t)) return std::numeric_limits<double>::quiet_NaN();
        double next = v + 0.5 * (t - v);
        if (std::abs(t - v) <= kResidualTol * std::abs(v)) return v;
        v = next;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<OperatingPoint> solve_fixed_frequency(const ConverterParams& params, Topology topology,
                                                  const LoadModel& load, const Scheme& scheme,
                                                  const PointSpec& spec) {
    double T = params.period();
    double vs = params.vs;

    if (const auto* go = std::get_if<GivenOutput>(&spec)) {
        double v = go->v;
        REval re = effective_resistance(load, v);
        double K = 2.0 * params.L / (re.R * T);
        double M = v / vs;
        DutyPair dp = duty_from_ratio(topology, M, K);
        return {assemble_point(topology, params, load, v, dp.D, T)};
    }

    auto duty_at = [&](double v) -> DutyLaw {
        if (const auto* gd = std::get_if<GivenDuty>(&spec)) return {gd->D, false};
        return steady_duty(scheme, topology, params, v);
    };
    auto target = [&](double v) -> double {
        REval re = effective_resistance(load, v);
        double K = 2.0 * params.L / (re.R * T);
        return conversion_ratio(topology, duty_at(v).value, K) * vs;
    };
    auto residual = [&](double v) { return target(v) - v; };

    // The current-mode buck with a voltage-dependent load can host two
    // coexisting orbits; enumerate roots rather than iterate to one.
    bool multi_root = std::holds_alternative<GivenControl>(spec) &&
                      std::holds_alternative<Cmc>(scheme) && topology == Topology::Buck;

    std::vector<double> candidates;
    if (!multi_root) {
        double v0 = topology == Topology::Boost ? 2.0 * vs : 0.5 * vs;
        double v = damped_iterate(target, v0);
        if (std::isfinite(v)) candidates.push_back(v);
    }
    if (candidates.empty()) {
        double lo, hi;
        if (topology == Topology::Boost) {
            lo = vs * (1.0 + 1e-9);
            hi = vs * 4.0;
            // Expand until the residual turns negative (M vs grows slower than v).
            for (int i = 0; i < 40 && residual(hi) > 0.0; ++i) hi *= 2.0;
        } else {
            lo = vs * 1e-9;
            hi = vs * (1.0 - 1e-9);
        }
        candidates = scan_roots(residual, lo, hi, 512, 1e-13 * vs);
    }

    std::vector<OperatingPoint> points;
    for (double v : candidates) {
        DutyLaw law = duty_at(v);
        if (law.clamped) continue;  // outside the model's validity region
        try {
            points.push_back(assemble_point(topology, params, load, v, law.value, T));
        } catch (const Error& e) {
            if (e.code() != Errc::NotInDcm && e.code() != Errc::NonPositiveResistance) throw;
        }
    }
    if (points.empty())
        fail(Errc::NoConvergence, "no valid steady state found for the given specification");
    std::sort(points.begin(), points.end(),
              [](const OperatingPoint& a, const OperatingPoint& b) { return a.M < b.M; });
    return points;
}

// Steady period of the valley-controlled constant-on-time converter at
// output v, from per-cycle charge balance.
double vcotc_period_at(Topology topology, const ConverterParams& params, const LoadModel& load,
                       double d, double v) {
    REval re = effective_resistance(load, v);
    double vs = params.vs;
    if (topology == Topology::Boost) {
        if (!(v > vs)) fail(Errc::RatioOutOfRange, "boost output must exceed the source");
        return re.R * d * d * vs * vs / (2.0 * params.L * v * (v - vs));
    }
    if (!(v > 0.0 && v < vs)) fail(Errc::RatioOutOfRange, "buck output must lie in (0, vs)");
    return re.R * d * d * vs * (vs - v) / (2.0 * params.L * v * v);
}

std::vector<OperatingPoint> solve_vcotc(const ConverterParams& params, Topology topology,
                                        const LoadModel& load, const Vcotc& scheme,
                                        const PointSpec& spec) {
    double vs = params.vs;
    double d = scheme.d;

    double v;
    if (const auto* go = std::get_if<GivenOutput>(&spec)) {
        v = go->v;
    } else if (std::holds_alternative<GivenControl>(spec)) {
        if (scheme.ma == 0.0) {
            v = scheme.vc;  // valley tracking is exact without a ramp
        } else {
            auto residual = [&](double x) {
                return x - scheme.vc - scheme.ma * vcotc_period_at(topology, params, load, d, x);
            };
            double lo, hi;
            if (topology == Topology::Boost) {
                lo = vs * (1.0 + 1e-6);
                hi = std::max(2.0 * scheme.vc, 4.0 * vs);
                for (int i = 0; i < 40 && residual(hi) < 0.0; ++i) hi *= 2.0;
            } else {
                lo = vs * 1e-6;
                hi = vs * (1.0 - 1e-9);
            }
            auto roots = scan_roots(residual, lo, hi, 512, 1e-13 * vs);
            if (roots.empty()) fail(Errc::NoValidPeriod, "no steady period satisfies the valley constraint");
            v = roots.front();
        }
    } else {
        fail(Errc::SchemeMismatch, "constant-on-time schemes do not take a commanded duty");
    }

    double T = vcotc_period_at(topology, params, load, d, v);
    if (!(T > d)) fail(Errc::NoValidPeriod, "steady period does not exceed the on-time");
    return {assemble_point(topology, params, load, v, d / T, T)};
}

std::vector<OperatingPoint> solve_bcm(const ConverterParams& params, Topology topology,
                                      const LoadModel& load, const Scheme& scheme,
                                      const PointSpec& spec) {
    double vs = params.vs;
    double L = params.L;

    double v;
    if (const auto* go = std::get_if<GivenOutput>(&spec)) {
        v = go->v;
    } else if (std::holds_alternative<GivenControl>(spec)) {
        std::function<double(double)> target;
        if (const auto* b = std::get_if<Bcm>(&scheme)) {
            double vc = b->vc;
            if (!(vc > 0.0)) fail(Errc::InvalidParams, "peak-current command must be positive");
            if (topology == Topology::Boost) {
                // Power balance: vs vc / 2 = v^2 / R.
                target = [&, vc](double x) {
                    return std::sqrt(0.5 * vc * effective_resistance(load, x).R * vs);
                };
            } else {
                // Average inductor current vc/2 feeds the load: vc = 2 v / R.
                target = [&, vc](double x) { return 0.5 * vc * effective_resistance(load, x).R; };
            }
        } else {
            double d = std::get<BcmCot>(scheme).d;
            if (topology == Topology::Boost) {
                target = [&, d](double x) {
                    return vs * std::sqrt(0.5 * d * effective_resistance(load, x).R / L);
                };
            } else {
                target = [&, d](double x) {
                    return d * effective_resistance(load, x).R * (vs - x) / (2.0 * L);
                };
            }
        }
        double v0 = topology == Topology::Boost ? 2.0 * vs : 0.5 * vs;
        v = damped_iterate(target, v0);
        if (!std::isfinite(v)) {
            auto residual = [&](double x) { return target(x) - x; };
            double lo = topology == Topology::Boost ? vs * (1.0 + 1e-9) : vs * 1e-9;
            double hi = topology == Topology::Boost ? vs * 64.0 : vs * (1.0 - 1e-9);
            auto roots = scan_roots(residual, lo, hi, 512, 1e-13 * vs);
            if (roots.empty()) fail(Errc::NoConvergence, "boundary-mode steady state did not converge");
            v = roots.front();
        }
    } else {
        fail(Errc::SchemeMismatch, "boundary-mode schemes do not take a commanded duty");
    }

    REval re = effective_resistance(load, v);
    double M = v / vs;
    double T, D;
    if (topology == Topology::Boost) {
        if (!(M > 1.0)) fail(Errc::RatioOutOfRange, "boost requires M > 1");
        T = 2.0 * L * M * M * M / (re.R * (M - 1.0));
        D = (M - 1.0) / M;
    } else {
        if (!(M > 0.0 && M < 1.0)) fail(Errc::RatioOutOfRange, "buck requires 0 < M < 1");
        T = 2.0 * L / (re.R * (1.0 - M));
        D = M;
    }
    return {assemble_point(topology, params, load, v, D, T)};
}

}  // namespace

std::vector<OperatingPoint> solve_operating_point(const ConverterParams& params, Topology topology,
                                                  const LoadModel& load, const Scheme& scheme,
                                                  const PointSpec& spec) {
    validate_scheme(params, scheme);
    if (fixed_frequency_scheme(scheme)) return solve_fixed_frequency(params, topology, load, scheme, spec);
    if (const auto* v = std::get_if<Vcotc>(&scheme)) return solve_vcotc(params, topology, load, *v, spec);
    return solve_bcm(params, topology, load, scheme, spec);
}

}  // namespace dcmap
