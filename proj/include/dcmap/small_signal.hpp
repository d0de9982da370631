#pragma once

#include "dcmap/discrete_map.hpp"
#include "dcmap/model_core.hpp"
#include "dcmap/types.hpp"

namespace dcmap {

// Linearized per-cycle dynamics about an operating point:
//   v_hat_{n+1} = p v_hat_n + gamma_s vs_hat_n + gamma_c vc_hat_n.
// The closed-loop pole splits into the open-loop pole, a control-scheme
// shift, and a load shift: p = p0 + dpc + dpl (exact as computed).
struct SmallSignal {
    double p0;
    double dpc;
    double dpl;
    double p;
    double gamma_s;
    double gamma_c;   // per unit of the scheme's control input; 0 when absent
    double gamma_s0;  // open-loop (duty-commanded) coefficients at the point
    double gamma_c0;
    bool has_control;
};

enum class BifurcationKind { Stable, SaddleNode, Subharmonic };

struct BifurcationReport {
    BifurcationKind kind;
    double margin;  // distance of p from the nearest unit-circle boundary
};

inline const char* to_string(BifurcationKind k) {
    switch (k) {
        case BifurcationKind::Stable: return "stable";
        case BifurcationKind::SaddleNode: return "saddle-node";
        default: return "subharmonic";
    }
}

/// Open-loop (power-stage) pole at the operating point, using its steady
/// period.
double open_loop_pole(const OperatingPoint& op);

/// Pole of the exact piecewise-linear switching model, evaluated in closed
/// form from the stage durations and the natural frequencies 1/RC, Rc/L,
/// 1/sqrt(LC). Falls back to the hyperbolic branch when the diode-stage
/// dynamics are overdamped.
double exact_pole_closed_form(const OperatingPoint& op, const ConverterParams& params);

/// Pole shift contributed by the control scheme (zero for open loop).
double control_pole_shift(const Scheme& scheme, const LoadModel& load, const OperatingPoint& op,
                          const ConverterParams& params);

/// Pole shift contributed by a voltage-dependent load; zero for a resistor.
double load_pole_shift(const LoadModel& load, const OperatingPoint& op,
                       const ConverterParams& params);

/// Full linearized coefficients for the scheme/load/point combination.
SmallSignal closed_loop_small_signal(const Scheme& scheme, const LoadModel& load,
                                     const OperatingPoint& op, const ConverterParams& params);

/// Pole part only; additionally cross-checks the composed closed forms for
/// constant-power/constant-current loads against the three-term sum (they
/// must agree to 1e-12) and throws on disagreement.
SmallSignal closed_loop_pole(const Scheme& scheme, const LoadModel& load, const OperatingPoint& op,
                             const ConverterParams& params);

struct LinearizedNumeric {
    double p;
    double gamma_s;
    double gamma_c;
};

/// Finite-difference linearization of an arbitrary cycle map about a fixed
/// point: central differences with one Richardson refinement in each of
/// (vn, vsn, control). Oracle for the closed forms.
LinearizedNumeric linearize_numeric(const CycleMap& map, double v_star, double vs, double control);

/// Feedback gain at which the sampled voltage loop first reaches the
/// subharmonic boundary p = -1.
double vmc_critical_gain(const OperatingPoint& op, double Vh);

struct BuckCclOrbits {
    double M_low;    // stable orbit
    double M_high;   // unstable orbit
    double vc_star;  // control value where the orbits coalesce
};

/// Both fixed points of the current-mode buck feeding a pure constant-current
/// load (no compensating ramp), and the saddle-node control value.
BuckCclOrbits buck_ccl_fixed_points(const ConverterParams& params, double vc, double Io);

BifurcationReport classify(double p);

}  // namespace dcmap
