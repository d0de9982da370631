#pragma once

#include <functional>
#include <vector>

#include "dcmap/model_core.hpp"
#include "dcmap/types.hpp"

namespace dcmap {

// One-dimensional cycle-to-cycle maps v_{n+1} = f(v_n, ...). All continuous
// variables are sampled at the start of each switching cycle; feedback laws
// latch that sample.

struct DutyResult {
    double Dn;
    bool clamped;  // duty left [0, 0.999]; the model's validity region ends here
};

/// Duty commanded by a fixed-frequency scheme for the cycle starting at vn.
DutyResult duty_constraint(const Scheme& scheme, Topology topology, const ConverterParams& params,
                           double vn, double vsn, double vcn);

/// Boost power-stage map at duty Dn and cycle-start load resistance Rn.
double boost_map(double vn, double vsn, double Dn, double Rn, const ConverterParams& params);

/// Buck power-stage map.
double buck_map(double vn, double vsn, double Dn, double Rn, const ConverterParams& params);

struct VcotcResult {
    double v_next;
    double Tn;
};

/// Valley-controlled constant-on-time cycle: the period Tn satisfies both the
/// power-stage map and the valley constraint v_{n+1} = vcn + ma Tn.
VcotcResult vcotc_step(Topology topology, double vn, double vsn, double vcn, double Rn,
                       const Vcotc& scheme, const ConverterParams& params);

struct BcmResult {
    double v_next;
    double dn;
    double Tn;
};

/// Boundary-conduction cycle; control is the peak current (variable on-time)
/// or the fixed on-time.
BcmResult bcm_step(Topology topology, double vn, double vsn, double control, bool constant_on_time,
                   double Rn, const ConverterParams& params);

/// The scheme's cycle map as a plain function of (vn, vsn, control), with the
/// load resistance re-evaluated at vn each call.
struct CycleMap {
    std::function<double(double vn, double vsn, double control)> f;
    bool has_control;     // false for constant-on-time boundary mode
    double control0;      // scheme's nominal control input
};

CycleMap make_cycle_map(Topology topology, const Scheme& scheme, const LoadModel& load,
                        const ConverterParams& params);

struct CycleSample {
    double v;          // sample at cycle start
    double duty_or_d;  // duty (fixed frequency) or on-time (variable frequency)
    double Tn;
    double Rn;
    bool clamped;
};

/// Iterate the map n_cycles times from v0, refreshing Rn = R(vn) each cycle.
/// Returns n_cycles + 1 samples; entry k describes the cycle starting at v_k.
std::vector<CycleSample> iterate(Topology topology, const Scheme& scheme, const LoadModel& load,
                                 const ConverterParams& params, double v0, int n_cycles);

}  // namespace dcmap
