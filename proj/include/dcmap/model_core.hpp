#pragma once

#include <vector>

#include "dcmap/types.hpp"

namespace dcmap {

enum class Regime { Dcm, Bcm };

inline const char* to_string(Regime r) { return r == Regime::Dcm ? "DCM" : "BCM"; }

/// Effective load resistance R(v) and its derivative dR/dv.
struct REval {
    double R;
    double dRdv;
};

/// Parallel combination of the load branches at output voltage v, with the
/// analytic derivative with respect to v. A plain resistor returns (R0, 0).
REval effective_resistance(const LoadModel& load, double v);

/// Steady-state conversion ratio M = v/vs from duty D and K = 2L/(R*T).
/// Boost: M > 1 solves M^2 - M = D^2/K. Buck: M in (0,1) solves
/// D^2 (1-M) = K M^2.
double conversion_ratio(Topology topology, double D, double K);

struct DutyPair {
    double D;
    double D2;  // diode-stage duty
};

/// Inverse of conversion_ratio plus the diode-stage duty.
/// Boost: D = sqrt(K M (M-1)), D2 = K M / D. Buck: D = M sqrt(K/(1-M)),
/// D2 = D (1-M)/M.
DutyPair duty_from_ratio(Topology topology, double M, double K);

/// Solved steady state. K, beta, rho are evaluated at the effective load
/// resistance; T is the realized steady-state period (equal to the switching
/// period for fixed-frequency schemes).
struct OperatingPoint {
    Topology topology;
    double M;
    double D;
    double D2;
    double v;    // capacitor voltage, V
    double R;    // effective load resistance, ohm
    double K;    // 2L/(R T)
    double beta; // rho T^2 / (2 L C)
    double rho;  // R/(R+Rc)
    double T;    // steady-state period, s
    Regime regime;
};

struct GivenDuty {
    double D;
};
struct GivenOutput {
    double v;  // target capacitor voltage
};
struct GivenControl {};  // use the scheme's own control value
using PointSpec = std::variant<GivenDuty, GivenOutput, GivenControl>;

/// Solve the self-consistent steady state: v = M vs, R = R(v), and the
/// topology/scheme steady-state relations hold simultaneously (relative
/// residual <= 1e-10). Usually one point; the current-mode buck driving a
/// pure constant-current load admits two coexisting orbits and both are
/// returned (sorted by M ascending).
std::vector<OperatingPoint> solve_operating_point(const ConverterParams& params,
                                                  Topology topology,
                                                  const LoadModel& load,
                                                  const Scheme& scheme,
                                                  const PointSpec& spec);

/// True iff the point stays in discontinuous conduction at duty D:
/// the inductor current returns to zero before the cycle ends (D + D2 < 1).
bool dcm_valid(const OperatingPoint& op, double D);

/// K on the boundary between continuous and discontinuous conduction.
/// Boost: K = D(1-D)^2 = (M-1)/M^3; buck: K = 1-D = 1-M.
double bcm_boundary_from_duty(Topology topology, double D);
double bcm_boundary_from_ratio(Topology topology, double M);

}  // namespace dcmap
