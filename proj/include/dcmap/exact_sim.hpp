#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dcmap/model_core.hpp"
#include "dcmap/types.hpp"

namespace dcmap {

// Ground-truth switching simulator: within each of the three conduction
// stages the circuit is an affine LTI system in (iL, v), propagated by the
// matrix exponential (no integrator truncation error). Switching instants
// are located on the analytic trajectory. Constant-current loads keep the
// stages affine; a constant-power sink is relinearized on a fixed
// sub-interval cadence.

enum class StageId { SwitchOn, DiodeOn, Idle };

struct CircuitState {
    double iL;  // inductor current, A
    double v;   // capacitor voltage, V
    double t;   // time within the current cycle, s
};

/// Affine stage dynamics d/dt [iL; v] = A [iL; v] + b vs + k.
struct StageModel {
    Eigen::Matrix2d A;
    Eigen::Vector2d b;  // source-voltage coupling
    Eigen::Vector2d k;  // load-driven constant term
    StageId id;
};

/// Stage dynamics with a plain resistive load R_eff (may be infinite).
StageModel stage_model(Topology topology, StageId stage, const ConverterParams& params,
                       double R_eff);

/// Exact propagation over dt (matrix exponential of the augmented system).
CircuitState propagate(const CircuitState& state, const StageModel& model, double vs, double dt);

using EventFn = std::function<double(const CircuitState&)>;

struct EventResult {
    bool fired;
    double t;  // time of the event relative to the given state
    CircuitState state;
};

/// First downward crossing of fn through zero in [0, t_max], located by a
/// scan plus bisection to |dt| <= 1e-13 t_max. fn(start) <= 0 fires at t = 0;
/// no sign change returns fired = false.
EventResult detect_event(const CircuitState& state, const StageModel& model, double vs,
                         const EventFn& fn, double t_max);

struct CycleReport {
    double v_end;
    double d1;  // switch-on duration, s
    double d2;  // instant the inductor current reaches zero, s
    double Tn;  // realized cycle period, s
};

/// One full switching cycle from a voltage sample (inductor current starts
/// at iL_start, normally zero in discontinuous conduction).
CycleReport cycle_map(Topology topology, const Scheme& scheme, const LoadModel& load,
                      const ConverterParams& params, double v_start, double iL_start = 0.0);

/// Newton (finite-difference slope) solution of cycle_map(v) = v; converges
/// to |residual| <= 1e-10 v and handles unstable fixed points.
double find_fixed_point(Topology topology, const Scheme& scheme, const LoadModel& load,
                        const ConverterParams& params, double v_guess);

/// Cycle-to-cycle pole d v_{n+1}/d v_n at a fixed point, by central
/// differences with one Richardson refinement (h = 1e-5 v*).
double exact_pole_numeric(Topology topology, const Scheme& scheme, const LoadModel& load,
                          const ConverterParams& params, double v_star);

struct SimSample {
    int n;
    double v;   // sample at the start of cycle n
    double d1;  // realized switch-on time of cycle n (0 for the final sample)
    double Tn;  // realized period of cycle n (0 for the final sample)
};

struct DensePoint {
    double t;  // absolute time, s
    double iL;
    double v;
    StageId stage;
};

struct Trajectory {
    std::vector<SimSample> samples;  // n_cycles + 1 entries
    std::vector<DensePoint> dense;   // populated when requested
};

Trajectory simulate(Topology topology, const Scheme& scheme, const LoadModel& load,
                    const ConverterParams& params, double iL0, double v0, int n_cycles,
                    bool dense = false);

}  // namespace dcmap
