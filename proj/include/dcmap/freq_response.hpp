#pragma once

#include <complex>
#include <vector>

#include "dcmap/small_signal.hpp"

namespace dcmap {

/// Single-pole pulse transfer function T(z) = gain / (z - pole), sampled at
/// the steady-state period.
struct PulseTransfer {
    double gain;
    double pole;
    double period;  // s
};

enum class TransferKind { Control, Source };

/// Output transfer from the linearized per-cycle dynamics; gain carries the
/// rho divider so the numerator refers to the physical output voltage.
PulseTransfer make_transfer(const SmallSignal& ss, double rho, TransferKind which, double T);

/// T(1); throws PoleAtUnity when the pole sits on z = 1.
double dc_gain(const PulseTransfer& tf);

/// Closed-form DC gain for the scheme/topology combinations with a tabulated
/// expression (power stage, peak-current control, boundary mode). Throws
/// SchemeMismatch for untabulated rows.
double dc_gain_formula(const Scheme& scheme, const OperatingPoint& op,
                       const ConverterParams& params, TransferKind which);

/// Frequency response T(e^{j omega T}) at a single frequency.
std::complex<double> eval(const PulseTransfer& tf, double omega);

struct BodePoint {
    double omega;      // rad/s
    double mag_db;
    double phase_deg;  // unwrapped; the DC baseline is 0 or -180
};

/// Sampled frequency response on (0, omega_s/2); omega_s = 2 pi / period.
std::vector<BodePoint> bode(const PulseTransfer& tf, const std::vector<double>& omegas);

/// Default grid: 200 log-spaced points over [omega_s/1000, 0.499 omega_s].
std::vector<double> default_omega_grid(double omega_s);

}  // namespace dcmap
