#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

namespace dcmap {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
    InvalidParams,
    NonPositiveResistance,
    RatioOutOfRange,
    NoConvergence,
    NotInDcm,
    DenominatorUnderflow,
    NoValidPeriod,
    SchemeMismatch,
    NoRealOrbit,
    NotAFixedPoint,
    NoEvent,
    SchemeInfeasible,
    LeftDcm,
    PoleAtUnity,
    FrequencyOutOfRange,
};

/// Base exception for the toolkit; carries a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

// ---------------------------------------------------------------------------
// Converter description
// ---------------------------------------------------------------------------

enum class Topology { Boost, Buck };

inline const char* to_string(Topology t) { return t == Topology::Boost ? "boost" : "buck"; }

struct FixedPeriod {
    double T;  // switching period, s
};
struct FixedOnTime {
    double d;  // switch on-time, s
};
using Timing = std::variant<FixedPeriod, FixedOnTime>;

/// Power-stage parameters. The load is described separately by LoadModel.
struct ConverterParams {
    double vs;  // source voltage, V
    double L;   // inductance, H
    double C;   // capacitance, F
    double Rc;  // capacitor ESR, ohm
    Timing timing;

    [[nodiscard]] bool fixed_frequency() const { return std::holds_alternative<FixedPeriod>(timing); }

    [[nodiscard]] double period() const {
        if (const auto* fp = std::get_if<FixedPeriod>(&timing)) return fp->T;
        fail(Errc::InvalidParams, "converter has no fixed switching period");
    }

    [[nodiscard]] double on_time() const {
        if (const auto* ot = std::get_if<FixedOnTime>(&timing)) return ot->d;
        fail(Errc::InvalidParams, "converter has no fixed on-time");
    }

    void validate() const {
        if (!(vs > 0.0) || !(L > 0.0) || !(C > 0.0) || !(Rc >= 0.0))
            fail(Errc::InvalidParams, "vs, L, C must be positive and Rc non-negative");
        if (const auto* fp = std::get_if<FixedPeriod>(&timing)) {
            if (!(fp->T > 0.0)) fail(Errc::InvalidParams, "switching period must be positive");
        } else if (const auto* ot = std::get_if<FixedOnTime>(&timing)) {
            if (!(ot->d > 0.0)) fail(Errc::InvalidParams, "on-time must be positive");
        }
    }
};

// ---------------------------------------------------------------------------
// Loads
// ---------------------------------------------------------------------------

inline constexpr double kInfiniteR = std::numeric_limits<double>::infinity();

struct Resistive {
    double R0;  // ohm
};

/// Resistor in parallel with a constant-power sink (current P/v).
/// R0 = kInfiniteR encodes a pure constant-power load.
struct ResistiveParallelCPL {
    double R0;  // ohm, may be infinite
    double P;   // W
};

/// Resistor in parallel with a constant-current sink Io (may be negative).
/// R0 = kInfiniteR encodes a pure constant-current load.
struct ResistiveParallelCCL {
    double R0;  // ohm, may be infinite
    double Io;  // A
};

using LoadModel = std::variant<Resistive, ResistiveParallelCPL, ResistiveParallelCCL>;

// ---------------------------------------------------------------------------
// Control schemes
// ---------------------------------------------------------------------------
//
// Fixed switching frequency: OpenLoop, Vmc, Cmc.
// Variable switching frequency: Vcotc, Bcm, BcmCot.
// Non-resistive loads attach orthogonally through LoadModel.

struct OpenLoop {
    double D;  // commanded duty cycle
};

/// Sampled proportional voltage feedback against a PWM ramp of amplitude Vh.
struct Vmc {
    double g;   // feedback gain, V/V
    double Vh;  // PWM ramp amplitude, V
    double vc;  // reference voltage, V
};

/// Peak-current control: the switch opens when iL plus the compensating ramp
/// reaches vc.
struct Cmc {
    double vc;  // peak-current command, A
    double ma;  // compensating ramp slope, A/s (may be negative)
};

/// Constant on-time; the next cycle starts when the output voltage falls to
/// vc plus a ramp of slope ma.
struct Vcotc {
    double d;   // on-time, s
    double vc;  // valley command, V
    double ma;  // ramp slope, V/s
};

/// Boundary conduction with variable on-time: switch off at iL = vc, switch
/// back on when iL returns to zero.
struct Bcm {
    double vc;  // peak-current command, A
};

/// Boundary conduction with constant on-time d.
struct BcmCot {
    double d;  // on-time, s
};

using Scheme = std::variant<OpenLoop, Vmc, Cmc, Vcotc, Bcm, BcmCot>;

inline bool fixed_frequency_scheme(const Scheme& s) {
    return std::holds_alternative<OpenLoop>(s) || std::holds_alternative<Vmc>(s) ||
           std::holds_alternative<Cmc>(s);
}

inline const char* scheme_name(const Scheme& s) {
    struct Visitor {
        const char* operator()(const OpenLoop&) const { return "openloop"; }
        const char* operator()(const Vmc&) const { return "vmc"; }
        const char* operator()(const Cmc&) const { return "cmc"; }
        const char* operator()(const Vcotc&) const { return "vcotc"; }
        const char* operator()(const Bcm&) const { return "bcm"; }
        const char* operator()(const BcmCot&) const { return "bcmcot"; }
    };
    return std::visit(Visitor{}, s);
}

/// Scheme/timing consistency: fixed-frequency schemes need a period; the
/// constant-on-time schemes need an on-time matching the scheme's own d.
/// Bcm derives its timing entirely from vc and ignores the timing field.
inline void validate_scheme(const ConverterParams& params, const Scheme& scheme) {
    params.validate();
    if (fixed_frequency_scheme(scheme)) {
        if (!params.fixed_frequency())
            fail(Errc::SchemeMismatch, "fixed-frequency scheme requires a fixed switching period");
    } else if (const auto* v = std::get_if<Vcotc>(&scheme)) {
        if (!(v->d > 0.0)) fail(Errc::InvalidParams, "on-time must be positive");
        if (params.fixed_frequency())
            fail(Errc::SchemeMismatch, "constant-on-time scheme requires FixedOnTime timing");
        if (std::abs(params.on_time() - v->d) > 1e-12 * v->d)
            fail(Errc::SchemeMismatch, "scheme on-time disagrees with converter timing");
    } else if (const auto* b = std::get_if<BcmCot>(&scheme)) {
        if (!(b->d > 0.0)) fail(Errc::InvalidParams, "on-time must be positive");
        if (params.fixed_frequency())
            fail(Errc::SchemeMismatch, "constant-on-time scheme requires FixedOnTime timing");
        if (std::abs(params.on_time() - b->d) > 1e-12 * b->d)
            fail(Errc::SchemeMismatch, "scheme on-time disagrees with converter timing");
    }
    if (const auto* v = std::get_if<Vmc>(&scheme)) {
        if (!(v->Vh > 0.0)) fail(Errc::InvalidParams, "PWM ramp amplitude must be positive");
    }
}

}  // namespace dcmap
