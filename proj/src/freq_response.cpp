#include "dcmap/freq_response.hpp"

#include <cmath>
#include <numbers>

namespace dcmap {

PulseTransfer make_transfer(const SmallSignal& ss, double rho, TransferKind which, double T) {
    double gamma = which == TransferKind::Control ? ss.gamma_c : ss.gamma_s;
    if (which == TransferKind::Control && !ss.has_control)
        fail(Errc::SchemeMismatch, "scheme has no control input");
    if (!std::isfinite(gamma) || !std::isfinite(ss.p))
        fail(Errc::InvalidParams, "non-finite transfer coefficients");
    return {rho * gamma, ss.p, T};
}

double dc_gain(const PulseTransfer& tf) {
    if (tf.pole == 1.0) fail(Errc::PoleAtUnity, "DC gain undefined: pole at z = 1");
    return tf.gain / (1.0 - tf.pole);
}

double dc_gain_formula(const Scheme& scheme, const OperatingPoint& op,
                       const ConverterParams& params, TransferKind which) {
    double M = op.M;
    double rho = op.rho;
    double R = op.R;

    if (std::holds_alternative<OpenLoop>(scheme)) {
        if (which == TransferKind::Source) return rho * M;
        if (op.topology == Topology::Boost)
            return 2.0 * rho * op.v / op.D * (M - 1.0) / (2.0 * M - 1.0);
        return 2.0 * rho * M * params.vs / op.D * (1.0 - M) / (2.0 - M);
    }
    if (const auto* cm = std::get_if<Cmc>(&scheme)) {
        double m1 = op.topology == Topology::Boost ? params.vs / params.L
                                                   : params.vs * (1.0 - M) / params.L;
        double mc = 1.0 + cm->ma / m1;
        if (op.topology == Topology::Boost) {
            if (which == TransferKind::Control) return rho * R * op.D / ((2.0 * M - 1.0) * mc);
            return rho * M * (1.0 - 2.0 * (M - 1.0) / ((2.0 * M - 1.0) * mc));
        }
        double denom = 2.0 - M - 2.0 * M / mc;
        if (which == TransferKind::Control) return rho * R * op.D * (1.0 - M) / (M * mc * denom);
        return rho * M * (2.0 - M - 2.0 / mc) / denom;
    }
    if (std::holds_alternative<Bcm>(scheme)) {
        if (op.topology == Topology::Boost)
            return which == TransferKind::Control ? rho * R / (4.0 * M) : rho * M / 2.0;
        return which == TransferKind::Control ? rho * R / 2.0 : 0.0;
    }
    if (std::holds_alternative<BcmCot>(scheme)) {
        if (which == TransferKind::Control)
            fail(Errc::SchemeMismatch, "constant-on-time boundary mode has no control input");
        // Audio-susceptibility; the buck form is K M/(1-M) with K on the
        // conduction boundary.
        if (op.topology == Topology::Boost) return rho * M;
        return rho * op.K * M / (1.0 - M);
    }
    fail(Errc::SchemeMismatch, "no tabulated DC-gain closed form for this scheme");
}

std::complex<double> eval(const PulseTransfer& tf, double omega) {
    std::complex<double> z = std::polar(1.0, omega * tf.period);
    return tf.gain / (z - tf.pole);
}

std::vector<BodePoint> bode(const PulseTransfer& tf, const std::vector<double>& omegas) {
    double omega_s = 2.0 * std::numbers::pi / tf.period;
    std::vector<BodePoint> out;
    out.reserve(omegas.size());

    double dc = tf.gain / (1.0 - tf.pole);
    double base = dc >= 0.0 ? 0.0 : -std::numbers::pi;

    double prev_raw = 0.0;
    double prev_unwrapped = base;
    bool first = true;
    for (double w : omegas) {
        if (!(w > 0.0 && w < 0.5 * omega_s))
            fail(Errc::FrequencyOutOfRange, "frequency outside (0, omega_s/2)");
        std::complex<double> h = eval(tf, w);
        double raw = std::arg(h);
        double unwrapped;
        if (first) {
            unwrapped = base + std::remainder(raw - base, 2.0 * std::numbers::pi);
            first = false;
        } else {
            unwrapped = prev_unwrapped + std::remainder(raw - prev_raw, 2.0 * std::numbers::pi);
        }
        prev_raw = raw;
        prev_unwrapped = unwrapped;
        out.push_back({w, 20.0 * std::log10(std::abs(h)), unwrapped * 180.0 / std::numbers::pi});
    }
    return out;
}

std::vector<double> default_omega_grid(double omega_s) {
    constexpr int n = 200;
    double lo = std::log(omega_s / 1000.0);
    double hi = std::log(0.499 * omega_s);
    std::vector<double> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back(std::exp(lo + (hi - lo) * static_cast<double>(i) / (n - 1)));
    return out;
}

}  // namespace dcmap
