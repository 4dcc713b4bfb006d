#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "vitalcam/error.hpp"
#include "vitalcam/fft.hpp"
#include "vitalcam/frame.hpp"

namespace vitalcam {

// Temporal pass-band and magnification settings. The default band 0.4-4 Hz
// covers 24-240 bpm. level_attenuation[k] scales the gain applied to pyramid
// level k; indices past the end reuse the last entry, so {0.5, 1.0} means
// "half gain on the finest band, full gain elsewhere".
struct BandConfig {
    double f_lo_hz = 0.4;
    double f_hi_hz = 4.0;
    double alpha = 50.0;
    std::vector<double> level_attenuation = {0.5, 1.0};

    bool valid() const {
        if (!(f_lo_hz > 0.0) || !(f_hi_hz > f_lo_hz) || !(alpha >= 0.0)) return false;
        for (double a : level_attenuation)
            if (!(a >= 0.0 && a <= 1.0)) return false;
        return !level_attenuation.empty();
    }

    double attenuation_at(size_t level) const {
        if (level_attenuation.empty()) return 1.0;
        return level_attenuation[std::min(level, level_attenuation.size() - 1)];
    }
};

// Zero every DFT bin whose |frequency| falls outside [f_lo, f_hi], then
// invert. Exact pass-band gain of 1 on bins inside the band.
inline TimeSeries ideal_bandpass(const TimeSeries& s, const BandConfig& cfg) {
    const size_t n = s.values.size();
    if (n < 8) throw error(errc::too_short, "need at least 8 samples");
    if (!(cfg.f_hi_hz < s.sample_rate_hz / 2.0))
        throw error(errc::nyquist_violation, "f_hi must stay below half the sample rate");

    std::vector<detail::cplx> spec(n);
    for (size_t i = 0; i < n; ++i) spec[i] = detail::cplx(s.values[i], 0.0);
    detail::fft(spec, false);

    const double df = s.sample_rate_hz / static_cast<double>(n);
    for (size_t k = 0; k < n; ++k) {
        const double f = (k <= n / 2 ? static_cast<double>(k)
                                     : static_cast<double>(k) - static_cast<double>(n)) *
                         df;
        const double af = std::fabs(f);
        if (af < cfg.f_lo_hz || af > cfg.f_hi_hz) spec[k] = detail::cplx(0.0, 0.0);
    }
    detail::fft(spec, true);

    TimeSeries out;
    out.sample_rate_hz = s.sample_rate_hz;
    out.values.resize(n);
    for (size_t i = 0; i < n; ++i) out.values[i] = spec[i].real();
    return out;
}

// Causal band-pass for the live path: difference of two first-order
// exponential low-passes with cutoffs at the band edges. Coefficient
// k = 2*pi*f*dt / (2*pi*f*dt + 1). The first sample seeds both accumulators
// and yields 0.
class StreamingBandpass {
public:
    StreamingBandpass(double f_lo_hz, double f_hi_hz) : f_lo_(f_lo_hz), f_hi_(f_hi_hz) {}
    explicit StreamingBandpass(const BandConfig& cfg)
        : StreamingBandpass(cfg.f_lo_hz, cfg.f_hi_hz) {}

    double push(double sample, double dt_seconds) {
        if (!(dt_seconds > 0.0)) throw error(errc::invalid_argument, "dt must be positive");
        if (!initialized_) {
            acc_lo_ = acc_hi_ = sample;
            initialized_ = true;
            return 0.0;
        }
        acc_lo_ += coeff(f_lo_, dt_seconds) * (sample - acc_lo_);
        acc_hi_ += coeff(f_hi_, dt_seconds) * (sample - acc_hi_);
        return acc_hi_ - acc_lo_;
    }

    void reset() { initialized_ = false; }
    bool initialized() const { return initialized_; }

private:
    static double coeff(double f, double dt) {
        const double w = 2.0 * std::numbers::pi * f * dt;
        return w / (w + 1.0);
    }

    double f_lo_;
    double f_hi_;
    double acc_lo_ = 0.0;
    double acc_hi_ = 0.0;
    bool initialized_ = false;
};

inline TimeSeries amplify(const TimeSeries& s, const BandConfig& cfg, size_t level) {
    if (level >= cfg.level_attenuation.size())
        throw error(errc::level_out_of_range, "no attenuation entry for this level");
    const double gain = cfg.alpha * cfg.level_attenuation[level];
    TimeSeries out;
    out.sample_rate_hz = s.sample_rate_hz;
    out.values.resize(s.values.size());
    for (size_t i = 0; i < s.values.size(); ++i) out.values[i] = s.values[i] * gain;
    return out;
}

inline TimeSeries magnify_and_recombine(const TimeSeries& original, const TimeSeries& filtered,
                                        const BandConfig& cfg, size_t level) {
    if (original.values.size() != filtered.values.size())
        throw error(errc::length_mismatch, "series lengths differ");
    TimeSeries gained = amplify(filtered, cfg, level);
    TimeSeries out;
    out.sample_rate_hz = original.sample_rate_hz;
    out.values.resize(original.values.size());
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = original.values[i] + gained.values[i];
    return out;
}

}  // namespace vitalcam
