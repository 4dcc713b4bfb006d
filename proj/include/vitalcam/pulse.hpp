#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <numbers>
#include <optional>

#include "vitalcam/facegate.hpp"
#include "vitalcam/fft.hpp"
#include "vitalcam/frame.hpp"
#include "vitalcam/pyramid.hpp"
#include "vitalcam/temporal.hpp"

namespace vitalcam {

struct PulseConfig {
    BandConfig band;
    double calibration_seconds = 5.0;
    double window_seconds = 10.0;
    double min_fps = 15.0;
    double smoothing_factor = 0.3;
    int pyramid_levels = 3;
    int analysis_level = 1;
    // Green carries the strongest blood-volume signal; configurable anyway.
    Channel channel = Channel::G;
    // Peak-to-mean spectral amplitude below which a bpm value is withheld.
    double confidence_threshold = 3.0;
    // A timestamp gap beyond this resets calibration; sustained gating beyond
    // gate_reset_seconds does the same.
    double max_gap_seconds = 1.0;
    double gate_reset_seconds = 3.0;

    bool valid() const {
        return band.valid() && calibration_seconds > 0.0 &&
               window_seconds >= calibration_seconds && smoothing_factor > 0.0 &&
               smoothing_factor <= 1.0 && pyramid_levels >= 1 &&
               analysis_level < pyramid_levels && analysis_level >= 0 && min_fps > 0.0;
    }
};

struct BpmReading {
    std::optional<double> bpm;  // in [24, 240] when present
    double confidence = 0.0;
    size_t window_samples = 0;
    bool calibrating = true;
    bool low_fps = false;
};

struct BpmEstimate {
    double bpm = 0.0;
    double confidence = 0.0;
};

// Dominant in-band frequency of a uniformly sampled window. Mean-removed,
// Hann-windowed power spectrum; the in-band argmax must be a genuine local
// maximum (a band-edge bin dominated by an out-of-band neighbour counts as no
// peak); the peak is refined by parabolic interpolation on log power.
// Confidence is the ratio of peak amplitude to mean in-band amplitude.
inline BpmEstimate estimate_bpm(const TimeSeries& window, const BandConfig& band) {
    const size_t n = window.values.size();
    if (static_cast<double>(n) < 2.0 * window.sample_rate_hz || n < 8)
        throw error(errc::too_short, "window shorter than 2 seconds");
    if (!(band.f_hi_hz < window.sample_rate_hz / 2.0))
        throw error(errc::nyquist_violation, "band exceeds Nyquist at this sample rate");

    double mean = 0.0;
    for (double v : window.values) mean += v;
    mean /= static_cast<double>(n);

    std::vector<detail::cplx> spec(n);
    for (size_t i = 0; i < n; ++i) {
        const double hann =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n));
        spec[i] = detail::cplx((window.values[i] - mean) * hann, 0.0);
    }
    detail::fft(spec, false);

    const double df = window.sample_rate_hz / static_cast<double>(n);
    const size_t half = n / 2;
    auto power = [&](size_t k) { return std::norm(spec[k]); };

    size_t k_lo = static_cast<size_t>(std::ceil(band.f_lo_hz / df));
    size_t k_hi = static_cast<size_t>(std::floor(band.f_hi_hz / df));
    k_lo = std::max<size_t>(k_lo, 1);
    k_hi = std::min(k_hi, half);
    if (k_lo > k_hi) throw error(errc::no_in_band_peak, "band contains no transform bin");

    size_t peak = k_lo;
    double peak_pow = power(k_lo);
    double band_pow_sum = 0.0, band_amp_sum = 0.0;
    for (size_t k = k_lo; k <= k_hi; ++k) {
        const double p = power(k);
        band_pow_sum += p;
        band_amp_sum += std::sqrt(p);
        if (p > peak_pow) {
            peak_pow = p;
            peak = k;
        }
    }
    if (band_pow_sum < 1e-12 || peak_pow <= 0.0)
        throw error(errc::no_in_band_peak, "in-band power below the noise floor");

    const double prev_pow = peak > 0 ? power(peak - 1) : 0.0;
    const double next_pow = peak + 1 <= half ? power(peak + 1) : 0.0;
    if (prev_pow > peak_pow || next_pow > peak_pow)
        throw error(errc::no_in_band_peak, "in-band maximum is the shoulder of an out-of-band peak");

    double delta = 0.0;
    if (prev_pow > 0.0 && next_pow > 0.0) {
        const double a = std::log(prev_pow);
        const double b = std::log(peak_pow);
        const double c = std::log(next_pow);
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    }

    BpmEstimate est;
    est.bpm = 60.0 * (static_cast<double>(peak) + delta) * df;
    const double mean_amp = band_amp_sum / static_cast<double>(k_hi - k_lo + 1);
    est.confidence = mean_amp > 0.0 ? std::sqrt(peak_pow) / mean_amp : 0.0;
    return est;
}

// Exponential update toward the newest estimate; seeds on the first value.
inline double smooth(std::optional<double> previous, double new_bpm, double factor) {
    if (!(factor > 0.0 && factor <= 1.0))
        throw error(errc::invalid_argument, "smoothing factor must be in (0, 1]");
    if (!previous) return new_bpm;
    return *previous + factor * (new_bpm - *previous);
}

// Per-user heart-rate estimator. Frames stream in; each accepted frame
// contributes one pooled sample (spatial mean of the chosen gaussian level of
// the green channel inside the analysis area) pushed through the streaming
// band-pass into a sliding window. After the calibration span the window is
// handed to estimate_bpm and the result smoothed.
//
// Single-owner mutable: never call push_frame concurrently on one session.
class PulseSession {
public:
    PulseSession(PulseConfig config, Roi analysis_roi,
                 std::unique_ptr<DetectorInterface> detector, double iou_threshold = 0.5)
        : config_(std::move(config)),
          gate_cfg_{iou_threshold, analysis_roi},
          detector_(std::move(detector)),
          filter_(config_.band) {
        if (!config_.valid()) throw error(errc::invalid_argument, "invalid pulse config");
    }

    // Convenience constructor: fixed analysis area that always passes the gate.
    PulseSession(PulseConfig config, Roi analysis_roi)
        : PulseSession(std::move(config), analysis_roi, static_detector(analysis_roi)) {}

    BpmReading push_frame(const Frame& frame) {
        if (!frame.valid()) throw error(errc::invalid_argument, "invalid frame");
        if (last_ts_ms_ && frame.timestamp_ms <= *last_ts_ms_)
            throw error(errc::non_monotonic_timestamp, "timestamps must strictly increase");
        last_ts_ms_ = frame.timestamp_ms;
        ++frames_seen_;

        GateResult g = gate(gate_cfg_, detector_->detect(frame));
        last_detection_ = g.best;
        if (!g.accepted) {
            ++frames_gated_out_;
            if (last_accept_ts_ms_ &&
                frame.timestamp_ms - *last_accept_ts_ms_ >
                    static_cast<uint32_t>(config_.gate_reset_seconds * 1000.0)) {
                reset_window();
                last_reading_ = BpmReading{};
            }
            return last_reading_;
        }

        // Stalls invalidate the spectral window.
        if (last_accept_ts_ms_ &&
            frame.timestamp_ms - *last_accept_ts_ms_ >
                static_cast<uint32_t>(config_.max_gap_seconds * 1000.0))
            reset_window();

        double dt = 1.0 / 30.0;
        if (last_accept_ts_ms_)
            dt = (frame.timestamp_ms - *last_accept_ts_ms_) / 1000.0;
        last_accept_ts_ms_ = frame.timestamp_ms;

        GrayPlane plane = extract_channel(frame, config_.channel);
        GrayPlane roi_plane = crop(plane, gate_cfg_.analysis_roi);
        GaussianPyramid pyr =
            build_gaussian(roi_plane, std::min(config_.analysis_level,
                                               max_levels(roi_plane.width, roi_plane.height)));
        const double pooled = mean(pyr.levels.back());
        const double filtered = filter_.push(pooled, dt);

        samples_.push_back({frame.timestamp_ms, filtered});
        trim_window();
        last_reading_ = evaluate_window();
        return last_reading_;
    }

    bool calibrating() const { return last_reading_.calibrating; }
    uint64_t frames_seen() const { return frames_seen_; }
    uint64_t frames_gated_out() const { return frames_gated_out_; }
    std::optional<double> last_bpm() const { return last_reading_.bpm; }
    std::optional<Detection> last_detection() const { return last_detection_; }
    const PulseConfig& config() const { return config_; }

private:
    struct Sample {
        uint32_t ts_ms;
        double value;
    };

    void reset_window() {
        samples_.clear();
        filter_.reset();
        smoothed_.reset();
    }

    void trim_window() {
        const uint32_t span = static_cast<uint32_t>(config_.window_seconds * 1000.0);
        while (!samples_.empty() && samples_.back().ts_ms - samples_.front().ts_ms > span)
            samples_.pop_front();
    }

    BpmReading evaluate_window() {
        BpmReading r;
        r.window_samples = samples_.size();
        if (samples_.size() < 2) return r;

        const double span_s = (samples_.back().ts_ms - samples_.front().ts_ms) / 1000.0;
        if (span_s < config_.calibration_seconds) return r;

        const double fs = static_cast<double>(samples_.size() - 1) / span_s;
        if (span_s >= config_.window_seconds - 0.25 && fs < config_.min_fps) {
            r.low_fps = true;
            return r;
        }
        // The band cannot be evaluated at all below twice its upper edge.
        if (!(config_.band.f_hi_hz < fs / 2.0)) {
            r.low_fps = true;
            return r;
        }

        TimeSeries window;
        window.sample_rate_hz = fs;
        window.values.reserve(samples_.size());
        for (const Sample& s : samples_) window.values.push_back(s.value);

        try {
            BpmEstimate est = estimate_bpm(window, config_.band);
            r.confidence = est.confidence;
            if (est.confidence > config_.confidence_threshold &&
                est.bpm >= 24.0 && est.bpm <= 240.0) {
                smoothed_ = smooth(smoothed_, est.bpm, config_.smoothing_factor);
                r.bpm = smoothed_;
            }
        } catch (const error& e) {
            if (e.code() != errc::no_in_band_peak && e.code() != errc::too_short) throw;
        }
        r.calibrating = false;
        return r;
    }

    PulseConfig config_;
    GateConfig gate_cfg_;
    std::unique_ptr<DetectorInterface> detector_;
    StreamingBandpass filter_;
    std::deque<Sample> samples_;
    std::optional<uint32_t> last_ts_ms_;
    std::optional<uint32_t> last_accept_ts_ms_;
    std::optional<double> smoothed_;
    std::optional<Detection> last_detection_;
    BpmReading last_reading_;
    uint64_t frames_seen_ = 0;
    uint64_t frames_gated_out_ = 0;
};

}  // namespace vitalcam
