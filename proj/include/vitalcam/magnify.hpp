#pragma once

#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "vitalcam/pyramid.hpp"
#include "vitalcam/frame.hpp"
#include "vitalcam/temporal.hpp"

namespace vitalcam {

// Offline color magnification over a full frame sequence: decompose every
// frame into a Laplacian pyramid, band-pass each pixel's time series per
// level, scale by alpha times the level attenuation, add back, collapse.
// The residual acts as level `levels` so spatially flat regions (which carry
// their temporal signal in the coarse chain) are magnified too.
//
// `sample_rate_hz` is taken from the frame cadence; all three color channels
// are processed independently.
class SequenceMagnifier {
public:
    SequenceMagnifier(BandConfig cfg, int levels) : cfg_(std::move(cfg)), levels_(levels) {
        if (levels_ < 1 || levels_ > 6)
            throw error(errc::invalid_argument, "levels must be within 1..6");
        // Freeze one attenuation value per pyramid level plus the residual.
        attenuation_.resize(static_cast<size_t>(levels_) + 1);
        for (size_t k = 0; k < attenuation_.size(); ++k)
            attenuation_[k] = cfg_.attenuation_at(k);
    }

    std::vector<Frame> run(const std::vector<Frame>& frames, double sample_rate_hz) const {
        if (frames.size() < 8)
            throw error(errc::too_short, "need at least 8 frames");
        const uint32_t w = frames.front().width, h = frames.front().height;
        for (const Frame& f : frames)
            if (f.width != w || f.height != h)
                throw error(errc::dimension_mismatch, "frame sizes differ within the sequence");
        const int lv = std::min(levels_, max_levels(w, h));

        std::vector<Frame> out(frames.size());
        for (size_t i = 0; i < frames.size(); ++i) {
            out[i].width = w;
            out[i].height = h;
            out[i].timestamp_ms = frames[i].timestamp_ms;
            out[i].pixels.resize(frames[i].pixels.size());
        }
        for (int ch = 0; ch < 3; ++ch)
            magnify_channel(frames, out, static_cast<Channel>(ch), lv, sample_rate_hz);
        return out;
    }

private:
    void magnify_channel(const std::vector<Frame>& frames, std::vector<Frame>& out,
                         Channel channel, int levels, double fs) const {
        const size_t n = frames.size();
        std::vector<LaplacianPyramid> pyrs(n);
        for (size_t i = 0; i < n; ++i)
            pyrs[i] = build_laplacian(extract_channel(frames[i], channel), levels);

        // bands 0..levels-1 then the residual as level `levels`.
        for (int level = 0; level <= levels; ++level) {
            auto plane_of = [&](size_t i) -> GrayPlane& {
                return level < levels ? pyrs[i].bands[static_cast<size_t>(level)]
                                      : pyrs[i].residual;
            };
            const double gain = cfg_.alpha * attenuation_[static_cast<size_t>(level)];
            const size_t pixels = plane_of(0).values.size();

            const size_t workers =
                std::max<size_t>(1, std::min<size_t>(std::thread::hardware_concurrency(),
                                                     pixels / 4096 + 1));
            std::vector<std::future<void>> jobs;
            const size_t chunk = (pixels + workers - 1) / workers;
            for (size_t start = 0; start < pixels; start += chunk) {
                const size_t stop = std::min(pixels, start + chunk);
                jobs.push_back(std::async(std::launch::async, [&, start, stop] {
                    TimeSeries series;
                    series.sample_rate_hz = fs;
                    series.values.resize(n);
                    for (size_t px = start; px < stop; ++px) {
                        for (size_t i = 0; i < n; ++i) series.values[i] = plane_of(i).values[px];
                        TimeSeries filtered = ideal_bandpass(series, cfg_);
                        for (size_t i = 0; i < n; ++i)
                            plane_of(i).values[px] += gain * filtered.values[i];
                    }
                }));
            }
            for (auto& j : jobs) j.get();
        }

        const int offset = static_cast<int>(channel);
        for (size_t i = 0; i < n; ++i) {
            GrayPlane collapsed = collapse_laplacian(pyrs[i]);
            uint8_t* px = out[i].pixels.data() + offset;
            for (size_t j = 0; j < collapsed.values.size(); ++j, px += 3)
                *px = detail::quantize_u8(collapsed.values[j]);
        }
    }

    BandConfig cfg_;
    int levels_;
    std::vector<double> attenuation_;
};

}  // namespace vitalcam
