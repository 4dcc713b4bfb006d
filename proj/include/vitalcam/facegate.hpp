#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "vitalcam/frame.hpp"

namespace vitalcam {

struct Detection {
    Roi roi;
    double score = 1.0;
};

struct GateConfig {
    double iou_threshold = 0.5;
    Roi analysis_roi;
};

// area(a to b) / area(a U b). Both rectangles must have positive area.
inline double iou(const Roi& a, const Roi& b) {
    if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0)
        throw error(errc::degenerate_roi, "iou requires positive-area rectangles");
    const int64_t ix0 = std::max(a.x, b.x);
    const int64_t iy0 = std::max(a.y, b.y);
    const int64_t ix1 = std::min<int64_t>(a.x + a.w, b.x + b.w);
    const int64_t iy1 = std::min<int64_t>(a.y + a.h, b.y + b.h);
    const int64_t iw = std::max<int64_t>(0, ix1 - ix0);
    const int64_t ih = std::max<int64_t>(0, iy1 - iy0);
    const int64_t inter = iw * ih;
    const int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct GateResult {
    bool accepted = false;
    std::optional<Detection> best;
};

// A frame passes the gate when some detection overlaps the analysis area with
// IoU strictly greater than the threshold. `best` is the highest-IoU
// detection; ties break by higher score, then lower x, then lower y.
inline GateResult gate(const GateConfig& cfg, const std::vector<Detection>& detections) {
    GateResult result;
    double best_iou = -1.0;
    for (const Detection& d : detections) {
        if (d.roi.w <= 0 || d.roi.h <= 0) continue;
        const double v = iou(cfg.analysis_roi, d.roi);
        bool better = v > best_iou;
        if (!better && v == best_iou && result.best) {
            const Detection& cur = *result.best;
            better = d.score > cur.score ||
                     (d.score == cur.score &&
                      (d.roi.x < cur.roi.x || (d.roi.x == cur.roi.x && d.roi.y < cur.roi.y)));
        }
        if (better) {
            best_iou = v;
            result.best = d;
        }
    }
    result.accepted = result.best.has_value() && best_iou > cfg.iou_threshold;
    return result;
}

class DetectorInterface {
public:
    virtual ~DetectorInterface() = default;
    virtual std::vector<Detection> detect(const Frame& frame) = 0;
};

// Fixed-box detector; doubles as the test stand-in for a static analysis area.
class StaticDetector : public DetectorInterface {
public:
    explicit StaticDetector(Roi roi) : roi_(roi) {}
    std::vector<Detection> detect(const Frame& frame) override {
        Roi c = clamp_roi(roi_, frame.width, frame.height);
        if (c.w <= 0 || c.h <= 0) return {};
        return {Detection{c, 1.0}};
    }

private:
    Roi roi_;
};

// Reference detector: bounding box of pixels whose inter-frame absolute
// luma difference exceeds a noise floor, expanded by 10%.
class MotionDetector : public DetectorInterface {
public:
    explicit MotionDetector(double noise_floor = 8.0) : noise_floor_(noise_floor) {}

    std::vector<Detection> detect(const Frame& frame) override {
        GrayPlane gray = to_grayscale(frame);
        std::vector<Detection> out;
        if (prev_ && prev_->width == gray.width && prev_->height == gray.height) {
            int32_t x0 = static_cast<int32_t>(gray.width), y0 = static_cast<int32_t>(gray.height);
            int32_t x1 = -1, y1 = -1;
            for (uint32_t y = 0; y < gray.height; ++y)
                for (uint32_t x = 0; x < gray.width; ++x) {
                    if (std::fabs(gray.at(x, y) - prev_->at(x, y)) <= noise_floor_) continue;
                    x0 = std::min<int32_t>(x0, static_cast<int32_t>(x));
                    y0 = std::min<int32_t>(y0, static_cast<int32_t>(y));
                    x1 = std::max<int32_t>(x1, static_cast<int32_t>(x));
                    y1 = std::max<int32_t>(y1, static_cast<int32_t>(y));
                }
            if (x1 >= x0 && y1 >= y0) {
                Roi box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
                const int32_t dx = std::max<int32_t>(1, box.w / 20);
                const int32_t dy = std::max<int32_t>(1, box.h / 20);
                box = clamp_roi(Roi{box.x - dx, box.y - dy, box.w + 2 * dx, box.h + 2 * dy},
                                frame.width, frame.height);
                out.push_back(Detection{box, 1.0});
            }
        }
        prev_ = std::move(gray);
        return out;
    }

private:
    double noise_floor_;
    std::optional<GrayPlane> prev_;
};

inline std::unique_ptr<DetectorInterface> static_detector(Roi roi) {
    return std::make_unique<StaticDetector>(roi);
}

inline std::unique_ptr<DetectorInterface> motion_detector(double noise_floor = 8.0) {
    return std::make_unique<MotionDetector>(noise_floor);
}

}  // namespace vitalcam
