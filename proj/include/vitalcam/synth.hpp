#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "vitalcam/error.hpp"
#include "vitalcam/frame.hpp"
#include "vitalcam/rng.hpp"

namespace vitalcam {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

struct BackgroundSpec {
    Rgb base{32, 32, 32};
    // When flicker_amplitude > 0 the background green channel oscillates.
    double flicker_bpm = 0.0;
    double flicker_amplitude = 0.0;
};

// Ground-truth scene for the pulse pipeline: a rectangular "face" whose green
// channel oscillates at pulse_bpm over a configurable background, plus seeded
// per-pixel gaussian noise. Fully determined by its fields.
struct PulseScene {
    double fps = 20.0;
    double duration_seconds = 15.0;
    uint32_t width = 320;
    uint32_t height = 240;
    Roi face_rect{80, 60, 160, 120};
    Rgb skin_base{180, 128, 110};
    double pulse_bpm = 72.0;
    double pulse_amplitude = 1.0;  // gray levels, peak, green channel
    double noise_sigma = 0.0;      // gray levels, per pixel per channel
    BackgroundSpec background;
    uint64_t seed = 1;

    bool valid() const {
        return fps > 0.0 && fps <= 1000.0 && duration_seconds > 0.0 && width >= 8 &&
               height >= 8 && pulse_bpm > 0.0 && pulse_bpm < fps * 30.0 &&
               pulse_amplitude >= 0.0 && noise_sigma >= 0.0 && face_rect.w > 0 &&
               face_rect.h > 0 && face_rect.x >= 0 && face_rect.y >= 0 &&
               face_rect.x + face_rect.w <= static_cast<int32_t>(width) &&
               face_rect.y + face_rect.h <= static_cast<int32_t>(height);
    }

    size_t frame_count() const {
        return static_cast<size_t>(std::llround(duration_seconds * fps));
    }
};

// Produces frame i of the scene. One Rng per scene, advanced frame by frame,
// keeps the stream bit-reproducible; callers wanting random access should
// regenerate from frame 0.
class PulseVideoGenerator {
public:
    explicit PulseVideoGenerator(PulseScene scene) : scene_(scene), rng_(scene.seed) {
        if (!scene_.valid()) throw error(errc::invalid_argument, "invalid pulse scene");
    }

    size_t frame_count() const { return scene_.frame_count(); }
    const PulseScene& scene() const { return scene_; }
    bool done() const { return index_ >= frame_count(); }

    Frame next() {
        const size_t i = index_++;
        const double t = static_cast<double>(i) / scene_.fps;
        const double face_g =
            scene_.pulse_amplitude *
            std::sin(2.0 * std::numbers::pi * (scene_.pulse_bpm / 60.0) * t);
        const double bg_g =
            scene_.background.flicker_amplitude *
            std::sin(2.0 * std::numbers::pi * (scene_.background.flicker_bpm / 60.0) * t);

        Frame f;
        f.width = scene_.width;
        f.height = scene_.height;
        f.timestamp_ms = static_cast<uint32_t>(
            std::llround(static_cast<double>(i) * 1000.0 / scene_.fps));
        f.pixels.resize(static_cast<size_t>(scene_.width) * scene_.height * 3);

        const Roi& fr = scene_.face_rect;
        uint8_t* p = f.pixels.data();
        for (uint32_t y = 0; y < scene_.height; ++y) {
            const bool in_rows = static_cast<int32_t>(y) >= fr.y &&
                                 static_cast<int32_t>(y) < fr.y + fr.h;
            for (uint32_t x = 0; x < scene_.width; ++x, p += 3) {
                const bool face = in_rows && static_cast<int32_t>(x) >= fr.x &&
                                  static_cast<int32_t>(x) < fr.x + fr.w;
                double r, g, b;
                if (face) {
                    r = scene_.skin_base.r;
                    g = scene_.skin_base.g + face_g;
                    b = scene_.skin_base.b;
                } else {
                    r = scene_.background.base.r;
                    g = scene_.background.base.g + bg_g;
                    b = scene_.background.base.b;
                }
                if (scene_.noise_sigma > 0.0) {
                    r += rng_.gaussian(0.0, scene_.noise_sigma);
                    g += rng_.gaussian(0.0, scene_.noise_sigma);
                    b += rng_.gaussian(0.0, scene_.noise_sigma);
                }
                p[0] = detail::quantize_u8(r);
                p[1] = detail::quantize_u8(g);
                p[2] = detail::quantize_u8(b);
            }
        }
        return f;
    }

private:
    PulseScene scene_;
    Rng rng_;
    size_t index_ = 0;
};

inline std::vector<Frame> generate_pulse_video(const PulseScene& scene) {
    PulseVideoGenerator gen(scene);
    std::vector<Frame> out;
    out.reserve(gen.frame_count());
    while (!gen.done()) out.push_back(gen.next());
    return out;
}

// Scene whose face rectangle covers `face_area_ratio` of the frame (the frame
// doubles as the analysis area), with an optionally flickering background.
// Models the long-distance condition where background signal swamps the face.
inline PulseScene make_distance_scene(double face_area_ratio, double face_bpm,
                                      double bg_flicker_bpm, double face_amplitude,
                                      double bg_amplitude, uint32_t width = 160,
                                      uint32_t height = 120, double fps = 20.0,
                                      double duration_seconds = 15.0, uint64_t seed = 1) {
    if (!(face_area_ratio > 0.0 && face_area_ratio <= 1.0))
        throw error(errc::invalid_argument, "face area ratio must be in (0, 1]");
    PulseScene scene;
    scene.fps = fps;
    scene.duration_seconds = duration_seconds;
    scene.width = width;
    scene.height = height;
    scene.pulse_bpm = face_bpm;
    scene.pulse_amplitude = face_amplitude;
    scene.seed = seed;
    scene.background.base = Rgb{96, 96, 96};
    scene.background.flicker_bpm = bg_flicker_bpm;
    scene.background.flicker_amplitude = bg_amplitude;

    const double side = std::sqrt(face_area_ratio);
    int32_t fw = static_cast<int32_t>(std::lround(side * width));
    int32_t fh = static_cast<int32_t>(std::lround(side * height));
    fw = std::min<int32_t>(std::max<int32_t>(fw, 1), static_cast<int32_t>(width));
    fh = std::min<int32_t>(std::max<int32_t>(fh, 1), static_cast<int32_t>(height));
    scene.face_rect = Roi{(static_cast<int32_t>(width) - fw) / 2,
                          (static_cast<int32_t>(height) - fh) / 2, fw, fh};
    return scene;
}

inline std::vector<Frame> generate_distance_scene(double face_area_ratio, double face_bpm,
                                                  double bg_flicker_bpm, double face_amplitude,
                                                  double bg_amplitude) {
    return generate_pulse_video(make_distance_scene(face_area_ratio, face_bpm, bg_flicker_bpm,
                                                    face_amplitude, bg_amplitude));
}

// Stand-in for a labelled 48x48 expression dataset: each class is a distinct
// oriented sinusoidal grating plus seeded noise. Labels follow the fixed
// 7-class order used by the classifier.
struct SyntheticFaceSet {
    std::vector<GrayPlane> faces;
    std::vector<int> labels;
};

inline constexpr int kFaceSize = 48;
inline constexpr int kEmotionClasses = 7;

inline GrayPlane synth_face(int label, Rng& rng) {
    GrayPlane face(kFaceSize, kFaceSize);
    const double theta = std::numbers::pi * static_cast<double>(label) /
                         static_cast<double>(kEmotionClasses);
    const double cx = std::cos(theta), sy = std::sin(theta);
    const double cycles = 5.0 + static_cast<double>(label) * 0.5;
    const double phase = 0.7 * static_cast<double>(label);
    for (int y = 0; y < kFaceSize; ++y)
        for (int x = 0; x < kFaceSize; ++x) {
            const double u = (x * cx + y * sy) / static_cast<double>(kFaceSize);
            double v = 127.5 + 80.0 * std::sin(2.0 * std::numbers::pi * cycles * u + phase) +
                       rng.gaussian(0.0, 8.0);
            face.at(static_cast<uint32_t>(x), static_cast<uint32_t>(y)) =
                std::clamp(v, 0.0, 255.0);
        }
    return face;
}

inline SyntheticFaceSet generate_face_set(size_t n, uint64_t seed) {
    if (n < static_cast<size_t>(kEmotionClasses))
        throw error(errc::invalid_argument, "need at least one face per class");
    Rng rng(seed);
    SyntheticFaceSet set;
    set.faces.reserve(n);
    set.labels.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % kEmotionClasses);
        set.labels.push_back(label);
        set.faces.push_back(synth_face(label, rng));
    }
    return set;
}

}  // namespace vitalcam
