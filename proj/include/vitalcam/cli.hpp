#pragma once

#include <atomic>
#include <charconv>
#include <csignal>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vitalcam/facegate.hpp"
#include "vitalcam/fer/eval.hpp"
#include "vitalcam/fer/ferw.hpp"
#include "vitalcam/fer/reference.hpp"
#include "vitalcam/magnify.hpp"
#include "vitalcam/pulse.hpp"
#include "vitalcam/rvid.hpp"
#include "vitalcam/service/http.hpp"
#include "vitalcam/synth.hpp"

namespace vitalcam::cli {

using json = nlohmann::json;

namespace detail {

// Shortest round-trip decimal form, so config echoes reparse to the same value.
inline std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline bool parse_size(const std::string& text, uint32_t& w, uint32_t& h) {
    const auto x = text.find('x');
    if (x == std::string::npos) return false;
    try {
        w = static_cast<uint32_t>(std::stoul(text.substr(0, x)));
        h = static_cast<uint32_t>(std::stoul(text.substr(x + 1)));
    } catch (...) {
        return false;
    }
    return w > 0 && h > 0;
}

inline bool parse_band(const std::string& text, double& lo, double& hi) {
    const auto c = text.find(':');
    if (c == std::string::npos) return false;
    try {
        lo = std::stod(text.substr(0, c));
        hi = std::stod(text.substr(c + 1));
    } catch (...) {
        return false;
    }
    return lo > 0.0 && hi > lo;
}

inline bool parse_roi(const std::string& text, Roi& roi) {
    std::istringstream ss(text);
    char c1, c2, c3;
    if (!(ss >> roi.x >> c1 >> roi.y >> c2 >> roi.w >> c3 >> roi.h) || c1 != ',' ||
        c2 != ',' || c3 != ',')
        return false;
    return roi.w > 0 && roi.h > 0;
}

inline std::string roi_str(const Roi& r) {
    return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) +
           "," + std::to_string(r.h);
}

}  // namespace detail

struct AnalyzeOptions {
    std::string input;
    double band_lo = 0.4, band_hi = 4.0;
    double alpha = 50.0;
    int levels = 3;
    int analysis_level = 1;
    double iou_threshold = 0.5;
    std::optional<Roi> roi;
    std::string detector = "static";
    double calibration_seconds = 5.0;
    double window_seconds = 10.0;
    double min_fps = 15.0;
    double smoothing = 0.3;
    double confidence_threshold = 3.0;
    double report_every = 0.0;  // seconds; 0 reports every frame
    std::string channel = "g";
    std::string fer_model;      // optional FERW path
    int fer_every = 0;          // frames; 0 disables classification
};

inline PulseConfig make_pulse_config(const AnalyzeOptions& o) {
    PulseConfig pc;
    pc.band.f_lo_hz = o.band_lo;
    pc.band.f_hi_hz = o.band_hi;
    pc.band.alpha = o.alpha;
    pc.calibration_seconds = o.calibration_seconds;
    pc.window_seconds = o.window_seconds;
    pc.min_fps = o.min_fps;
    pc.smoothing_factor = o.smoothing;
    pc.pyramid_levels = o.levels;
    pc.analysis_level = std::min(o.analysis_level, o.levels - 1);
    pc.confidence_threshold = o.confidence_threshold;
    pc.channel = o.channel == "r" ? Channel::R : (o.channel == "b" ? Channel::B : Channel::G);
    return pc;
}

// Canonical flag form of the options; echoed in the trace header so a run can
// be reproduced from its own output.
inline std::vector<std::string> echo_args(const AnalyzeOptions& o) {
    std::vector<std::string> args = {
        "--band", detail::fmt(o.band_lo) + ":" + detail::fmt(o.band_hi),
        "--alpha", detail::fmt(o.alpha),
        "--levels", std::to_string(o.levels),
        "--analysis-level", std::to_string(o.analysis_level),
        "--iou", detail::fmt(o.iou_threshold),
        "--detector", o.detector,
        "--calibration", detail::fmt(o.calibration_seconds),
        "--window", detail::fmt(o.window_seconds),
        "--min-fps", detail::fmt(o.min_fps),
        "--smoothing", detail::fmt(o.smoothing),
        "--confidence", detail::fmt(o.confidence_threshold),
        "--report-every", detail::fmt(o.report_every),
        "--channel", o.channel,
    };
    if (o.roi) {
        args.push_back("--roi");
        args.push_back(detail::roi_str(*o.roi));
    }
    if (!o.fer_model.empty()) {
        args.push_back("--fer-model");
        args.push_back(o.fer_model);
        args.push_back("--fer-every");
        args.push_back(std::to_string(o.fer_every));
    }
    return args;
}

inline int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
    RvidReader reader(opt.input);
    const RvidHeader& hdr = reader.header();

    Roi roi = opt.roi.value_or(Roi{0, 0, static_cast<int32_t>(hdr.width),
                                   static_cast<int32_t>(hdr.height)});
    std::unique_ptr<DetectorInterface> detector;
    if (opt.detector == "motion")
        detector = motion_detector();
    else
        detector = static_detector(roi);

    PulseSession session(make_pulse_config(opt), roi, std::move(detector),
                         opt.iou_threshold);

    std::optional<fer::Model> model;
    if (!opt.fer_model.empty()) model = fer::load_model_file(opt.fer_model);

    json header{{"type", "header"},      {"command", "analyze"},
                {"input", opt.input},    {"width", hdr.width},
                {"height", hdr.height},  {"fps", hdr.fps()},
                {"args", echo_args(opt)}};
    out << header.dump() << "\n";

    double bpm_sum = 0.0;
    uint64_t bpm_count = 0;
    uint64_t records = 0;
    double next_report_s = 0.0;
    uint64_t frame_index = 0;

    while (auto frame = reader.next()) {
        const uint64_t gated_before = session.frames_gated_out();
        BpmReading reading = session.push_frame(*frame);
        const bool gated = session.frames_gated_out() > gated_before;
        if (reading.bpm) {
            bpm_sum += *reading.bpm;
            ++bpm_count;
        }

        const double t_s = frame->timestamp_ms / 1000.0;
        if (opt.report_every > 0.0 && t_s + 1e-9 < next_report_s) {
            ++frame_index;
            continue;
        }
        next_report_s = t_s + opt.report_every;

        json rec{{"type", "reading"},
                 {"t_ms", frame->timestamp_ms},
                 {"confidence", reading.confidence},
                 {"gated", gated},
                 {"calibrating", reading.calibrating}};
        if (reading.bpm) rec["bpm"] = *reading.bpm;
        if (reading.low_fps) rec["low_fps"] = true;
        if (model && opt.fer_every > 0 &&
            frame_index % static_cast<uint64_t>(opt.fer_every) == 0) {
            Roi face_roi = session.last_detection() ? session.last_detection()->roi : roi;
            GrayPlane face = resize_bilinear(crop(to_grayscale(*frame), face_roi),
                                             fer::Model::kInputSize, fer::Model::kInputSize);
            fer::EmotionDistribution dist = fer::classify(*model, face);
            const int best = dist.argmax();
            rec["emotion"] = fer::emotion_labels()[static_cast<size_t>(best)];
            rec["p"] = dist.p[static_cast<size_t>(best)];
        }
        out << rec.dump() << "\n";
        ++records;
        ++frame_index;
    }

    json summary{{"type", "summary"},
                 {"readings", bpm_count},
                 {"records", records},
                 {"gated", session.frames_gated_out()}};
    if (bpm_count > 0) summary["mean_bpm"] = bpm_sum / static_cast<double>(bpm_count);
    out << summary.dump() << "\n";
    (void)err;
    return 0;
}

struct SynthOptions {
    PulseScene scene;
    std::optional<double> face_area_ratio;
    std::string output;
};

inline int cmd_synth(SynthOptions opt, std::ostream& err) {
    if (opt.face_area_ratio) {
        const double side = std::sqrt(*opt.face_area_ratio);
        int32_t fw = std::clamp<int32_t>(
            static_cast<int32_t>(std::lround(side * opt.scene.width)), 1,
            static_cast<int32_t>(opt.scene.width));
        int32_t fh = std::clamp<int32_t>(
            static_cast<int32_t>(std::lround(side * opt.scene.height)), 1,
            static_cast<int32_t>(opt.scene.height));
        opt.scene.face_rect = Roi{(static_cast<int32_t>(opt.scene.width) - fw) / 2,
                                  (static_cast<int32_t>(opt.scene.height) - fh) / 2, fw, fh};
    }
    if (!opt.scene.valid()) {
        err << "invalid scene parameters\n";
        return 2;
    }
    PulseVideoGenerator gen(opt.scene);
    RvidWriter writer(opt.output, opt.scene.width, opt.scene.height, opt.scene.fps);
    while (!gen.done()) writer.write(gen.next());
    return 0;
}

struct AmplifyOptions {
    std::string input;
    std::string output;
    double band_lo = 0.4, band_hi = 4.0;
    double alpha = 50.0;
    int levels = 3;
    std::vector<double> attenuation = {0.5, 1.0};
};

inline int cmd_amplify(const AmplifyOptions& opt, std::ostream& err) {
    RvidReader reader(opt.input);
    const RvidHeader hdr = reader.header();
    std::vector<Frame> frames = reader.read_all();
    if (frames.size() < 8) {
        err << "input too short: need at least 8 frames\n";
        return 1;
    }
    BandConfig cfg;
    cfg.f_lo_hz = opt.band_lo;
    cfg.f_hi_hz = opt.band_hi;
    cfg.alpha = opt.alpha;
    cfg.level_attenuation = opt.attenuation;
    SequenceMagnifier magnifier(cfg, opt.levels);
    std::vector<Frame> result = magnifier.run(frames, hdr.fps());
    RvidWriter writer(opt.output, hdr.width, hdr.height, hdr.fps());
    for (const Frame& f : result) writer.write(f);
    return 0;
}

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    ServiceConfig service;
};

inline int cmd_serve(const ServeOptions& opt, std::ostream& err) {
    ServiceEngine engine(opt.service);
    ServiceHttp http(engine);
    if (!http.bind(opt.host, opt.port)) {
        err << "cannot bind " << opt.host << ":" << opt.port << "\n";
        return 1;
    }
    err << "listening on " << opt.host << ":" << opt.port << "\n";
    http.stop_on_signals();
    const bool ok = http.listen_after_bind();
    engine.stop();
    return ok || http.stopped_by_signal() ? 0 : 1;
}

struct FerOptions {
    std::string model;
    std::string input;
    std::string output;
    uint64_t seed = 7;
    size_t eval_n = 700;
    uint64_t eval_seed = 1;
    bool stub_oracle = false;
};

inline int cmd_fer_gen_weights(const FerOptions& opt, std::ostream& out) {
    fer::Model model = fer::reference_model(opt.seed);
    fer::save_model_file(model, opt.output);
    out << "wrote " << opt.output << " (" << model.param_count() << " parameters)\n";
    return 0;
}

inline int cmd_fer_classify(const FerOptions& opt, std::ostream& out) {
    fer::Model model = fer::load_model_file(opt.model);
    RvidReader reader(opt.input);
    auto frame = reader.next();
    if (!frame) throw error(errc::too_short, "input stream has no frames");
    GrayPlane face = resize_bilinear(to_grayscale(*frame), fer::Model::kInputSize,
                                     fer::Model::kInputSize);
    fer::EmotionDistribution dist = fer::classify(model, face);
    for (int i = 0; i < 7; ++i)
        out << fer::emotion_labels()[static_cast<size_t>(i)] << " "
            << std::fixed << std::setprecision(6) << dist.p[static_cast<size_t>(i)] << "\n";
    out << "label " << fer::emotion_labels()[static_cast<size_t>(dist.argmax())] << "\n";
    return 0;
}

inline int cmd_fer_eval(const FerOptions& opt, std::ostream& out) {
    SyntheticFaceSet set = generate_face_set(opt.eval_n, opt.eval_seed);
    fer::EvalResult result;
    if (opt.stub_oracle) {
        result = fer::evaluate_with(
            [&set](const GrayPlane&, size_t i) { return set.labels[i]; }, set.faces,
            set.labels);
    } else {
        fer::Model model = fer::load_model_file(opt.model);
        result = fer::evaluate(model, set.faces, set.labels);
    }
    for (int t = 0; t < 7; ++t) {
        out << std::left << std::setw(9) << fer::emotion_labels()[static_cast<size_t>(t)];
        for (int p = 0; p < 7; ++p)
            out << std::right << std::setw(6) << std::fixed << std::setprecision(2)
                << result.confusion.at(t, p);
        out << "\n";
    }
    out << std::left << std::setw(9) << "";
    for (int p = 0; p < 7; ++p)
        out << std::right << std::setw(6)
            << fer::emotion_labels()[static_cast<size_t>(p)].substr(0, 5);
    out << "\n";
    out << "accuracy " << std::fixed << std::setprecision(6) << result.accuracy << " over "
        << result.samples << " samples\n";
    return 0;
}

// Command-line front door. Returns the process exit code: 0 success, 2 usage
// error, 1 runtime error.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"heart rate and facial expression analysis over raw video streams"};
    app.require_subcommand(1);

    // --- synth
    SynthOptions synth;
    std::string size_text = "320x240";
    auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic test scene");
    synth_cmd->add_option("--bpm", synth.scene.pulse_bpm, "face pulse rate")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--fps", synth.scene.fps, "frames per second")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--duration", synth.scene.duration_seconds, "seconds")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--size", size_text, "frame size WxH (default 320x240)");
    synth_cmd->add_option("--seed", synth.scene.seed, "generator seed");
    synth_cmd->add_option("--amplitude", synth.scene.pulse_amplitude,
                          "pulse amplitude in gray levels")
        ->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--noise", synth.scene.noise_sigma, "per-pixel gaussian sigma")
        ->check(CLI::NonNegativeNumber);
    std::string face_text, skin_text, bg_text;
    synth_cmd->add_option("--face", face_text, "face rect x,y,w,h");
    double ratio = 0.0;
    auto* ratio_opt = synth_cmd->add_option("--face-area-ratio", ratio,
                                            "size the face as a fraction of frame area");
    synth_cmd->add_option("--bg-flicker-bpm", synth.scene.background.flicker_bpm,
                          "background flicker rate");
    synth_cmd->add_option("--bg-amp", synth.scene.background.flicker_amplitude,
                          "background flicker amplitude");
    synth_cmd->add_option("-o,--output", synth.output, "output RVID path")->required();

    // --- analyze
    AnalyzeOptions an;
    std::string band_text = "0.4:4", roi_text;
    auto* an_cmd = app.add_subcommand("analyze", "run the pulse pipeline over an RVID file");
    an_cmd->add_option("input", an.input, "RVID input path")->required();
    an_cmd->add_option("--band", band_text, "pass band lo:hi in Hz");
    an_cmd->add_option("--alpha", an.alpha, "magnification factor")
        ->check(CLI::NonNegativeNumber);
    an_cmd->add_option("--levels", an.levels, "pyramid levels")->check(CLI::Range(1, 6));
    an_cmd->add_option("--analysis-level", an.analysis_level, "pooled gaussian level")
        ->check(CLI::Range(0, 5));
    an_cmd->add_option("--iou", an.iou_threshold, "gate threshold")
        ->check(CLI::Range(0.0, 1.0));
    an_cmd->add_option("--roi", roi_text, "analysis area x,y,w,h (default full frame)");
    an_cmd->add_option("--detector", an.detector, "static|motion")
        ->check(CLI::IsMember({"static", "motion"}));
    an_cmd->add_option("--calibration", an.calibration_seconds, "calibration seconds")
        ->check(CLI::PositiveNumber);
    an_cmd->add_option("--window", an.window_seconds, "spectral window seconds")
        ->check(CLI::PositiveNumber);
    an_cmd->add_option("--min-fps", an.min_fps, "low-fps mark threshold");
    an_cmd->add_option("--smoothing", an.smoothing, "bpm smoothing factor");
    an_cmd->add_option("--confidence", an.confidence_threshold,
                       "withhold bpm below this peak-to-mean ratio");
    an_cmd->add_option("--report-every", an.report_every, "trace cadence in seconds");
    an_cmd->add_option("--channel", an.channel, "pulse source channel r|g|b")
        ->check(CLI::IsMember({"r", "g", "b"}));
    an_cmd->add_option("--fer-model", an.fer_model, "FERW model for expression records");
    an_cmd->add_option("--fer-every", an.fer_every, "classify every k-th frame");

    // --- amplify
    AmplifyOptions amp;
    std::string amp_band_text = "0.4:4", att_text;
    auto* amp_cmd = app.add_subcommand("amplify", "write a band-magnified copy of a stream");
    amp_cmd->add_option("input", amp.input, "RVID input path")->required();
    amp_cmd->add_option("output", amp.output, "RVID output path")->required();
    amp_cmd->add_option("--band", amp_band_text, "pass band lo:hi in Hz");
    amp_cmd->add_option("--alpha", amp.alpha, "magnification factor")
        ->check(CLI::NonNegativeNumber);
    amp_cmd->add_option("--levels", amp.levels, "pyramid levels")->check(CLI::Range(1, 6));
    amp_cmd->add_option("--attenuation", att_text, "per-level gain multipliers a0,a1,...");

    // --- serve
    ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the frame-batch REST service");
    serve_cmd->add_option("--host", serve.host, "bind address");
    serve_cmd->add_option("--port", serve.port, "bind port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--session-cap", serve.service.session_cap, "max live sessions");
    serve_cmd->add_option("--queue-capacity", serve.service.queue_capacity,
                          "batches per session queue");
    serve_cmd->add_option("--fer-every", serve.service.fer_every,
                          "classify every k-th frame (0 disables)");
    serve_cmd->add_option("--fer-model", serve.service.fer_model_path, "FERW model path");
    serve_cmd->add_option("--calibration", serve.service.pulse.calibration_seconds,
                          "calibration seconds");
    serve_cmd->add_option("--window", serve.service.pulse.window_seconds,
                          "spectral window seconds");

    // --- fer
    FerOptions fer_opt;
    auto* fer_cmd = app.add_subcommand("fer", "expression classifier tools");
    fer_cmd->require_subcommand(1);
    auto* fer_classify = fer_cmd->add_subcommand("classify", "classify the first frame");
    fer_classify->add_option("model", fer_opt.model, "FERW model path")->required();
    fer_classify->add_option("input", fer_opt.input, "RVID input path")->required();
    auto* fer_eval = fer_cmd->add_subcommand("eval", "confusion matrix on a synthetic set");
    fer_eval->add_option("model", fer_opt.model, "FERW model path");
    fer_eval->add_option("--n", fer_opt.eval_n, "set size")->check(CLI::Range(7, 1000000));
    fer_eval->add_option("--set-seed", fer_opt.eval_seed, "face set seed");
    fer_eval->add_flag("--stub-oracle", fer_opt.stub_oracle,
                       "evaluate a perfect stub instead of a model");
    auto* fer_gen = fer_cmd->add_subcommand("gen-weights", "write seeded reference weights");
    fer_gen->add_option("-o,--output", fer_opt.output, "FERW output path")->required();
    fer_gen->add_option("--seed", fer_opt.seed, "weight seed");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (synth_cmd->parsed()) {
            if (!detail::parse_size(size_text, synth.scene.width, synth.scene.height)) {
                err << "bad --size, expected WxH\n";
                return 2;
            }
            if (!face_text.empty()) {
                Roi r;
                if (!detail::parse_roi(face_text, r)) {
                    err << "bad --face, expected x,y,w,h\n";
                    return 2;
                }
                synth.scene.face_rect = r;
            } else if (face_text.empty() && !*ratio_opt) {
                // Default: centered rect covering half of each axis.
                synth.scene.face_rect =
                    Roi{static_cast<int32_t>(synth.scene.width / 4),
                        static_cast<int32_t>(synth.scene.height / 4),
                        static_cast<int32_t>(synth.scene.width / 2),
                        static_cast<int32_t>(synth.scene.height / 2)};
            }
            if (*ratio_opt) synth.face_area_ratio = ratio;
            return cmd_synth(synth, err);
        }
        if (an_cmd->parsed()) {
            if (!detail::parse_band(band_text, an.band_lo, an.band_hi)) {
                err << "bad --band, expected lo:hi with 0 < lo < hi\n";
                return 2;
            }
            if (!roi_text.empty()) {
                Roi r;
                if (!detail::parse_roi(roi_text, r)) {
                    err << "bad --roi, expected x,y,w,h\n";
                    return 2;
                }
                an.roi = r;
            }
            if (!an.fer_model.empty() && an.fer_every <= 0) an.fer_every = 10;
            return cmd_analyze(an, out, err);
        }
        if (amp_cmd->parsed()) {
            if (!detail::parse_band(amp_band_text, amp.band_lo, amp.band_hi)) {
                err << "bad --band, expected lo:hi with 0 < lo < hi\n";
                return 2;
            }
            if (!att_text.empty()) {
                amp.attenuation.clear();
                std::istringstream ss(att_text);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    try {
                        amp.attenuation.push_back(std::stod(tok));
                    } catch (...) {
                        err << "bad --attenuation list\n";
                        return 2;
                    }
                }
                if (amp.attenuation.empty()) {
                    err << "bad --attenuation list\n";
                    return 2;
                }
            }
            return cmd_amplify(amp, err);
        }
        if (serve_cmd->parsed()) return cmd_serve(serve, err);
        if (fer_cmd->parsed()) {
            if (fer_classify->parsed()) return cmd_fer_classify(fer_opt, out);
            if (fer_eval->parsed()) {
                if (!fer_opt.stub_oracle && fer_opt.model.empty()) {
                    err << "fer eval needs a model path or --stub-oracle\n";
                    return 2;
                }
                return cmd_fer_eval(fer_opt, out);
            }
            if (fer_gen->parsed()) return cmd_fer_gen_weights(fer_opt, out);
        }
    } catch (const error& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 1;
    }
    return 2;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args), out, err);
}

}  // namespace vitalcam::cli
