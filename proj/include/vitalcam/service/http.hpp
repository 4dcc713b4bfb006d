#pragma once

#include <atomic>
#include <chrono>
#include <csignal>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vitalcam/service/base64.hpp"
#include "vitalcam/service/engine.hpp"

namespace vitalcam {

using json = nlohmann::json;

namespace detail {

inline json error_body(const std::string& name, const std::string& field = {}) {
    json j{{"error", name}};
    if (!field.empty()) j["field"] = field;
    return j;
}

// Optional per-session settings in the create body. An empty body means all
// defaults; unknown fields are ignored.
inline SessionOverrides parse_overrides(const std::string& body) {
    SessionOverrides ov;
    if (body.empty()) return ov;
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw error(errc::invalid_argument, "body");
    auto bad = [](const std::string& field) {
        throw error(errc::invalid_argument, field);
    };
    if (j.contains("calibration_seconds")) {
        if (!j["calibration_seconds"].is_number()) bad("calibration_seconds");
        ov.calibration_seconds = j["calibration_seconds"].get<double>();
    }
    if (j.contains("window_seconds")) {
        if (!j["window_seconds"].is_number()) bad("window_seconds");
        ov.window_seconds = j["window_seconds"].get<double>();
    }
    if (j.contains("iou_threshold")) {
        if (!j["iou_threshold"].is_number()) bad("iou_threshold");
        ov.iou_threshold = j["iou_threshold"].get<double>();
    }
    if (j.contains("fer_every")) {
        if (!j["fer_every"].is_number_integer()) bad("fer_every");
        ov.fer_every = j["fer_every"].get<int>();
    }
    if (j.contains("analysis_roi")) {
        const json& r = j["analysis_roi"];
        if (!r.is_object() || !r.contains("x") || !r.contains("y") || !r.contains("w") ||
            !r.contains("h"))
            bad("analysis_roi");
        ov.analysis_roi = Roi{r["x"].get<int32_t>(), r["y"].get<int32_t>(),
                              r["w"].get<int32_t>(), r["h"].get<int32_t>()};
    }
    return ov;
}

// Pulls the batch out of the request body, reporting the first offending
// field the way the engine does.
inline FrameBatch parse_batch(const json& body, const std::string& session_id) {
    auto bad = [](const std::string& field) {
        throw error(errc::malformed_batch, field);
    };
    FrameBatch batch;
    batch.session_id = session_id;
    if (body.contains("session_id")) {
        if (!body["session_id"].is_string() ||
            body["session_id"].get<std::string>() != session_id)
            bad("session_id");
    }
    if (!body.contains("width") || !body["width"].is_number_unsigned()) bad("width");
    batch.width = body["width"].get<uint32_t>();
    if (!body.contains("height") || !body["height"].is_number_unsigned()) bad("height");
    batch.height = body["height"].get<uint32_t>();
    if (body.contains("fps_hint")) {
        if (!body["fps_hint"].is_number()) bad("fps_hint");
        batch.fps_hint = body["fps_hint"].get<double>();
    }
    if (!body.contains("frame_count") || !body["frame_count"].is_number_unsigned())
        bad("frame_count");
    const size_t frame_count = body["frame_count"].get<size_t>();
    if (!body.contains("timestamps_ms") || !body["timestamps_ms"].is_array() ||
        body["timestamps_ms"].size() != frame_count)
        bad("timestamps_ms");
    batch.timestamps_ms.reserve(frame_count);
    for (const auto& t : body["timestamps_ms"]) {
        if (!t.is_number_unsigned()) bad("timestamps_ms");
        batch.timestamps_ms.push_back(t.get<uint32_t>());
    }
    if (!body.contains("payload_b64") || !body["payload_b64"].is_string()) bad("payload_b64");
    auto decoded = base64_decode(body["payload_b64"].get<std::string>());
    if (!decoded) bad("payload_b64");
    batch.payload = std::move(*decoded);
    return batch;
}

inline json snapshot_to_json(const ResultsSnapshot& snap) {
    json j;
    j["calibrating"] = snap.calibrating;
    if (snap.bpm) j["bpm"] = *snap.bpm;
    j["confidence"] = snap.confidence;
    j["low_fps"] = snap.low_fps;
    if (snap.emotions) {
        json arr = json::array();
        for (double p : *snap.emotions) arr.push_back(p);
        j["emotions"] = arr;
    }
    if (snap.detection)
        j["detection"] = json{{"x", snap.detection->roi.x},
                              {"y", snap.detection->roi.y},
                              {"w", snap.detection->roi.w},
                              {"h", snap.detection->roi.h},
                              {"score", snap.detection->score}};
    j["frames_received"] = snap.frames_received;
    j["frames_dropped"] = snap.frames_dropped;
    j["frames_consumed"] = snap.frames_consumed;
    j["queue_depth"] = snap.queue_depth;
    if (snap.last_error) j["last_error"] = *snap.last_error;
    return j;
}

}  // namespace detail

// REST front of the engine. Paths and field names are part of the public
// contract; see the README for the endpoint table.
class ServiceHttp {
public:
    explicit ServiceHttp(ServiceEngine& engine) : engine_(engine) { route(); }

    // Blocks until stop(). Returns false when the address cannot be bound.
    bool listen(const std::string& host, int port) { return server_.listen(host, port); }

    bool bind(const std::string& host, int port) {
        return server_.bind_to_port(host, port);
    }
    // Binds an OS-assigned port and returns it (-1 on failure).
    int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    bool is_running() const { return server_.is_running(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

    ~ServiceHttp() {
        watcher_stop_ = true;
        if (watcher_.joinable()) watcher_.join();
    }

    // SIGINT/SIGTERM request a clean shutdown. The handler only flips a flag;
    // a watcher thread performs the actual stop.
    void stop_on_signals() {
        signal_flag() = 0;
        std::signal(SIGINT, [](int) { signal_flag() = 1; });
        std::signal(SIGTERM, [](int) { signal_flag() = 1; });
        watcher_ = std::thread([this] {
            while (!watcher_stop_) {
                if (signal_flag()) {
                    got_signal_ = true;
                    server_.stop();
                    return;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(25));
            }
        });
    }

    bool stopped_by_signal() const { return got_signal_; }

private:
    static volatile std::sig_atomic_t& signal_flag() {
        static volatile std::sig_atomic_t flag = 0;
        return flag;
    }
    void route() {
        server_.Post("/v1/sessions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         try {
                             const std::string id =
                                 engine_.create_session(detail::parse_overrides(req.body));
                             reply(res, 201, json{{"session_id", id}});
                         } catch (const error& e) {
                             if (e.code() == errc::too_many_sessions)
                                 reply(res, 429, detail::error_body("TooManySessions"));
                             else if (e.code() == errc::invalid_argument) {
                                 const std::string what = e.what();
                                 reply(res, 400,
                                       detail::error_body(
                                           "BadConfig", what.substr(what.find(": ") + 2)));
                             } else
                                 reply(res, 500, detail::error_body(errc_name(e.code())));
                         }
                     });

        server_.Post(R"(/v1/sessions/([0-9a-f]+)/frames)",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const std::string id = req.matches[1];
                         try {
                             json body = json::parse(req.body, nullptr, false);
                             if (body.is_discarded())
                                 throw error(errc::malformed_batch, "body");
                             FrameBatch batch = detail::parse_batch(body, id);
                             BatchAck ack = engine_.submit_batch(std::move(batch));
                             reply(res, 200, json{{"accepted", ack.accepted},
                                                  {"dropped", ack.dropped},
                                                  {"queue_depth", ack.queue_depth}});
                         } catch (const error& e) {
                             dispatch_error(res, e);
                         }
                     });

        server_.Get(R"(/v1/sessions/([0-9a-f]+)/results)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        try {
                            ResultsSnapshot snap = engine_.poll_results(req.matches[1]);
                            reply(res, 200, detail::snapshot_to_json(snap));
                        } catch (const error& e) {
                            dispatch_error(res, e);
                        }
                    });

        server_.Delete(R"(/v1/sessions/([0-9a-f]+))",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           try {
                               SessionSummary s = engine_.close_session(req.matches[1]);
                               json j{{"reading_count", s.reading_count}};
                               if (s.mean_bpm) j["mean_bpm"] = *s.mean_bpm;
                               reply(res, 200, j);
                           } catch (const error& e) {
                               dispatch_error(res, e);
                           }
                       });
    }

    static void dispatch_error(httplib::Response& res, const error& e) {
        switch (e.code()) {
            case errc::unknown_session:
                reply(res, 404, detail::error_body("UnknownSession"));
                break;
            case errc::malformed_batch: {
                const std::string what = e.what();
                const std::string field = what.substr(what.find(": ") + 2);
                reply(res, 400, detail::error_body("MalformedBatch", field));
                break;
            }
            case errc::queue_rejected:
                reply(res, 429, detail::error_body("TooManyQueued"));
                break;
            case errc::too_many_sessions:
                reply(res, 429, detail::error_body("TooManySessions"));
                break;
            default:
                reply(res, 500, detail::error_body(errc_name(e.code())));
                break;
        }
    }

    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    ServiceEngine& engine_;
    httplib::Server server_;
    std::thread watcher_;
    std::atomic<bool> watcher_stop_{false};
    std::atomic<bool> got_signal_{false};
};

}  // namespace vitalcam
