#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vitalcam/fer/eval.hpp"
#include "vitalcam/fer/ferw.hpp"
#include "vitalcam/fer/reference.hpp"
#include "vitalcam/pulse.hpp"
#include "vitalcam/rng.hpp"

namespace vitalcam {

// Wire unit of the ingestion API: a run of consecutive frames from one
// session, already base64-decoded.
struct FrameBatch {
    std::string session_id;
    uint32_t width = 0;
    uint32_t height = 0;
    double fps_hint = 0.0;
    std::vector<uint32_t> timestamps_ms;
    std::vector<uint8_t> payload;  // frame_count * width * height * 3 bytes

    size_t frame_count() const { return timestamps_ms.size(); }
};

struct BatchAck {
    size_t accepted = 0;
    size_t dropped = 0;
    size_t queue_depth = 0;
};

// In-process publish/subscribe decoupling ingestion from the pipeline: named
// per-session topics, each a bounded FIFO. When a topic is full the OLDEST
// batch is evicted (freshness beats completeness for live vitals).
class Broker {
public:
    explicit Broker(size_t capacity_per_topic) : capacity_(capacity_per_topic) {}

    struct PublishResult {
        size_t dropped_frames = 0;
        size_t queue_depth = 0;
        bool admitted = false;
    };

    PublishResult publish(const std::string& topic, FrameBatch batch) {
        std::lock_guard lock(mutex_);
        PublishResult result;
        if (capacity_ == 0) return result;
        auto& q = topics_[topic];
        while (q.size() >= capacity_) {
            result.dropped_frames += q.front().frame_count();
            q.pop_front();
        }
        q.push_back(std::move(batch));
        result.queue_depth = q.size();
        result.admitted = true;
        return result;
    }

    std::optional<FrameBatch> consume(const std::string& topic) {
        std::lock_guard lock(mutex_);
        auto it = topics_.find(topic);
        if (it == topics_.end() || it->second.empty()) return std::nullopt;
        FrameBatch batch = std::move(it->second.front());
        it->second.pop_front();
        return batch;
    }

    size_t depth(const std::string& topic) const {
        std::lock_guard lock(mutex_);
        auto it = topics_.find(topic);
        return it == topics_.end() ? 0 : it->second.size();
    }

    void drop_topic(const std::string& topic) {
        std::lock_guard lock(mutex_);
        topics_.erase(topic);
    }

    std::vector<std::string> topics_with_work() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [name, q] : topics_)
            if (!q.empty()) out.push_back(name);
        return out;
    }

private:
    size_t capacity_;
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<FrameBatch>> topics_;
};

struct ServiceConfig {
    size_t session_cap = 64;
    size_t queue_capacity = 8;  // batches per session topic
    int fer_every = 10;         // run the classifier on every k-th frame; 0 disables
    PulseConfig pulse;
    Roi analysis_roi{0, 0, 0, 0};  // zero size means "full frame"
    double iou_threshold = 0.5;
    uint64_t fer_seed = 7;
    std::string fer_model_path;  // overrides the seeded built-in when set
    bool start_consumer = true;  // tests may pump manually instead
};

// Per-session knobs a client may set at creation time; anything unset falls
// back to the server defaults.
struct SessionOverrides {
    std::optional<double> calibration_seconds;
    std::optional<double> window_seconds;
    std::optional<double> iou_threshold;
    std::optional<int> fer_every;
    std::optional<Roi> analysis_roi;
};

// What poll_results returns: a consistent snapshot, never blocking on
// pipeline work.
struct ResultsSnapshot {
    bool calibrating = true;
    std::optional<double> bpm;
    double confidence = 0.0;
    bool low_fps = false;
    std::optional<std::array<double, 7>> emotions;
    std::optional<Detection> detection;
    uint64_t frames_received = 0;
    uint64_t frames_dropped = 0;
    uint64_t frames_consumed = 0;
    size_t queue_depth = 0;
    std::optional<std::string> last_error;
};

struct SessionSummary {
    std::optional<double> mean_bpm;
    uint64_t reading_count = 0;
};

// Owns the broker, the per-session pipeline state and the consumer thread.
class ServiceEngine {
public:
    explicit ServiceEngine(ServiceConfig config = {})
        : config_(std::move(config)),
          broker_(config_.queue_capacity),
          id_rng_(std::random_device{}()) {
        if (!config_.fer_model_path.empty())
            fer_model_ = std::make_shared<fer::Model>(
                fer::load_model_file(config_.fer_model_path));
        else
            fer_model_ =
                std::make_shared<fer::Model>(fer::reference_model(config_.fer_seed));
        if (config_.start_consumer)
            consumer_ = std::thread([this] { consume_loop(); });
    }

    ~ServiceEngine() { stop(); }

    ServiceEngine(const ServiceEngine&) = delete;
    ServiceEngine& operator=(const ServiceEngine&) = delete;

    std::string create_session(const SessionOverrides& overrides = {}) {
        auto session = std::make_shared<Session>();
        session->pulse_config = config_.pulse;
        if (overrides.calibration_seconds)
            session->pulse_config.calibration_seconds = *overrides.calibration_seconds;
        if (overrides.window_seconds)
            session->pulse_config.window_seconds = *overrides.window_seconds;
        if (!session->pulse_config.valid())
            throw error(errc::invalid_argument, "invalid session configuration");
        session->iou_threshold = overrides.iou_threshold.value_or(config_.iou_threshold);
        session->fer_every = overrides.fer_every.value_or(config_.fer_every);
        session->analysis_roi = overrides.analysis_roi.value_or(config_.analysis_roi);

        std::lock_guard lock(sessions_mutex_);
        if (sessions_.size() >= config_.session_cap)
            throw error(errc::too_many_sessions,
                        "session cap " + std::to_string(config_.session_cap) + " reached");
        std::string id = new_id();
        sessions_.emplace(id, std::move(session));
        return id;
    }

    BatchAck submit_batch(FrameBatch batch) {
        validate_batch(batch);
        std::shared_ptr<Session> session = find_session(batch.session_id);
        const std::string topic = batch.session_id;
        const size_t frames = batch.frame_count();

        Broker::PublishResult pub = broker_.publish(topic, std::move(batch));
        if (!pub.admitted)
            throw error(errc::queue_rejected, "queue cannot admit this batch");

        BatchAck ack;
        ack.accepted = frames;
        ack.dropped = pub.dropped_frames;
        ack.queue_depth = pub.queue_depth;
        {
            std::lock_guard lock(session->snapshot_mutex);
            session->snapshot.frames_received += frames;
            session->snapshot.frames_dropped += pub.dropped_frames;
            session->snapshot.queue_depth = pub.queue_depth;
        }
        {
            std::lock_guard lock(wake_mutex_);
            work_pending_ = true;
        }
        wake_.notify_one();
        return ack;
    }

    ResultsSnapshot poll_results(const std::string& session_id) {
        std::shared_ptr<Session> session = find_session(session_id);
        std::lock_guard lock(session->snapshot_mutex);
        ResultsSnapshot snap = session->snapshot;
        snap.queue_depth = broker_.depth(session_id);
        return snap;
    }

    SessionSummary close_session(const std::string& session_id) {
        std::shared_ptr<Session> session;
        {
            std::lock_guard lock(sessions_mutex_);
            auto it = sessions_.find(session_id);
            if (it == sessions_.end())
                throw error(errc::unknown_session, session_id);
            session = it->second;
            sessions_.erase(it);
        }
        broker_.drop_topic(session_id);
        // The consumer may still be processing this session's last batch; its
        // pipeline lock serializes us behind it.
        std::scoped_lock lock(session->pipeline_mutex, session->snapshot_mutex);
        SessionSummary summary;
        summary.reading_count = session->reading_count;
        if (session->reading_count > 0)
            summary.mean_bpm = session->bpm_sum / static_cast<double>(session->reading_count);
        return summary;
    }

    // Drains every topic once on the caller's thread. Used by tests and by
    // the consumer thread; safe alongside poll/submit.
    size_t pump() {
        size_t processed = 0;
        for (const std::string& topic : broker_.topics_with_work()) {
            std::shared_ptr<Session> session;
            {
                std::lock_guard lock(sessions_mutex_);
                auto it = sessions_.find(topic);
                if (it == sessions_.end()) {
                    broker_.drop_topic(topic);
                    continue;
                }
                session = it->second;
            }
            while (auto batch = broker_.consume(topic)) {
                process_batch(*session, *batch);
                ++processed;
            }
        }
        return processed;
    }

    void stop() {
        {
            std::lock_guard lock(wake_mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        if (consumer_.joinable()) consumer_.join();
    }

    size_t session_count() const {
        std::lock_guard lock(sessions_mutex_);
        return sessions_.size();
    }

    const ServiceConfig& config() const { return config_; }

private:
    struct Session {
        // pipeline_mutex serializes batch processing; snapshot_mutex guards
        // only the copyable snapshot so polls never wait on pipeline work.
        std::mutex pipeline_mutex;
        PulseConfig pulse_config;
        double iou_threshold = 0.5;
        int fer_every = 10;
        Roi analysis_roi{0, 0, 0, 0};
        std::unique_ptr<PulseSession> pulse;  // created on the first frame
        uint64_t frame_index = 0;
        double bpm_sum = 0.0;
        uint64_t reading_count = 0;

        std::mutex snapshot_mutex;
        ResultsSnapshot snapshot;
    };

    std::shared_ptr<Session> find_session(const std::string& id) {
        std::lock_guard lock(sessions_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw error(errc::unknown_session, id);
        return it->second;
    }

    std::string new_id() {
        static constexpr char hex[] = "0123456789abcdef";
        std::string id(16, '0');
        uint64_t v = id_rng_.next_u64() ^ (++id_counter_ << 1);
        for (char& c : id) {
            c = hex[v & 15];
            v >>= 4;
        }
        if (sessions_.count(id)) return new_id();
        return id;
    }

    void validate_batch(const FrameBatch& b) const {
        auto bad = [](const std::string& field) {
            throw error(errc::malformed_batch, field);
        };
        if (b.width < 8) bad("width");
        if (b.height < 8) bad("height");
        if (b.fps_hint < 0.0) bad("fps_hint");
        if (b.frame_count() < 1 || b.frame_count() > 120) bad("frame_count");
        for (size_t i = 1; i < b.timestamps_ms.size(); ++i)
            if (b.timestamps_ms[i] <= b.timestamps_ms[i - 1]) bad("timestamps_ms");
        if (b.payload.size() !=
            b.frame_count() * static_cast<size_t>(b.width) * b.height * 3)
            bad("payload");
    }

    void process_batch(Session& session, const FrameBatch& batch) {
        std::lock_guard pipeline(session.pipeline_mutex);
        for (size_t i = 0; i < batch.frame_count(); ++i) {
            Frame frame;
            frame.width = batch.width;
            frame.height = batch.height;
            frame.timestamp_ms = batch.timestamps_ms[i];
            const size_t bytes = static_cast<size_t>(batch.width) * batch.height * 3;
            frame.pixels.assign(batch.payload.begin() + static_cast<ptrdiff_t>(i * bytes),
                                batch.payload.begin() + static_cast<ptrdiff_t>((i + 1) * bytes));
            process_frame(session, frame);
        }
        std::lock_guard lock(session.snapshot_mutex);
        session.snapshot.queue_depth = broker_.depth(batch.session_id);
    }

    void process_frame(Session& session, const Frame& frame) {
        try {
            if (!session.pulse) {
                Roi roi = session.analysis_roi;
                if (roi.w <= 0 || roi.h <= 0)
                    roi = Roi{0, 0, static_cast<int32_t>(frame.width),
                              static_cast<int32_t>(frame.height)};
                session.pulse = std::make_unique<PulseSession>(
                    session.pulse_config, roi, static_detector(roi), session.iou_threshold);
            }
            BpmReading reading = session.pulse->push_frame(frame);
            if (reading.bpm) {
                session.bpm_sum += *reading.bpm;
                ++session.reading_count;
            }

            std::optional<std::array<double, 7>> emotions;
            const uint64_t index = session.frame_index++;
            if (fer_model_ && session.fer_every > 0 &&
                index % static_cast<uint64_t>(session.fer_every) == 0) {
                Roi face_roi = session.pulse->last_detection()
                                   ? session.pulse->last_detection()->roi
                                   : Roi{0, 0, static_cast<int32_t>(frame.width),
                                         static_cast<int32_t>(frame.height)};
                GrayPlane gray = to_grayscale(frame);
                GrayPlane face = resize_bilinear(crop(gray, face_roi), fer::Model::kInputSize,
                                                 fer::Model::kInputSize);
                emotions = fer::classify(*fer_model_, face).p;
            }

            std::lock_guard lock(session.snapshot_mutex);
            session.snapshot.calibrating = reading.calibrating;
            session.snapshot.bpm = reading.bpm;
            session.snapshot.confidence = reading.confidence;
            session.snapshot.low_fps = reading.low_fps;
            session.snapshot.detection = session.pulse->last_detection();
            if (emotions) session.snapshot.emotions = emotions;
            ++session.snapshot.frames_consumed;
        } catch (const error& e) {
            std::lock_guard lock(session.snapshot_mutex);
            session.snapshot.last_error = e.what();
            ++session.snapshot.frames_consumed;
        } catch (const std::exception& e) {
            std::lock_guard lock(session.snapshot_mutex);
            session.snapshot.last_error = e.what();
            ++session.snapshot.frames_consumed;
        }
    }

    void consume_loop() {
        std::unique_lock lock(wake_mutex_);
        while (!stopping_) {
            wake_.wait(lock, [this] { return stopping_ || work_pending_; });
            if (stopping_) break;
            work_pending_ = false;
            lock.unlock();
            while (pump() > 0) {
            }
            lock.lock();
        }
    }

    ServiceConfig config_;
    Broker broker_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::shared_ptr<const fer::Model> fer_model_;
    Rng id_rng_;
    uint64_t id_counter_ = 0;

    std::thread consumer_;
    std::mutex wake_mutex_;
    std::condition_variable wake_;
    bool work_pending_ = false;
    bool stopping_ = false;
};

}  // namespace vitalcam
